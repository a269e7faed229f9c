//! PID gain calibration.
//!
//! Grid search over `(kp, ki, kd)`. A candidate is feasible when, for every
//! seed, the no-attack run stays stable inside the nominal band, a constant
//! 4 s sensor-link delay makes it oscillate, and a 0.7 sensor-link drop rate
//! keeps the settled window inside the band. Feasible candidates are ranked
//! by mean ITAE of the no-attack run.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::controller::PidConfig;
use crate::metrics::{classify_stability, Classification};
use crate::runner::simulate;
use crate::scenario::ScenarioConfig;
use crate::{Result, NOMINAL_HZ};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationGrid {
    pub kp: Vec<f64>,
    pub ki: Vec<f64>,
    pub kd: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for CalibrationGrid {
    fn default() -> Self {
        let steps = |lo: f64, hi: f64, step: f64| {
            let n = ((hi - lo) / step).round() as usize;
            (0..=n).map(|i| lo + step * i as f64).collect::<Vec<_>>()
        };
        CalibrationGrid {
            kp: steps(0.4, 2.0, 0.2),
            ki: steps(1.0, 2.0, 0.1),
            kd: vec![0.0, 0.05, 0.1],
            seeds: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Mean over seeds of the no-attack ITAE, Hz·s².
    pub itae: f64,
    pub baseline_contained: bool,
    pub tds_oscillates: bool,
    pub drop_contained: bool,
}

impl Candidate {
    pub fn feasible(&self) -> bool {
        self.baseline_contained && self.tds_oscillates && self.drop_contained
    }

    pub fn gains(&self, base: &PidConfig) -> PidConfig {
        PidConfig {
            kp: self.kp,
            ki: self.ki,
            kd: self.kd,
            ..*base
        }
    }
}

/// Integral of time-weighted absolute error, `Σ t·|f − 50|·dt`.
pub fn itae(series: &[f64], tick_hz: u32) -> f64 {
    let dt = 1.0 / tick_hz as f64;
    series
        .iter()
        .enumerate()
        .map(|(i, f)| i as f64 * dt * (f - NOMINAL_HZ).abs() * dt)
        .sum()
}

/// Scores one gain triple against `base` (a no-attack scenario).
pub fn evaluate(base: &ScenarioConfig, gains: PidConfig, seeds: &[u64]) -> Result<Candidate> {
    let mut cand = Candidate {
        kp: gains.kp,
        ki: gains.ki,
        kd: gains.kd,
        itae: 0.0,
        baseline_contained: true,
        tds_oscillates: true,
        drop_contained: true,
    };
    let tick_hz = base.clock.tick_hz;
    for &seed in seeds {
        let mut cfg = base.clone();
        cfg.seed = seed;
        cfg.controller = gains;

        let out = simulate(&cfg)?;
        let f = out.log.true_frequency();
        cand.itae += itae(&f, tick_hz) / seeds.len() as f64;
        cand.baseline_contained &=
            out.stability.classification == Classification::Stable && out.stability.settled_band_violations == 0;

        let mut tds = cfg.clone();
        tds.set_param("attacks.s2c.delay", json!({"mode": "constant", "constant_s": 4.0}))?;
        let f = simulate(&tds)?.log.true_frequency();
        cand.tds_oscillates &= classify_stability(&f, tick_hz, &cfg.classifier)?.classification
            == Classification::Oscillating;

        let mut dos = cfg.clone();
        dos.set_param("attacks.s2c.drop.drop_rate", json!(0.7))?;
        let out = simulate(&dos)?;
        cand.drop_contained &= out.stability.settled_band_violations == 0;
    }
    Ok(cand)
}

/// Evaluates every grid point. Feasible candidates come first, by ITAE.
pub fn calibrate(base: &ScenarioConfig, grid: &CalibrationGrid) -> Result<Vec<Candidate>> {
    let mut points = Vec::new();
    for &kp in &grid.kp {
        for &ki in &grid.ki {
            for &kd in &grid.kd {
                points.push(PidConfig {
                    kp,
                    ki,
                    kd,
                    ..base.controller
                });
            }
        }
    }
    let mut out = points
        .into_par_iter()
        .map(|g| evaluate(base, g, &grid.seeds))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| b.feasible().cmp(&a.feasible()).then(a.itae.total_cmp(&b.itae)));
    Ok(out)
}
