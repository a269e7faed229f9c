//! One line per headline criterion, run against the `scenarios/` corpus at
//! the reference tuning. Exits non-zero if any line fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bess_sim::attack::{apply_fdi, FdiSpec, ReplaySpec};
use bess_sim::engine::Engine;
use bess_sim::grid::ConsumptionSeries;
use bess_sim::link::{Link, LinkAttacks, LinkId, LinkTransport};
use bess_sim::meter::{packetize, MeasurementPacket};
use bess_sim::metrics::{Classification, StabilityReport, TelemetryLog};
use bess_sim::rng::{RngStream, StreamId};
use bess_sim::runner::{simulate, sweep, RunOutcome};
use bess_sim::scenario::{parse_scenario, ScenarioConfig};
use bess_sim::{NOMINAL_BAND_HZ, NOMINAL_HZ};
use serde_json::json;

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

// Pinned tolerances.
const FIXED_POINT_TOL_HZ: f64 = 0.02;
const BASELINE_MAX_ABNORMAL: f64 = 0.05;
const GROWTH_WINDOW_S: usize = 60;
const GROWTH_MIN_RISES: usize = 4;
const GROWTH_MIN_RATIO: f64 = 5.0;
const PULSE_PERIOD_S: f64 = 20.0;
const REPLAY_RECOVERY_S: f64 = 60.0;
const REPLAY_RECOVERY_BAND_HZ: f64 = 0.01;
const ORACLE_TOL_HZ: f64 = 1e-9;
const SOC_TOL_MWH: f64 = 1e-9;

struct Line {
    pass: bool,
    name: &'static str,
    detail: String,
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> ScenarioConfig {
    parse_scenario(scenarios().join(format!("{name}.toml"))).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn run(name: &str) -> RunOutcome {
    simulate(&load(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn in_band(f: f64) -> bool {
    (NOMINAL_BAND_HZ.0..=NOMINAL_BAND_HZ.1).contains(&f)
}

fn p2p(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::MIN, f64::max) - xs.iter().copied().fold(f64::MAX, f64::min)
}

/// Longest run of strictly rising peak-to-peak across consecutive windows,
/// and the ratio of the largest window to the first.
fn growth(f: &[f64], tick_hz: usize) -> (usize, f64) {
    let w: Vec<f64> = f.chunks_exact(GROWTH_WINDOW_S * tick_hz).map(p2p).collect();
    let (mut best, mut cur) = (0, 0);
    for pair in w.windows(2) {
        cur = if pair[1] > pair[0] { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    let max = w.iter().copied().fold(0.0, f64::max);
    (best, max / w[0])
}

fn grows(f: &[f64], tick_hz: usize) -> bool {
    let (rises, ratio) = growth(f, tick_hz);
    rises >= GROWTH_MIN_RISES && ratio >= GROWTH_MIN_RATIO
}

fn brief(s: &StabilityReport) -> String {
    format!(
        "{} mean={:.4} p2p={:.3} abnormal={:.3} settled_out_of_band={}",
        s.classification, s.settled_mean_hz, s.peak_to_peak_hz, s.abnormal_share, s.settled_band_violations
    )
}

fn not_osc_or_dev(c: Classification) -> bool {
    !matches!(c, Classification::Oscillating | Classification::Deviating)
}

fn baseline() -> Line {
    let s = run("baseline").stability;
    Line {
        pass: s.classification == Classification::Stable
            && s.settled_band_violations == 0
            && s.abnormal_share < BASELINE_MAX_ABNORMAL,
        name: "baseline",
        detail: brief(&s),
    }
}

fn bias() -> Line {
    let s = run("bias_s2c").stability;
    Line {
        pass: s.classification == Classification::SteadyStateError
            && (s.settled_mean_hz - 49.8).abs() <= FIXED_POINT_TOL_HZ,
        name: "bias fixed point",
        detail: format!("{} (want 49.80)", brief(&s)),
    }
}

fn scaling() -> Line {
    let s = run("scale_s2c").stability;
    let want = NOMINAL_HZ / 1.002;
    Line {
        pass: s.classification == Classification::SteadyStateError
            && (s.settled_mean_hz - want).abs() <= FIXED_POINT_TOL_HZ,
        name: "scaling fixed point",
        detail: format!("{} (want {want:.4})", brief(&s)),
    }
}

fn control_scaling() -> Line {
    let two = run("scale_c2b_2");
    let (rises, ratio) = growth(&two.log.true_frequency(), 50);
    let one_one = run("scale_c2b_1_1").stability;
    Line {
        pass: two.stability.classification == Classification::Oscillating
            && grows(&two.log.true_frequency(), 50)
            && one_one.classification == Classification::Stable,
        name: "control-link scaling",
        detail: format!(
            "x2: {} rises={rises} growth={ratio:.1}; x1.1: {}",
            brief(&two.stability),
            one_one.classification
        ),
    }
}

fn tds() -> Line {
    let s2c = run("delay_s2c_constant_4s");
    let (rises, ratio) = growth(&s2c.log.true_frequency(), 50);
    let c2b = run("delay_c2b_constant_4s").stability;
    let uni = run("delay_s2c_uniform_0_12").stability;
    Line {
        pass: s2c.stability.classification == Classification::Oscillating
            && grows(&s2c.log.true_frequency(), 50)
            && not_osc_or_dev(uni.classification)
            && c2b.classification == s2c.stability.classification,
        name: "time delay",
        detail: format!(
            "s2c 4s: {} rises={rises} growth={ratio:.1}; c2b 4s: {}; uniform(0,12): {} abnormal={:.3}",
            s2c.stability.classification, c2b.classification, uni.classification, uni.abnormal_share
        ),
    }
}

fn dos() -> Line {
    let cfg = load("dos_s2c_0_8");
    let rates: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let rows = sweep(&cfg, "attacks.s2c.drop.drop_rate", &rates).expect("sweep");
    let low_clean = rows.iter().filter(|r| r.value <= 0.7 + 1e-9).all(|r| r.settled_band_violations == 0);
    let (a7, a8) = (rows[7].abnormal_share, rows[8].abnormal_share);
    let mut halved = cfg.clone();
    halved.meter.interval_ticks /= 2;
    let a8_fast = simulate(&halved).expect("halved interval").stability.abnormal_share;
    let worst_low = rows[..=7].iter().map(|r| r.settled_band_violations).max().unwrap_or(0);
    Line {
        pass: low_clean && a8 > a7 && a8_fast < a8,
        name: "packet drop",
        detail: format!(
            "abnormal@0.7={a7:.3} abnormal@0.8={a8:.3} abnormal@0.8,half-interval={a8_fast:.3} \
             max settled_out_of_band(<=0.7)={worst_low}"
        ),
    }
}

fn ramp() -> Line {
    let s2c = run("ramp_s2c").stability;
    let small = run("ramp_c2b_0_01").stability;
    let large = run("ramp_c2b_0_1").stability;
    let (es, el) = ((small.settled_mean_hz - NOMINAL_HZ).abs(), (large.settled_mean_hz - NOMINAL_HZ).abs());
    Line {
        pass: s2c.classification == Classification::Deviating
            && small.classification == Classification::SteadyStateError
            && large.classification == Classification::SteadyStateError
            && el > es,
        name: "ramp",
        detail: format!(
            "s2c 0.001: {}; c2b 0.01: {} |err|={es:.4}; c2b 0.1: {} |err|={el:.4}",
            s2c.classification, small.classification, large.classification
        ),
    }
}

/// Out-of-band stretches as `(start_s, end_s)`, merging gaps under a second.
fn excursions(f: &[f64], tick_hz: usize) -> Vec<(f64, f64)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (i, &x) in f.iter().enumerate() {
        if in_band(x) {
            continue;
        }
        match out.last_mut() {
            Some(last) if i - last.1 < tick_hz => last.1 = i,
            _ => out.push((i, i)),
        }
    }
    let hz = tick_hz as f64;
    out.into_iter().map(|(a, b)| (a as f64 / hz, (b + 1) as f64 / hz)).collect()
}

fn pulse() -> Line {
    let out = run("pulse_s2c");
    let ex = excursions(&out.log.true_frequency(), 50);
    let longest = ex.iter().map(|(a, b)| b - a).fold(0.0, f64::max);
    // Back in band before the next pulse: each stretch ends within one pulse
    // period, and the next one starts later than that.
    let recovers = ex.windows(2).all(|p| p[0].1 - p[0].0 < PULSE_PERIOD_S && p[1].0 > p[0].1)
        && ex.last().is_some_and(|l| l.1 - l.0 < PULSE_PERIOD_S);
    Line {
        pass: not_osc_or_dev(out.stability.classification) && !ex.is_empty() && recovers,
        name: "pulse",
        detail: format!(
            "{}; excursions={} longest={longest:.2}s",
            out.stability.classification,
            ex.len()
        ),
    }
}

/// `|mean − 50|` per whole second.
fn second_means(f: &[f64], tick_hz: usize) -> Vec<f64> {
    f.chunks_exact(tick_hz)
        .map(|c| (c.iter().sum::<f64>() / c.len() as f64 - NOMINAL_HZ).abs())
        .collect()
}

fn replay() -> Line {
    let cfg = load("replay_s2c");
    let spec = cfg.attacks.s2c.replay.expect("replay scenario");
    let out = simulate(&cfg).expect("replay run");
    let dev = second_means(&out.log.true_frequency(), 50);
    let start = (spec.start_s + spec.record_duration_s) as usize;
    let end = start + spec.replay_duration_s as usize;
    let half = (start + end) / 2;
    let max = |a: usize, b: usize| dev[a..b].iter().copied().fold(0.0, f64::max);
    let (recorded, first, second) = (max(0, start), max(start, half), max(half, end));
    let grows = second > first && first > recorded && dev[end - 1] > 5.0 * recorded;
    // First second after which every later second stays inside the band.
    let settle = (end..dev.len())
        .find(|&s| dev[s..].iter().all(|d| *d <= REPLAY_RECOVERY_BAND_HZ))
        .map(|s| (s - end) as f64);
    Line {
        pass: grows && settle.is_some_and(|s| s <= REPLAY_RECOVERY_S),
        name: "replay",
        detail: format!(
            "max|dev| record={recorded:.4} replay 1st half={first:.4} 2nd half={second:.4}; back within \
             {REPLAY_RECOVERY_BAND_HZ} Hz after {}",
            settle.map_or("never".into(), |s| format!("{s:.0}s"))
        ),
    }
}

fn load_altering() -> Line {
    let random = run("load_altering_random").stability;
    let cfg = load("load_altering_triggered");
    let mut e = Engine::new(cfg.clone()).expect("triggered scenario");
    e.run_to_end().expect("triggered run");
    let fires = e.events().trigger_fires;
    let trig = simulate(&cfg).expect("triggered run").stability;
    Line {
        pass: random.classification != Classification::Stable
            && fires == 1
            && trig.classification == Classification::Oscillating
            && trig.settled_band_violations > 0,
        name: "load altering",
        detail: format!("random +-1 MW: {}; triggered (fired {fires}x): {}", random.classification, brief(&trig)),
    }
}

fn noisy_attacked(seed: u64) -> ScenarioConfig {
    let mut cfg = load("baseline");
    cfg.seed = seed;
    cfg.clock.duration_s = 120.0;
    cfg.set_param("attacks.s2c.drop.drop_rate", json!(0.3)).unwrap();
    cfg.set_param("attacks.s2c.delay", json!({"mode": "uniform", "min_s": 0.0, "max_s": 3.0})).unwrap();
    cfg.set_param("attacks.c2b.fdi.randomness", json!([-0.2, 0.2])).unwrap();
    cfg.set_param("attacks.s2c.fdi.offset", json!(0.1)).unwrap();
    cfg.set_param("attacks.load_alter.randomness_mw", json!([-0.5, 0.5])).unwrap();
    cfg
}

fn csv(log: &TelemetryLog) -> Vec<u8> {
    let mut out = Vec::new();
    log.write_csv(&mut out, 1).unwrap();
    out
}

fn properties() -> Line {
    let cfg = noisy_attacked(11);
    let a = simulate(&cfg).unwrap().log;
    let deterministic = csv(&a) == csv(&simulate(&cfg).unwrap().log);

    let eq1 = a
        .records()
        .iter()
        .map(|r| (r.true_f_hz - r.production_mw / r.consumption_mw * NOMINAL_HZ).abs())
        .fold(0.0, f64::max);

    let dt_h = 1.0 / cfg.clock.tick_hz as f64 / 3600.0;
    let mut soc = cfg.battery.initial_soc_mwh;
    let mut soc_drift: f64 = 0.0;
    for r in a.records() {
        soc -= r.delivered_mw * dt_h;
        soc_drift = soc_drift.max((soc - r.soc_mwh).abs());
    }

    let mut rng = RngStream::new(5, StreamId::FdiRandom(LinkId::C2b));
    let mut probe = RngStream::new(6, StreamId::FdiRandom(LinkId::S2c));
    let identity = (0..10_000u64).all(|i| {
        let v = probe.uniform(-1e3, 1e3);
        apply_fdi(v, &FdiSpec::default(), i, i as f64 * 0.5, &mut rng) == v
    });

    let recorded: Vec<f64> = (0..100).map(|i| 50.0 + ((i * 37) % 19) as f64 * 1e-3).collect();
    let attacks = LinkAttacks {
        replay: Some(ReplaySpec { start_s: 0.0, record_duration_s: 100.0, replay_duration_s: 100.0 }),
        ..Default::default()
    };
    let mut link: Link<MeasurementPacket> =
        Link::new(LinkId::S2c, LinkTransport::default(), attacks, 50, 1).unwrap();
    let mut got = Vec::new();
    for k in 0..200u64 {
        let v = recorded.get(k as usize).copied().unwrap_or(0.0);
        link.transmit(packetize(k, k * 50, v).unwrap(), k * 50);
        got.extend(link.deliver_due(k * 50 + 1).into_iter().map(|p| p.frequency_hz));
    }
    let round_trip = got[..100] == recorded[..] && got[100..] == recorded[..];

    let samples = vec![(0, 210.0), (1, 209.4), (2, 210.3)];
    let mut small = load("baseline");
    small.clock.duration_s = 60.0;
    small.grid.noise_mw = 0.0;
    let mut e = Engine::with_series(small.clone(), ConsumptionSeries::from_samples(samples.clone(), 1.0, None).unwrap())
        .unwrap();
    let sim = e.run_to_end().unwrap().true_frequency();
    let want = oracle::closed_loop(&samples, &small);
    let oracle_gap = sim.iter().zip(&want).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

    Line {
        pass: deterministic
            && eq1 <= ORACLE_TOL_HZ
            && soc_drift <= SOC_TOL_MWH
            && identity
            && round_trip
            && sim.len() == want.len()
            && oracle_gap <= ORACLE_TOL_HZ,
        name: "property suites",
        detail: format!(
            "deterministic={deterministic} max|f-P/C*50|={eq1:.1e} soc_drift={soc_drift:.1e}MWh \
             fdi_identity={identity} replay_round_trip={round_trip} oracle_max|df|={oracle_gap:.1e}"
        ),
    }
}

fn main() -> ExitCode {
    let checks: [fn() -> Line; 11] = [
        baseline,
        bias,
        scaling,
        control_scaling,
        tds,
        dos,
        ramp,
        pulse,
        replay,
        load_altering,
        properties,
    ];
    let mut failed = 0;
    for check in checks {
        let line = check();
        if !line.pass {
            failed += 1;
        }
        println!("{} {}: {}", if line.pass { "PASS" } else { "FAIL" }, line.name, line.detail);
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
