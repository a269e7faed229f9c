use bess_sim::attack::{apply_fdi, FdiSpec, ReplaySpec};
use bess_sim::engine::Engine;
use bess_sim::grid::ConsumptionSeries;
use bess_sim::link::{Link, LinkAttacks, LinkId, LinkTransport};
use bess_sim::meter::{packetize, MeasurementPacket};
use bess_sim::metrics::TelemetryLog;
use bess_sim::rng::{RngStream, StreamId};
use bess_sim::scenario::ScenarioConfig;
use proptest::prelude::*;
use serde_json::json;

#[path = "support/oracle.rs"]
mod oracle;

fn noisy_attacked(seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::baseline();
    cfg.seed = seed;
    cfg.clock.duration_s = 120.0;
    cfg.set_param("attacks.s2c.drop.drop_rate", json!(0.3)).unwrap();
    cfg.set_param("attacks.s2c.delay", json!({"mode": "uniform", "min_s": 0.0, "max_s": 3.0})).unwrap();
    cfg.set_param("attacks.c2b.fdi.randomness", json!([-0.2, 0.2])).unwrap();
    cfg.set_param("attacks.load_alter.randomness_mw", json!([-0.5, 0.5])).unwrap();
    cfg
}

fn csv_bytes(log: &TelemetryLog) -> Vec<u8> {
    let mut out = Vec::new();
    log.write_csv(&mut out, 1).unwrap();
    out
}

fn run(cfg: ScenarioConfig) -> TelemetryLog {
    let mut e = Engine::new(cfg).unwrap();
    e.run_to_end().unwrap();
    e.into_log()
}

#[test]
fn same_seed_same_bytes() {
    let a = csv_bytes(&run(noisy_attacked(7)));
    let b = csv_bytes(&run(noisy_attacked(7)));
    assert_eq!(a, b);
    let c = csv_bytes(&run(noisy_attacked(8)));
    assert_ne!(a, c);
}

#[test]
fn frequency_matches_balance_on_every_record() {
    let log = run(noisy_attacked(3));
    let recs = log.records();
    let base = recs[0].production_mw;
    let mut prev_delivered = 0.0;
    for r in recs {
        let expect = r.production_mw / r.consumption_mw * 50.0;
        assert!((r.true_f_hz - expect).abs() <= 1e-9, "tick {}", r.tick);
        // Production is the fixed baseline plus last tick's battery output.
        assert!((r.production_mw - (base + prev_delivered)).abs() <= 1e-9, "tick {}", r.tick);
        prev_delivered = r.delivered_mw;
    }
}

#[test]
fn soc_tracks_delivered_energy() {
    let mut cfg = noisy_attacked(5);
    cfg.set_param("attacks.s2c.fdi.offset", json!(0.1)).unwrap();
    let log = run(cfg.clone());
    let dt_h = 1.0 / cfg.clock.tick_hz as f64 / 3600.0;
    let mut soc = cfg.battery.initial_soc_mwh;
    let mut max_drift: f64 = 0.0;
    for r in log.records() {
        soc -= r.delivered_mw * dt_h;
        max_drift = max_drift.max((soc - r.soc_mwh).abs());
    }
    assert!(max_drift <= 1e-9, "drift {max_drift}");
    // The bias did move energy.
    assert!((log.records().last().unwrap().soc_mwh - cfg.battery.initial_soc_mwh).abs() > 1e-4);
}

proptest! {
    #[test]
    fn identity_fdi_passes_values_through(v in -1e6f64..1e6, idx in 0u64..10_000, t in 0.0f64..5000.0) {
        let mut rng = RngStream::new(1, StreamId::FdiRandom(LinkId::S2c));
        prop_assert_eq!(apply_fdi(v, &FdiSpec::default(), idx, t, &mut rng), v);
    }

    #[test]
    fn replayed_link_traffic_equals_recording(values in prop::collection::vec(49.0f64..51.0, 1..60)) {
        let n = values.len();
        let attacks = LinkAttacks {
            replay: Some(ReplaySpec {
                start_s: 0.0,
                record_duration_s: n as f64,
                replay_duration_s: n as f64,
            }),
            ..Default::default()
        };
        let mut link: Link<MeasurementPacket> =
            Link::new(LinkId::S2c, LinkTransport::default(), attacks, 50, 1).unwrap();
        let mut out = Vec::new();
        for k in 0..(2 * n as u64 + 2) {
            let tick = k * 50;
            let v = if (k as usize) < n { values[k as usize] } else { 0.0 };
            link.transmit(packetize(k, tick, v).unwrap(), tick);
            out.extend(link.deliver_due(tick + 1).into_iter().map(|p| p.frequency_hz));
        }
        prop_assert_eq!(&out[..n], &values[..]);
        prop_assert_eq!(&out[n..2 * n], &values[..]);
        prop_assert_eq!(out[2 * n], 0.0);
    }
}

#[test]
fn clean_links_match_direct_loop() {
    let samples = vec![(0, 210.0), (1, 209.4), (2, 210.3)];
    let mut cfg = ScenarioConfig::baseline();
    cfg.clock.duration_s = 60.0;
    cfg.grid.noise_mw = 0.0;
    let series = ConsumptionSeries::from_samples(samples.clone(), 1.0, None).unwrap();
    let mut e = Engine::with_series(cfg.clone(), series).unwrap();
    e.run_to_end().unwrap();
    let sim = e.log().true_frequency();
    let want = oracle::closed_loop(&samples, &cfg);
    assert_eq!(sim.len(), want.len());
    let max = sim.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(max <= 1e-9, "max |df| = {max}");
    // The instance is not trivial: the drift pulls the frequency off 50 Hz.
    assert!(want.iter().any(|f| (f - 50.0).abs() > 1e-3));
}
