use bess_sim::scenario::ScenarioConfig;

/// The no-attack loop written out by hand: sample once a second, one tick
/// of latency each way, conditional-integration PI, battery far from its
/// SoC limits.
pub fn closed_loop(samples: &[(u32, f64)], cfg: &ScenarioConfig) -> Vec<f64> {
    let hz = cfg.clock.tick_hz as u64;
    let dt = 1.0 / hz as f64;
    let interval = cfg.meter.interval_ticks as u64;
    let (kp, ki) = (cfg.controller.kp, cfg.controller.ki);
    let rating = cfg.battery.power_rating_mw;
    let consumption = |t: f64| {
        let m = t / 60.0;
        let i = samples.iter().rposition(|s| s.0 as f64 <= m).unwrap().min(samples.len() - 2);
        let (m0, v0) = samples[i];
        let (m1, v1) = samples[i + 1];
        v0 + (v1 - v0) * (m - m0 as f64) / (m1 - m0) as f64
    };
    let base = consumption(0.0);

    let mut delivered = 0.0;
    let mut held = 0.0;
    let mut integral = 0.0;
    let mut last_update: Option<u64> = None;
    let mut meas_in_flight: Option<(u64, f64)> = None;
    let mut cmd_in_flight: Option<(u64, f64)> = None;
    let mut out = Vec::new();
    for k in 0..cfg.total_ticks() {
        let f = (base + delivered) / consumption(k as f64 * dt) * 50.0;
        out.push(f);
        if k % interval == 0 {
            meas_in_flight = Some((k + 1, f));
        }
        let due_cmd = match cmd_in_flight {
            Some((at, c)) if at == k => {
                cmd_in_flight = None;
                Some(c)
            }
            _ => None,
        };
        if let Some((at, m)) = meas_in_flight {
            if at == k {
                meas_in_flight = None;
                let e = 50.0 - m;
                let step = last_update.map_or(interval as f64 * dt, |l| (k - l) as f64 * dt);
                last_update = Some(k);
                let trial = (integral + e * step).clamp(-rating / ki, rating / ki);
                let raw = kp * e + ki * trial;
                let u = if raw.abs() <= rating {
                    integral = trial;
                    raw
                } else {
                    (kp * e + ki * integral).clamp(-rating, rating)
                };
                cmd_in_flight = Some((k + 1, u));
            }
        }
        if let Some(c) = due_cmd {
            held = c;
        }
        delivered = held;
    }
    out
}
