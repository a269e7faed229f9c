//! Attackable network links.
//!
//! A packet handed to [`Link::transmit`] goes through, in order: the drop
//! decision, replay substitution, false data injection, and delay sampling.
//! Kept packets are queued until their delivery tick.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attack::{apply_fdi, replay_step, FdiSpec, ReplaySpec, ReplayState};
use crate::rng::{RngStream, StreamId};
use crate::{Error, Result};

/// A packet whose scalar payload attacks can read and overwrite.
pub trait Payload: Clone {
    fn value(&self) -> f64;
    fn set_value(&mut self, v: f64);
    fn sent_tick(&self) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LinkId {
    /// Frequency meter to cloud controller.
    #[serde(rename = "s2c")]
    S2c,
    /// Cloud controller to battery management system.
    #[serde(rename = "c2b")]
    C2b,
    /// BMS status back to the controller.
    #[serde(rename = "b2c-status")]
    B2cStatus,
}

impl LinkId {
    pub const ALL: [LinkId; 3] = [LinkId::S2c, LinkId::C2b, LinkId::B2cStatus];

    pub fn as_str(self) -> &'static str {
        match self {
            LinkId::S2c => "s2c",
            LinkId::C2b => "c2b",
            LinkId::B2cStatus => "b2c-status",
        }
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LinkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LinkId::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::invalid("link_id", format!("unknown link `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelaySpec {
    Constant { constant_s: f64 },
    Uniform { min_s: f64, max_s: f64 },
}

impl DelaySpec {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        match *self {
            DelaySpec::Constant { constant_s } if !(constant_s >= 0.0 && constant_s.is_finite()) => {
                Err(Error::invalid(format!("{prefix}.constant_s"), "must be >= 0"))
            }
            DelaySpec::Uniform { min_s, max_s } if !(min_s >= 0.0 && max_s.is_finite()) => {
                Err(Error::invalid(format!("{prefix}.min_s"), "bounds must be finite and >= 0"))
            }
            DelaySpec::Uniform { min_s, max_s } if min_s > max_s => {
                Err(Error::invalid(format!("{prefix}.max_s"), "must be >= min_s"))
            }
            _ => Ok(()),
        }
    }
}

/// Extra delay for one packet, in seconds.
pub fn sample_delay(spec: &DelaySpec, rng: &mut RngStream) -> f64 {
    match *spec {
        DelaySpec::Constant { constant_s } => constant_s,
        DelaySpec::Uniform { min_s, max_s } => rng.uniform(min_s, max_s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DropSpec {
    pub drop_rate: f64,
}

impl DropSpec {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drop_rate) {
            return Err(Error::invalid(format!("{prefix}.drop_rate"), "must be in [0, 1]"));
        }
        Ok(())
    }
}

/// Attack specs interposed on one link.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkAttacks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<DelaySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop: Option<DropSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fdi: Option<FdiSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<ReplaySpec>,
}

impl LinkAttacks {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if let Some(d) = &self.delay {
            d.validate(&format!("{prefix}.delay"))?;
        }
        if let Some(d) = &self.drop {
            d.validate(&format!("{prefix}.drop"))?;
        }
        if let Some(f) = &self.fdi {
            f.validate(&format!("{prefix}.fdi"))?;
        }
        if let Some(r) = &self.replay {
            r.validate(&format!("{prefix}.replay"))?;
        }
        if self.fdi.is_some() && self.replay.is_some() {
            return Err(Error::invalid(prefix, "fdi and replay cannot both be active on one link"));
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        *self == LinkAttacks::default()
    }

    /// Short labels of the attacks active at `t_s`, for telemetry.
    pub fn active_labels(&self, t_s: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.delay.is_some() {
            out.push("delay");
        }
        if self.drop.is_some_and(|d| d.drop_rate > 0.0) {
            out.push("drop");
        }
        if self.fdi.is_some_and(|f| f.is_active(t_s)) {
            out.push("fdi");
        }
        if let Some(r) = self.replay {
            match r.phase(t_s) {
                crate::attack::ReplayPhase::Record => out.push("replay-record"),
                crate::attack::ReplayPhase::Replay => out.push("replay"),
                _ => {}
            }
        }
        out
    }
}

/// Transport parameters of a link, independent of attacks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkTransport {
    pub base_latency_s: f64,
    /// When false, a delayed packet holds back every later packet (FIFO).
    pub allow_reorder: bool,
}

impl Default for LinkTransport {
    fn default() -> Self {
        LinkTransport {
            base_latency_s: 0.02,
            allow_reorder: true,
        }
    }
}

impl LinkTransport {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.base_latency_s >= 0.0 && self.base_latency_s.is_finite()) {
            return Err(Error::invalid(format!("{prefix}.base_latency_s"), "must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InFlightPacket<P> {
    pub payload: P,
    pub deliver_tick: u64,
    pub origin_seq: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmitOutcome {
    Queued { deliver_tick: u64 },
    Dropped,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub sent: u64,
    pub dropped: u64,
    pub delivered: u64,
    pub mutated: u64,
}

/// A one-way link with its attack pipeline and in-flight queue.
#[derive(Debug, Clone)]
pub struct Link<P> {
    id: LinkId,
    transport: LinkTransport,
    attacks: LinkAttacks,
    tick_hz: u32,
    queue: BTreeMap<(u64, u64), InFlightPacket<P>>,
    next_origin_seq: u64,
    last_deliver_tick: u64,
    fdi_packets: u64,
    replay: ReplayState,
    drop_rng: RngStream,
    delay_rng: RngStream,
    fdi_rng: RngStream,
    dropped_seqs: Vec<u64>,
    stats: LinkStats,
}

impl<P: Payload> Link<P> {
    pub fn new(id: LinkId, transport: LinkTransport, attacks: LinkAttacks, tick_hz: u32, seed: u64) -> Result<Self> {
        transport.validate(&format!("links.{id}"))?;
        attacks.validate(&format!("attacks.{id}"))?;
        Ok(Link {
            id,
            transport,
            attacks,
            tick_hz,
            queue: BTreeMap::new(),
            next_origin_seq: 0,
            last_deliver_tick: 0,
            fdi_packets: 0,
            replay: ReplayState::default(),
            drop_rng: RngStream::new(seed, StreamId::Drop(id)),
            delay_rng: RngStream::new(seed, StreamId::Delay(id)),
            fdi_rng: RngStream::new(seed, StreamId::FdiRandom(id)),
            dropped_seqs: Vec::new(),
            stats: LinkStats::default(),
        })
    }

    pub fn id(&self) -> LinkId {
        self.id
    }

    pub fn attacks(&self) -> &LinkAttacks {
        &self.attacks
    }

    pub fn transport(&self) -> &LinkTransport {
        &self.transport
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    /// Origin sequence numbers of dropped packets, in drop order.
    pub fn dropped_seqs(&self) -> &[u64] {
        &self.dropped_seqs
    }

    pub fn replay_state(&self) -> &ReplayState {
        &self.replay
    }

    pub fn in_flight(&self) -> usize {
        self.queue.len()
    }

    /// Replaces the attack specs. Replay state restarts when the replay spec
    /// changes; FDI packet counting restarts when the FDI spec changes.
    pub fn set_attacks(&mut self, attacks: LinkAttacks) -> Result<()> {
        attacks.validate(&format!("attacks.{}", self.id))?;
        if attacks.replay != self.attacks.replay {
            self.replay = ReplayState::default();
        }
        if attacks.fdi != self.attacks.fdi {
            self.fdi_packets = 0;
        }
        self.attacks = attacks;
        Ok(())
    }

    pub fn set_transport(&mut self, transport: LinkTransport) -> Result<()> {
        transport.validate(&format!("links.{}", self.id))?;
        self.transport = transport;
        Ok(())
    }

    fn to_ticks(&self, seconds: f64) -> u64 {
        (seconds * self.tick_hz as f64).round().max(0.0) as u64
    }

    pub fn transmit(&mut self, mut pkt: P, now_tick: u64) -> TransmitOutcome {
        let origin_seq = self.next_origin_seq;
        self.next_origin_seq += 1;
        self.stats.sent += 1;
        let t_s = now_tick as f64 / self.tick_hz as f64;

        let drop_rate = self.attacks.drop.map_or(0.0, |d| d.drop_rate);
        if self.drop_rng.chance(drop_rate) {
            self.stats.dropped += 1;
            self.dropped_seqs.push(origin_seq);
            return TransmitOutcome::Dropped;
        }

        let original = pkt.value();
        let mut value = original;
        if let Some(spec) = &self.attacks.replay {
            value = replay_step(value, spec, t_s, &mut self.replay);
        }
        if let Some(spec) = &self.attacks.fdi {
            if spec.is_active(t_s) {
                value = apply_fdi(value, spec, self.fdi_packets, t_s, &mut self.fdi_rng);
                self.fdi_packets += 1;
            }
        }
        if value.to_bits() != original.to_bits() {
            self.stats.mutated += 1;
            pkt.set_value(value);
        }

        let extra = self
            .attacks
            .delay
            .map_or(0.0, |d| sample_delay(&d, &mut self.delay_rng));
        let latency_ticks = self.to_ticks(self.transport.base_latency_s + extra).max(1);
        let mut deliver_tick = now_tick + latency_ticks;
        if !self.transport.allow_reorder {
            deliver_tick = deliver_tick.max(self.last_deliver_tick);
        }
        self.last_deliver_tick = self.last_deliver_tick.max(deliver_tick);
        self.queue.insert(
            (deliver_tick, origin_seq),
            InFlightPacket {
                payload: pkt,
                deliver_tick,
                origin_seq,
            },
        );
        TransmitOutcome::Queued { deliver_tick }
    }

    /// Releases every packet due at or before `tick`, ordered by delivery tick
    /// then origin sequence.
    pub fn deliver_due(&mut self, tick: u64) -> Vec<P> {
        let mut out = Vec::new();
        while let Some(entry) = self.queue.first_entry() {
            if entry.key().0 > tick {
                break;
            }
            out.push(entry.remove().payload);
        }
        self.stats.delivered += out.len() as u64;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meter::MeasurementPacket;

    fn pkt(seq: u64, tick: u64, v: f64) -> MeasurementPacket {
        MeasurementPacket { seq, sent_tick: tick, frequency_hz: v }
    }

    fn link(attacks: LinkAttacks) -> Link<MeasurementPacket> {
        Link::new(LinkId::S2c, LinkTransport::default(), attacks, 50, 42).unwrap()
    }

    #[test]
    fn clean_link_is_one_tick_fifo() {
        let mut l = link(LinkAttacks::default());
        for t in 0..10 {
            assert_eq!(l.transmit(pkt(t, t, 50.0 + t as f64), t), TransmitOutcome::Queued { deliver_tick: t + 1 });
        }
        for t in 0..10 {
            let got = l.deliver_due(t + 1);
            assert_eq!(got, vec![pkt(t, t, 50.0 + t as f64)]);
        }
    }

    #[test]
    fn drop_extremes() {
        let mut none = link(LinkAttacks { drop: Some(DropSpec { drop_rate: 0.0 }), ..Default::default() });
        let mut all = link(LinkAttacks { drop: Some(DropSpec { drop_rate: 1.0 }), ..Default::default() });
        for t in 0..1000 {
            assert!(matches!(none.transmit(pkt(t, t, 50.0), t), TransmitOutcome::Queued { .. }));
            assert_eq!(all.transmit(pkt(t, t, 50.0), t), TransmitOutcome::Dropped);
        }
    }

    #[test]
    fn drop_rate_concentrates() {
        // Binomial(4920, 0.8): sd ≈ 0.0057, so ±0.02 is a 3.5-sigma band.
        let mut l = link(LinkAttacks { drop: Some(DropSpec { drop_rate: 0.8 }), ..Default::default() });
        for k in 0..4920u64 {
            l.transmit(pkt(k, k * 50, 50.0), k * 50);
        }
        let frac = l.stats().dropped as f64 / 4920.0;
        assert!((frac - 0.8).abs() <= 0.02, "drop fraction {frac}");
    }

    #[test]
    fn constant_delay_of_four_seconds() {
        let mut l = link(LinkAttacks {
            delay: Some(DelaySpec::Constant { constant_s: 4.0 }),
            ..Default::default()
        });
        // One tick of base latency plus 200 ticks of attack delay.
        assert_eq!(l.transmit(pkt(0, 0, 50.0), 0), TransmitOutcome::Queued { deliver_tick: 201 });
        assert!(l.deliver_due(200).is_empty());
        assert_eq!(l.deliver_due(201).len(), 1);
        assert_eq!(l.transmit(pkt(1, 50, 50.0), 50), TransmitOutcome::Queued { deliver_tick: 251 });
    }

    #[test]
    fn uniform_delay_offsets_in_range() {
        let mut l = link(LinkAttacks {
            delay: Some(DelaySpec::Uniform { min_s: 8.0, max_s: 12.0 }),
            ..Default::default()
        });
        for k in 0..1000u64 {
            match l.transmit(pkt(k, k * 50, 50.0), k * 50) {
                TransmitOutcome::Queued { deliver_tick } => {
                    let off = deliver_tick - k * 50 - 1;
                    assert!((400..=600).contains(&off), "offset {off}");
                }
                TransmitOutcome::Dropped => unreachable!(),
            }
        }
    }

    #[test]
    fn sample_delay_modes() {
        let mut r = RngStream::new(3, StreamId::Delay(LinkId::S2c));
        assert_eq!(sample_delay(&DelaySpec::Constant { constant_s: 4.0 }, &mut r), 4.0);
        let xs: Vec<f64> = (0..100).map(|_| sample_delay(&DelaySpec::Uniform { min_s: 0.0, max_s: 12.0 }, &mut r)).collect();
        assert!(xs.iter().all(|x| (0.0..=12.0).contains(x)));
        // Constant delays do not consume draws.
        let mut r2 = RngStream::new(3, StreamId::Delay(LinkId::S2c));
        let ys: Vec<f64> = (0..100).map(|_| sample_delay(&DelaySpec::Uniform { min_s: 0.0, max_s: 12.0 }, &mut r2)).collect();
        assert_eq!(xs, ys);
        assert_eq!(sample_delay(&DelaySpec::Uniform { min_s: 4.0, max_s: 4.0 }, &mut r), 4.0);
    }

    #[test]
    fn reordering_when_allowed() {
        let mut l = link(LinkAttacks::default());
        l.set_attacks(LinkAttacks { delay: Some(DelaySpec::Constant { constant_s: 1.98 }), ..Default::default() }).unwrap();
        l.transmit(pkt(0, 0, 1.0), 0);
        l.set_attacks(LinkAttacks::default()).unwrap();
        l.transmit(pkt(1, 50, 2.0), 50);
        let mut order = Vec::new();
        for t in 0..=200 {
            order.extend(l.deliver_due(t).into_iter().map(|p| p.seq));
        }
        assert_eq!(order, vec![1, 0]);
    }

    #[test]
    fn fifo_when_reordering_disabled() {
        let transport = LinkTransport { allow_reorder: false, ..Default::default() };
        let mut l: Link<MeasurementPacket> =
            Link::new(LinkId::S2c, transport, LinkAttacks { delay: Some(DelaySpec::Constant { constant_s: 1.98 }), ..Default::default() }, 50, 1).unwrap();
        l.transmit(pkt(0, 0, 1.0), 0);
        l.set_attacks(LinkAttacks::default()).unwrap();
        l.transmit(pkt(1, 50, 2.0), 50);
        let mut order = Vec::new();
        for t in 0..=200 {
            order.extend(l.deliver_due(t).into_iter().map(|p| p.seq));
        }
        assert_eq!(order, vec![0, 1]);
    }

    #[test]
    fn fdi_and_replay_are_exclusive() {
        let attacks = LinkAttacks {
            fdi: Some(FdiSpec::default()),
            replay: Some(ReplaySpec { start_s: 0.0, record_duration_s: 1.0, replay_duration_s: 1.0 }),
            ..Default::default()
        };
        assert!(attacks.validate("attacks.s2c").is_err());
        assert!(DropSpec { drop_rate: 1.5 }.validate("d").is_err());
        assert!(DelaySpec::Uniform { min_s: 2.0, max_s: 1.0 }.validate("d").is_err());
    }

    #[test]
    fn fdi_mutates_in_flight() {
        let mut l = link(LinkAttacks { fdi: Some(FdiSpec { offset: 0.2, ..Default::default() }), ..Default::default() });
        l.transmit(pkt(0, 0, 50.0), 0);
        assert!((l.deliver_due(1)[0].frequency_hz - 50.2).abs() < 1e-12);
        assert_eq!(l.stats().mutated, 1);
    }

    proptest::proptest! {
        #[test]
        fn drops_ignore_payload(values in proptest::collection::vec(0.0f64..100.0, 50..200), rate in 0.0f64..1.0) {
            let attacks = LinkAttacks { drop: Some(DropSpec { drop_rate: rate }), ..Default::default() };
            let mut a = link(attacks);
            let mut b = link(attacks);
            let mut reversed = values.clone();
            reversed.reverse();
            for (k, (x, y)) in values.iter().zip(&reversed).enumerate() {
                a.transmit(pkt(k as u64, k as u64, *x), k as u64);
                b.transmit(pkt(k as u64, k as u64, *y), k as u64);
            }
            proptest::prop_assert_eq!(a.dropped_seqs(), b.dropped_seqs());
        }
    }
}
