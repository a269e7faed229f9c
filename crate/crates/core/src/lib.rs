//! Deterministic simulator of a cloud-controlled battery energy storage system
//! doing load-frequency control, with an attack engine that interposes on the
//! sensor and control links.
//!
//! The closed loop is
//!
//! ```text
//! grid ──f──▶ frequency meter ──s2c──▶ cloud controller ──c2b──▶ BMS/battery
//!   ▲                                       ▲                        │
//!   │                                       └──────b2c-status────────┤
//!   └──────────────── delivered power ───────────────────────────────┘
//! ```
//!
//! Every federate is a small state machine advanced by [`engine::Engine`] in a
//! fixed per-tick order. Network links ([`link`]) are where delay, drop, false
//! data injection and replay happen; load altering acts on the grid directly.
//!
//! ```
//! use bess_sim::{engine::Engine, scenario::ScenarioConfig};
//!
//! let mut cfg = ScenarioConfig::baseline();
//! cfg.clock.duration_s = 10.0;
//! let mut engine = Engine::new(cfg).unwrap();
//! let log = engine.run_to_end().unwrap();
//! assert_eq!(log.len(), 500);
//! ```

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod battery;
pub mod calibrate;
pub mod clock;
pub mod controller;
pub mod engine;
pub mod error;
pub mod grid;
pub mod link;
pub mod meter;
pub mod metrics;
pub mod rng;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};

/// Nominal grid frequency.
pub const NOMINAL_HZ: f64 = 50.0;
/// Normal operating band, ±0.1 Hz around nominal.
pub const NOMINAL_BAND_HZ: (f64, f64) = (49.9, 50.1);
