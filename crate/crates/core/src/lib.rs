//! Discrete-time simulator for opportunistic public-key management in
//! cooperative ad hoc networks (FANET, MANET/VANET).
//!
//! Nodes move under random waypoint or Gauss-Markov mobility, exchange
//! signed, expiring public keys whenever they come into radio range, and
//! store them in bounded key tables governed by one of three replacement
//! strategies. Each snapshot the simulator builds the physical graph and the
//! key graph (mutual valid key possession), and measures key-path existence,
//! intermediate decrypt/re-encrypt steps, overall routed path length,
//! visit-all times, time to full key connectivity, and neighbor-count
//! statistics.
//!
//! Module map:
//! - [`mobility`]: node trajectories (RWP, Gauss-Markov) in 2D or 3D boxes.
//! - [`radio`]: free-space / two-ray received power, range, contact pairs.
//! - [`keying`]: elliptic-curve keys, signed records, key tables.
//! - [`keygraph`]: graphs, shortest key-paths, DE steps, path expansion.
//! - [`metrics`]: communication density and all evaluation metrics.
//! - [`engine`]: single runs and seed/area sweeps.
//! - [`config`], [`output`]: scenario files and CSV/JSON results.

pub mod config;
pub mod engine;
pub mod error;
pub mod keygraph;
pub mod keying;
pub mod metrics;
pub mod mobility;
pub mod output;
pub mod par;
pub mod radio;
pub mod rng;

pub use error::{Error, Result};
