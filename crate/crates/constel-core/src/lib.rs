//! Core algorithms for desk-scale satellite constellation operations studies.
//!
//! Two problem families share the scenario models in [`scenario`]:
//!
//! * **Packet routing** over inter-satellite links ([`routing`]): tabular
//!   Q-routing trained against sampled queueing delays, with plain and
//!   mean-queue Dijkstra baselines on the same graph.
//! * **Task scheduling** under battery/memory budgets ([`resources`],
//!   [`ppo`], [`anneal`]): a multi-satellite acquisition/downlink environment,
//!   a masked policy-gradient learner, and simulated-annealing / random
//!   baselines over whole schedules.
//!
//! Everything in this crate is deterministic given a seed: RNG streams are
//! explicit (ChaCha8 or caller-supplied), collections iterate in fixed order,
//! and no wall-clock, platform, or thread-count dependence exists. The crate
//! is `no_std` (with `alloc`) so the algorithms can run embedded in larger
//! simulators; file formats, experiment harnesses, and the CLI live in the
//! companion `constel` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod anneal;
pub mod error;
pub mod ppo;
pub mod resources;
pub mod routing;
pub mod scenario;

mod util;

pub use error::{Error, Result};
