//! Error type shared by every core module.

use alloc::string::String;
use core::fmt;

/// Errors surfaced by scenario construction, the environments, and the
/// learners. All variants are data-only so callers can match and rewrap.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scenario violates a structural invariant (asymmetric edges, bad
    /// bounds, shape mismatches, ...). The message names the offending field.
    InvalidScenario(String),
    /// A learner or experiment configuration is out of range.
    InvalidConfig(String),
    /// Node index out of `0..n`.
    UnknownNode { node: usize, n: usize },
    /// The directed edge `from -> to` does not exist in the graph.
    MissingEdge { from: usize, to: usize },
    /// A route references a hop that is not an edge, or is not a walk.
    BrokenRoute(String),
    /// No path between the requested endpoints.
    NoRoute { src: usize, dst: usize },
    /// An action was applied where the feasibility mask forbids it.
    InfeasibleAction(String),
    /// `step` called on an episode that already terminated.
    EpisodeDone,
    /// A schedule violates the feasibility mask at the given cell.
    NonCompliantSchedule { sat: usize, slot: usize },
    /// Training produced a non-finite loss or parameter; the message carries
    /// the diagnostic breakdown.
    NonFiniteLoss(String),
    /// Miscellaneous caller error (wrong vector length, empty input, ...).
    InvalidArgument(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidScenario(msg) => write!(f, "invalid scenario: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::UnknownNode { node, n } => {
                write!(f, "node {node} out of range for {n}-node graph")
            }
            Error::MissingEdge { from, to } => write!(f, "no edge {from} -> {to}"),
            Error::BrokenRoute(msg) => write!(f, "broken route: {msg}"),
            Error::NoRoute { src, dst } => write!(f, "no route from {src} to {dst}"),
            Error::InfeasibleAction(msg) => write!(f, "infeasible action: {msg}"),
            Error::EpisodeDone => write!(f, "episode already terminated"),
            Error::NonCompliantSchedule { sat, slot } => {
                write!(f, "schedule infeasible at sat {sat}, slot {slot}")
            }
            Error::NonFiniteLoss(msg) => write!(f, "non-finite loss: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
