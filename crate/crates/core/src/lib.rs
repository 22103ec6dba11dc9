//! Discrete-time simulator of mixed-priority LEO constellations sharing
//! ground stations, with planners for downlink-delay and queue-overflow
//! attacks on a low-priority satellite and a Monte-Carlo evaluation harness.
//!
//! The pipeline runs scenario → contact windows ([`orbit`]) → antenna
//! schedules and attackable slots ([`scheduler`]) → target queue model
//! ([`queue`]) → attack strategy ([`planner`]). [`pipeline::analyze`] wires
//! the first three stages together.

pub mod cli;
pub mod eval;
pub mod orbit;
pub mod pipeline;
pub mod planner;
pub mod queue;
pub mod scenario;
pub mod scheduler;
pub mod synth;

#[cfg(test)]
pub(crate) mod test_support;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] scenario::ScenarioError),
    #[error(transparent)]
    Orbit(#[from] orbit::OrbitError),
    #[error(transparent)]
    Queue(#[from] queue::QueueError),
    #[error(transparent)]
    Plan(#[from] planner::PlanError),
    #[error("{0}")]
    Config(String),
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
