//! Peak-based MDP trajectory solver with a first-come-first-served
//! pre-departure flight planning (PDFP) scheduler.
//!
//! The value function is approximated as a max over exponentially decaying
//! peaks: a single positive goal peak attracts, risk wells around traffic and
//! terrain repel out to a truncation radius. Each decision step forward
//! projects every candidate action over a short window, values the projected
//! states against all peaks, and picks the best action. The scheduler wraps
//! this solver to grant conflict-free 4D trajectories against terrain and a
//! growing database of previously accepted flight plans.

pub mod bench;
pub mod domain;
pub mod dynamics;
pub mod peaks;
pub mod planstore;
pub mod scheduler;
pub mod simulation;
pub mod valuation;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("batch and goal lists differ in length ({batch} aircraft, {goals} goals)")]
    MismatchedBatchGoals { batch: usize, goals: usize },
    #[error("batch must be non-empty")]
    EmptyBatch,
    #[error("duplicate plan id `{0}`")]
    DuplicatePlanId(String),
    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),
    #[error("invalid flight plan: {0}")]
    InvalidPlan(String),
    #[error("invalid request for aircraft `{aircraft_id}`: {message}")]
    InvalidRequest { aircraft_id: String, message: String },
    #[error("plan store i/o on {}: {source}", path.display())]
    StoreIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("plan store record {line} in {}: {message}", path.display())]
    StoreParse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
