//! Simulator for synchronous anonymous CONGEST networks and the token
//! collision algorithms that run on it.

pub mod algo;
pub mod corpus;
pub mod engine;
pub mod error;
pub mod message;
pub mod rng;
pub mod state;
pub mod token;
pub mod topology;
pub mod trace_io;
pub mod verify;

pub use engine::{run, Algorithm, Knowledge, RunConfig, RunMetrics, RunOutput, RunStatus, Trace, TraceLevel};
pub use error::{Error, Result};
pub use message::Verdict;
pub use token::{Ident, Token};
