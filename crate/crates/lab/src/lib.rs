//! Configuration, parallel orchestration and file output for the `cqed-core`
//! simulations.

pub mod config;
pub mod error;
pub mod lab;
pub mod output;

pub use config::RunConfig;
pub use error::{LabError, Result};
pub use lab::{run, Command, Lab, Outcome};
