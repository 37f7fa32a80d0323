//! File formats, the timed evaluation pipeline and the command-line front
//! end for [`uncertain_core`].

pub mod cli;
pub mod error;
pub mod format;
pub mod report;

pub use error::CliError;
pub use report::{run_prob, RunOptions, RunReport};
