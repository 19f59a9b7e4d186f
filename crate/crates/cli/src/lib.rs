//! File formats, the multi-threaded simulation driver and the `ldp`
//! command-line front end over `ldp-core`.

pub mod cli;
pub mod driver;
pub mod error;
pub mod formats;

pub use error::{CliError, CliResult};
