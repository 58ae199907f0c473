//! File formats, dataset generation, benchmarking and the command-line
//! front-end around `iocompose-core`.

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod generate;
pub mod pipeline;
pub mod wsc;

pub use error::{Error, Result};
pub use formats::Dataset;
pub use pipeline::{run, RunOptions, RunOutcome, RunReport};
