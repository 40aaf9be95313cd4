//! File formats, chain orchestration and the `shrimp` command line for the
//! length-structured shrimp population model in [`shrimp_core`].

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod fit;
pub mod output;
pub mod predict;
pub mod truth;

pub use config::RunConfig;
pub use error::{Error, Result};
