//! Command-line front end and HTTP service for the coronary analysis engine.

pub mod args;
pub mod commands;
pub mod error;
pub mod server;

pub use error::{CliError, Result};
