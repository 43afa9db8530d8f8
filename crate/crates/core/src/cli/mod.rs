//! Command-line front end, random instance generation and the benchmark harness.

mod app;
pub mod generate;
pub mod harness;

pub use app::{cli_main, EXIT_INSTANCE, EXIT_OK, EXIT_USAGE, EXIT_VERIFY};
