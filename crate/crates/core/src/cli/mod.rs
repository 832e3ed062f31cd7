//! Batch driver: config parsing, scenario orchestration, and CSV/SVG
//! emission.

pub mod config;
pub mod output;
pub mod run;
pub mod svg;

pub use config::ScenarioConfig;
pub use run::{run_all, run_estimate, run_evolve, run_family, run_fisher, run_prepare, RunOptions};
