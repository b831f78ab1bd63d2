//! Configuration, simulation, sweeps and output files.

pub mod config;
pub mod report;
pub mod sim;
pub mod sweep;

pub use config::{load_config, parse_config, EnvKind, RunConfig};
pub use sim::{simulate, simulate_replicate, RunSummary, Trace, TraceRow};
pub use sweep::{sweep, SweepGrid, SweepPoint};
