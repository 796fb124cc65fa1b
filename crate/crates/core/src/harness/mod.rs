//! Benchmarking, export and rendering used by the `prrtc` binary.

mod bench;
mod config;
mod export;
mod render;

pub use bench::{
    parse_methods, run_benchmark, write_stats_csv, write_trials_csv, BenchmarkConfig,
    BenchmarkStats, Method, MethodStats, TrialOutcome,
};
pub use config::{Settings, PARAM_KEYS};
pub use export::{export_trajectory_csv, read_trajectory_csv, TRAJECTORY_HEADER};
pub use render::render_svg;
