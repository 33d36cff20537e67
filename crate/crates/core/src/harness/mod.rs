//! Experiment orchestration: run configuration, amplitude sweeps,
//! counterexample regressions, persistence (CSV + JSON manifest + SVG).

mod config;
mod experiment;
mod plot;
mod sweep;

pub use config::{ExperimentKind, InitialShape, ModelKind, RunConfig};
pub use experiment::{
    render_report, run_experiment, FileEntry, Manifest, RunOutcome, TRAJECTORY_CSV_HEADER,
};
pub use plot::{color, log_log_plot, Series};
pub use sweep::{amplitude_sweep, counterexample_regression, SweepCell, SweepReport};
