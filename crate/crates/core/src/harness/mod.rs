//! Experiment configuration, the Monte Carlo runner, figure presets and
//! CSV export.

pub mod config;
pub mod curves;
pub mod design;
pub mod presets;
pub mod results;
pub mod runner;
pub mod units;

pub use config::{full_power_count, ExperimentSpec, Layout, Scheme, SolverSettings, Sweep};
pub use presets::{fig_preset, Preset, Scale, PRESET_NAMES};
pub use results::{
    export_csv, mean_rate, parse_csv, read_csv, summarize, write_csv, write_summary_csv, ResultRow,
    SummaryRow, CSV_HEADER, ERROR_TAG,
};
pub use curves::{amplitude_curves, write_curves, CurvePoint};
pub use design::SavedDesign;
pub use runner::{run_experiment, solve_trial, trial_channels, trial_rng, TrialDesign};
