//! Run configuration, file output and the drivers behind the command line:
//! single trajectories, ensembles, parameter sweeps and model comparisons.

pub mod config;
pub mod io;
pub mod run;
pub mod stats;

pub use config::{RunConfig, PRESETS};
pub use run::{
    compare_full_reduced, ensemble_rows, most_probable, prepare, run_cavity, run_ensemble, run_filter, run_fullsme,
    run_gain, run_mostprobable, run_sweep, run_trajectory, summarize_ensemble, sweep_points, EnsembleRow,
    EnsembleSummary, FullComparison, MostProbableSummary, Prepared, SweepPoint, TrajectorySummary,
};
