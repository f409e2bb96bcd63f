//! Analytic quantum filter for balanced measurements: matched-filter record
//! integrals, the closed-form two-qubit state, concurrence estimates and the
//! statistics of the filtered outcomes.

mod analytics;
mod bloch;
mod mostprob;
mod state;

pub use analytics::{
    efficiency_threshold, heralded_concurrence, optimal_lambda, optimal_lambda_for, outcome_distribution,
    OptimalLambda, OutcomeMixture, LAMBDA_MAX,
};
pub use bloch::{
    bloch_from_filter, concurrence_closed_form, concurrence_exact, concurrence_filter, filter_bloch_vector,
    state_from_coordinates,
};
pub use mostprob::{most_probable_trajectory, MostProbablePath};
pub use state::{check_balanced, filter_record, FilterState, BALANCE_TOL, REAL_S_TOL};
