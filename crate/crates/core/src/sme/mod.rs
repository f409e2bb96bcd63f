//! Stochastic master equations for the two remote qubits: the reduced
//! two-qubit model driven by precomputed cavity trajectories and the full
//! qubit-cavity model compiled from the measurement network.

mod full;
mod record;
mod reduced;
mod setup;
mod state;
mod trajectory;
mod wiener;

pub use full::{FullModel, FullState, DEFAULT_LEAKAGE_LIMIT};
pub use record::MeasurementRecord;
pub use reduced::{record_mean, step_reduced, step_reduced_record, step_unconditioned, Scheme};
pub use setup::{MeasurementSetup, StepCoefficients};
pub use state::{bloch_index, TwoQubitState, BLOCH_LABELS, HERMITICITY_TOL, POSITIVITY_TOL, TRACE_TOL};
pub use trajectory::{simulate_trajectory, Model, SimulationOptions, Simulator, TrajectoryOutput};
pub use wiener::{trajectory_rng, wiener_pair, WienerPath};
