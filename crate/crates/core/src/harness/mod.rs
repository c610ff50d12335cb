//! Seeded randomized-realization sweeps, their CSV outputs and runcards.

pub mod config;
pub mod fit;
pub mod output;
pub mod runcard;
pub mod sweep;

pub use config::{
    ExperimentConfig, LambdaRule, Preset, Regime, SweepKind, ARTIFACT_VERSION, MAX_TOTAL_QUBITS, REGIME_FACTOR,
};
pub use fit::{linear_fit, LinearFit};
pub use output::{
    cost_sweep_csv, derivative_csv, mse_sweep_csv, ratio_sweep_csv, realization_csv, DerivativeRow, COST_SWEEP_HEADER,
    DERIVATIVE_HEADER, MSE_SWEEP_HEADER, RATIO_SWEEP_HEADER, REALIZATION_HEADER,
};
pub use runcard::Runcard;
pub use sweep::{
    aggregate, realization_seed, run_realization, run_sweep, sweep_points, MethodRecord, MethodSummary,
    RealizationRecord, SweepOutput, SweepPoint, SweepRow,
};
