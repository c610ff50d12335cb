//! Statevector simulation of variational-circuit derivative estimators:
//! direct measurement of every Pauli string versus a single-detector
//! non-demolition protocol, with MSE and gate-cost analysis and a seeded
//! sweep harness.

pub mod analysis;
pub mod ansatz;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod pauli;
pub mod seed;
pub mod statevector;

pub use analysis::{
    cost, cost_ratio, empirical_mse, lambda_rule, match_shots_dm, mse_formula, CostReport, MseInputs, MseReport,
    MseSource, SigmaMode,
};
pub use ansatz::{gate_count, random_ansatz, Axis, LayeredAnsatz, ParamVector};
pub use error::{Error, Result};
pub use estimators::{
    calibrate_normalization, dm_derivative, exact_cost, exact_derivative_oracle, qndm_derivative, qndm_detector_p0,
    qndm_exact_g, DerivativeEstimate, DetectorStats, EstimateMode, Method, Order, Partial, Problem, QndmSettings,
};
pub use pauli::{Observable, PauliLetter, PauliString, Term};
pub use statevector::{init_state, Gate, GateTally, StateVector};
