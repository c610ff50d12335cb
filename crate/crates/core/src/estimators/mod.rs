//! Derivative estimators: the exact parameter-shift oracle, direct measurement
//! (DM) of every Pauli string, and the single-detector QNDM protocol.

mod calibration;
mod dm;
mod qndm;

pub use calibration::{
    calibrate_default, calibrate_normalization, Calibration, CalibrationCase, CALIBRATION_TOLERANCE,
    DEFAULT_LAMBDA_GRID, DEFAULT_THETAS, PRINTED_C1,
};
pub use dm::{dm_derivative, DmProbe};
pub use qndm::{qndm_circuit, qndm_derivative, qndm_detector_p0, qndm_exact_g, DetectorStats, QndmProbe, QndmSettings};

use std::fmt;

use crate::ansatz::{LayeredAnsatz, ParamVector};
use crate::error::{config, contract, Result};
use crate::pauli::Observable;
use crate::statevector::init_state;

/// Calibrated first-order normalization: `g ≈ -asin(2P0-1) / (C1 λ sin s)`.
pub const DEFAULT_C1: f64 = 4.0;
/// Calibrated second-order normalization: `g ≈ -asin(2P0-1) / (C2 λ sin² s)`.
pub const DEFAULT_C2: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dm,
    Qndm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dm => "dm",
            Method::Qndm => "qndm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn as_u8(self) -> u8 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(config(format!("derivative order must be 1 or 2, got {v}"))),
        }
    }

    /// Power of `sin s` in the parameter-shift divisor.
    pub fn sin_power(self) -> i32 {
        self.as_u8() as i32
    }
}

/// Whether probabilities are read exactly from amplitudes or sampled with shots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMode {
    Exact,
    Sampled,
}

/// Which partial derivative is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Partial {
    /// `∂f/∂θ_l`
    First(usize),
    /// `∂²f/∂θ_w∂θ_l`
    Second { w: usize, l: usize },
}

impl Partial {
    pub fn order(&self) -> Order {
        match self {
            Partial::First(_) => Order::First,
            Partial::Second { .. } => Order::Second,
        }
    }

    pub fn l(&self) -> usize {
        match *self {
            Partial::First(l) | Partial::Second { l, .. } => l,
        }
    }

    pub fn w(&self) -> Option<usize> {
        match *self {
            Partial::First(_) => None,
            Partial::Second { w, .. } => Some(w),
        }
    }

    /// Swaps `w` and `l`.
    pub fn transposed(&self) -> Partial {
        match *self {
            Partial::First(l) => Partial::First(l),
            Partial::Second { w, l } => Partial::Second { w: l, l: w },
        }
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        let bad = |d: usize| d >= dim;
        if bad(self.l()) || self.w().is_some_and(bad) {
            return Err(contract(format!("direction out of range for {dim} parameters")));
        }
        Ok(())
    }

    /// `2 sin s` (first order) or `4 sin² s` (second order).
    pub fn shift_divisor(&self, s: f64) -> Result<f64> {
        let sin = s.sin();
        if !s.is_finite() || sin.abs() < 1e-12 {
            return Err(config(format!("shift s = {s} has sin s = 0")));
        }
        Ok(match self.order() {
            Order::First => 2.0 * sin,
            Order::Second => 4.0 * sin * sin,
        })
    }

    /// Shifted points and their signs in the parameter-shift combination.
    pub(crate) fn shift_points(&self, theta: &ParamVector, s: f64) -> Result<Vec<(ParamVector, f64)>> {
        Ok(match *self {
            Partial::First(l) => vec![(theta.shift(l, s)?, 1.0), (theta.shift(l, -s)?, -1.0)],
            Partial::Second { w, l } => {
                let pt = |sl: f64, sw: f64| theta.shift(l, sl)?.shift(w, sw);
                vec![(pt(s, s)?, 1.0), (pt(-s, s)?, -1.0), (pt(s, -s)?, -1.0), (pt(-s, -s)?, 1.0)]
            }
        })
    }

    /// QNDM visiting order: each point is followed by a coupling of the given sign.
    /// First order visits θ-s, θ+s; second order visits (+l,-w), (-l,-w), (-l,+w), (+l,+w).
    pub(crate) fn qndm_sequence(&self, theta: &ParamVector, s: f64) -> Result<Vec<(ParamVector, f64)>> {
        Ok(match *self {
            Partial::First(l) => vec![(theta.shift(l, -s)?, -1.0), (theta.shift(l, s)?, 1.0)],
            Partial::Second { w, l } => {
                let pt = |sl: f64, sw: f64| theta.shift(l, sl)?.shift(w, sw);
                vec![(pt(s, -s)?, -1.0), (pt(-s, -s)?, 1.0), (pt(-s, s)?, -1.0), (pt(s, s)?, 1.0)]
            }
        })
    }
}

/// A circuit, its parameters and the measured observable.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub ansatz: LayeredAnsatz,
    pub theta: ParamVector,
    pub observable: Observable,
}

impl Problem {
    pub fn new(ansatz: LayeredAnsatz, theta: ParamVector, observable: Observable) -> Result<Self> {
        if theta.len() != ansatz.dim() {
            return Err(contract(format!(
                "parameter vector has {} entries, ansatz expects {}",
                theta.len(),
                ansatz.dim()
            )));
        }
        if observable.num_qubits() != ansatz.num_qubits() {
            return Err(contract(format!(
                "observable acts on {} qubits, ansatz on {}",
                observable.num_qubits(),
                ansatz.num_qubits()
            )));
        }
        Ok(Problem { ansatz, theta, observable })
    }

    pub fn num_qubits(&self) -> usize {
        self.ansatz.num_qubits()
    }

    /// `k`, gates in `U(θ)`.
    pub fn gate_count(&self) -> u64 {
        self.ansatz.gate_count()
    }

    pub fn num_terms(&self) -> usize {
        self.observable.len()
    }

    /// Same circuit at different parameters.
    pub fn with_theta(&self, theta: ParamVector) -> Result<Problem> {
        Problem::new(self.ansatz.clone(), theta, self.observable.clone())
    }
}

/// One derivative estimate together with its bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub method: Method,
    pub partial: Partial,
    /// Shots per measured circuit (per Pauli string and shift point for DM).
    pub shots: u64,
    pub lambda: Option<f64>,
    /// Gate cost in accounting units, summed over all shots.
    pub measured_gate_cost: u64,
    /// Gates the engine would apply over all shots, basis changes and readout included.
    pub raw_gate_count: u64,
    pub oracle_value: Option<f64>,
    pub detector: Option<DetectorStats>,
}

impl DerivativeEstimate {
    pub fn order(&self) -> Order {
        self.partial.order()
    }

    pub fn with_oracle(mut self, oracle: f64) -> Self {
        self.oracle_value = Some(oracle);
        self
    }
}

/// `f(θ) = <0|U†(θ) M U(θ)|0>`.
pub fn exact_cost(ansatz: &LayeredAnsatz, theta: &ParamVector, observable: &Observable) -> Result<f64> {
    if observable.num_qubits() != ansatz.num_qubits() {
        return Err(contract("observable and ansatz act on different qubit counts"));
    }
    let mut state = init_state(ansatz.num_qubits(), false)?;
    state.apply_circuit(&ansatz.build_circuit(theta, false)?)?;
    observable.expectation(&state)
}

/// Exact parameter-shift value of the requested partial derivative.
pub fn exact_derivative_oracle(problem: &Problem, partial: Partial, s: f64) -> Result<f64> {
    partial.validate(problem.ansatz.dim())?;
    let divisor = partial.shift_divisor(s)?;
    let mut acc = 0.0;
    for (point, sign) in partial.shift_points(&problem.theta, s)? {
        acc += sign * exact_cost(&problem.ansatz, &point, &problem.observable)?;
    }
    Ok(acc / divisor)
}
