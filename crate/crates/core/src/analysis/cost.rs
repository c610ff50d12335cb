//! Gate-cost models for one derivative estimate.
//!
//! Accounting convention shared by the formulas and the measured counters:
//! every gate of `U(θ)` counts one unit; a measurement-basis layer counts `n`
//! units (one readout slot per system qubit); one detector coupling
//! `exp(i a Z_D ⊗ P)` counts [`COUPLING_UNITS_PER_QUBIT`]` * n` units; detector
//! preparation and readout are free.

use crate::estimators::{Method, Order};
use crate::statevector::GateTally;

/// Units charged per system qubit for one detector-coupling exponential
/// (two basis-change layers, a CNOT ladder onto the detector and one rotation).
pub const COUPLING_UNITS_PER_QUBIT: u64 = 4;

/// Units charged per system qubit for one measurement-basis layer.
pub const BASIS_UNITS_PER_QUBIT: u64 = 1;

/// Accounting units for a tally of applied gates plus `basis_layers` readout layers.
/// Clifford gates in the tally (basis changes, detector readout) are not charged
/// directly; basis layers are charged through `basis_layers`.
pub fn accounting_units(tally: &GateTally, n: usize, basis_layers: u64) -> u64 {
    let n = n as u64;
    tally.rotations
        + tally.cnots
        + COUPLING_UNITS_PER_QUBIT * n * tally.couplings
        + BASIS_UNITS_PER_QUBIT * n * basis_layers
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub method: Method,
    pub order: Order,
    pub shots: u64,
    pub j: u64,
    pub k: u64,
    pub n: u64,
    pub formula_cost: u64,
    pub measured_cost: Option<u64>,
}

impl CostReport {
    pub fn with_measured(mut self, measured: u64) -> Self {
        self.measured_cost = Some(measured);
        self
    }
}

/// Closed-form cost:
/// first order DM `2 N J (k+n)`, QNDM `N (3k + 8Jn)`;
/// second order DM `4 N J (k+n)`, QNDM `N (7k + 16Jn)`.
pub fn cost(method: Method, order: Order, shots: u64, j: u64, k: u64, n: u64) -> CostReport {
    let formula_cost = match (method, order) {
        (Method::Dm, Order::First) => 2 * shots * j * (k + n),
        (Method::Dm, Order::Second) => 4 * shots * j * (k + n),
        (Method::Qndm, Order::First) => shots * (3 * k + 2 * COUPLING_UNITS_PER_QUBIT * j * n),
        (Method::Qndm, Order::Second) => shots * (7 * k + 4 * COUPLING_UNITS_PER_QUBIT * j * n),
    };
    CostReport { method, order, shots, j, k, n, formula_cost, measured_cost: None }
}

/// `C_DM / C_QNDM` from the closed-form costs.
pub fn cost_ratio(order: Order, shots_dm: u64, shots_qndm: u64, j: u64, k: u64, n: u64) -> f64 {
    let dm = cost(Method::Dm, order, shots_dm, j, k, n).formula_cost as f64;
    let qndm = cost(Method::Qndm, order, shots_qndm, j, k, n).formula_cost as f64;
    dm / qndm
}

/// Large-`k` limit of [`cost_ratio`]: `2J/3` (first order) or `4J/7` (second order),
/// times `N_DM / N_QNDM`.
pub fn ratio_asymptote_k_dominant(order: Order, shots_dm: u64, shots_qndm: u64, j: u64) -> f64 {
    let shots = shots_dm as f64 / shots_qndm as f64;
    match order {
        Order::First => 2.0 * j as f64 / 3.0 * shots,
        Order::Second => 4.0 * j as f64 / 7.0 * shots,
    }
}

/// Large-`nJ` limit of [`cost_ratio`] (with `k ≫ n`): `k / (4n)` times `N_DM / N_QNDM`.
pub fn ratio_asymptote_nj_dominant(shots_dm: u64, shots_qndm: u64, k: u64, n: u64) -> f64 {
    k as f64 / (4.0 * n as f64) * shots_dm as f64 / shots_qndm as f64
}
