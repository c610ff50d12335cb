use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::FRAC_PI_2;

use super::{DerivativeEstimate, EstimateMode, Method, Order, Partial, Problem, DEFAULT_C1, DEFAULT_C2};
use crate::analysis::cost::accounting_units;
use crate::error::{config, contract, Result};
use crate::pauli::{check_permutation, Observable};
use crate::statevector::{binomial, init_state, Gate};

/// Coupling strength, shift and normalization of the QNDM estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct QndmSettings {
    pub lambda: f64,
    pub s: f64,
    pub c1: f64,
    pub c2: f64,
    /// Order in which the per-term coupling exponentials are applied;
    /// `None` keeps the observable's own term order.
    pub term_order: Option<Vec<usize>>,
}

impl QndmSettings {
    pub fn new(lambda: f64) -> Self {
        QndmSettings { lambda, s: FRAC_PI_2, c1: DEFAULT_C1, c2: DEFAULT_C2, term_order: None }
    }

    pub fn with_shift(mut self, s: f64) -> Self {
        self.s = s;
        self
    }

    pub fn with_normalization(mut self, c1: f64, c2: f64) -> Self {
        self.c1 = c1;
        self.c2 = c2;
        self
    }

    pub fn with_term_order(mut self, order: Vec<usize>) -> Self {
        self.term_order = Some(order);
        self
    }

    pub fn normalization(&self, order: Order) -> f64 {
        match order {
            Order::First => self.c1,
            Order::Second => self.c2,
        }
    }

    pub fn validate(&self, num_terms: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(config(format!("coupling λ must be positive, got {}", self.lambda)));
        }
        if !self.s.is_finite() || self.s.sin().abs() < 1e-12 {
            return Err(config(format!("shift s = {} has sin s = 0", self.s)));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(config("normalization constants must be positive"));
        }
        if let Some(order) = &self.term_order {
            check_permutation(order, num_terms)?;
        }
        Ok(())
    }
}

/// Detector outcome counts from `shots` single-qubit measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorStats {
    pub shots: u64,
    pub count0: u64,
}

impl DetectorStats {
    pub fn new(shots: u64, count0: u64) -> Result<Self> {
        if shots == 0 || count0 > shots {
            return Err(contract(format!("invalid detector counts {count0}/{shots}")));
        }
        Ok(DetectorStats { shots, count0 })
    }

    pub fn p0_hat(&self) -> f64 {
        self.count0 as f64 / self.shots as f64
    }

    /// Bernoulli plug-in single-shot variance `p(1-p)`.
    pub fn sigma_d2_hat(&self) -> f64 {
        let p = self.p0_hat();
        p * (1.0 - p)
    }
}

fn coupling_layer(observable: &Observable, term_order: Option<&[usize]>, angle: f64, out: &mut Vec<Gate>) {
    let terms = observable.terms();
    let mut push = |i: usize| {
        out.push(Gate::DetectorCoupling { angle: angle * terms[i].coeff, string: terms[i].string.clone() });
    };
    match term_order {
        Some(order) => order.iter().for_each(|&i| push(i)),
        None => (0..terms.len()).for_each(push),
    }
}

/// Unitaries and couplings of the protocol, without detector readout.
fn evolution_gates(
    problem: &Problem,
    partial: Partial,
    s: f64,
    lambda: f64,
    term_order: Option<&[usize]>,
) -> Result<Vec<Gate>> {
    partial.validate(problem.ansatz.dim())?;
    if let Some(order) = term_order {
        check_permutation(order, problem.num_terms())?;
    }
    let mut gates = Vec::new();
    let mut previous = None;
    for (theta, sign) in partial.qndm_sequence(&problem.theta, s)? {
        if let Some(prev) = &previous {
            gates.extend(problem.ansatz.build_circuit(prev, true)?);
        }
        gates.extend(problem.ansatz.build_circuit(&theta, false)?);
        coupling_layer(&problem.observable, term_order, sign * lambda, &mut gates);
        previous = Some(theta);
    }
    Ok(gates)
}

/// Full QNDM gate list after the detector's `|+>` preparation: the shifted
/// unitaries interleaved with alternating couplings `-λ, +λ (, -λ, +λ)`, then
/// the detector readout `S†, H`.
pub fn qndm_circuit(problem: &Problem, partial: Partial, settings: &QndmSettings) -> Result<Vec<Gate>> {
    settings.validate(problem.num_terms())?;
    let mut gates = evolution_gates(problem, partial, settings.s, settings.lambda, settings.term_order.as_deref())?;
    let detector = problem.num_qubits();
    gates.push(Gate::Sdg(detector));
    gates.push(Gate::H(detector));
    Ok(gates)
}

/// Quasi-characteristic function `G_λ = <0|ρ_D^f|1> / <0|ρ_D^0|1>`.
pub fn qndm_exact_g(
    problem: &Problem,
    partial: Partial,
    s: f64,
    lambda: f64,
    term_order: Option<&[usize]>,
) -> Result<Complex64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(config(format!("λ must be non-negative, got {lambda}")));
    }
    let mut state = init_state(problem.num_qubits(), true)?;
    let initial = state.detector_coherence()?;
    state.apply_circuit(&evolution_gates(problem, partial, s, lambda, term_order)?)?;
    Ok(state.detector_coherence()? / initial)
}

/// Exact readout population `P0` of the full protocol; `λ = 0` is allowed.
pub fn qndm_detector_p0(
    problem: &Problem,
    partial: Partial,
    s: f64,
    lambda: f64,
    term_order: Option<&[usize]>,
) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(config(format!("λ must be non-negative, got {lambda}")));
    }
    let n = problem.num_qubits();
    let mut gates = evolution_gates(problem, partial, s, lambda, term_order)?;
    gates.extend([Gate::Sdg(n), Gate::H(n)]);
    let mut state = init_state(n, true)?;
    state.apply_circuit(&gates)?;
    state.exact_probability(n, false)
}

/// Simulated QNDM protocol: the circuit is run once and the detector
/// population `P0` is kept; shots are drawn from it on demand.
#[derive(Debug, Clone)]
pub struct QndmProbe {
    partial: Partial,
    settings: QndmSettings,
    p0: f64,
    units_per_shot: u64,
    raw_per_shot: u64,
}

impl QndmProbe {
    pub fn prepare(problem: &Problem, partial: Partial, settings: &QndmSettings) -> Result<Self> {
        let gates = qndm_circuit(problem, partial, settings)?;
        let n = problem.num_qubits();
        let mut state = init_state(n, true)?;
        state.apply_circuit(&gates)?;
        let p0 = state.exact_probability(n, false)?;
        let tally = state.tally();
        Ok(QndmProbe {
            partial,
            settings: settings.clone(),
            p0,
            units_per_shot: accounting_units(&tally, n, 0),
            // +1 for the detector's Hadamard preparation
            raw_per_shot: tally.total() + 1,
        })
    }

    /// Exact detector population `P0` after readout.
    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn settings(&self) -> &QndmSettings {
        &self.settings
    }

    pub fn partial(&self) -> Partial {
        self.partial
    }

    /// `-asin(2P0 - 1) / (c λ sin^p s)` with `p` the derivative order.
    pub fn value_from_p0(&self, p0: f64) -> f64 {
        let order = self.partial.order();
        let denom =
            self.settings.normalization(order) * self.settings.lambda * self.settings.s.sin().powi(order.sin_power());
        // 2P0 - 1 is within [-1, 1] up to rounding of the summed probabilities.
        // `+ 0.0` maps -0 to 0.
        -(2.0 * p0 - 1.0).clamp(-1.0, 1.0).asin() / denom + 0.0
    }

    pub fn exact_value(&self) -> f64 {
        self.value_from_p0(self.p0)
    }

    pub fn exact(&self, shots: u64) -> Result<DerivativeEstimate> {
        if shots == 0 {
            return Err(contract("shot count must be >= 1"));
        }
        Ok(self.estimate(self.exact_value(), shots, None))
    }

    /// One estimate from `shots` detector measurements.
    pub fn sample<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Result<DerivativeEstimate> {
        if shots == 0 {
            return Err(contract("QNDM needs at least one shot"));
        }
        let stats = DetectorStats::new(shots, binomial(shots, self.p0, rng))?;
        Ok(self.estimate(self.value_from_p0(stats.p0_hat()), shots, Some(stats)))
    }

    pub fn measured_cost(&self, shots: u64) -> u64 {
        self.units_per_shot * shots
    }

    fn estimate(&self, value: f64, shots: u64, detector: Option<DetectorStats>) -> DerivativeEstimate {
        DerivativeEstimate {
            value,
            method: Method::Qndm,
            partial: self.partial,
            shots,
            lambda: Some(self.settings.lambda),
            measured_gate_cost: self.units_per_shot * shots,
            raw_gate_count: self.raw_per_shot * shots,
            oracle_value: None,
            detector,
        }
    }
}

/// QNDM estimate of a first or second derivative from a single detector readout per shot.
pub fn qndm_derivative<R: Rng + ?Sized>(
    problem: &Problem,
    partial: Partial,
    settings: &QndmSettings,
    shots: u64,
    mode: EstimateMode,
    rng: &mut R,
) -> Result<DerivativeEstimate> {
    let probe = QndmProbe::prepare(problem, partial, settings)?;
    match mode {
        EstimateMode::Exact => probe.exact(shots),
        EstimateMode::Sampled => probe.sample(shots, rng),
    }
}
