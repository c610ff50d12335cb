use rand::Rng;

use super::{DerivativeEstimate, EstimateMode, Method, Partial, Problem};
use crate::analysis::cost::accounting_units;
use crate::error::{contract, Result};
use crate::pauli::basis_change_circuit;
use crate::statevector::{binomial, init_state};

/// One shifted parameter point of a DM evaluation.
#[derive(Debug, Clone)]
struct ShiftPoint {
    sign: f64,
    /// `P(eigenvalue = +1)` for each Pauli string after its basis change.
    plus_prob: Vec<f64>,
}

/// Simulated DM protocol for one problem and partial derivative.
///
/// The circuits are run once; shot noise is drawn afterwards from the exact
/// outcome probabilities, so repeated sampling reuses the simulation.
#[derive(Debug, Clone)]
pub struct DmProbe {
    partial: Partial,
    coeffs: Vec<f64>,
    divisor: f64,
    points: Vec<ShiftPoint>,
    /// Accounting units for one shot of every (point, string) circuit.
    units_per_shot: u64,
    raw_per_shot: u64,
}

impl DmProbe {
    /// For every shifted point and Pauli string: run `U(θ±)`, rotate into the
    /// string's eigenbasis, and record the even-parity probability on its support.
    pub fn prepare(problem: &Problem, partial: Partial, s: f64) -> Result<Self> {
        partial.validate(problem.ansatz.dim())?;
        let divisor = partial.shift_divisor(s)?;
        let n = problem.num_qubits();
        let mut points = Vec::new();
        let mut units_per_shot = 0;
        let mut raw_per_shot = 0;
        for (theta, sign) in partial.shift_points(&problem.theta, s)? {
            let mut prepared = init_state(n, false)?;
            prepared.apply_circuit(&problem.ansatz.build_circuit(&theta, false)?)?;
            let unitary = prepared.tally();
            let mut plus_prob = Vec::with_capacity(problem.num_terms());
            for term in problem.observable.terms() {
                let mut st = prepared.clone();
                st.reset_tally();
                st.apply_circuit(&basis_change_circuit(&term.string))?;
                plus_prob.push(st.even_parity_probability(term.string.support_mask()));
                units_per_shot += accounting_units(&unitary, n, 1);
                raw_per_shot += unitary.total() + st.tally().total();
            }
            points.push(ShiftPoint { sign, plus_prob });
        }
        Ok(DmProbe {
            partial,
            coeffs: problem.observable.coeffs().collect(),
            divisor,
            points,
            units_per_shot,
            raw_per_shot,
        })
    }

    pub fn partial(&self) -> Partial {
        self.partial
    }

    /// Infinite-shot value, i.e. the parameter-shift rule on exact expectations.
    pub fn exact_value(&self) -> f64 {
        self.combine(|p| 2.0 * p - 1.0)
    }

    /// Per-string single-shot variance `1 - <P>²`, averaged over the shifted points.
    pub fn exact_sigma2(&self) -> Vec<f64> {
        self.average_over_points(|p| {
            let e = 2.0 * p - 1.0;
            1.0 - e * e
        })
    }

    /// Plug-in single-shot variances from a pilot run of `shots` per string and point.
    pub fn pilot_sigma2<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Result<Vec<f64>> {
        if shots == 0 {
            return Err(contract("pilot needs at least one shot"));
        }
        let mut acc = vec![0.0; self.coeffs.len()];
        for point in &self.points {
            for (a, &p) in acc.iter_mut().zip(&point.plus_prob) {
                let mean = sampled_mean(p, shots, rng);
                *a += 1.0 - mean * mean;
            }
        }
        let np = self.points.len() as f64;
        Ok(acc.into_iter().map(|v| v / np).collect())
    }

    /// One DM estimate with `shots` measurements per Pauli string and shift point.
    pub fn sample<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Result<DerivativeEstimate> {
        if shots == 0 {
            return Err(contract("DM needs at least one shot per string"));
        }
        let value = self.combine(|p| sampled_mean(p, shots, rng));
        Ok(self.estimate(value, shots))
    }

    /// Exact-mode estimate; costs are still reported for `shots`.
    pub fn exact(&self, shots: u64) -> Result<DerivativeEstimate> {
        if shots == 0 {
            return Err(contract("shot count must be >= 1"));
        }
        Ok(self.estimate(self.exact_value(), shots))
    }

    pub fn measured_cost(&self, shots: u64) -> u64 {
        self.units_per_shot * shots
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn estimate(&self, value: f64, shots: u64) -> DerivativeEstimate {
        DerivativeEstimate {
            value,
            method: Method::Dm,
            partial: self.partial,
            shots,
            lambda: None,
            measured_gate_cost: self.units_per_shot * shots,
            raw_gate_count: self.raw_per_shot * shots,
            oracle_value: None,
            detector: None,
        }
    }

    /// Parameter-shift combination of per-string means, `mean_of(P(+1))`.
    fn combine(&self, mut mean_of: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for point in &self.points {
            let f: f64 = point.plus_prob.iter().zip(&self.coeffs).map(|(&p, h)| h * mean_of(p)).sum();
            acc += point.sign * f;
        }
        acc / self.divisor
    }

    fn average_over_points(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let np = self.points.len() as f64;
        (0..self.coeffs.len()).map(|i| self.points.iter().map(|pt| f(pt.plus_prob[i])).sum::<f64>() / np).collect()
    }
}

/// Mean of `shots` ±1 eigenvalues with `P(+1) = p`.
fn sampled_mean<R: Rng + ?Sized>(p: f64, shots: u64, rng: &mut R) -> f64 {
    let plus = binomial(shots, p, rng);
    (2.0 * plus as f64 - shots as f64) / shots as f64
}

/// Direct-measurement estimate of a first or second derivative.
pub fn dm_derivative<R: Rng + ?Sized>(
    problem: &Problem,
    partial: Partial,
    s: f64,
    shots: u64,
    mode: EstimateMode,
    rng: &mut R,
) -> Result<DerivativeEstimate> {
    let probe = DmProbe::prepare(problem, partial, s)?;
    match mode {
        EstimateMode::Exact => probe.exact(shots),
        EstimateMode::Sampled => probe.sample(shots, rng),
    }
}
