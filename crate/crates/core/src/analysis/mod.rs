//! Bias, variance and MSE of the estimators, equal-MSE shot matching, the
//! coupling-strength rule and the gate-cost models.

pub mod cost;

pub use cost::{
    accounting_units, cost, cost_ratio, ratio_asymptote_k_dominant, ratio_asymptote_nj_dominant, CostReport,
    BASIS_UNITS_PER_QUBIT, COUPLING_UNITS_PER_QUBIT,
};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

use crate::error::{config, contract, Error, Result};
use crate::estimators::{qndm_exact_g, DmProbe, Method, Order, Partial, Problem};
use crate::pauli::Observable;
use crate::seed::rng_for;

/// Pilot shots per Pauli string and shift point used to estimate `σ_s²`.
pub const PILOT_SHOTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MseSource {
    Formula,
    Empirical,
}

impl MseSource {
    pub fn as_str(self) -> &'static str {
        match self {
            MseSource::Formula => "formula",
            MseSource::Empirical => "empirical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseReport {
    pub bias_sq: f64,
    pub variance: f64,
    pub mse: f64,
    pub method: Method,
    pub order: Order,
    pub source: MseSource,
    /// Mean of the repeated estimates (empirical reports only).
    pub mean_estimate: Option<f64>,
    /// Per-string single-shot variances (DM formula).
    pub sigma_s2: Option<Vec<f64>>,
    /// Detector single-shot variance (QNDM formula).
    pub sigma_d2: Option<f64>,
    /// `∂²_λ G` at the working λ (QNDM formula).
    pub d2g: Option<Complex64>,
}

impl MseReport {
    fn new(method: Method, order: Order, source: MseSource, bias_sq: f64, variance: f64) -> Self {
        MseReport {
            bias_sq,
            variance,
            mse: bias_sq + variance,
            method,
            order,
            source,
            mean_estimate: None,
            sigma_s2: None,
            sigma_d2: None,
            d2g: None,
        }
    }
}

/// Coupling-strength heuristic `λ = 1 / sqrt(Σ|h_i|)`.
pub fn lambda_rule(observable: &Observable) -> Result<f64> {
    let total = observable.abs_coeff_sum();
    if !(total > 0.0) {
        return Err(config("λ rule needs a nonzero coefficient"));
    }
    Ok(1.0 / total.sqrt())
}

/// Identifier of the coupling-strength rule recorded in runcards.
pub const LAMBDA_RULE_INV_SQRT_ABS_SUM: &str = "inv_sqrt_abs_sum";

/// How per-string DM variances are supplied to the MSE formula and shot matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMode {
    /// Per-string plug-in `1 - <P>²` from a pilot batch.
    Pilot,
    /// One shared value for all strings: the mean of the pilot estimates.
    Uniform,
}

impl SigmaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SigmaMode::Pilot => "pilot",
            SigmaMode::Uniform => "uniform",
        }
    }
}

impl fmt::Display for SigmaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SigmaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pilot" => Ok(SigmaMode::Pilot),
            "uniform" => Ok(SigmaMode::Uniform),
            other => Err(config(format!("unknown sigma_s mode '{other}' (expected pilot or uniform)"))),
        }
    }
}

/// Single-shot DM variances per string from a pilot of [`PILOT_SHOTS`].
pub fn estimate_sigma_s2<R: Rng + ?Sized>(probe: &DmProbe, mode: SigmaMode, rng: &mut R) -> Result<Vec<f64>> {
    let pilot = probe.pilot_sigma2(PILOT_SHOTS, rng)?;
    Ok(match mode {
        SigmaMode::Pilot => pilot,
        SigmaMode::Uniform => {
            let mean = pilot.iter().sum::<f64>() / pilot.len() as f64;
            vec![mean; pilot.len()]
        }
    })
}

/// Inputs of the closed-form MSE.
#[derive(Debug, Clone, PartialEq)]
pub enum MseInputs {
    Dm { coeffs: Vec<f64>, sigma_s2: Vec<f64>, s: f64, shots: u64 },
    Qndm { lambda: f64, sigma_d2: f64, p0: f64, d2g: Complex64, s: f64, shots: u64 },
}

impl MseInputs {
    pub fn method(&self) -> Method {
        match self {
            MseInputs::Dm { .. } => Method::Dm,
            MseInputs::Qndm { .. } => Method::Qndm,
        }
    }
}

fn check_common(s: f64, shots: u64) -> Result<f64> {
    if shots == 0 {
        return Err(contract("MSE formula needs N >= 1"));
    }
    let sin = s.sin();
    if sin.abs() < 1e-12 {
        return Err(config(format!("shift s = {s} has sin s = 0")));
    }
    Ok(sin)
}

/// `Σ h_i² σ_i² / (2 sin² s)` (order 1) or `/ (4 sin⁴ s)` (order 2): DM variance times N.
fn dm_variance_numerator(coeffs: &[f64], sigma_s2: &[f64], sin: f64, order: Order) -> Result<f64> {
    if coeffs.len() != sigma_s2.len() {
        return Err(contract(format!("{} coefficients but {} variances", coeffs.len(), sigma_s2.len())));
    }
    let weighted: f64 = coeffs.iter().zip(sigma_s2).map(|(h, v)| h * h * v).sum();
    Ok(match order {
        Order::First => weighted / (2.0 * sin * sin),
        Order::Second => weighted / (4.0 * sin.powi(4)),
    })
}

/// Closed-form MSE.
///
/// QNDM: `λ² |∂²_λ G|² / 4 + σ_D² / (d N λ² (1 - (2P0-1)²))` with
/// `d = 4 sin² s` (order 1) or `16 sin⁴ s` (order 2).
/// DM: unbiased, variance `Σ h² σ_s² / (2 N sin² s)` or `/ (4 N sin⁴ s)`.
pub fn mse_formula(order: Order, inputs: &MseInputs) -> Result<MseReport> {
    match inputs {
        MseInputs::Dm { coeffs, sigma_s2, s, shots } => {
            let sin = check_common(*s, *shots)?;
            let variance = dm_variance_numerator(coeffs, sigma_s2, sin, order)? / *shots as f64;
            let mut r = MseReport::new(Method::Dm, order, MseSource::Formula, 0.0, variance);
            r.sigma_s2 = Some(sigma_s2.clone());
            Ok(r)
        }
        MseInputs::Qndm { lambda, sigma_d2, p0, d2g, s, shots } => {
            let sin = check_common(*s, *shots)?;
            if !(*lambda > 0.0) {
                return Err(config("λ must be positive"));
            }
            let x = 2.0 * p0 - 1.0;
            let slope = 1.0 - x * x;
            if slope <= 0.0 {
                return Err(Error::SingularVariance { p0: *p0 });
            }
            let denom = match order {
                Order::First => 4.0 * sin * sin,
                Order::Second => 16.0 * sin.powi(4),
            };
            let variance = sigma_d2 / (denom * *shots as f64 * lambda * lambda * slope);
            let bias_sq = lambda * lambda * d2g.norm_sqr() / 4.0;
            let mut r = MseReport::new(Method::Qndm, order, MseSource::Formula, bias_sq, variance);
            r.sigma_d2 = Some(*sigma_d2);
            r.d2g = Some(*d2g);
            Ok(r)
        }
    }
}

/// `∂²_λ G` at `lambda` by central difference of the exact `G` with step `λ/10`.
pub fn qndm_d2g(
    problem: &Problem,
    partial: Partial,
    s: f64,
    lambda: f64,
    term_order: Option<&[usize]>,
) -> Result<Complex64> {
    if !(lambda > 0.0) {
        return Err(config("λ must be positive"));
    }
    let h = lambda / 10.0;
    let g = |l: f64| qndm_exact_g(problem, partial, s, l, term_order);
    Ok((g(lambda + h)? - g(lambda)? * 2.0 + g(lambda - h)?) / (h * h))
}

/// Runs `estimator` `repeats` times in parallel, repeat `r` drawing from
/// `rng_for(seed, [r])`, and reports bias² against `oracle` plus the sample variance.
pub fn empirical_mse<F>(
    method: Method,
    order: Order,
    repeats: usize,
    oracle: f64,
    seed: u64,
    estimator: F,
) -> Result<MseReport>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<f64> + Sync,
{
    if repeats < 2 {
        return Err(config(format!("empirical MSE needs R >= 2, got {repeats}")));
    }
    let values = (0..repeats)
        .into_par_iter()
        .map(|r| estimator(&mut rng_for(seed, &[r as u64])))
        .collect::<Result<Vec<f64>>>()?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut r = MseReport::new(method, order, MseSource::Empirical, (mean - oracle).powi(2), variance);
    r.mean_estimate = Some(mean);
    Ok(r)
}

/// DM shots per string and shift point so that the DM formula MSE does not exceed
/// `target_mse`: `ceil(Σ h² σ² / (2 sin² s · target))` (order 1) or
/// `ceil(Σ h² σ² / (4 sin⁴ s · target))` (order 2), at least one shot.
pub fn match_shots_dm(target_mse: f64, coeffs: &[f64], sigma_s2: &[f64], s: f64, order: Order) -> Result<u64> {
    if !(target_mse > 0.0 && target_mse.is_finite()) {
        return Err(config(format!("target MSE must be positive, got {target_mse}")));
    }
    let sin = check_common(s, 1)?;
    let numerator = dm_variance_numerator(coeffs, sigma_s2, sin, order)?;
    let shots = (numerator / target_mse).ceil();
    if shots > u64::MAX as f64 / 16.0 {
        return Err(config(format!("matched DM shot count {shots:e} is out of range")));
    }
    Ok((shots as u64).max(1))
}
