use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use super::qndm::{QndmProbe, QndmSettings};
use super::{exact_derivative_oracle, Order, Partial, Problem};
use crate::ansatz::{Axis, LayeredAnsatz, ParamVector};
use crate::error::{Error, Result};
use crate::pauli::Observable;

/// Coupling strengths used when no grid is supplied.
pub const DEFAULT_LAMBDA_GRID: [f64; 5] = [0.1, 0.05, 0.025, 0.0125, 0.00625];

/// Parameter values of the one-qubit `RX`, `M = Z` test family.
pub const DEFAULT_THETAS: [f64; 4] = [PI / 3.0, 1.0, 2.2, 4.0];

/// Largest accepted relative fit residual or spread across the family.
pub const CALIBRATION_TOLERANCE: f64 = 0.01;

/// Normalization constant printed for the first-order estimator in the source literature.
pub const PRINTED_C1: f64 = 2.0;

/// Fit `r(λ) = c + a λ²` of the unnormalized ratio at one family member.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCase {
    pub order: Order,
    pub theta: f64,
    pub oracle: f64,
    /// `-asin(2P0 - 1) / (λ sin^p s · g)` on the λ grid.
    pub ratios: Vec<f64>,
    pub intercept: f64,
    pub slope: f64,
    /// Largest `|r - fit| / |c|` on the grid.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub c1: f64,
    pub c2: f64,
    /// Worst relative residual over the fits and the spread of `c` across the family.
    pub residual1: f64,
    pub residual2: f64,
    pub s: f64,
    pub lambda_grid: Vec<f64>,
    pub cases: Vec<CalibrationCase>,
}

impl Calibration {
    pub fn normalization(&self, order: Order) -> f64 {
        match order {
            Order::First => self.c1,
            Order::Second => self.c2,
        }
    }

    /// Settings carrying the calibrated constants.
    pub fn settings(&self, lambda: f64) -> QndmSettings {
        QndmSettings::new(lambda).with_shift(self.s).with_normalization(self.c1, self.c2)
    }

    /// Plain-text report: constants, residuals, per-case fits and the
    /// comparison with the printed first-order constant.
    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "c1 = {:.6}", self.c1);
        let _ = writeln!(out, "c2 = {:.6}", self.c2);
        let _ = writeln!(out, "residual_c1 = {:.3e}", self.residual1);
        let _ = writeln!(out, "residual_c2 = {:.3e}", self.residual2);
        let _ = writeln!(out, "s = {}", self.s);
        let grid: Vec<String> = self.lambda_grid.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(out, "lambda_grid = {}", grid.join(","));
        let _ = writeln!(out, "printed_c1 = {PRINTED_C1}");
        let _ = writeln!(
            out,
            "printed_c1_scale = {:.6}   # estimate / g when dividing by 2 lambda sin s instead of c1 lambda sin s",
            self.c1 / PRINTED_C1
        );
        let _ = writeln!(out, "# order theta oracle intercept slope residual");
        for c in &self.cases {
            let _ = writeln!(
                out,
                "case {} {:.6} {:.6} {:.6} {:.6} {:.3e}",
                c.order.as_u8(),
                c.theta,
                c.oracle,
                c.intercept,
                c.slope,
                c.residual
            );
        }
        out
    }
}

/// Least-squares fit of `y = c + a x`; returns `(c, a)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - a * mx, a)
}

fn one_qubit_problem(theta: f64) -> Result<Problem> {
    let ansatz = LayeredAnsatz::uniform(1, 1, Axis::X)?;
    let observable = Observable::parse("1 Z")?;
    Problem::new(ansatz, ParamVector::new(vec![theta])?, observable)
}

fn fit_case(order: Order, theta: f64, s: f64, grid: &[f64]) -> Result<CalibrationCase> {
    let problem = one_qubit_problem(theta)?;
    let partial = match order {
        Order::First => Partial::First(0),
        Order::Second => Partial::Second { w: 0, l: 0 },
    };
    let oracle = exact_derivative_oracle(&problem, partial, s)?;
    if oracle.abs() < 1e-3 {
        return Err(Error::Calibration(format!("θ = {theta} gives a vanishing derivative")));
    }
    let mut ratios = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let settings = QndmSettings::new(lambda).with_shift(s).with_normalization(1.0, 1.0);
        let probe = QndmProbe::prepare(&problem, partial, &settings)?;
        ratios.push(probe.exact_value() / oracle);
    }
    let x: Vec<f64> = grid.iter().map(|l| l * l).collect();
    let (intercept, slope) = linear_fit(&x, &ratios);
    let residual =
        x.iter().zip(&ratios).map(|(xi, r)| (r - intercept - slope * xi).abs() / intercept.abs()).fold(0.0, f64::max);
    Ok(CalibrationCase { order, theta, oracle, ratios, intercept, slope, residual })
}

/// Fits the QNDM normalization constants on the one-qubit `RX`, `M = Z` family.
///
/// For each `θ` in `thetas` and each order, the ratio of the unnormalized
/// estimate to the exact derivative is fitted as `c + a λ²` over `lambda_grid`;
/// `c1`, `c2` are the means of the intercepts.
pub fn calibrate_normalization(thetas: &[f64], lambda_grid: &[f64], s: f64) -> Result<Calibration> {
    if thetas.is_empty() {
        return Err(Error::Calibration("empty test family".into()));
    }
    if lambda_grid.len() < 3 || lambda_grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(Error::Calibration("λ grid needs at least three positive values".into()));
    }
    let mut cases = Vec::new();
    let mut constants = [0.0; 2];
    let mut residuals = [0.0; 2];
    for (slot, order) in [Order::First, Order::Second].into_iter().enumerate() {
        let fits = thetas.iter().map(|&t| fit_case(order, t, s, lambda_grid)).collect::<Result<Vec<_>>>()?;
        let c = fits.iter().map(|f| f.intercept).sum::<f64>() / fits.len() as f64;
        let spread = fits.iter().map(|f| (f.intercept - c).abs() / c.abs()).fold(0.0, f64::max);
        let worst_fit = fits.iter().map(|f| f.residual).fold(0.0, f64::max);
        constants[slot] = c;
        residuals[slot] = spread.max(worst_fit);
        if !(c > 0.0) || residuals[slot] > CALIBRATION_TOLERANCE {
            return Err(Error::Calibration(format!(
                "order {} fit did not converge: c = {c:.6}, residual = {:.3e}",
                order.as_u8(),
                residuals[slot]
            )));
        }
        cases.extend(fits);
    }
    Ok(Calibration {
        c1: constants[0],
        c2: constants[1],
        residual1: residuals[0],
        residual2: residuals[1],
        s,
        lambda_grid: lambda_grid.to_vec(),
        cases,
    })
}

/// Calibration on the default family, grid and `s = π/2`.
pub fn calibrate_default() -> Result<Calibration> {
    calibrate_normalization(&DEFAULT_THETAS, &DEFAULT_LAMBDA_GRID, FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{DEFAULT_C1, DEFAULT_C2};

    #[test]
    fn recovers_four_and_eight() {
        let cal = calibrate_default().unwrap();
        assert!((cal.c1 - 4.0).abs() < 0.01, "{}", cal.c1);
        assert!((cal.c2 - 8.0).abs() < 0.01, "{}", cal.c2);
        assert!(cal.residual1 < CALIBRATION_TOLERANCE && cal.residual2 < CALIBRATION_TOLERANCE);
        assert_eq!((DEFAULT_C1, DEFAULT_C2), (4.0, 8.0));
        assert!(cal.report().contains("printed_c1 = 2"));
    }

    #[test]
    fn other_shift_gives_same_constants() {
        let cal = calibrate_normalization(&[0.7, 2.0], &DEFAULT_LAMBDA_GRID, 1.0).unwrap();
        assert!((cal.c1 - 4.0).abs() < 0.01);
        assert!((cal.c2 - 8.0).abs() < 0.02);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(calibrate_normalization(&[], &DEFAULT_LAMBDA_GRID, FRAC_PI_2).is_err());
        assert!(calibrate_normalization(&[1.0], &[0.1, 0.2], FRAC_PI_2).is_err());
        assert!(calibrate_normalization(&[0.0], &DEFAULT_LAMBDA_GRID, FRAC_PI_2).is_err());
    }

    #[test]
    fn large_couplings_fail_to_converge() {
        let err = calibrate_normalization(&[1.0], &[1.5, 1.0, 0.5], FRAC_PI_2).unwrap_err();
        assert!(matches!(err, Error::Calibration(_)));
    }
}
