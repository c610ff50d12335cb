use rand::Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, SweepKind};
use crate::analysis::{
    cost, cost_ratio, empirical_mse, estimate_sigma_s2, match_shots_dm, mse_formula, qndm_d2g, MseInputs,
};
use crate::ansatz::{gate_count, random_ansatz};
use crate::error::{config, Error, Result};
use crate::estimators::{exact_derivative_oracle, DmProbe, Method, Order, Partial, Problem, QndmProbe, QndmSettings};
use crate::pauli::random_observable;
use crate::seed::{mix, rng_for};

/// Streams derived from a realization seed.
const STREAM_QNDM_ESTIMATE: u64 = 1;
const STREAM_QNDM_MSE: u64 = 2;
const STREAM_PILOT: u64 = 3;
const STREAM_DM_ESTIMATE: u64 = 4;
const STREAM_DM_MSE: u64 = 5;

/// Coordinates of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SweepPoint {
    pub j: usize,
    /// Fixed layer count; `None` draws it per realization from the layer grid.
    pub m: Option<usize>,
}

/// Outcome of one method in one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRecord {
    /// One sampled estimate.
    pub value: f64,
    /// QNDM: shots. DM: shots per Pauli string and shift point.
    pub shots: u64,
    pub mse_emp: f64,
    /// NaN when the closed form is singular.
    pub mse_formula: f64,
    pub cost_formula: u64,
    pub cost_measured: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationRecord {
    pub index: usize,
    pub seed: u64,
    pub n: usize,
    pub j: usize,
    pub m: usize,
    pub k: u64,
    pub partial: Partial,
    pub oracle: f64,
    pub lambda: f64,
    pub qndm: MethodRecord,
    pub dm: MethodRecord,
    /// `C_DM / C_QNDM` from the closed-form costs.
    pub cost_ratio: f64,
}

/// Per-method averages over the realizations of a sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodSummary {
    pub mu_g: f64,
    pub mu_mse_emp: f64,
    pub mu_mse_formula: f64,
    pub mu_cost_formula: f64,
    pub mu_cost_measured: f64,
    pub mu_shots: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub sweep_var: &'static str,
    pub sweep_value: u64,
    pub fixed_var: &'static str,
    pub fixed_value: u64,
    pub qndm: MethodSummary,
    pub dm: MethodSummary,
    pub mu_ratio: f64,
    pub realizations: usize,
}

impl SweepRow {
    pub fn summary(&self, method: Method) -> &MethodSummary {
        match method {
            Method::Qndm => &self.qndm,
            Method::Dm => &self.dm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    /// `records[p][i]`: realization `i` of point `p`.
    pub records: Vec<Vec<RealizationRecord>>,
}

/// Sweep points in grid order.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    match cfg.sweep {
        SweepKind::MseVsJ => cfg.j_grid.iter().map(|&j| SweepPoint { j, m: None }).collect(),
        SweepKind::RatioVsJ | SweepKind::CostVsNj => {
            cfg.j_grid.iter().map(|&j| SweepPoint { j, m: Some(cfg.m_grid[0]) }).collect()
        }
        SweepKind::CostVsK | SweepKind::RatioVsK => {
            cfg.m_grid.iter().map(|&m| SweepPoint { j: cfg.j_grid[0], m: Some(m) }).collect()
        }
    }
}

/// `mix(master, [order, J, m or 0, index])`.
pub fn realization_seed(cfg: &ExperimentConfig, point: SweepPoint, index: usize) -> u64 {
    mix(cfg.seed, &[cfg.order.as_u8() as u64, point.j as u64, point.m.unwrap_or(0) as u64, index as u64])
}

fn draw_partial<R: Rng + ?Sized>(order: Order, dim: usize, rng: &mut R) -> Partial {
    match order {
        Order::First => Partial::First(rng.gen_range(0..dim)),
        Order::Second => Partial::Second { w: rng.gen_range(0..dim), l: rng.gen_range(0..dim) },
    }
}

/// Draws one random instance and evaluates both estimators on it.
///
/// The instance (layer count if not fixed, ansatz, parameters, observable,
/// direction) comes from [`realization_seed`]. QNDM uses `N_QNDM` shots; DM uses
/// `N_QNDM` in the MSE sweep and otherwise the count whose closed-form MSE matches
/// the QNDM empirical MSE.
pub fn run_realization(cfg: &ExperimentConfig, point: SweepPoint, index: usize) -> Result<RealizationRecord> {
    cfg.validate()?;
    let seed = realization_seed(cfg, point, index);
    let mut rng = rng_for(seed, &[]);
    let m = match point.m {
        Some(m) => m,
        None => cfg.m_grid[rng.gen_range(0..cfg.m_grid.len())],
    };
    let (ansatz, theta) = random_ansatz(cfg.n, m, &mut rng)?;
    let observable = random_observable(cfg.n, point.j, cfg.coeff_std, &mut rng)?;
    let partial = draw_partial(cfg.order, ansatz.dim(), &mut rng);
    let problem = Problem::new(ansatz, theta, observable)?;
    let (n, j, k) = (cfg.n as u64, point.j as u64, gate_count(cfg.n, m));
    let oracle = exact_derivative_oracle(&problem, partial, cfg.s)?;

    let lambda = cfg.lambda_rule.lambda(&problem.observable)?;
    let settings = QndmSettings::new(lambda).with_shift(cfg.s).with_normalization(cfg.c1, cfg.c2);
    let qprobe = QndmProbe::prepare(&problem, partial, &settings)?;
    let n_q = cfg.shots_qndm;
    let q_value = qprobe.sample(n_q, &mut rng_for(seed, &[STREAM_QNDM_ESTIMATE]))?.value;
    let q_emp = empirical_mse(Method::Qndm, cfg.order, cfg.repeats, oracle, mix(seed, &[STREAM_QNDM_MSE]), |r| {
        Ok(qprobe.sample(n_q, r)?.value)
    })?;
    let p0 = qprobe.p0();
    let q_formula = match mse_formula(
        cfg.order,
        &MseInputs::Qndm {
            lambda,
            sigma_d2: p0 * (1.0 - p0),
            p0,
            d2g: qndm_d2g(&problem, partial, cfg.s, lambda, None)?,
            s: cfg.s,
            shots: n_q,
        },
    ) {
        Ok(r) => r.mse,
        Err(Error::SingularVariance { .. }) => f64::NAN,
        Err(e) => return Err(e),
    };

    let dprobe = DmProbe::prepare(&problem, partial, cfg.s)?;
    let coeffs = dprobe.coeffs().to_vec();
    let sigma_s2 = estimate_sigma_s2(&dprobe, cfg.sigma_mode, &mut rng_for(seed, &[STREAM_PILOT]))?;
    let n_dm =
        if cfg.sweep.matches_shots() { match_shots_dm(q_emp.mse, &coeffs, &sigma_s2, cfg.s, cfg.order)? } else { n_q };
    let d_value = dprobe.sample(n_dm, &mut rng_for(seed, &[STREAM_DM_ESTIMATE]))?.value;
    let d_emp = empirical_mse(Method::Dm, cfg.order, cfg.repeats, oracle, mix(seed, &[STREAM_DM_MSE]), |r| {
        Ok(dprobe.sample(n_dm, r)?.value)
    })?;
    let d_formula = mse_formula(cfg.order, &MseInputs::Dm { coeffs, sigma_s2, s: cfg.s, shots: n_dm })?.mse;

    Ok(RealizationRecord {
        index,
        seed,
        n: cfg.n,
        j: point.j,
        m,
        k,
        partial,
        oracle,
        lambda,
        qndm: MethodRecord {
            value: q_value,
            shots: n_q,
            mse_emp: q_emp.mse,
            mse_formula: q_formula,
            cost_formula: cost(Method::Qndm, cfg.order, n_q, j, k, n).formula_cost,
            cost_measured: qprobe.measured_cost(n_q),
        },
        dm: MethodRecord {
            value: d_value,
            shots: n_dm,
            mse_emp: d_emp.mse,
            mse_formula: d_formula,
            cost_formula: cost(Method::Dm, cfg.order, n_dm, j, k, n).formula_cost,
            cost_measured: dprobe.measured_cost(n_dm),
        },
        cost_ratio: cost_ratio(cfg.order, n_dm, n_q, j, k, n),
    })
}

fn summarize(records: &[RealizationRecord], pick: impl Fn(&RealizationRecord) -> &MethodRecord) -> MethodSummary {
    let l = records.len() as f64;
    let mean = |f: &dyn Fn(&MethodRecord) -> f64| records.iter().map(|r| f(pick(r))).sum::<f64>() / l;
    MethodSummary {
        mu_g: mean(&|m| m.value),
        mu_mse_emp: mean(&|m| m.mse_emp),
        mu_mse_formula: mean(&|m| m.mse_formula),
        mu_cost_formula: mean(&|m| m.cost_formula as f64),
        mu_cost_measured: mean(&|m| m.cost_measured as f64),
        mu_shots: mean(&|m| m.shots as f64),
    }
}

/// Averages the realizations of one point in index order.
pub fn aggregate(cfg: &ExperimentConfig, point: SweepPoint, records: &[RealizationRecord]) -> Result<SweepRow> {
    if records.is_empty() {
        return Err(config("no realizations to aggregate"));
    }
    let mut sorted: Vec<&RealizationRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.index);
    let sorted: Vec<RealizationRecord> = sorted.into_iter().cloned().collect();
    let n = cfg.n as u64;
    let m_fixed = point.m.unwrap_or(0);
    let (sweep_var, sweep_value, fixed_var, fixed_value) = match cfg.sweep {
        SweepKind::MseVsJ => ("J", point.j as u64, "n", n),
        SweepKind::RatioVsJ => ("J", point.j as u64, "k", gate_count(cfg.n, m_fixed)),
        SweepKind::CostVsNj => ("nJ", n * point.j as u64, "k", gate_count(cfg.n, m_fixed)),
        SweepKind::CostVsK | SweepKind::RatioVsK => ("k", gate_count(cfg.n, m_fixed), "nJ", n * point.j as u64),
    };
    Ok(SweepRow {
        point,
        sweep_var,
        sweep_value,
        fixed_var,
        fixed_value,
        qndm: summarize(&sorted, |r| &r.qndm),
        dm: summarize(&sorted, |r| &r.dm),
        mu_ratio: sorted.iter().map(|r| r.cost_ratio).sum::<f64>() / sorted.len() as f64,
        realizations: sorted.len(),
    })
}

/// Runs `L` realizations at every sweep point in parallel and aggregates them.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let points = sweep_points(cfg);
    let tasks: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..cfg.realizations).map(move |i| (p, i))).collect();
    let flat = tasks.par_iter().map(|&(p, i)| run_realization(cfg, points[p], i)).collect::<Result<Vec<_>>>()?;
    let records: Vec<Vec<RealizationRecord>> =
        flat.chunks(cfg.realizations).map(<[RealizationRecord]>::to_vec).collect();
    let rows = points.iter().zip(&records).map(|(&pt, recs)| aggregate(cfg, pt, recs)).collect::<Result<Vec<_>>>()?;
    Ok(SweepOutput { config: cfg.clone(), rows, records })
}
