//! CSV renderings of sweep results and single derivative evaluations.

use std::fmt::Write as _;

use super::sweep::{RealizationRecord, SweepOutput};
use crate::estimators::{Method, Partial};

pub const MSE_SWEEP_HEADER: &str = "J,method,mu_g,mu_mse_emp,mu_mse_formula,shots,L,R,seed";
pub const COST_SWEEP_HEADER: &str = "sweep_var,sweep_value,method,mu_cost_formula,mu_cost_measured,mu_shots,L,seed";
pub const RATIO_SWEEP_HEADER: &str = "sweep_var,sweep_value,fixed_var,fixed_value,mu_ratio,L,seed";
pub const DERIVATIVE_HEADER: &str =
    "method,order,dir,dir2,value,oracle,shots,lambda,mse_emp,mse_formula,cost_formula,cost_measured,seed";
pub const REALIZATION_HEADER: &str = "index,seed,n,J,m,k,order,dir,dir2,oracle,lambda,\
qndm_value,qndm_shots,qndm_mse_emp,qndm_mse_formula,qndm_cost_formula,qndm_cost_measured,\
dm_value,dm_shots,dm_mse_emp,dm_mse_formula,dm_cost_formula,dm_cost_measured,cost_ratio";

const METHODS: [Method; 2] = [Method::Qndm, Method::Dm];

/// `(dir, dir2)` columns: `l` and, for second order, `w`.
pub fn direction_columns(partial: Partial) -> (String, String) {
    (partial.l().to_string(), partial.w().map(|w| w.to_string()).unwrap_or_default())
}

pub fn mse_sweep_csv(out: &SweepOutput) -> String {
    let cfg = &out.config;
    let mut s = format!("{MSE_SWEEP_HEADER}\n");
    for row in &out.rows {
        for m in METHODS {
            let sm = row.summary(m);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                row.sweep_value,
                m,
                sm.mu_g,
                sm.mu_mse_emp,
                sm.mu_mse_formula,
                sm.mu_shots,
                row.realizations,
                cfg.repeats,
                cfg.seed
            );
        }
    }
    s
}

pub fn cost_sweep_csv(out: &SweepOutput) -> String {
    let mut s = format!("{COST_SWEEP_HEADER}\n");
    for row in &out.rows {
        for m in METHODS {
            let sm = row.summary(m);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                row.sweep_var,
                row.sweep_value,
                m,
                sm.mu_cost_formula,
                sm.mu_cost_measured,
                sm.mu_shots,
                row.realizations,
                out.config.seed
            );
        }
    }
    s
}

pub fn ratio_sweep_csv(out: &SweepOutput) -> String {
    let mut s = format!("{RATIO_SWEEP_HEADER}\n");
    for row in &out.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            row.sweep_var,
            row.sweep_value,
            row.fixed_var,
            row.fixed_value,
            row.mu_ratio,
            row.realizations,
            out.config.seed
        );
    }
    s
}

pub fn realization_csv(records: &[RealizationRecord]) -> String {
    let mut s = format!("{REALIZATION_HEADER}\n");
    for r in records {
        let (dir, dir2) = direction_columns(r.partial);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.index,
            r.seed,
            r.n,
            r.j,
            r.m,
            r.k,
            r.partial.order().as_u8(),
            dir,
            dir2,
            r.oracle,
            r.lambda,
            r.qndm.value,
            r.qndm.shots,
            r.qndm.mse_emp,
            r.qndm.mse_formula,
            r.qndm.cost_formula,
            r.qndm.cost_measured,
            r.dm.value,
            r.dm.shots,
            r.dm.mse_emp,
            r.dm.mse_formula,
            r.dm.cost_formula,
            r.dm.cost_measured,
            r.cost_ratio
        );
    }
    s
}

/// One line of `derivative.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeRow {
    pub method: Method,
    pub partial: Partial,
    pub value: f64,
    pub oracle: f64,
    pub shots: u64,
    pub lambda: Option<f64>,
    pub mse_emp: f64,
    pub mse_formula: f64,
    pub cost_formula: u64,
    pub cost_measured: u64,
    pub seed: u64,
}

pub fn derivative_csv(rows: &[DerivativeRow]) -> String {
    let mut s = format!("{DERIVATIVE_HEADER}\n");
    for r in rows {
        let (dir, dir2) = direction_columns(r.partial);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.partial.order().as_u8(),
            dir,
            dir2,
            r.value,
            r.oracle,
            r.shots,
            r.lambda.map(|l| l.to_string()).unwrap_or_default(),
            r.mse_emp,
            r.mse_formula,
            r.cost_formula,
            r.cost_measured,
            r.seed
        );
    }
    s
}
