use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use super::runcard::{join, split, Runcard};
use crate::analysis::{lambda_rule, SigmaMode, LAMBDA_RULE_INV_SQRT_ABS_SUM};
use crate::ansatz::{gate_count, layers_for_target_k};
use crate::error::{config, Error, Result};
use crate::estimators::{Order, DEFAULT_C1, DEFAULT_C2};
use crate::pauli::Observable;

/// Version tag written to every runcard.
pub const ARTIFACT_VERSION: &str = concat!("qndm-", env!("CARGO_PKG_VERSION"));

/// Largest total qubit count (system plus detector) a realization may use.
pub const MAX_TOTAL_QUBITS: usize = 12;

/// Factor separating the two cost regimes: `k >= 50 nJ` or `nJ >= 50 k`.
pub const REGIME_FACTOR: u64 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepKind {
    /// Mean derivative and MSE of both methods against `J`, equal shots.
    MseVsJ,
    /// Cost of both methods against `k` at fixed `nJ`.
    CostVsK,
    /// Cost ratio against `J` at fixed `k >> nJ`.
    RatioVsJ,
    /// Cost of both methods against `nJ` at fixed `k`.
    CostVsNj,
    /// Cost ratio against `k` at fixed `nJ >> k`.
    RatioVsK,
}

impl SweepKind {
    pub const ALL: [SweepKind; 5] =
        [SweepKind::MseVsJ, SweepKind::CostVsK, SweepKind::RatioVsJ, SweepKind::CostVsNj, SweepKind::RatioVsK];

    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::MseVsJ => "mse_vs_J",
            SweepKind::CostVsK => "cost_vs_k",
            SweepKind::RatioVsJ => "ratio_vs_J",
            SweepKind::CostVsNj => "cost_vs_nJ",
            SweepKind::RatioVsK => "ratio_vs_k",
        }
    }

    /// Whether DM shots are matched to the QNDM MSE (otherwise both use `N_QNDM`).
    pub fn matches_shots(self) -> bool {
        self != SweepKind::MseVsJ
    }

    /// Whether the sweep runs over `J` (otherwise over the layer count).
    pub fn sweeps_terms(self) -> bool {
        matches!(self, SweepKind::MseVsJ | SweepKind::RatioVsJ | SweepKind::CostVsNj)
    }

    /// Sweep kind of a cost or ratio command in a regime.
    pub fn for_regime(ratio: bool, regime: Regime) -> SweepKind {
        match (ratio, regime) {
            (false, Regime::KDominant) => SweepKind::CostVsK,
            (true, Regime::KDominant) => SweepKind::RatioVsJ,
            (false, Regime::NjDominant) => SweepKind::CostVsNj,
            (true, Regime::NjDominant) => SweepKind::RatioVsK,
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| config(format!("unknown sweep '{s}'")))
    }
}

/// Circuit-depth regime of the cost sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `k >> nJ`
    KDominant,
    /// `nJ >> k`
    NjDominant,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::KDominant => "k-dominant",
            Regime::NjDominant => "nj-dominant",
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "k-dominant" => Ok(Regime::KDominant),
            "nj-dominant" => Ok(Regime::NjDominant),
            other => Err(config(format!("unknown regime '{other}' (expected k-dominant or nj-dominant)"))),
        }
    }
}

/// Coupling strength per realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// `1 / sqrt(Σ|h_i|)`
    InvSqrtAbsSum,
    Fixed(f64),
}

impl LambdaRule {
    pub fn lambda(&self, observable: &Observable) -> Result<f64> {
        match *self {
            LambdaRule::InvSqrtAbsSum => lambda_rule(observable),
            LambdaRule::Fixed(l) => Ok(l),
        }
    }
}

impl fmt::Display for LambdaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaRule::InvSqrtAbsSum => f.write_str(LAMBDA_RULE_INV_SQRT_ABS_SUM),
            LambdaRule::Fixed(l) => write!(f, "fixed:{l}"),
        }
    }
}

impl FromStr for LambdaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == LAMBDA_RULE_INV_SQRT_ABS_SUM {
            return Ok(LambdaRule::InvSqrtAbsSum);
        }
        let value = s.strip_prefix("fixed:").unwrap_or(s);
        match value.parse::<f64>() {
            Ok(l) if l > 0.0 && l.is_finite() => Ok(LambdaRule::Fixed(l)),
            _ => Err(config(format!(
                "unknown λ rule '{s}' (expected {LAMBDA_RULE_INV_SQRT_ABS_SUM} or a positive number)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `n = 6`, `L = 10`.
    Ci,
    /// `n = 10`, `L = 100` (MSE) or `50` (cost).
    Full,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ci" => Ok(Preset::Ci),
            "full" => Ok(Preset::Full),
            other => Err(config(format!("unknown preset '{other}' (expected ci or full)"))),
        }
    }
}

/// One randomized sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sweep: SweepKind,
    pub order: Order,
    pub n: usize,
    /// Swept `J` values, or the single fixed `J`.
    pub j_grid: Vec<usize>,
    /// Swept layer counts, the single fixed count, or (MSE sweep) the
    /// candidates drawn uniformly per realization.
    pub m_grid: Vec<usize>,
    pub s: f64,
    pub shots_qndm: u64,
    /// `L`
    pub realizations: usize,
    /// `R`
    pub repeats: usize,
    pub coeff_std: f64,
    pub lambda_rule: LambdaRule,
    pub c1: f64,
    pub c2: f64,
    pub sigma_mode: SigmaMode,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Grids spanning each sweep's regime at `n` qubits.
    pub fn preset(sweep: SweepKind, order: Order, preset: Preset) -> Self {
        let n = match preset {
            Preset::Ci => 6,
            Preset::Full => 10,
        };
        let realizations = match (preset, sweep) {
            (Preset::Ci, _) => 10,
            (Preset::Full, SweepKind::MseVsJ) => 100,
            (Preset::Full, _) => 50,
        };
        let per_layer = gate_count(n, 1);
        let (j_grid, m_grid) = match sweep {
            SweepKind::MseVsJ => (vec![6, 12, 24, 48], vec![1, 2, 3, 4]),
            SweepKind::CostVsK => (vec![240 / n], vec![10, 25, 50, 100, 200, 400]),
            SweepKind::RatioVsJ => {
                let js = vec![4, 8, 12, 16, 20, 24];
                let m = layers_for_target_k(n, REGIME_FACTOR * (n * 24) as u64).unwrap_or(1);
                (js, vec![m])
            }
            SweepKind::CostVsNj => {
                let m = layers_for_target_k(n, 500).unwrap_or(1);
                (vec![50, 100, 200, 400, 800], vec![m])
            }
            SweepKind::RatioVsK => {
                let ms = vec![1, 2, 3, 4, 5];
                let k_max = per_layer * 5;
                let j = (REGIME_FACTOR * k_max).div_ceil(n as u64) as usize;
                (vec![j], ms)
            }
        };
        ExperimentConfig {
            sweep,
            order,
            n,
            j_grid,
            m_grid,
            s: FRAC_PI_2,
            shots_qndm: 500,
            realizations,
            repeats: 100,
            coeff_std: 5.0,
            lambda_rule: LambdaRule::InvSqrtAbsSum,
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            sigma_mode: SigmaMode::Pilot,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n + 1 > MAX_TOTAL_QUBITS {
            return Err(config(format!(
                "n = {} outside 1..={} (desk-scale limit of {MAX_TOTAL_QUBITS} qubits with the detector)",
                self.n,
                MAX_TOTAL_QUBITS - 1
            )));
        }
        if self.j_grid.is_empty() || self.m_grid.is_empty() {
            return Err(config("empty sweep grid"));
        }
        let max_terms = (1u64 << (2 * self.n)) - 1;
        if let Some(&j) = self.j_grid.iter().find(|&&j| j == 0 || j as u64 > max_terms) {
            return Err(config(format!("J = {j} outside 1..={max_terms} for n = {}", self.n)));
        }
        if self.m_grid.contains(&0) {
            return Err(config("layer counts must be >= 1"));
        }
        let fixed_ok = match self.sweep {
            SweepKind::MseVsJ => true,
            SweepKind::RatioVsJ | SweepKind::CostVsNj => self.m_grid.len() == 1,
            SweepKind::CostVsK | SweepKind::RatioVsK => self.j_grid.len() == 1,
        };
        if !fixed_ok {
            return Err(config(format!("{} needs exactly one value of its fixed variable", self.sweep)));
        }
        if self.realizations == 0 {
            return Err(config("L must be >= 1"));
        }
        if self.repeats < 2 {
            return Err(config("R must be >= 2"));
        }
        if self.shots_qndm == 0 {
            return Err(config("N_QNDM must be >= 1"));
        }
        if !self.s.is_finite() || self.s.sin().abs() < 1e-12 {
            return Err(config(format!("shift s = {} has sin s = 0", self.s)));
        }
        if !(self.coeff_std > 0.0 && self.coeff_std.is_finite()) {
            return Err(config("coeff_std must be positive"));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(config("c1 and c2 must be positive"));
        }
        Ok(())
    }

    /// `k` for each entry of the layer grid.
    pub fn k_grid(&self) -> Vec<u64> {
        self.m_grid.iter().map(|&m| gate_count(self.n, m)).collect()
    }

    /// Runcard entries describing this configuration (no timestamp).
    pub fn to_runcard(&self) -> Runcard {
        let mut c = Runcard::new();
        c.set("sweep", self.sweep)
            .set("order", self.order.as_u8())
            .set("master_seed", self.seed)
            .set("n", self.n)
            .set("J_grid", join(&self.j_grid))
            .set("k_grid", join(&self.k_grid()))
            .set("m_grid", join(&self.m_grid))
            .set("s", self.s)
            .set("N_QNDM", self.shots_qndm)
            .set("L", self.realizations)
            .set("R", self.repeats)
            .set("coeff_std", self.coeff_std)
            .set("lambda_rule", self.lambda_rule)
            .set("c1", self.c1)
            .set("c2", self.c2)
            .set("sigma_s_mode", self.sigma_mode)
            .set("artifact_version", ARTIFACT_VERSION);
        c
    }

    /// Overrides fields present in `card`. Unknown keys are ignored.
    pub fn apply_runcard(&mut self, card: &Runcard) -> Result<()> {
        fn num<T: FromStr>(v: &str, key: &str) -> Result<T> {
            v.trim().parse().map_err(|_| config(format!("invalid value '{v}' for {key}")))
        }
        for (key, v) in card.entries() {
            match key.as_str() {
                "sweep" => self.sweep = v.parse()?,
                "order" => self.order = Order::from_u8(num(v, key)?)?,
                "master_seed" | "seed" => self.seed = num(v, key)?,
                "n" => self.n = num(v, key)?,
                "J_grid" => self.j_grid = split(v, "J")?,
                "m_grid" => self.m_grid = split(v, "layer count")?,
                "s" => self.s = num(v, key)?,
                "N_QNDM" => self.shots_qndm = num(v, key)?,
                "L" => self.realizations = num(v, key)?,
                "R" => self.repeats = num(v, key)?,
                "coeff_std" => self.coeff_std = num(v, key)?,
                "lambda_rule" => self.lambda_rule = v.parse()?,
                "c1" => self.c1 = num(v, key)?,
                "c2" => self.c2 = num(v, key)?,
                "sigma_s_mode" => self.sigma_mode = v.parse()?,
                _ => {}
            }
        }
        Ok(())
    }
}
