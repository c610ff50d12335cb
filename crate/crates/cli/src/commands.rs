use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use qndm_core::analysis::{empirical_mse, mse_formula, qndm_d2g, MseInputs, SigmaMode, PILOT_SHOTS};
use qndm_core::ansatz::{random_ansatz, Axis, LayeredAnsatz, ParamVector};
use qndm_core::estimators::{
    calibrate_normalization, exact_derivative_oracle, DmProbe, Method, Order, Partial, Problem, QndmProbe,
    QndmSettings, DEFAULT_C1, DEFAULT_C2, DEFAULT_LAMBDA_GRID, DEFAULT_THETAS,
};
use qndm_core::harness::runcard::{join, split};
use qndm_core::harness::{
    cost_sweep_csv, derivative_csv, mse_sweep_csv, ratio_sweep_csv, realization_csv, run_realization, run_sweep,
    sweep_points, DerivativeRow, ExperimentConfig, LambdaRule, Preset, Regime, Runcard, SweepKind, ARTIFACT_VERSION,
};
use qndm_core::pauli::{random_observable, Observable};
use qndm_core::seed::{mix, rng_for};
use qndm_core::{cost, Error};

use crate::args::{CalibrateArgs, OutputArgs, ProblemArgs, RealizeArgs, SweepArgs};
use crate::io::{write_atomic, write_runcard};

const DEFAULT_SHOTS: u64 = 500;
const DEFAULT_REPEATS: usize = 100;
const DEFAULT_COEFF_STD: f64 = 5.0;

const STREAM_INSTANCE: u64 = 0;
const STREAM_ESTIMATE: u64 = 1;
const STREAM_MSE: u64 = 2;
const STREAM_PILOT: u64 = 3;

fn load_config(path: Option<&Path>) -> Result<Runcard> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading --config {}", p.display()))?;
            Ok(Runcard::parse(&text)?)
        }
        None => Ok(Runcard::new()),
    }
}

/// Flag value, else the config entry `key`, else `None`.
fn pick<T: FromStr>(flag: Option<T>, card: &Runcard, key: &str) -> Result<Option<T>> {
    if flag.is_some() {
        return Ok(flag);
    }
    card.get(key)
        .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("invalid value '{v}' for {key}")).into()))
        .transpose()
}

fn method_list(text: &str) -> Result<Vec<Method>> {
    match text.trim().to_ascii_lowercase().as_str() {
        "qndm" => Ok(vec![Method::Qndm]),
        "dm" => Ok(vec![Method::Dm]),
        "both" => Ok(vec![Method::Qndm, Method::Dm]),
        other => Err(Error::Config(format!("--method must be qndm, dm or both, got '{other}'")).into()),
    }
}

/// Fully resolved single-problem invocation.
struct ProblemSpec {
    problem: Problem,
    seed: u64,
    s: f64,
    shots: u64,
    repeats: usize,
    lambda: Option<f64>,
    rule: LambdaRule,
    c1: f64,
    c2: f64,
    methods: Vec<Method>,
    dir: usize,
    dir2: Option<usize>,
    order: Order,
    coeff_std: f64,
}

impl ProblemSpec {
    fn resolve(args: &ProblemArgs, card: &Runcard) -> Result<Self> {
        let seed = pick(args.output.seed, card, "master_seed")?.unwrap_or(0);
        let mut rng = rng_for(seed, &[STREAM_INSTANCE]);
        let coeff_std = pick(args.coeff_std, card, "coeff_std")?.unwrap_or(DEFAULT_COEFF_STD);

        let observable_text = match (&args.observable, &args.observable_file) {
            (Some(t), _) => Some(t.clone()),
            (None, Some(p)) => {
                Some(fs::read_to_string(p).with_context(|| format!("reading --observable-file {}", p.display()))?)
            }
            (None, None) => card.get("observable").map(str::to_string),
        };
        let observable = match observable_text {
            Some(t) => Observable::parse(&t)?,
            None => {
                let n = pick(args.n, card, "n")?.ok_or_else(|| anyhow!("--n is required without --observable"))?;
                let j = pick(args.j, card, "J")?.unwrap_or(1);
                random_observable(n, j, coeff_std, &mut rng)?
            }
        };
        let n = observable.num_qubits();
        if let Some(flag_n) = pick(args.n, card, "n")? {
            if flag_n != n {
                bail!(Error::Config(format!("--n {flag_n} disagrees with the {n}-qubit observable")));
            }
        }
        let m = pick(args.layers, card, "layers")?.unwrap_or(1);
        let axes_text = pick(args.axes.clone(), card, "axes")?.unwrap_or_else(|| "X".into());
        let theta_text = pick(args.theta.clone(), card, "theta")?;

        let (random_a, random_theta) = random_ansatz(n, m, &mut rng)?;
        let ansatz = if axes_text.eq_ignore_ascii_case("random") {
            random_a
        } else {
            let letters: Vec<Axis> = axes_text
                .chars()
                .filter(|c| !c.is_whitespace())
                .map(|c| Axis::from_char(c).ok_or_else(|| Error::Config(format!("invalid axis '{c}' in --axes"))))
                .collect::<std::result::Result<_, _>>()?;
            match letters.len() {
                1 => LayeredAnsatz::uniform(n, m, letters[0])?,
                len if len == n * m => LayeredAnsatz::new(n, m, letters)?,
                len => bail!(Error::Config(format!("--axes has {len} letters, expected 1 or {}", n * m))),
            }
        };
        let theta = match theta_text {
            Some(t) => {
                let values: Vec<f64> = split(&t, "theta")?;
                match values.len() {
                    1 => ParamVector::new(vec![values[0]; n * m])?,
                    len if len == n * m => ParamVector::new(values)?,
                    len => bail!(Error::Config(format!("--theta has {len} values, expected 1 or {}", n * m))),
                }
            }
            None => random_theta,
        };
        let problem = Problem::new(ansatz, theta, observable)?;

        let rule = match pick(args.lambda_rule.clone(), card, "lambda_rule")? {
            Some(r) => r.parse::<LambdaRule>()?,
            None => LambdaRule::InvSqrtAbsSum,
        };
        let order = Order::from_u8(pick(args.order, card, "order")?.unwrap_or(1))?;
        Ok(ProblemSpec {
            problem,
            seed,
            s: pick(args.s, card, "s")?.unwrap_or(FRAC_PI_2),
            shots: pick(args.shots, card, "shots")?.unwrap_or(DEFAULT_SHOTS),
            repeats: pick(args.r, card, "R")?.unwrap_or(DEFAULT_REPEATS),
            lambda: pick(args.lambda, card, "lambda")?,
            rule,
            c1: pick(args.c1, card, "c1")?.unwrap_or(DEFAULT_C1),
            c2: pick(args.c2, card, "c2")?.unwrap_or(DEFAULT_C2),
            methods: method_list(&pick(args.method.clone(), card, "method")?.unwrap_or_else(|| "both".into()))?,
            dir: pick(args.dir, card, "dir")?.ok_or_else(|| anyhow!("--dir is required"))?,
            dir2: pick(args.dir2, card, "dir2")?,
            order,
            coeff_std,
        })
    }

    /// `--lambda` wins over the rule.
    fn lambda(&self) -> Result<f64> {
        Ok(match self.lambda {
            Some(l) => l,
            None => self.rule.lambda(&self.problem.observable)?,
        })
    }

    fn partial(&self) -> Result<Partial> {
        Ok(match self.order {
            Order::First => Partial::First(self.dir),
            Order::Second => Partial::Second {
                w: self.dir2.ok_or_else(|| anyhow!("--dir2 is required for --order 2"))?,
                l: self.dir,
            },
        })
    }

    fn runcard(&self, command: &str) -> Result<Runcard> {
        let a = &self.problem.ansatz;
        let mut c = Runcard::new();
        c.set("command", command)
            .set("master_seed", self.seed)
            .set("n", a.num_qubits())
            .set("J", self.problem.num_terms())
            .set("layers", a.num_layers())
            .set("k", a.gate_count())
            .set("axes", a.axes().iter().map(|x| x.as_char()).collect::<String>())
            .set("theta", join(self.problem.theta.as_slice()))
            .set("observable", self.problem.observable.to_text().trim_end().replace('\n', "; "))
            .set("order", self.order.as_u8())
            .set("dir", self.dir);
        if let Some(w) = self.dir2 {
            c.set("dir2", w);
        }
        c.set("s", self.s)
            .set("shots", self.shots)
            .set("R", self.repeats)
            .set("lambda_rule", self.rule)
            .set("lambda", self.lambda()?)
            .set("c1", self.c1)
            .set("c2", self.c2)
            .set("method", if self.methods.len() == 2 { "both" } else { self.methods[0].as_str() })
            .set("coeff_std", self.coeff_std)
            .set("sigma_s_mode", SigmaMode::Pilot)
            .set("artifact_version", ARTIFACT_VERSION);
        Ok(c)
    }

    fn evaluate(&self, method: Method, partial: Partial) -> Result<DerivativeRow> {
        let p = &self.problem;
        let oracle = exact_derivative_oracle(p, partial, self.s)?;
        let (n, j, k) = (p.num_qubits() as u64, p.num_terms() as u64, p.gate_count());
        let order = partial.order();
        let tag = (method == Method::Dm) as u64 * 16 + partial.l() as u64 * 4 + partial.w().unwrap_or(0) as u64;
        let seed = mix(self.seed, &[tag]);
        let shots = self.shots;
        match method {
            Method::Qndm => {
                let lambda = self.lambda()?;
                let settings = QndmSettings::new(lambda).with_shift(self.s).with_normalization(self.c1, self.c2);
                let probe = QndmProbe::prepare(p, partial, &settings)?;
                let est = probe.sample(shots, &mut rng_for(seed, &[STREAM_ESTIMATE]))?;
                let emp = empirical_mse(method, order, self.repeats, oracle, mix(seed, &[STREAM_MSE]), |r| {
                    Ok(probe.sample(shots, r)?.value)
                })?;
                let p0 = probe.p0();
                let formula = match mse_formula(
                    order,
                    &MseInputs::Qndm {
                        lambda,
                        sigma_d2: p0 * (1.0 - p0),
                        p0,
                        d2g: qndm_d2g(p, partial, self.s, lambda, None)?,
                        s: self.s,
                        shots,
                    },
                ) {
                    Ok(r) => r.mse,
                    Err(Error::SingularVariance { .. }) => f64::NAN,
                    Err(e) => return Err(e.into()),
                };
                Ok(DerivativeRow {
                    method,
                    partial,
                    value: est.value,
                    oracle,
                    shots,
                    lambda: Some(lambda),
                    mse_emp: emp.mse,
                    mse_formula: formula,
                    cost_formula: cost(method, order, shots, j, k, n).formula_cost,
                    cost_measured: est.measured_gate_cost,
                    seed: self.seed,
                })
            }
            Method::Dm => {
                let probe = DmProbe::prepare(p, partial, self.s)?;
                let est = probe.sample(shots, &mut rng_for(seed, &[STREAM_ESTIMATE]))?;
                let emp = empirical_mse(method, order, self.repeats, oracle, mix(seed, &[STREAM_MSE]), |r| {
                    Ok(probe.sample(shots, r)?.value)
                })?;
                let sigma_s2 = probe.pilot_sigma2(PILOT_SHOTS, &mut rng_for(seed, &[STREAM_PILOT]))?;
                let formula =
                    mse_formula(order, &MseInputs::Dm { coeffs: probe.coeffs().to_vec(), sigma_s2, s: self.s, shots })?;
                Ok(DerivativeRow {
                    method,
                    partial,
                    value: est.value,
                    oracle,
                    shots,
                    lambda: None,
                    mse_emp: emp.mse,
                    mse_formula: formula.mse,
                    cost_formula: cost(method, order, shots, j, k, n).formula_cost,
                    cost_measured: est.measured_gate_cost,
                    seed: self.seed,
                })
            }
        }
    }
}

pub fn derive(args: &ProblemArgs) -> Result<()> {
    let card = load_config(args.output.config.as_deref())?;
    let spec = ProblemSpec::resolve(args, &card)?;
    let partial = spec.partial()?;
    let rows = spec.methods.iter().map(|&m| spec.evaluate(m, partial)).collect::<Result<Vec<_>>>()?;
    let out = &args.output.out;
    write_atomic(out, "derivative.csv", &derivative_csv(&rows))?;
    write_runcard(out, spec.runcard("derive")?)?;
    Ok(())
}

pub fn hessian(args: &ProblemArgs) -> Result<()> {
    let card = load_config(args.output.config.as_deref())?;
    let mut spec = ProblemSpec::resolve(args, &card)?;
    spec.order = Order::Second;
    let w = spec.dir2.ok_or_else(|| anyhow!("--dir2 is required for hessian"))?;
    let l = spec.dir;
    let mut rows = Vec::new();
    for &m in &spec.methods {
        rows.push(spec.evaluate(m, Partial::Second { w, l })?);
        rows.push(spec.evaluate(m, Partial::Second { w: l, l: w })?);
    }
    let out = &args.output.out;
    write_atomic(out, "derivative.csv", &derivative_csv(&rows))?;
    write_runcard(out, spec.runcard("hessian")?)?;
    Ok(())
}

pub fn calibrate(args: &CalibrateArgs) -> Result<()> {
    let s = args.s.unwrap_or(FRAC_PI_2);
    let grid: Vec<f64> = match &args.lambda_grid {
        Some(g) => split(g, "lambda grid")?,
        None => DEFAULT_LAMBDA_GRID.to_vec(),
    };
    let cal = calibrate_normalization(&DEFAULT_THETAS, &grid, s)?;
    write_atomic(&args.out, "calibration.txt", &cal.report())?;
    let mut card = Runcard::new();
    card.set("command", "calibrate")
        .set("s", s)
        .set("lambda_grid", join(&grid))
        .set("thetas", join(&DEFAULT_THETAS))
        .set("c1", cal.c1)
        .set("c2", cal.c2)
        .set("artifact_version", ARTIFACT_VERSION);
    write_runcard(&args.out, card)?;
    Ok(())
}

fn parse_order(v: u8) -> Result<Order> {
    Ok(Order::from_u8(v)?)
}

/// Preset grids, then config-file values, then explicit flags.
fn sweep_config(args: &SweepArgs, kind: Option<SweepKind>, ratio: bool) -> Result<(ExperimentConfig, Runcard)> {
    let card = load_config(args.output.config.as_deref())?;
    let preset = match pick(args.preset.clone(), &card, "preset")? {
        Some(p) => p.parse::<Preset>()?,
        None => Preset::Ci,
    };
    let order = parse_order(pick(args.order, &card, "order")?.unwrap_or(1))?;
    let kind = match kind {
        Some(k) => k,
        None => {
            let regime = pick(args.regime.clone(), &card, "regime")?
                .ok_or_else(|| anyhow!("--regime is required (k-dominant or nj-dominant)"))?
                .parse::<Regime>()?;
            SweepKind::for_regime(ratio, regime)
        }
    };
    let mut cfg = ExperimentConfig::preset(kind, order, preset);
    cfg.apply_runcard(&card)?;
    cfg.sweep = kind;
    cfg.order = order;
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(j) = &args.j {
        cfg.j_grid = split(j, "J")?;
    }
    if let Some(m) = &args.layers {
        cfg.m_grid = split(m, "layer count")?;
    }
    if let Some(l) = args.l {
        cfg.realizations = l;
    }
    if let Some(r) = args.r {
        cfg.repeats = r;
    }
    if let Some(n) = args.shots {
        cfg.shots_qndm = n;
    }
    if let Some(s) = args.s {
        cfg.s = s;
    }
    if let Some(r) = &args.lambda_rule {
        cfg.lambda_rule = r.parse()?;
    }
    if let Some(l) = args.lambda {
        cfg.lambda_rule = LambdaRule::Fixed(l);
    }
    if let Some(c) = args.c1 {
        cfg.c1 = c;
    }
    if let Some(c) = args.c2 {
        cfg.c2 = c;
    }
    if let Some(c) = args.coeff_std {
        cfg.coeff_std = c;
    }
    if let Some(m) = &args.sigma_mode {
        cfg.sigma_mode = m.parse()?;
    }
    if let Some(seed) = args.output.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let mut out_card = cfg.to_runcard();
    if let Some(r) = kind_regime(kind) {
        out_card.set("regime", r.as_str());
    }
    Ok((cfg, out_card))
}

fn kind_regime(kind: SweepKind) -> Option<Regime> {
    match kind {
        SweepKind::MseVsJ => None,
        SweepKind::CostVsK | SweepKind::RatioVsJ => Some(Regime::KDominant),
        SweepKind::CostVsNj | SweepKind::RatioVsK => Some(Regime::NjDominant),
    }
}

fn finish(output: &OutputArgs, command: &str, file: &str, body: &str, mut card: Runcard) -> Result<()> {
    write_atomic(&output.out, file, body)?;
    card.set("command", command);
    write_runcard(&output.out, card)
}

pub fn mse_sweep(args: &SweepArgs) -> Result<()> {
    let (cfg, card) = sweep_config(args, Some(SweepKind::MseVsJ), false)?;
    let out = run_sweep(&cfg)?;
    finish(&args.output, "mse-sweep", "mse_sweep.csv", &mse_sweep_csv(&out), card)
}

pub fn cost_sweep(args: &SweepArgs) -> Result<()> {
    let (cfg, card) = sweep_config(args, None, false)?;
    let out = run_sweep(&cfg)?;
    finish(&args.output, "cost-sweep", "cost_sweep.csv", &cost_sweep_csv(&out), card)
}

pub fn ratio_sweep(args: &SweepArgs) -> Result<()> {
    let (cfg, card) = sweep_config(args, None, true)?;
    let out = run_sweep(&cfg)?;
    finish(&args.output, "ratio-sweep", "ratio_sweep.csv", &ratio_sweep_csv(&out), card)
}

pub fn realize(args: &RealizeArgs) -> Result<()> {
    let kind = match &args.kind {
        Some(k) => Some(k.parse::<SweepKind>()?),
        None if args.sweep.regime.is_none() => Some(SweepKind::MseVsJ),
        None => None,
    };
    let (cfg, mut card) = sweep_config(&args.sweep, kind, false)?;
    let point = sweep_points(&cfg)[0];
    let indices: Vec<usize> = match args.index {
        Some(i) => vec![i],
        None => (0..cfg.realizations).collect(),
    };
    let records = indices.iter().map(|&i| run_realization(&cfg, point, i)).collect::<qndm_core::Result<Vec<_>>>()?;
    if let Some(i) = args.index {
        card.set("index", i);
    }
    finish(&args.sweep.output, "realize", "realization.csv", &realization_csv(&records), card)
}
