use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "qndm", version, about = "Derivative estimators for layered variational circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate one first- or second-order derivative with DM and/or QNDM.
    Derive(ProblemArgs),
    /// Estimate the Hessian entries g_{w,l} and g_{l,w} with both methods.
    Hessian(ProblemArgs),
    /// Fit the QNDM normalization constants on the one-qubit test family.
    Calibrate(CalibrateArgs),
    /// Mean derivative and MSE of both methods against J at equal shots.
    MseSweep(SweepArgs),
    /// Gate cost of both methods at matched MSE.
    CostSweep(SweepArgs),
    /// Cost ratio DM/QNDM at matched MSE.
    RatioSweep(SweepArgs),
    /// Run and record the realizations of one sweep point.
    Realize(RealizeArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `key = value` file (a runcard); explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// System qubits (taken from the observable when one is given).
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of random Pauli strings when no observable is given.
    #[arg(long = "J")]
    pub j: Option<usize>,
    /// Ansatz layers.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Rotation axes: one letter for all gates, n*m letters layer by layer, or `random`.
    #[arg(long)]
    pub axes: Option<String>,
    /// Observable as `coeff STRING` terms separated by `;`, e.g. "1 ZI; -0.5 XY".
    #[arg(long, conflicts_with = "observable_file")]
    pub observable: Option<String>,
    /// File with one `coeff STRING` term per line.
    #[arg(long)]
    pub observable_file: Option<PathBuf>,
    /// Parameters, comma separated (one value is broadcast); drawn from the seed when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Direction l.
    #[arg(long)]
    pub dir: Option<usize>,
    /// Second direction w (second order).
    #[arg(long)]
    pub dir2: Option<usize>,
    /// Parameter shift s.
    #[arg(long)]
    pub s: Option<f64>,
    /// Shots (QNDM), or shots per Pauli string and shift point (DM).
    #[arg(long)]
    pub shots: Option<u64>,
    /// Coupling strength; overrides --lambda-rule.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Coupling-strength rule (`inv_sqrt_abs_sum`).
    #[arg(long)]
    pub lambda_rule: Option<String>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// `qndm`, `dm` or `both`.
    #[arg(long)]
    pub method: Option<String>,
    /// Derivative order, 1 or 2.
    #[arg(long)]
    pub order: Option<u8>,
    /// Repeats for the empirical MSE.
    #[arg(long = "R")]
    pub r: Option<usize>,
    /// Standard deviation of random coefficients.
    #[arg(long)]
    pub coeff_std: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Parameter shift s.
    #[arg(long)]
    pub s: Option<f64>,
    /// Coupling grid, comma separated.
    #[arg(long)]
    pub lambda_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub output: OutputArgs,
    /// `ci` (n = 6, L = 10) or `full` (n = 10).
    #[arg(long)]
    pub preset: Option<String>,
    /// `k-dominant` or `nj-dominant` (cost and ratio sweeps).
    #[arg(long)]
    pub regime: Option<String>,
    #[arg(long)]
    pub order: Option<u8>,
    #[arg(long)]
    pub n: Option<usize>,
    /// J grid, comma separated.
    #[arg(long = "J")]
    pub j: Option<String>,
    /// Layer grid, comma separated.
    #[arg(long)]
    pub layers: Option<String>,
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long = "R")]
    pub r: Option<usize>,
    /// QNDM shots.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_rule: Option<String>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub coeff_std: Option<f64>,
    /// `pilot` or `uniform`.
    #[arg(long)]
    pub sigma_mode: Option<String>,
}

#[derive(Debug, Args)]
pub struct RealizeArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    /// Sweep kind whose point is realized (`mse_vs_J`, `cost_vs_k`, ...).
    #[arg(long = "sweep")]
    pub kind: Option<String>,
    /// Realization index; all L realizations when absent.
    #[arg(long)]
    pub index: Option<usize>,
}
