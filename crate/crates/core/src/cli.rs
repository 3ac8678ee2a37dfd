//! Command-line front end. Every subcommand writes a single CSV table,
//! preceded by a `#` line that echoes the tool version and parsed arguments.
//!
//! Exit codes: 0 on success, 1 on a numerical or I/O failure, 2 on a usage
//! error, 3 when the table was written but some solver did not converge.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::aig::{aig_cdf, slot_arrival_probs, MediumParams, SlotConfig};
use crate::capacity::{
    blahut_arimoto, capacity_at_multiplier, capacity_per_unit_time, constrained_blahut_arimoto, find_t_opt,
    jimbo_kunisawa, CapacityResult, CostModel, SolverOptions, TWindow, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::channel::{dmc_matrix, InputDistribution};
use crate::detector::{error_probability_at, likelihoods, map_rule, DetectorModel};
use crate::isi_bounds::{bounds_at, LowerBoundOptions, Policy, DEFAULT_SEED, DEFAULT_STARTS};
use crate::report::{fmt_real, CsvTable};
use crate::simulator::{run_link, SimConfig, DEFAULT_WARMUP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Failure modes of a CLI invocation.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Model(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Grid `start:stop:count[:lin|log]`, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / n;
                if i == 0 {
                    self.start
                } else if i + 1 == self.count {
                    self.stop
                } else if self.log {
                    (self.start.ln() + f * (self.stop.ln() - self.start.ln())).exp()
                } else {
                    self.start + f * (self.stop - self.start)
                }
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("expected start:stop:count[:lin|log], got `{s}`"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
        let start = num(parts[0])?;
        let stop = num(parts[1])?;
        let count: usize = parts[2].trim().parse().map_err(|e| format!("`{}`: {e}", parts[2]))?;
        let log = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") => false,
            Some("log") => true,
            Some(other) => return Err(format!("grid spacing must be `lin` or `log`, got `{other}`")),
        };
        if count == 0 {
            return Err("grid needs at least one point".into());
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err("grid ends must be finite".into());
        }
        if log && !(start > 0.0 && stop > 0.0) {
            return Err("log grid ends must be > 0".into());
        }
        Ok(Grid { start, stop, count, log })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Uniform,
    DmcOptimal,
    SelfOptimal,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Uniform => Policy::Uniform,
            PolicyArg::DmcOptimal => Policy::DmcOptimal,
            PolicyArg::SelfOptimal => Policy::SelfOptimal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Dmc,
    Stm,
}

impl From<ModelArg> for DetectorModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Dmc => DetectorModel::Dmc,
            ModelArg::Stm => DetectorModel::Stm,
        }
    }
}

/// Capacity and ISI analysis for diffusion-based molecular timing channels.
#[derive(Debug, Parser)]
#[command(name = "molcap", version, args_override_self = true)]
pub struct Cli {
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for grid evaluation.
    #[arg(long, global = true, env = "MOLCAP_WORKERS")]
    pub workers: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Capacity of the memoryless binomial channel.
    CapacityDmc(DmcArgs),
    /// Capacity under an average cost constraint or at a fixed multiplier.
    CapacityConstrained(ConstrainedArgs),
    /// Capacity per unit time under peak and average rate limits.
    CapacityPerTime(PerTimeArgs),
    /// Slot duration maximizing capacity per unit time.
    TOpt(TOptArgs),
    /// Capacity per unit cost.
    CapacityPerCost(PerCostArgs),
    /// Lower and upper bounds on the rate of the channel with interference.
    IsiBounds(BoundsArgs),
    /// Analytic MAP detection error.
    DetectorError(DetectorArgs),
    /// Monte Carlo simulation of the end-to-end link.
    Simulate(SimulateArgs),
    /// Runs another subcommand over a grid of one of its parameters.
    Sweep(SweepArgs),
}

/// Diffusion medium.
#[derive(Debug, Clone, Default, Args)]
pub struct MediumArgs {
    /// Transmitter-receiver distance.
    #[arg(long)]
    pub l: Option<f64>,
    /// Drift velocity.
    #[arg(long)]
    pub v: Option<f64>,
    /// Diffusion coefficient.
    #[arg(long)]
    pub sigma2: Option<f64>,
}

impl MediumArgs {
    fn given(&self) -> bool {
        self.l.is_some() || self.v.is_some() || self.sigma2.is_some()
    }

    fn params(&self) -> Result<MediumParams, CliError> {
        match (self.l, self.v, self.sigma2) {
            (Some(l), Some(v), Some(s)) => Ok(MediumParams::new(l, v, s)?),
            _ => Err(usage("--l, --v and --sigma2 are all required")),
        }
    }
}

/// Slot duration, single or gridded.
#[derive(Debug, Clone, Default, Args)]
pub struct SlotArgs {
    /// Slot duration.
    #[arg(long = "t", conflicts_with = "t_grid")]
    pub t: Option<f64>,
    /// Grid of slot durations, `start:stop:count[:lin|log]`.
    #[arg(long = "t-grid")]
    pub t_grid: Option<Grid>,
}

impl SlotArgs {
    fn given(&self) -> bool {
        self.t.is_some() || self.t_grid.is_some()
    }

    fn durations(&self) -> Result<Vec<f64>, CliError> {
        match (self.t, &self.t_grid) {
            (Some(t), None) => Ok(vec![t]),
            (None, Some(g)) => Ok(g.points()),
            _ => Err(usage("one of --t or --t-grid is required")),
        }
    }
}

/// Arrival probabilities given directly instead of through the medium.
#[derive(Debug, Clone, Default, Args)]
pub struct ProbArgs {
    /// Probability of arriving within the first slot.
    #[arg(long)]
    pub q1: Option<f64>,
    /// Probability of arriving within the second slot.
    #[arg(long)]
    pub q2: Option<f64>,
    /// Probability of arriving within two slots; defaults to `q1 + q2`.
    #[arg(long)]
    pub qu: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Convergence tolerance in bits.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Iteration cap.
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions, CliError> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(usage(format!("--tol must be finite and > 0, got {}", self.tol)));
        }
        Ok(SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            init: None,
        })
    }
}

/// Operating point: either both arrival probabilities, or a medium and
/// slot duration that produce them.
#[derive(Debug, Clone, Copy)]
struct Point {
    t: Option<f64>,
    q1: f64,
    q2: f64,
    qu: f64,
}

fn operating_points(medium: &MediumArgs, slot: &SlotArgs, probs: &ProbArgs) -> Result<Vec<Point>, CliError> {
    let direct = probs.q1.is_some() || probs.q2.is_some() || probs.qu.is_some();
    if direct {
        if medium.given() || slot.given() {
            return Err(usage("give either --q1/--q2/--qu or the medium and slot duration, not both"));
        }
        let q1 = probs.q1.ok_or_else(|| usage("--q1 is required with --q2 or --qu"))?;
        let q2 = probs.q2.unwrap_or(0.0);
        let qu = probs.qu.unwrap_or((q1 + q2).min(1.0));
        return Ok(vec![Point { t: None, q1, q2, qu }]);
    }
    if !medium.given() {
        return Err(usage("give --q1 or the medium (--l, --v, --sigma2) with --t or --t-grid"));
    }
    let params = medium.params()?;
    slot.durations()?
        .into_iter()
        .map(|t| {
            let q = slot_arrival_probs(&params, t, 2)?;
            Ok(Point {
                t: Some(t),
                q1: q.q1(),
                q2: q.q2(),
                qu: q.q_u(),
            })
        })
        .collect()
}

fn input_law(a: &Option<Vec<f64>>, xmax: usize) -> Result<InputDistribution, CliError> {
    match a {
        None => Ok(InputDistribution::uniform(xmax)),
        Some(w) if w.len() != xmax + 1 => Err(usage(format!(
            "--a has {} weights but --xmax {xmax} needs {}",
            w.len(),
            xmax + 1
        ))),
        Some(w) => Ok(InputDistribution::from_weights(w)?),
    }
}

#[derive(Debug, Clone, Args)]
pub struct DmcArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[command(flatten)]
    pub slot: SlotArgs,
    #[command(flatten)]
    pub probs: ProbArgs,
    /// Largest number of molecules per slot.
    #[arg(long)]
    pub xmax: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConstrainedArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[command(flatten)]
    pub slot: SlotArgs,
    #[command(flatten)]
    pub probs: ProbArgs,
    #[arg(long)]
    pub xmax: usize,
    /// Budget on the average cost.
    #[arg(long, conflicts_with = "s", required_unless_present = "s")]
    pub e: Option<f64>,
    /// Lagrange multiplier on the cost.
    #[arg(long)]
    pub s: Option<f64>,
    /// Fixed cost per slot; symbol `x` costs `x + c0`.
    #[arg(long, default_value_t = 0.0)]
    pub c0: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PerTimeArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[command(flatten)]
    pub slot: SlotArgs,
    /// Peak release rate.
    #[arg(long)]
    pub pmax: Option<f64>,
    /// Average release rate.
    #[arg(long)]
    pub pbar: Option<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TOptArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[arg(long)]
    pub pmax: Option<f64>,
    #[arg(long)]
    pub pbar: Option<f64>,
    /// Lower end of the search window.
    #[arg(long, default_value_t = 1e-6)]
    pub t_lo: f64,
    /// Upper end of the search window.
    #[arg(long, default_value_t = 1e2)]
    pub t_hi: f64,
    /// Grid points per decade.
    #[arg(long, default_value_t = 64)]
    pub per_decade: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PerCostArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[command(flatten)]
    pub slot: SlotArgs,
    #[command(flatten)]
    pub probs: ProbArgs,
    #[arg(long)]
    pub xmax: usize,
    #[arg(long, default_value_t = 0.0)]
    pub c0: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[command(flatten)]
    pub slot: SlotArgs,
    #[command(flatten)]
    pub probs: ProbArgs,
    #[arg(long)]
    pub xmax: usize,
    /// Input law for the lower bounds; repeat for several. Defaults to all.
    #[arg(long, value_enum)]
    pub policy: Vec<PolicyArg>,
    /// Starting points for the self-optimized lower bounds.
    #[arg(long, default_value_t = DEFAULT_STARTS)]
    pub starts: usize,
    /// Seed for the random starting points.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DetectorArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[command(flatten)]
    pub slot: SlotArgs,
    #[command(flatten)]
    pub probs: ProbArgs,
    #[arg(long)]
    pub xmax: usize,
    /// Detector likelihood model; repeat for several. Defaults to both.
    #[arg(long, value_enum)]
    pub model: Vec<ModelArg>,
    /// Input weights, comma-separated; uniform when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub a: Option<Vec<f64>>,
    /// Emit the decision table of a single point and model instead.
    #[arg(long)]
    pub table: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub medium: MediumArgs,
    #[command(flatten)]
    pub slot: SlotArgs,
    #[arg(long)]
    pub xmax: usize,
    /// Input weights, comma-separated; uniform when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub a: Option<Vec<f64>>,
    /// Number of measured slots.
    #[arg(long, default_value_t = 100_000)]
    pub frames: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Receiver decision rule.
    #[arg(long, value_enum, default_value_t = ModelArg::Stm)]
    pub model: ModelArg,
    /// Unmeasured slots simulated before each block.
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    pub warmup: usize,
    /// Discard molecules arriving this many slots late or more; 0 keeps all.
    #[arg(long, default_value_t = 0)]
    pub memory_truncation: usize,
    /// Emit the per-slot trace of a single point instead.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Subcommand to evaluate at each grid point.
    #[arg(long)]
    pub measure: String,
    /// Flag of that subcommand to vary, without the leading dashes.
    #[arg(long)]
    pub param: String,
    /// Values of the varied flag, `start:stop:count[:lin|log]`.
    #[arg(long)]
    pub grid: Grid,
    /// Remaining arguments passed to the measured subcommand.
    #[arg(last = true, allow_hyphen_values = true)]
    pub rest: Vec<String>,
}

/// A result table and whether every solver behind it converged.
#[derive(Debug, Clone)]
pub struct Output {
    pub table: CsvTable,
    pub converged: bool,
}

fn opt_real(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_real(x)).collect::<Vec<_>>().join(";")
}

const CAPACITY_HEADER: [&str; 17] = [
    "problem",
    "T",
    "q1",
    "xmax",
    "E",
    "s_in",
    "c0",
    "Pmax",
    "Pbar",
    "value",
    "achieved_rate",
    "achieved_e",
    "s",
    "iterations",
    "converged",
    "degenerate",
    "a",
];

#[derive(Default)]
struct CapacityRow {
    t: Option<f64>,
    q1: f64,
    e: Option<f64>,
    s_in: Option<f64>,
    c0: Option<f64>,
    pmax: Option<f64>,
    pbar: Option<f64>,
}

fn capacity_row(problem: &str, row: &CapacityRow, res: &CapacityResult) -> Vec<String> {
    vec![
        problem.to_string(),
        opt_real(row.t),
        fmt_real(row.q1),
        res.a.xmax().to_string(),
        opt_real(row.e),
        opt_real(row.s_in),
        opt_real(row.c0),
        opt_real(row.pmax),
        opt_real(row.pbar),
        fmt_real(res.value),
        fmt_real(res.achieved_rate),
        opt_real(res.achieved_e),
        opt_real(res.s),
        res.iterations.to_string(),
        res.converged.to_string(),
        res.degenerate.to_string(),
        joined(res.a.probs()),
    ]
}

fn capacity_table(rows: Vec<(Vec<String>, bool)>) -> Output {
    let mut table = CsvTable::new(CAPACITY_HEADER);
    let mut converged = true;
    for (row, ok) in rows {
        converged &= ok;
        table.push_row(row);
    }
    Output { table, converged }
}

fn capacity_dmc(args: &DmcArgs) -> Result<Output, CliError> {
    let opts = args.solver.options()?;
    let points = operating_points(&args.medium, &args.slot, &args.probs)?;
    let rows = points
        .par_iter()
        .map(|pt| {
            let res = blahut_arimoto(&dmc_matrix(pt.q1, args.xmax)?, &opts)?;
            let meta = CapacityRow {
                t: pt.t,
                q1: pt.q1,
                ..Default::default()
            };
            Ok((capacity_row("dmc", &meta, &res), res.converged))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(capacity_table(rows))
}

fn capacity_constrained(args: &ConstrainedArgs) -> Result<Output, CliError> {
    let opts = args.solver.options()?;
    let cost = CostModel::affine(args.xmax, args.c0)?;
    let points = operating_points(&args.medium, &args.slot, &args.probs)?;
    let rows = points
        .par_iter()
        .map(|pt| {
            let p = dmc_matrix(pt.q1, args.xmax)?;
            let res = match (args.e, args.s) {
                (Some(e), None) => constrained_blahut_arimoto(&p, &cost, e, &opts)?,
                (None, Some(s)) => capacity_at_multiplier(&p, &cost, s, &opts)?,
                _ => return Err(usage("exactly one of --e or --s is required")),
            };
            let meta = CapacityRow {
                t: pt.t,
                q1: pt.q1,
                e: args.e,
                s_in: args.s,
                c0: Some(args.c0),
                ..Default::default()
            };
            Ok((capacity_row("constrained", &meta, &res), res.converged))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(capacity_table(rows))
}

fn capacity_per_time(args: &PerTimeArgs) -> Result<Output, CliError> {
    let pmax = match (args.pmax, args.pbar) {
        (Some(p), _) => p,
        (None, Some(_)) => return Err(usage("--pbar requires --pmax")),
        (None, None) => return Err(usage("--pmax is required")),
    };
    let opts = args.solver.options()?;
    let params = args.medium.params()?;
    let rows = args
        .slot
        .durations()?
        .par_iter()
        .map(|&t| {
            let res = capacity_per_unit_time(&params, t, pmax, args.pbar, &opts)?;
            let meta = CapacityRow {
                t: Some(t),
                q1: aig_cdf(&params, t)?,
                pmax: Some(pmax),
                pbar: args.pbar,
                ..Default::default()
            };
            Ok((capacity_row("per-time", &meta, &res), res.converged))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(capacity_table(rows))
}

fn t_opt(args: &TOptArgs) -> Result<Output, CliError> {
    let pmax = match (args.pmax, args.pbar) {
        (Some(p), _) => p,
        (None, Some(_)) => return Err(usage("--pbar requires --pmax")),
        (None, None) => return Err(usage("--pmax is required")),
    };
    let opts = args.solver.options()?;
    let params = args.medium.params()?;
    let window = TWindow::new(args.t_lo, args.t_hi, args.per_decade)?;
    let res = find_t_opt(&params, pmax, args.pbar, &window, &opts)?;
    let mut table = CsvTable::new([
        "l", "v", "sigma2", "Pmax", "Pbar", "T_opt", "value", "q1", "xmax", "boundary",
    ]);
    table.push_row(vec![
        fmt_real(params.l()),
        fmt_real(params.v()),
        fmt_real(params.sigma2()),
        fmt_real(pmax),
        opt_real(args.pbar),
        fmt_real(res.t_opt),
        fmt_real(res.value),
        fmt_real(aig_cdf(&params, res.t_opt)?),
        ((pmax * res.t_opt).round() as usize).to_string(),
        res.boundary.to_string(),
    ]);
    Ok(Output { table, converged: true })
}

fn capacity_per_cost(args: &PerCostArgs) -> Result<Output, CliError> {
    let opts = args.solver.options()?;
    let cost = CostModel::affine(args.xmax, args.c0)?;
    let points = operating_points(&args.medium, &args.slot, &args.probs)?;
    let rows = points
        .par_iter()
        .map(|pt| {
            let res = jimbo_kunisawa(&dmc_matrix(pt.q1, args.xmax)?, &cost, &opts)?;
            let meta = CapacityRow {
                t: pt.t,
                q1: pt.q1,
                c0: Some(args.c0),
                ..Default::default()
            };
            Ok((capacity_row("per-cost", &meta, &res), res.converged))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(capacity_table(rows))
}

fn isi_bounds(args: &BoundsArgs) -> Result<Output, CliError> {
    let solver = args.solver.options()?;
    if args.starts == 0 {
        return Err(usage("--starts must be at least 1"));
    }
    let opts = LowerBoundOptions {
        tol: solver.tol,
        max_iter: solver.max_iter,
        starts: args.starts,
        seed: args.seed,
    };
    let policies: Vec<Policy> = if args.policy.is_empty() {
        vec![Policy::Uniform, Policy::DmcOptimal, Policy::SelfOptimal]
    } else {
        args.policy.iter().map(|&p| p.into()).collect()
    };
    let points = operating_points(&args.medium, &args.slot, &args.probs)?;
    let jobs: Vec<(Point, Policy)> = points
        .iter()
        .flat_map(|&pt| policies.iter().map(move |&p| (pt, p)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(pt, policy)| Ok((pt, bounds_at(pt.q1, pt.q2, pt.qu, args.xmax, policy, &opts)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = CsvTable::new([
        "T", "q1", "q2", "qU", "lb1", "lb2", "ub", "cDmc", "policy", "converged",
    ]);
    let mut converged = true;
    for (pt, b) in results {
        converged &= b.converged;
        table.push_row(vec![
            opt_real(pt.t),
            fmt_real(b.q1),
            fmt_real(b.q2),
            fmt_real(b.q_u),
            fmt_real(b.lb1),
            fmt_real(b.lb2),
            fmt_real(b.ub),
            fmt_real(b.c_dmc),
            b.policy.name().to_string(),
            b.converged.to_string(),
        ]);
    }
    Ok(Output { table, converged })
}

fn detector_error(args: &DetectorArgs) -> Result<Output, CliError> {
    let a = input_law(&args.a, args.xmax)?;
    let models: Vec<DetectorModel> = if args.model.is_empty() {
        vec![DetectorModel::Dmc, DetectorModel::Stm]
    } else {
        args.model.iter().map(|&m| m.into()).collect()
    };
    let points = operating_points(&args.medium, &args.slot, &args.probs)?;
    if args.table {
        if points.len() != 1 || models.len() != 1 {
            return Err(usage("--table needs a single operating point and a single --model"));
        }
        let pt = points[0];
        let p = likelihoods(models[0], &a, pt.q1, pt.q2, args.xmax)?;
        let rule = map_rule(&a, pt.q1, pt.q2, args.xmax, models[0])?;
        return Ok(Output {
            table: rule.to_csv_table(&p, &a),
            converged: true,
        });
    }
    let jobs: Vec<(Point, DetectorModel)> = points
        .iter()
        .flat_map(|&pt| models.iter().map(move |&m| (pt, m)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(pt, model)| {
            let rule = map_rule(&a, pt.q1, pt.q2, args.xmax, model)?;
            let pe = crate::detector::error_probability(&rule, &a, pt.q1, pt.q2, args.xmax)?;
            Ok(vec![
                opt_real(pt.t),
                opt_real(args.medium.v),
                opt_real(args.medium.sigma2),
                fmt_real(pt.q1),
                fmt_real(pt.q2),
                model.to_string(),
                fmt_real(pe),
            ])
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = CsvTable::new(["T", "v", "sigma2", "q1", "q2", "model", "pe"]);
    for row in rows {
        table.push_row(row);
    }
    Ok(Output { table, converged: true })
}

fn simulate(args: &SimulateArgs) -> Result<Output, CliError> {
    let params = args.medium.params()?;
    let a = input_law(&args.a, args.xmax)?;
    let durations = args.slot.durations()?;
    if args.trace && durations.len() != 1 {
        return Err(usage("--trace needs a single --t"));
    }
    let mut table = if args.trace {
        CsvTable::new(["slot", "x", "y", "x_hat"])
    } else {
        CsvTable::new([
            "T", "q1", "q2", "model", "frames", "seed", "errors", "pe", "ci_low", "ci_high", "pe_dmc", "pe_stm",
            "molecules", "captured", "hist",
        ])
    };
    for t in durations {
        let mut cfg = SimConfig::new(params, SlotConfig::new(t, args.xmax)?, a.clone(), args.frames, args.seed);
        cfg.detector = args.model.into();
        cfg.warmup = args.warmup;
        cfg.memory_truncation = args.memory_truncation;
        cfg.trace = args.trace;
        let report = run_link(&cfg)?;
        if let Some(trace) = &report.trace {
            for r in trace {
                table.push_row(vec![
                    r.slot.to_string(),
                    r.x.to_string(),
                    r.y.to_string(),
                    r.x_hat.to_string(),
                ]);
            }
            continue;
        }
        let q = slot_arrival_probs(&params, t, 2)?;
        let pe_dmc = error_probability_at(&params, t, &a, DetectorModel::Dmc)?.pe;
        let pe_stm = error_probability_at(&params, t, &a, DetectorModel::Stm)?.pe;
        table.push_row(vec![
            fmt_real(t),
            fmt_real(q.q1()),
            fmt_real(q.q2()),
            cfg.detector.to_string(),
            report.frames_run.to_string(),
            report.seed.to_string(),
            report.errors.to_string(),
            fmt_real(report.empirical_pe),
            fmt_real(report.ci_low),
            fmt_real(report.ci_high),
            fmt_real(pe_dmc),
            fmt_real(pe_stm),
            report.molecules.to_string(),
            fmt_real(report.captured_fraction()),
            joined(&report.slot_arrival_hist),
        ]);
    }
    Ok(Output { table, converged: true })
}

fn sweep(args: &SweepArgs) -> Result<Output, CliError> {
    let param = args.param.trim_start_matches('-');
    if param.is_empty() {
        return Err(usage("--param must name a flag"));
    }
    let values = args.grid.points();
    let commands = values
        .iter()
        .map(|v| {
            let mut argv: Vec<String> = vec!["molcap".into(), args.measure.clone()];
            argv.extend(args.rest.iter().cloned());
            argv.push(format!("--{param}"));
            argv.push(format!("{v:?}"));
            let cli = Cli::try_parse_from(&argv).map_err(|e| usage(format!("sweep point {v}: {e}")))?;
            if cli.out.is_some() {
                return Err(usage("--out belongs before the sweep arguments, not after `--`"));
            }
            if matches!(cli.command, Command::Sweep(_)) {
                return Err(usage("sweeps cannot be nested"));
            }
            Ok(cli.command)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let outputs = commands
        .par_iter()
        .map(run_command)
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut header = vec![param.to_string()];
    header.extend(outputs[0].table.header.iter().cloned());
    let mut table = CsvTable::new(header);
    let mut converged = true;
    for (v, out) in values.iter().zip(outputs) {
        converged &= out.converged;
        for row in out.table.rows {
            let mut full = vec![fmt_real(*v)];
            full.extend(row);
            table.push_row(full);
        }
    }
    Ok(Output { table, converged })
}

/// Evaluates one parsed subcommand.
pub fn run_command(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::CapacityDmc(a) => capacity_dmc(a),
        Command::CapacityConstrained(a) => capacity_constrained(a),
        Command::CapacityPerTime(a) => capacity_per_time(a),
        Command::TOpt(a) => t_opt(a),
        Command::CapacityPerCost(a) => capacity_per_cost(a),
        Command::IsiBounds(a) => isi_bounds(a),
        Command::DetectorError(a) => detector_error(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
    }
}

struct Echo<'a>(&'a Command);

impl fmt::Display for Echo<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "molcap {} {:?}", env!("CARGO_PKG_VERSION"), self.0)
    }
}

/// Evaluates the command and writes its table to `--out` or standard output.
pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let mut out = run_command(&cli.command)?;
    out.table.meta.insert(0, Echo(&cli.command).to_string());
    match &cli.out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            let mut w = std::io::BufWriter::new(file);
            out.table.write_to(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            out.table.write_to(stdout.lock())?;
        }
    }
    Ok(out)
}

/// Parses `args` and runs the tool, returning the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(&cli) {
        Ok(out) if out.converged => EXIT_OK,
        Ok(_) => {
            eprintln!("molcap: warning: some solvers hit the iteration cap before converging");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("molcap: error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    run_from(std::env::args_os())
}
