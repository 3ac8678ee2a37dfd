//! Bounds on the information rate of the channel with one slot of memory.
//!
//! Two lower bounds read the current symbol through interference: `LB1`
//! observes its own slot, `LB2` also observes the next slot where the
//! symbol's late molecules land. The upper bound waits a full extra slot
//! between symbols, which removes interference and captures arrivals
//! within `2T`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::aig::{slot_arrival_probs, MediumParams};
use crate::capacity::{ba_update, blahut_arimoto, CapacityResult, SolverOptions};
use crate::channel::{
    dmc_matrix, lb1_entries, lb1_matrix, lb2_entries, lb2_matrix, ub_matrix, InputDistribution, TransitionMatrix,
};
use crate::error::{invalid, Result};
use crate::numeric::entropy_bits;

pub const DEFAULT_STARTS: usize = 5;
pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    Lb1,
    Lb2,
}

/// Input law used for the lower bounds in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    Uniform,
    /// Capacity-achieving law of the memoryless channel at the same `q1`.
    DmcOptimal,
    /// Each bound optimized for itself.
    SelfOptimal,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Uniform => "uniform",
            Policy::DmcOptimal => "dmc-optimal",
            Policy::SelfOptimal => "self-optimal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Policy::Uniform, Policy::DmcOptimal, Policy::SelfOptimal]
            .into_iter()
            .find(|p| p.name() == s)
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Stopping rule and multi-start schedule for lower-bound optimization.
#[derive(Debug, Clone)]
pub struct LowerBoundOptions {
    /// Convergence needs the bound to move by less than `tol` bits and the
    /// input law by less than `sqrt(tol)` per coordinate.
    pub tol: f64,
    pub max_iter: usize,
    /// The first start is uniform; the rest are flat-Dirichlet draws.
    pub starts: usize,
    pub seed: u64,
}

impl Default for LowerBoundOptions {
    fn default() -> Self {
        Self {
            tol: crate::capacity::DEFAULT_TOL,
            max_iter: crate::capacity::DEFAULT_MAX_ITER,
            starts: DEFAULT_STARTS,
            seed: DEFAULT_SEED,
        }
    }
}

fn bound_matrix(kind: BoundKind, a: &InputDistribution, q1: f64, q2: f64, xmax: usize) -> Result<TransitionMatrix> {
    match kind {
        BoundKind::Lb1 => lb1_matrix(a, q1, q2, xmax),
        BoundKind::Lb2 => lb2_matrix(a, q1, q2, xmax),
    }
}

/// `I(X_m; Y_m)` in bits with the interference law driven by `a` itself.
pub fn lb1_rate(a: &InputDistribution, q1: f64, q2: f64, xmax: usize) -> Result<f64> {
    Ok(lb1_matrix(a, q1, q2, xmax)?.mutual_information(a.probs()))
}

/// `I(X_{m-1}; Y_{m-1}, Y_m)` in bits from the joint output law.
pub fn lb2_rate(a: &InputDistribution, q1: f64, q2: f64, xmax: usize) -> Result<f64> {
    Ok(lb2_matrix(a, q1, q2, xmax)?.mutual_information(a.probs()))
}

/// `LB2` assembled from chain-rule pieces,
/// `H(Y1) + H(Y2 | Y1) - H(Y1 | X) - H(Y2 | X, Y1)`, as an independent
/// route to the same number.
pub fn lb2_rate_chain_rule(a: &InputDistribution, q1: f64, q2: f64, xmax: usize) -> Result<f64> {
    let p = lb2_matrix(a, q1, q2, xmax)?;
    let side = 2 * xmax + 1;
    let joint = p.output_law(a.probs());
    let first: Vec<f64> = (0..side).map(|u| joint[u * side..(u + 1) * side].iter().sum()).collect();
    let h_first = entropy_bits(&first);
    let h_second_given_first: f64 = (0..side)
        .filter(|&u| first[u] > 0.0)
        .map(|u| {
            let cond: Vec<f64> = joint[u * side..(u + 1) * side].iter().map(|v| v / first[u]).collect();
            first[u] * entropy_bits(&cond)
        })
        .sum();
    let mut h_given_x = 0.0;
    for (x, &ax) in a.probs().iter().enumerate() {
        if ax == 0.0 {
            continue;
        }
        let row = p.row(x);
        let marg: Vec<f64> = (0..side).map(|u| row[u * side..(u + 1) * side].iter().sum()).collect();
        let mut h = entropy_bits(&marg);
        for u in (0..side).filter(|&u| marg[u] > 0.0) {
            let cond: Vec<f64> = row[u * side..(u + 1) * side].iter().map(|v| v / marg[u]).collect();
            h += marg[u] * entropy_bits(&cond);
        }
        h_given_x += ax * h;
    }
    Ok((h_first + h_second_given_first - h_given_x).max(0.0))
}

/// Rate of the chosen bound at `a`.
pub fn lower_bound_rate(kind: BoundKind, a: &InputDistribution, q1: f64, q2: f64, xmax: usize) -> Result<f64> {
    match kind {
        BoundKind::Lb1 => lb1_rate(a, q1, q2, xmax),
        BoundKind::Lb2 => lb2_rate(a, q1, q2, xmax),
    }
}

/// Capacity of the interference-free channel with two-slot arrival
/// probability `F_W(2T)`.
pub fn ub_rate(params: &MediumParams, t: f64, xmax: usize, opts: &SolverOptions) -> Result<CapacityResult> {
    let q = slot_arrival_probs(params, t, 2)?;
    ub_rate_from_q(q.q_u(), xmax, opts)
}

pub fn ub_rate_from_q(q_u: f64, xmax: usize, opts: &SolverOptions) -> Result<CapacityResult> {
    blahut_arimoto(&ub_matrix(q_u, xmax)?, opts)
}

struct Climb {
    a: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
}

/// Blahut-Arimoto step against the matrix built from the current law, then
/// rebuild the matrix from the updated law. Keeps the best iterate seen.
fn modified_ba(
    kind: BoundKind,
    q1: f64,
    q2: f64,
    xmax: usize,
    start: Vec<f64>,
    opts: &LowerBoundOptions,
) -> Result<Climb> {
    let mut a = InputDistribution::new(start)?;
    let mut p = bound_matrix(kind, &a, q1, q2, xmax)?;
    let mut value = p.mutual_information(a.probs());
    let mut best = (a.probs().to_vec(), value);
    let step_tol = opts.tol.sqrt();
    for iter in 1..=opts.max_iter {
        let d = p.divergences(&p.output_law(a.probs()));
        let next = InputDistribution::new(ba_update(a.probs(), &d))?;
        p = bound_matrix(kind, &next, q1, q2, xmax)?;
        let next_value = p.mutual_information(next.probs());
        if next_value > best.1 {
            best = (next.probs().to_vec(), next_value);
        }
        let moved = a
            .probs()
            .iter()
            .zip(next.probs())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        let settled = (next_value - value).abs() < opts.tol && moved < step_tol;
        a = next;
        value = next_value;
        if settled {
            return Ok(Climb {
                a: best.0,
                value: best.1,
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(Climb {
        a: best.0,
        value: best.1,
        iterations: opts.max_iter,
        converged: false,
    })
}

/// Gradient (nats, up to a common constant) of the bound as a function of
/// the input law, through both the explicit weights and the law-dependent
/// matrix.
fn bound_gradient(kind: BoundKind, p: &TransitionMatrix, a: &[f64], q1: f64, q2: f64, xmax: usize) -> Vec<f64> {
    let r = p.output_law(a);
    let d = p.divergences(&r);
    let cols = p.cols();
    let log_ratio: Vec<f64> = p
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &pxy)| if pxy > 0.0 { (pxy / r[i % cols]).ln() } else { f64::NEG_INFINITY })
        .collect();
    (0..a.len())
        .map(|u| {
            let unit: Vec<f64> = (0..a.len()).map(|x| if x == u { 1.0 } else { 0.0 }).collect();
            let dp = match kind {
                BoundKind::Lb1 => lb1_entries(&unit, q1, q2, xmax),
                BoundKind::Lb2 => {
                    let mut m = lb2_entries(&unit, a, q1, q2, xmax);
                    for (v, w) in m.iter_mut().zip(lb2_entries(a, &unit, q1, q2, xmax)) {
                        *v += w;
                    }
                    m
                }
            };
            let through_matrix: f64 = dp
                .iter()
                .enumerate()
                .filter(|(i, &m)| m > 0.0 && a[i / cols] > 0.0)
                .map(|(i, &m)| a[i / cols] * m * log_ratio[i])
                .sum();
            d[u] + through_matrix
        })
        .collect()
}

/// Exponentiated-gradient ascent on the bound itself, with backtracking.
/// Stops when the spread between the largest and the mean gradient entry
/// drops below `tol` (bits), the stationarity condition on the simplex.
fn polish(kind: BoundKind, q1: f64, q2: f64, xmax: usize, start: Vec<f64>, opts: &LowerBoundOptions) -> Result<Climb> {
    let tol_nats = opts.tol * std::f64::consts::LN_2;
    let mut a = InputDistribution::new(start)?;
    let mut p = bound_matrix(kind, &a, q1, q2, xmax)?;
    let mut value = p.mutual_information(a.probs());
    let mut step = 1.0;
    for iter in 0..opts.max_iter {
        let g = bound_gradient(kind, &p, a.probs(), q1, q2, xmax);
        let mean: f64 = a.probs().iter().zip(&g).filter(|(ax, _)| **ax > 0.0).map(|(ax, gx)| ax * gx).sum();
        let peak = a
            .probs()
            .iter()
            .zip(&g)
            .filter(|(ax, _)| **ax > 0.0)
            .map(|(_, gx)| *gx)
            .fold(f64::NEG_INFINITY, f64::max);
        if peak - mean < tol_nats {
            return Ok(Climb {
                a: a.into_inner(),
                value,
                iterations: iter,
                converged: true,
            });
        }
        let mut moved = false;
        for _ in 0..60 {
            let weights: Vec<f64> = a
                .probs()
                .iter()
                .zip(&g)
                .map(|(&ax, &gx)| if ax > 0.0 { ax * (step * (gx - peak)).exp() } else { 0.0 })
                .collect();
            let trial = InputDistribution::from_weights(&weights)?;
            let tp = bound_matrix(kind, &trial, q1, q2, xmax)?;
            let tv = tp.mutual_information(trial.probs());
            if tv > value {
                (a, p, value) = (trial, tp, tv);
                moved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            // No representable ascent step left: numerically stationary.
            return Ok(Climb {
                a: a.into_inner(),
                value,
                iterations: iter + 1,
                converged: true,
            });
        }
    }
    Ok(Climb {
        a: a.into_inner(),
        value,
        iterations: opts.max_iter,
        converged: false,
    })
}

fn random_simplex_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Locally optimal input law for a lower bound, best of several starts.
///
/// Each start runs the rebuild-as-you-go Blahut-Arimoto iteration, whose
/// fixed points are stationary only for the frozen matrix, then climbs the
/// bound itself by gradient ascent. The objective is not concave, so each
/// start reaches a local maximum. The reported value is recomputed from
/// scratch at the returned law.
pub fn optimize_lower_bound(
    kind: BoundKind,
    q1: f64,
    q2: f64,
    xmax: usize,
    opts: &LowerBoundOptions,
) -> Result<CapacityResult> {
    if !(opts.tol > 0.0) {
        return Err(invalid("tol", format!("must be > 0, got {}", opts.tol)));
    }
    if opts.max_iter == 0 || opts.starts == 0 {
        return Err(invalid("max_iter", "iteration and start counts must be at least 1"));
    }
    let n = xmax + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..opts.starts)
        .map(|i| if i == 0 { vec![1.0 / n as f64; n] } else { random_simplex_point(&mut rng, n) })
        .collect();
    let mut best: Option<Climb> = None;
    let mut iterations = 0;
    let mut all_converged = true;
    for start in starts {
        let climb = modified_ba(kind, q1, q2, xmax, start, opts)?;
        let refined = polish(kind, q1, q2, xmax, climb.a.clone(), opts)?;
        iterations += climb.iterations + refined.iterations;
        all_converged &= refined.converged;
        let climb = if refined.value >= climb.value { refined } else { climb };
        if best.as_ref().is_none_or(|b| climb.value > b.value) {
            best = Some(climb);
        }
    }
    let best = best.expect("at least one start");
    let a = InputDistribution::new(best.a)?;
    let value = lower_bound_rate(kind, &a, q1, q2, xmax)?;
    Ok(CapacityResult {
        value,
        a,
        iterations,
        converged: all_converged,
        s: None,
        achieved_e: None,
        achieved_rate: value,
        degenerate: false,
    })
}

/// All bounds at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsResult {
    pub t: Option<f64>,
    pub q1: f64,
    pub q2: f64,
    pub q_u: f64,
    pub policy: Policy,
    pub lb1: f64,
    pub lb2: f64,
    pub ub: f64,
    pub a_lb1: InputDistribution,
    pub a_lb2: InputDistribution,
    pub a_ub: InputDistribution,
    /// Capacity of the memoryless channel at `q1`.
    pub c_dmc: f64,
    pub converged: bool,
}

/// Evaluates the three bounds at given arrival probabilities. The upper
/// bound is always taken at its capacity-achieving law.
pub fn bounds_at(
    q1: f64,
    q2: f64,
    q_u: f64,
    xmax: usize,
    policy: Policy,
    opts: &LowerBoundOptions,
) -> Result<BoundsResult> {
    let solver = SolverOptions {
        tol: opts.tol,
        max_iter: opts.max_iter,
        init: None,
    };
    let ub = ub_rate_from_q(q_u, xmax, &solver)?;
    let dmc = blahut_arimoto(&dmc_matrix(q1, xmax)?, &solver)?;
    let mut converged = ub.converged && dmc.converged;
    let (a_lb1, a_lb2) = match policy {
        Policy::Uniform => (InputDistribution::uniform(xmax), InputDistribution::uniform(xmax)),
        Policy::DmcOptimal => (dmc.a.clone(), dmc.a.clone()),
        Policy::SelfOptimal => {
            let lb1 = optimize_lower_bound(BoundKind::Lb1, q1, q2, xmax, opts)?;
            let lb2 = optimize_lower_bound(BoundKind::Lb2, q1, q2, xmax, opts)?;
            converged &= lb1.converged && lb2.converged;
            (lb1.a, lb2.a)
        }
    };
    Ok(BoundsResult {
        t: None,
        q1,
        q2,
        q_u,
        policy,
        lb1: lb1_rate(&a_lb1, q1, q2, xmax)?,
        lb2: lb2_rate(&a_lb2, q1, q2, xmax)?,
        ub: ub.value,
        a_lb1,
        a_lb2,
        a_ub: ub.a,
        c_dmc: dmc.value,
        converged,
    })
}

/// Bounds over a grid of slot durations for each requested policy, ordered
/// by grid index then policy.
pub fn bounds_sweep(
    params: &MediumParams,
    t_grid: &[f64],
    xmax: usize,
    policies: &[Policy],
    opts: &LowerBoundOptions,
) -> Result<Vec<BoundsResult>> {
    let jobs: Vec<(f64, Policy)> = t_grid
        .iter()
        .flat_map(|&t| policies.iter().map(move |&p| (t, p)))
        .collect();
    jobs.par_iter()
        .map(|&(t, policy)| {
            let q = slot_arrival_probs(params, t, 2)?;
            let mut res = bounds_at(q.q1(), q.q2(), q.q_u(), xmax, policy, opts)?;
            res.t = Some(t);
            Ok(res)
        })
        .collect()
}
