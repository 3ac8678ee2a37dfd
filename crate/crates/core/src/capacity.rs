//! Capacity of the memoryless molecular channel: per channel use, under an
//! average-cost budget, per unit time, and per unit cost.
//!
//! Rates are reported in bits. Internally the multiplicative updates work
//! in nats, where they are exact coordinate maximizers.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::aig::{aig_cdf, MediumParams};
use crate::channel::{dmc_matrix, InputDistribution, TransitionMatrix};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Bisection steps on the Lagrange multiplier once a feasible upper end is
/// bracketed.
const MULTIPLIER_BISECTIONS: usize = 60;
const MULTIPLIER_BRACKET: f64 = 1e-12;
const MULTIPLIER_CEILING: f64 = 1e15;

/// Stopping rule and starting point shared by the iterative solvers.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// For the Blahut-Arimoto variants: bound on the capacity gap
    /// `max_x D_x - sum_x a_x D_x` in bits. For Jimbo-Kunisawa: bound on the
    /// change of the rate-to-cost ratio between iterations.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting input law; uniform when `None`.
    pub init: Option<InputDistribution>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            init: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(invalid("tol", format!("must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }

    fn start(&self, n: usize) -> Result<Vec<f64>> {
        match &self.init {
            Some(a) if a.len() != n => Err(Error::DimensionMismatch {
                expected: n,
                actual: a.len(),
            }),
            Some(a) => Ok(a.probs().to_vec()),
            None => Ok(vec![1.0 / n as f64; n]),
        }
    }
}

/// Per-symbol transmission cost `e_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    e: Vec<f64>,
    c0: f64,
}

impl CostModel {
    pub fn new(e: Vec<f64>) -> Result<Self> {
        if e.is_empty() {
            return Err(invalid("e", "cost vector is empty"));
        }
        if let Some(bad) = e.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(invalid("e", format!("costs must be finite and >= 0, got {bad}")));
        }
        Ok(Self { e, c0: 0.0 })
    }

    /// `e_x = c0 + x`.
    pub fn affine(xmax: usize, c0: f64) -> Result<Self> {
        if !(c0 >= 0.0 && c0.is_finite()) {
            return Err(invalid("c0", format!("must be finite and >= 0, got {c0}")));
        }
        let e = (0..=xmax).map(|x| c0 + x as f64).collect();
        Ok(Self { e, c0 })
    }

    /// `e_x = x`: cost is the number of molecules.
    pub fn molecules(xmax: usize) -> Self {
        Self::affine(xmax, 0.0).expect("zero offset is valid")
    }

    pub fn e(&self) -> &[f64] {
        &self.e
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn min_cost(&self) -> f64 {
        self.e.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of a capacity computation.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityResult {
    /// Objective value: bits per channel use, per unit time, or per unit
    /// cost depending on the problem.
    pub value: f64,
    pub a: InputDistribution,
    pub iterations: usize,
    pub converged: bool,
    /// Lagrange multiplier of the cost constraint, when one was active.
    pub s: Option<f64>,
    /// Expected cost under `a`, when a cost model was involved.
    pub achieved_e: Option<f64>,
    /// Mutual information in bits per channel use at `a`.
    pub achieved_rate: f64,
    /// Set when the supremum is not attained by any proper distribution,
    /// e.g. a free symbol in the rate-per-cost problem.
    pub degenerate: bool,
}

struct Iterate {
    a: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn normalize_floored(w: &mut [f64]) {
    for v in w.iter_mut() {
        if *v < 1e-300 {
            *v = 0.0;
        }
    }
    let total: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= total;
    }
}

/// Plain iterations between Newton refinements on the current support.
const NEWTON_PERIOD: usize = 10;
/// Symbols at or below this mass count as off the support: a Newton step
/// that would shrink them drops them outright.
const NEWTON_NEGLIGIBLE: f64 = 1e-12;

/// Penalized divergences `D_x - s e_x` (nats) and the objective
/// `sum_x a_x (D_x - s e_x)`.
fn scores(p: &TransitionMatrix, a: &[f64], penalty: Option<(&[f64], f64)>) -> (Vec<f64>, f64) {
    let r = p.output_law(a);
    let mut d = p.divergences(&r);
    if let Some((e, s)) = penalty {
        for (dx, ex) in d.iter_mut().zip(e) {
            *dx -= s * ex;
        }
    }
    let objective = a.iter().zip(&d).filter(|(ax, _)| **ax > 0.0).map(|(ax, dx)| ax * dx).sum();
    (d, objective)
}

pub(crate) fn ba_update(a: &[f64], d: &[f64]) -> Vec<f64> {
    let top = (0..a.len())
        .filter(|&x| a[x] > 0.0)
        .map(|x| d[x])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut next: Vec<f64> = a
        .iter()
        .zip(d)
        .map(|(&ax, &dx)| if ax > 0.0 { ax * (dx - top).exp() } else { 0.0 })
        .collect();
    normalize_floored(&mut next);
    next
}

/// Hessian of the mutual information (nats) restricted to `working`:
/// `-sum_y P(y|x) P(y|x') / r_y`.
fn information_hessian(p: &TransitionMatrix, r: &[f64], working: &[usize]) -> DMatrix<f64> {
    let scale: Vec<f64> = r.iter().map(|&ry| if ry > 0.0 { ry.sqrt().recip() } else { 0.0 }).collect();
    let b = DMatrix::from_fn(working.len(), r.len(), |i, y| p.get(working[i], y) * scale[y]);
    -(&b * b.transpose())
}

/// Solves the equality-constrained Newton system `[H 1; 1' 0] [dx; nu] = [-g; 0]`.
fn simplex_newton(hessian: DMatrix<f64>, gradient: &[f64]) -> Option<Vec<f64>> {
    let n = gradient.len();
    let mut kkt = DMatrix::<f64>::zeros(n + 1, n + 1);
    kkt.view_mut((0, 0), (n, n)).copy_from(&hessian);
    let mut rhs = DVector::<f64>::zeros(n + 1);
    for i in 0..n {
        kkt[(i, n)] = 1.0;
        kkt[(n, i)] = 1.0;
        rhs[i] = -gradient[i];
    }
    let step = kkt.lu().solve(&rhs)?;
    let dir: Vec<f64> = step.iter().take(n).copied().collect();
    dir.iter().all(|v| v.is_finite()).then_some(dir)
}

/// Newton direction on the working set, projected onto the simplex's
/// tangent space.
fn newton_direction(p: &TransitionMatrix, a: &[f64], d: &[f64], working: &[usize]) -> Option<Vec<f64>> {
    if working.len() < 2 {
        return None;
    }
    let r = p.output_law(a);
    let g: Vec<f64> = working.iter().map(|&x| d[x]).collect();
    let local = simplex_newton(information_hessian(p, &r, working), &g)?;
    let mut dir = vec![0.0; a.len()];
    for (&x, v) in working.iter().zip(local) {
        dir[x] = v;
    }
    Some(dir)
}

/// Barrier parameter at which the path-following warm start stops; the
/// capacity gap there is at most `n` times this.
const BARRIER_FINAL: f64 = 1e-13;
const BARRIER_INITIAL: f64 = 1e-2;
const BARRIER_SHRINK: f64 = 0.1;
const BARRIER_NEWTON_STEPS: usize = 50;

/// Path-following log-barrier method on the interior of the simplex:
/// maximizes `J(a) + mu sum_x ln a_x` for a decreasing sequence of `mu`.
/// Used to land near the optimum, support included, before the
/// multiplicative iteration certifies it.
fn barrier_warm_start(
    p: &TransitionMatrix,
    mut a: Vec<f64>,
    penalty: Option<(&[f64], f64)>,
    working: &[usize],
    budget: usize,
) -> (Vec<f64>, usize) {
    let mut steps = 0;
    if working.len() < 2 {
        return (a, steps);
    }
    let floor = 1e-3 / working.len() as f64;
    for &x in working {
        a[x] = a[x].max(floor);
    }
    normalize_floored(&mut a);
    let merit = |a: &[f64], mu: f64| -> f64 {
        let (_, objective) = scores(p, a, penalty);
        objective + mu * working.iter().map(|&x| a[x].ln()).sum::<f64>()
    };
    let mut mu = BARRIER_INITIAL;
    while mu >= BARRIER_FINAL {
        for _ in 0..BARRIER_NEWTON_STEPS {
            let (d, _) = scores(p, &a, penalty);
            let r = p.output_law(&a);
            let mut hessian = information_hessian(p, &r, working);
            let mut g = Vec::with_capacity(working.len());
            for (i, &x) in working.iter().enumerate() {
                hessian[(i, i)] -= mu / (a[x] * a[x]);
                g.push(d[x] + mu / a[x]);
            }
            if steps == budget {
                return (a, steps);
            }
            let Some(dir) = simplex_newton(hessian, &g) else {
                return (a, steps);
            };
            steps += 1;
            // Newton decrement: stop centering once the model gain is tiny.
            let gain: f64 = dir.iter().zip(&g).map(|(v, gi)| v * gi).sum();
            if !(gain > 1e-3 * mu) {
                break;
            }
            let reach = working
                .iter()
                .zip(&dir)
                .filter(|(_, v)| **v < 0.0)
                .map(|(&x, v)| -a[x] / v)
                .fold(f64::INFINITY, f64::min);
            let mut t = (0.99 * reach).min(1.0);
            let current = merit(&a, mu);
            let mut moved = false;
            for _ in 0..40 {
                let mut trial = a.clone();
                for (&x, v) in working.iter().zip(&dir) {
                    trial[x] += t * v;
                }
                if working.iter().all(|&x| trial[x] > 0.0) {
                    let total: f64 = trial.iter().sum();
                    trial.iter_mut().for_each(|v| *v /= total);
                    if merit(&trial, mu) >= current {
                        a = trial;
                        moved = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !moved {
                break;
            }
        }
        mu *= BARRIER_SHRINK;
    }
    (a, steps)
}

/// Damped Newton step over the symbols that carry mass or would gain it;
/// returns the new point only if the objective rises.
fn newton_step(
    p: &TransitionMatrix,
    a: &[f64],
    d: &[f64],
    objective: f64,
    penalty: Option<(&[f64], f64)>,
    active: &dyn Fn(usize) -> bool,
) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let working: Vec<usize> = (0..a.len())
        .filter(|&x| active(x) && d[x].is_finite() && (a[x] > NEWTON_NEGLIGIBLE || d[x] > objective))
        .collect();
    let dir = newton_direction(p, a, d, &working)?;
    let reach = a
        .iter()
        .zip(&dir)
        .filter(|(ax, dx)| **dx < 0.0 && **ax > NEWTON_NEGLIGIBLE)
        .map(|(ax, dx)| -ax / dx)
        .fold(f64::INFINITY, f64::min);
    let mut t = reach.min(1.0);
    for _ in 0..30 {
        let mut trial: Vec<f64> = a
            .iter()
            .zip(&dir)
            .map(|(&ax, &dx)| if ax <= NEWTON_NEGLIGIBLE && dx < 0.0 { 0.0 } else { (ax + t * dx).max(0.0) })
            .collect();
        normalize_floored(&mut trial);
        let (td, tobj) = scores(p, &trial, penalty);
        if tobj > objective {
            return Some((trial, td, tobj));
        }
        t *= 0.5;
    }
    None
}

/// Blahut-Arimoto iteration with an optional linear penalty `s * e_x`.
/// Symbols outside `active` are held at zero.
///
/// Nearly collinear rows make the plain multiplicative update crawl, so the
/// iteration starts from a barrier-method estimate and interleaves Newton
/// steps that are kept only if they increase the objective. The stopping
/// rule is the capacity gap either way. Reported iterations count every
/// Newton and multiplicative step.
fn ba_iterate(
    p: &TransitionMatrix,
    mut a: Vec<f64>,
    penalty: Option<(&[f64], f64)>,
    active: Option<&[bool]>,
    opts: &SolverOptions,
) -> Iterate {
    let is_active = |x: usize| active.is_none_or(|m| m[x]);
    for (x, v) in a.iter_mut().enumerate() {
        if !is_active(x) {
            *v = 0.0;
        }
    }
    normalize_floored(&mut a);
    let working: Vec<usize> = (0..a.len()).filter(|&x| a[x] > 0.0).collect();
    let (start, warm_steps) = barrier_warm_start(p, a, penalty, &working, opts.max_iter);
    a = start;
    let tol_nats = opts.tol * LN_2;
    let (mut d, mut objective) = scores(p, &a, penalty);
    for iter in 0..=opts.max_iter - warm_steps {
        let peak = (0..a.len())
            .filter(|&x| is_active(x) && (a[x] > 0.0 || d[x].is_finite()))
            .map(|x| d[x])
            .fold(f64::NEG_INFINITY, f64::max);
        if peak - objective < tol_nats {
            return Iterate {
                a,
                iterations: warm_steps + iter,
                converged: true,
            };
        }
        if warm_steps + iter == opts.max_iter {
            break;
        }
        if iter % NEWTON_PERIOD == NEWTON_PERIOD - 1 {
            if let Some((na, nd, nobj)) = newton_step(p, &a, &d, objective, penalty, &is_active) {
                (a, d, objective) = (na, nd, nobj);
                continue;
            }
        }
        a = ba_update(&a, &d);
        (d, objective) = scores(p, &a, penalty);
    }
    Iterate {
        a,
        iterations: opts.max_iter,
        converged: false,
    }
}

fn check_stochastic(p: &TransitionMatrix) -> Result<()> {
    // Matrices are validated on construction; this re-check guards against
    // hand-built inputs with drifted rows.
    for x in 0..p.rows() {
        let sum: f64 = p.row(x).iter().sum();
        if (sum - 1.0).abs() > crate::channel::STOCHASTIC_TOL {
            return Err(Error::NotStochastic { row: x, sum });
        }
    }
    Ok(())
}

fn finish(p: &TransitionMatrix, it: Iterate) -> Result<CapacityResult> {
    let a = InputDistribution::new(it.a)?;
    let rate = p.mutual_information(a.probs());
    Ok(CapacityResult {
        value: rate,
        a,
        iterations: it.iterations,
        converged: it.converged,
        s: None,
        achieved_e: None,
        achieved_rate: rate,
        degenerate: false,
    })
}

/// Capacity per channel use of `p`, in bits.
pub fn blahut_arimoto(p: &TransitionMatrix, opts: &SolverOptions) -> Result<CapacityResult> {
    opts.validate()?;
    check_stochastic(p)?;
    let start = opts.start(p.rows())?;
    finish(p, ba_iterate(p, start, None, None, opts))
}

fn check_cost(p: &TransitionMatrix, cost: &CostModel) -> Result<()> {
    if cost.e().len() != p.rows() {
        return Err(Error::DimensionMismatch {
            expected: p.rows(),
            actual: cost.e().len(),
        });
    }
    Ok(())
}

/// Capacity at a fixed Lagrange multiplier `s`: maximizes
/// `I(a) - s * E[e_X]` and reports the resulting rate and cost.
pub fn capacity_at_multiplier(
    p: &TransitionMatrix,
    cost: &CostModel,
    s: f64,
    opts: &SolverOptions,
) -> Result<CapacityResult> {
    opts.validate()?;
    check_stochastic(p)?;
    check_cost(p, cost)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("multiplier must be finite and >= 0, got {s}")));
    }
    let start = opts.start(p.rows())?;
    let it = ba_iterate(p, start, Some((cost.e(), s)), None, opts);
    let mut res = finish(p, it)?;
    res.s = Some(s);
    res.achieved_e = Some(res.a.expectation(cost.e()));
    Ok(res)
}

/// Capacity under the average-cost budget `E[e_X] <= budget`.
///
/// The multiplier is the smallest `s >= 0` whose penalized optimum meets
/// the budget, located by doubling from `[0, 1]` then bisecting.
pub fn constrained_blahut_arimoto(
    p: &TransitionMatrix,
    cost: &CostModel,
    budget: f64,
    opts: &SolverOptions,
) -> Result<CapacityResult> {
    opts.validate()?;
    check_stochastic(p)?;
    check_cost(p, cost)?;
    let e = cost.e();
    let min_cost = cost.min_cost();
    if !(budget >= min_cost) {
        return Err(Error::Infeasible { budget, min_cost });
    }
    let start = opts.start(p.rows())?;

    if budget <= min_cost {
        // Only the cheapest symbols are affordable.
        let mask: Vec<bool> = e.iter().map(|&ex| ex <= min_cost).collect();
        let it = ba_iterate(p, start, None, Some(&mask), opts);
        let mut res = finish(p, it)?;
        res.achieved_e = Some(res.a.expectation(e));
        res.s = Some(f64::INFINITY);
        return Ok(res);
    }

    let free = ba_iterate(p, start, None, None, opts);
    let free_cost: f64 = free.a.iter().zip(e).map(|(a, c)| a * c).sum();
    if free_cost <= budget {
        let mut res = finish(p, free)?;
        res.s = Some(0.0);
        res.achieved_e = Some(free_cost);
        return Ok(res);
    }

    let mut total_iter = free.iterations;
    let mut warm = free.a;
    let mut solve = |s: f64, warm: &mut Vec<f64>| {
        let it = ba_iterate(p, warm.clone(), Some((e, s)), None, opts);
        total_iter += it.iterations;
        warm.clone_from(&it.a);
        let spent: f64 = it.a.iter().zip(e).map(|(a, c)| a * c).sum();
        (it, spent)
    };

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut best = loop {
        let (it, spent) = solve(hi, &mut warm);
        if spent <= budget {
            break it;
        }
        lo = hi;
        hi *= 2.0;
        if hi > MULTIPLIER_CEILING {
            return Err(invalid("E", format!("budget {budget} could not be met by any multiplier")));
        }
    };
    for _ in 0..MULTIPLIER_BISECTIONS {
        if hi - lo <= MULTIPLIER_BRACKET {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (it, spent) = solve(mid, &mut warm);
        if spent <= budget {
            hi = mid;
            best = it;
        } else {
            lo = mid;
        }
    }
    let mut res = finish(p, best)?;
    res.iterations = total_iter;
    res.s = Some(hi);
    res.achieved_e = Some(res.a.expectation(e));
    Ok(res)
}

/// Capacity per unit time under a peak rate `pmax` and optional average
/// rate `pbar` (molecules per unit time).
///
/// The alphabet is `0..=round(pmax * T)`, the channel is the binomial DMC at
/// `q1 = F_W(T)`, and the budget on `E[X]` is `pbar * T`. The returned
/// `value` is bits per unit time; `achieved_rate` stays per channel use.
pub fn capacity_per_unit_time(
    params: &MediumParams,
    t: f64,
    pmax: f64,
    pbar: Option<f64>,
    opts: &SolverOptions,
) -> Result<CapacityResult> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("T", format!("slot duration must be finite and > 0, got {t}")));
    }
    if !(pmax > 0.0 && pmax.is_finite()) {
        return Err(invalid("Pmax", format!("must be finite and > 0, got {pmax}")));
    }
    if pmax * t < 1.0 {
        return Err(invalid("Pmax", format!("Pmax * T = {} leaves no nontrivial alphabet", pmax * t)));
    }
    let xmax = (pmax * t).round() as usize;
    let q1 = aig_cdf(params, t)?;
    let p = dmc_matrix(q1, xmax)?;
    let mut res = match pbar {
        None => blahut_arimoto(&p, opts)?,
        Some(rate) => {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(invalid("Pbar", format!("must be finite and >= 0, got {rate}")));
            }
            constrained_blahut_arimoto(&p, &CostModel::molecules(xmax), rate * t, opts)?
        }
    };
    res.value = res.achieved_rate / t;
    Ok(res)
}

/// Log-spaced search window for the slot duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TWindow {
    pub lo: f64,
    pub hi: f64,
    pub points_per_decade: usize,
}

impl TWindow {
    pub fn new(lo: f64, hi: f64, points_per_decade: usize) -> Result<Self> {
        if !(lo > 0.0 && hi.is_finite() && hi > lo) {
            return Err(invalid("T window", format!("need 0 < lo < hi, got [{lo}, {hi}]")));
        }
        if points_per_decade == 0 {
            return Err(invalid("T window", "need at least one point per decade"));
        }
        Ok(Self {
            lo,
            hi,
            points_per_decade,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        let decades = (self.hi / self.lo).log10();
        let n = ((decades * self.points_per_decade as f64).ceil() as usize).max(1) + 1;
        let step = decades / (n - 1) as f64;
        (0..n)
            .map(|i| if i + 1 == n { self.hi } else { self.lo * 10f64.powf(i as f64 * step) })
            .collect()
    }
}

/// Location of the rate-maximizing slot duration.
#[derive(Debug, Clone, PartialEq)]
pub struct TOptResult {
    pub t_opt: f64,
    /// Capacity per unit time at `t_opt`.
    pub value: f64,
    /// The maximizer sits on an edge of the search window.
    pub boundary: bool,
    /// Grid samples `(T, C/T)` in increasing `T`.
    pub samples: Vec<(f64, f64)>,
}

/// Grid search for the slot duration maximizing capacity per unit time,
/// followed by a golden-section pass inside the best grid cell.
pub fn find_t_opt(
    params: &MediumParams,
    pmax: f64,
    pbar: Option<f64>,
    window: &TWindow,
    opts: &SolverOptions,
) -> Result<TOptResult> {
    if !(pmax > 0.0 && pmax.is_finite()) {
        return Err(invalid("Pmax", format!("must be finite and > 0, got {pmax}")));
    }
    let floor = 1.0 / pmax;
    if window.hi < floor {
        return Err(invalid("T window", format!("every T lies below 1 / Pmax = {floor}")));
    }
    let lo = window.lo.max(floor);
    let window = if lo >= window.hi {
        TWindow { lo: window.hi, ..*window }
    } else {
        TWindow::new(lo, window.hi, window.points_per_decade)?
    };
    let grid = if window.lo == window.hi { vec![window.lo] } else { window.grid() };

    let rate = |t: f64| capacity_per_unit_time(params, t, pmax, pbar, opts).map(|r| r.value);
    let values = grid.par_iter().map(|&t| rate(t)).collect::<Result<Vec<f64>>>()?;
    let samples: Vec<(f64, f64)> = grid.iter().copied().zip(values.iter().copied()).collect();

    let (best, _) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let boundary = best == 0 || best + 1 == grid.len();
    let mut t_opt = grid[best];
    let mut value = values[best];

    if grid.len() >= 3 {
        let left = grid[best.saturating_sub(1)].ln();
        let right = grid[(best + 1).min(grid.len() - 1)].ln();
        let (t_ref, v_ref) = golden_section_max(|u| rate(u.exp()), left, right, 40)?;
        if v_ref > value {
            t_opt = t_ref.exp();
            value = v_ref;
        }
    }
    Ok(TOptResult {
        t_opt,
        value,
        boundary,
        samples,
    })
}

fn golden_section_max<F>(f: F, mut lo: f64, mut hi: f64, steps: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..steps {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

/// Capacity per unit cost `sup_a I(a) / E[e_X]` by the Jimbo-Kunisawa
/// multiplicative update `a_x <- a_x exp(e_0 D_x / e_x)`.
///
/// `e_0` is the cost of symbol 0. When some symbol is free the ratio has no
/// proper maximizer: the update sends all mass to the free symbols in one
/// step (the `e_x -> 0` limit of the exponent), and the result is flagged
/// `degenerate` with value 0.
pub fn jimbo_kunisawa(p: &TransitionMatrix, cost: &CostModel, opts: &SolverOptions) -> Result<CapacityResult> {
    opts.validate()?;
    check_stochastic(p)?;
    check_cost(p, cost)?;
    let e = cost.e();
    let reference = if e[0] > 0.0 {
        e[0]
    } else {
        e.iter().copied().filter(|&c| c > 0.0).fold(f64::INFINITY, f64::min)
    };
    if !reference.is_finite() {
        return Err(invalid("e", "every symbol is free; the rate per cost is undefined"));
    }
    let has_free = e.contains(&0.0);

    let ratio = |a: &[f64]| -> (f64, f64, f64) {
        let rate = p.mutual_information(a);
        let spent: f64 = a.iter().zip(e).map(|(x, c)| x * c).sum();
        let value = if spent > 0.0 {
            rate / spent
        } else if rate > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        (value, rate, spent)
    };

    let mut a = opts.start(p.rows())?;
    let mut current = ratio(&a).0;
    let mut converged = false;
    let mut iterations = opts.max_iter;
    for iter in 0..opts.max_iter {
        let r = p.output_law(&a);
        let d = p.divergences(&r);
        let exponent: Vec<f64> = (0..a.len())
            .map(|x| {
                if d[x] <= 0.0 {
                    0.0
                } else if e[x] == 0.0 {
                    f64::INFINITY
                } else {
                    reference * d[x] / e[x]
                }
            })
            .collect();
        let top = (0..a.len())
            .filter(|&x| a[x] > 0.0)
            .map(|x| exponent[x])
            .fold(f64::NEG_INFINITY, f64::max);
        if top.is_infinite() {
            for x in 0..a.len() {
                if exponent[x] != f64::INFINITY {
                    a[x] = 0.0;
                }
            }
        } else {
            for x in 0..a.len() {
                if a[x] > 0.0 {
                    a[x] *= (exponent[x] - top).exp();
                }
            }
        }
        normalize_floored(&mut a);
        let next = ratio(&a).0;
        let delta = if next == current { 0.0 } else { (next - current).abs() };
        current = next;
        if delta < opts.tol {
            converged = true;
            iterations = iter + 1;
            break;
        }
    }
    let (value, rate, spent) = ratio(&a);
    let degenerate = has_free && spent == 0.0;
    Ok(CapacityResult {
        value: if degenerate { 0.0 } else { value },
        a: InputDistribution::new(a)?,
        iterations,
        converged,
        s: None,
        achieved_e: Some(spent),
        achieved_rate: rate,
        degenerate,
    })
}
