//! Exact conditional output laws of the molecular channel.
//!
//! Four matrix shapes are produced here: the memoryless binomial channel,
//! the same-slot channel with one slot of interference (`Lb1`), the
//! two-observation channel (`Lb2`), and the transmit-and-wait channel used
//! for the upper bound (`Ub`).

use std::fmt;

use crate::aig::ArrivalProbs;
use crate::error::{invalid, Error, Result};
use crate::numeric::{binomial_row, convolve, entropy_bits, trinomial_pmf};

/// Row sums may drift from one by at most this much.
pub const STOCHASTIC_TOL: f64 = 1e-10;

/// Hard ceiling on the interference recursion depth. The support of the
/// interference law grows linearly with depth but any joint analysis built
/// on it grows exponentially.
pub const MAX_INTERFERENCE_DEPTH: usize = 64;

/// Probability vector over `0..=xmax` molecules.
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution(Vec<f64>);

impl InputDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("a", "input distribution must have at least one symbol"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
            return Err(invalid("a", format!("negative or non-finite probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("a", format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self(probs))
    }

    /// Normalizes a non-negative weight vector; weights below `1e-300` are
    /// dropped to zero first.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let cleaned: Vec<f64> = weights
            .iter()
            .map(|&w| if w < 1e-300 { 0.0 } else { w })
            .collect();
        let total: f64 = cleaned.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(invalid("a", "weights must have a positive finite sum"));
        }
        Ok(Self(cleaned.into_iter().map(|w| w / total).collect()))
    }

    pub fn uniform(xmax: usize) -> Self {
        Self(vec![1.0 / (xmax + 1) as f64; xmax + 1])
    }

    pub fn point_mass(xmax: usize, at: usize) -> Self {
        assert!(at <= xmax);
        let mut p = vec![0.0; xmax + 1];
        p[at] = 1.0;
        Self(p)
    }

    pub fn xmax(&self) -> usize {
        self.0.len() - 1
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn entropy_bits(&self) -> f64 {
        entropy_bits(&self.0)
    }

    /// Expected value of `cost[x]` under this distribution.
    pub fn expectation(&self, cost: &[f64]) -> f64 {
        self.0.iter().zip(cost).map(|(a, e)| a * e).sum()
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for InputDistribution {
    type Output = f64;

    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

/// Which channel model a matrix was built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MatrixKind {
    Dmc,
    Lb1,
    Lb2,
    Ub,
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MatrixKind::Dmc => "dmc",
            MatrixKind::Lb1 => "lb1",
            MatrixKind::Lb2 => "lb2",
            MatrixKind::Ub => "ub",
        };
        f.write_str(name)
    }
}

/// Row-stochastic `p(y | x)` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
    kind: MatrixKind,
}

impl TransitionMatrix {
    /// Validates shape, entry range, and row sums.
    pub fn new(rows: usize, cols: usize, p: Vec<f64>, kind: MatrixKind) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("P", "matrix must be non-empty"));
        }
        if p.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: p.len(),
            });
        }
        for (row, chunk) in p.chunks(cols).enumerate() {
            for (col, &value) in chunk.iter().enumerate() {
                if !(0.0..=1.0 + STOCHASTIC_TOL).contains(&value) {
                    return Err(Error::EntryOutOfRange { row, col, value });
                }
            }
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::NotStochastic { row, sum });
            }
        }
        Ok(Self { rows, cols, p, kind })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.cols + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.p[x * self.cols..(x + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// Output law `r_y = sum_x a_x P[x][y]`.
    pub fn output_law(&self, a: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.cols];
        for (x, &ax) in a.iter().enumerate() {
            if ax == 0.0 {
                continue;
            }
            for (ry, &pxy) in r.iter_mut().zip(self.row(x)) {
                *ry += ax * pxy;
            }
        }
        r
    }

    /// Per-input divergences `D(P_x || r)` in nats against the output law `r`.
    pub fn divergences(&self, r: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|x| {
                self.row(x)
                    .iter()
                    .zip(r)
                    .filter(|(&pxy, _)| pxy > 0.0)
                    .map(|(&pxy, &ry)| pxy * (pxy / ry).ln())
                    .sum()
            })
            .collect()
    }

    /// `I(X; Y)` in bits for input law `a`.
    pub fn mutual_information(&self, a: &[f64]) -> f64 {
        let r = self.output_law(a);
        let h_y = entropy_bits(&r);
        let h_y_given_x: f64 = a
            .iter()
            .enumerate()
            .filter(|(_, &ax)| ax > 0.0)
            .map(|(x, &ax)| ax * entropy_bits(self.row(x)))
            .sum();
        (h_y - h_y_given_x).max(0.0)
    }

    /// Writes the matrix as CSV: a header of output indices, then one row
    /// per input symbol.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string()];
        header.extend((0..self.cols).map(|y| y.to_string()));
        w.write_record(&header)?;
        for x in 0..self.rows {
            let mut record = vec![x.to_string()];
            record.extend(self.row(x).iter().map(|&v| crate::report::fmt_real(v)));
            w.write_record(&record)?;
        }
        w.flush()
    }
}

/// Law of the number of interfering molecules arriving in slot `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferencePmf {
    pub k: usize,
    pub p: Vec<f64>,
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(name, format!("must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn check_pair(q1: f64, q2: f64) -> Result<()> {
    check_probability("q1", q1)?;
    check_probability("q2", q2)?;
    if q1 + q2 > 1.0 + 1e-12 {
        return Err(invalid("q2", format!("q1 + q2 = {} exceeds one", q1 + q2)));
    }
    Ok(())
}

fn check_alphabet(a: &InputDistribution, xmax: usize) -> Result<()> {
    if a.len() != xmax + 1 {
        return Err(Error::DimensionMismatch {
            expected: xmax + 1,
            actual: a.len(),
        });
    }
    Ok(())
}

fn binomial_matrix(q: f64, xmax: usize, kind: MatrixKind) -> Result<TransitionMatrix> {
    let n = xmax + 1;
    let mut p = vec![0.0; n * n];
    for x in 0..n {
        p[x * n..x * n + x + 1].copy_from_slice(&binomial_row(x, q));
    }
    TransitionMatrix::new(n, n, p, kind)
}

/// Memoryless binomial channel: `p(y | x) = C(x, y) q1^y (1 - q1)^(x - y)`.
pub fn dmc_matrix(q1: f64, xmax: usize) -> Result<TransitionMatrix> {
    check_probability("q1", q1)?;
    binomial_matrix(q1, xmax, MatrixKind::Dmc)
}

/// Interference-free channel of the transmit-and-wait scheme, with the
/// two-slot arrival probability `qU`.
pub fn ub_matrix(q_u: f64, xmax: usize) -> Result<TransitionMatrix> {
    check_probability("qU", q_u)?;
    binomial_matrix(q_u, xmax, MatrixKind::Ub)
}

/// Law of the molecules from one past slot landing `k - 1` slots later:
/// the `a`-mixture of `Binomial(x, q)`.
pub fn binomial_mixture(a: &InputDistribution, q: f64) -> Vec<f64> {
    mixture(a.probs(), q)
}

fn mixture(weights: &[f64], q: f64) -> Vec<f64> {
    let mut out = vec![0.0; weights.len()];
    for (x, &ax) in weights.iter().enumerate() {
        if ax == 0.0 {
            continue;
        }
        for (n, pn) in binomial_row(x, q).into_iter().enumerate() {
            out[n] += ax * pn;
        }
    }
    out
}

/// `P_k`, the law of interfering molecules from the previous `k - 1` slots,
/// built by the convolution recursion starting from `P_1 = delta_0`.
pub fn interference_pmf(a: &InputDistribution, q: &ArrivalProbs, k: usize) -> Result<InterferencePmf> {
    if k < 1 {
        return Err(invalid("k", "slot index is 1-based"));
    }
    if k > MAX_INTERFERENCE_DEPTH {
        return Err(Error::DepthExceeded {
            requested: k,
            max: MAX_INTERFERENCE_DEPTH,
        });
    }
    if k > q.depth() {
        return Err(Error::DepthExceeded {
            requested: k,
            max: q.depth(),
        });
    }
    let mut p = vec![1.0];
    for j in 2..=k {
        p = convolve(&p, &binomial_mixture(a, q.get(j)));
    }
    Ok(InterferencePmf { k, p })
}

/// Same-slot channel under one slot of interference: the current release
/// thins with `q1`, the previous release (drawn from `a`) leaks with `q2`.
pub fn lb1_matrix(a: &InputDistribution, q1: f64, q2: f64, xmax: usize) -> Result<TransitionMatrix> {
    check_pair(q1, q2)?;
    check_alphabet(a, xmax)?;
    let p = lb1_entries(a.probs(), q1, q2, xmax);
    TransitionMatrix::new(xmax + 1, 2 * xmax + 1, p, MatrixKind::Lb1)
}

/// Joint law of the two observations `(y_{m-1}, y_m)` given `x_{m-1}`.
///
/// Each of the `x_{m-1}` molecules lands in slot `m-1` (prob. `q1`), in slot
/// `m` (prob. `q2`), or is lost. Slot `m-1` additionally collects the
/// `q2`-leak of `x_{m-2}`; slot `m` collects the `q1`-arrivals of `x_m`.
/// Columns are indexed `y_{m-1} * (2 xmax + 1) + y_m`.
pub fn lb2_matrix(a: &InputDistribution, q1: f64, q2: f64, xmax: usize) -> Result<TransitionMatrix> {
    check_pair(q1, q2)?;
    check_alphabet(a, xmax)?;
    let p = lb2_entries(a.probs(), a.probs(), q1, q2, xmax);
    TransitionMatrix::new(xmax + 1, (2 * xmax + 1).pow(2), p, MatrixKind::Lb2)
}

/// Entries of the two-slot law with the earlier symbol drawn from `past`
/// and the later one from `next`. Bilinear in the two laws.
pub(crate) fn lb2_entries(past: &[f64], next: &[f64], q1: f64, q2: f64, xmax: usize) -> Vec<f64> {
    let side = 2 * xmax + 1;
    let leak_in = mixture(past, q2);
    let fresh = mixture(next, q1);
    let cols = side * side;
    let mut p = vec![0.0; (xmax + 1) * cols];
    for x in 0..=xmax {
        let row = &mut p[x * cols..(x + 1) * cols];
        for now in 0..=x {
            for later in 0..=(x - now) {
                let w = trinomial_pmf(x as u64, now as u64, later as u64, q1, q2);
                if w == 0.0 {
                    continue;
                }
                for (u, &pu) in leak_in.iter().enumerate() {
                    if pu == 0.0 {
                        continue;
                    }
                    let base = (now + u) * side + later;
                    for (v, &pv) in fresh.iter().enumerate() {
                        row[base + v] += w * pu * pv;
                    }
                }
            }
        }
    }
    p
}

/// Entries of the same-slot law with the interfering symbol drawn from
/// `past`. Linear in `past`.
pub(crate) fn lb1_entries(past: &[f64], q1: f64, q2: f64, xmax: usize) -> Vec<f64> {
    let interference = mixture(past, q2);
    let cols = 2 * xmax + 1;
    let mut p = vec![0.0; (xmax + 1) * cols];
    for x in 0..=xmax {
        let row = convolve(&binomial_row(x, q1), &interference);
        p[x * cols..x * cols + row.len()].copy_from_slice(&row);
    }
    p
}
