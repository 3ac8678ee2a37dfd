//! Brute-force reference implementations shared by the integration tests.
//! Everything here is written from first principles, without the library's
//! own helpers, so agreement is meaningful.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Calls `f(outcomes, prob)` for every joint outcome of independent
/// molecules, where molecule `i` takes outcome `j` with probability
/// `laws[i][j]`. Impossible outcomes are skipped.
pub fn enumerate_molecules(laws: &[Vec<f64>], mut f: impl FnMut(&[usize], f64)) {
    fn rec(laws: &[Vec<f64>], pos: usize, acc: &mut Vec<usize>, p: f64, f: &mut dyn FnMut(&[usize], f64)) {
        if pos == laws.len() {
            f(acc, p);
            return;
        }
        for (j, &pj) in laws[pos].iter().enumerate() {
            if pj == 0.0 {
                continue;
            }
            acc.push(j);
            rec(laws, pos + 1, acc, p * pj, f);
            acc.pop();
        }
    }
    rec(laws, 0, &mut Vec::new(), 1.0, &mut f);
}

/// Law of the number of arrivals among `n` molecules, each arriving with
/// probability `q`, by enumerating all `2^n` subsets.
pub fn thinning(n: usize, q: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    enumerate_molecules(&vec![vec![1.0 - q, q]; n], |o, p| {
        out[o.iter().filter(|&&j| j == 1).count()] += p;
    });
    out
}

/// `P[x][y]` of the memoryless channel.
pub fn dmc(q1: f64, xmax: usize) -> Vec<Vec<f64>> {
    (0..=xmax)
        .map(|x| {
            let mut row = thinning(x, q1);
            row.resize(xmax + 1, 0.0);
            row
        })
        .collect()
}

/// Law of interfering molecules in a slot from the releases `2..=k` slots
/// earlier; `q[j - 1]` is the probability of landing `j - 1` slots late.
pub fn interference(a: &[f64], q: &[f64], k: usize) -> Vec<f64> {
    let xmax = a.len() - 1;
    let mut out = vec![0.0; (k - 1) * xmax + 1];
    let past = k - 1;
    let mut idx = vec![0usize; past];
    loop {
        let weight: f64 = idx.iter().map(|&x| a[x]).product();
        if weight > 0.0 {
            let laws: Vec<Vec<f64>> = idx
                .iter()
                .enumerate()
                .flat_map(|(i, &x)| std::iter::repeat_n(vec![1.0 - q[i + 1], q[i + 1]], x))
                .collect();
            enumerate_molecules(&laws, |o, p| {
                out[o.iter().sum::<usize>()] += weight * p;
            });
        }
        let mut d = 0;
        while d < past {
            idx[d] += 1;
            if idx[d] <= xmax {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == past {
            break;
        }
    }
    out
}

/// Same-slot channel: `x` fresh molecules arriving w.p. `q1` plus the
/// `q2`-leak of a previous symbol drawn from `a`.
pub fn lb1(a: &[f64], q1: f64, q2: f64) -> Vec<Vec<f64>> {
    let xmax = a.len() - 1;
    (0..=xmax)
        .map(|x| {
            let mut row = vec![0.0; 2 * xmax + 1];
            for (u, &au) in a.iter().enumerate() {
                let mut laws = vec![vec![1.0 - q1, q1]; x];
                laws.extend(std::iter::repeat_n(vec![1.0 - q2, q2], u));
                enumerate_molecules(&laws, |o, p| row[o.iter().sum::<usize>()] += au * p);
            }
            row
        })
        .collect()
}

/// Two-slot channel. Row `x` is the symbol of slot `m - 1`; the column is
/// `y_{m-1} * (2 xmax + 1) + y_m`.
pub fn lb2(a: &[f64], q1: f64, q2: f64) -> Vec<Vec<f64>> {
    let xmax = a.len() - 1;
    let side = 2 * xmax + 1;
    (0..=xmax)
        .map(|x| {
            let mut row = vec![0.0; side * side];
            for (u, &au) in a.iter().enumerate() {
                for (w, &aw) in a.iter().enumerate() {
                    // outcome 0: lost, 1: slot m-1, 2: slot m
                    let mut laws = vec![vec![1.0 - q1 - q2, q1, q2]; x];
                    laws.extend(std::iter::repeat_n(vec![1.0 - q2, q2, 0.0], u));
                    laws.extend(std::iter::repeat_n(vec![1.0 - q1, 0.0, q1], w));
                    enumerate_molecules(&laws, |o, p| {
                        let early = o.iter().filter(|&&j| j == 1).count();
                        let late = o.iter().filter(|&&j| j == 2).count();
                        row[early * side + late] += au * aw * p;
                    });
                }
            }
            row
        })
        .collect()
}

/// Mutual information in bits, straight from the definition.
pub fn mutual_information(a: &[f64], p: &[Vec<f64>]) -> f64 {
    let cols = p[0].len();
    let r: Vec<f64> = (0..cols).map(|y| a.iter().zip(p).map(|(ax, row)| ax * row[y]).sum()).collect();
    let mut i = 0.0;
    for (ax, row) in a.iter().zip(p) {
        for (y, &pxy) in row.iter().enumerate() {
            if *ax > 0.0 && pxy > 0.0 {
                i += ax * pxy * (pxy / r[y]).log2();
            }
        }
    }
    i
}

/// Visits every point of the simplex over `n` symbols with step `1/steps`.
pub fn simplex_grid(n: usize, steps: usize, mut f: impl FnMut(&[f64])) {
    fn rec(n: usize, left: usize, steps: usize, acc: &mut Vec<f64>, f: &mut dyn FnMut(&[f64])) {
        if acc.len() + 1 == n {
            acc.push(left as f64 / steps as f64);
            f(acc);
            acc.pop();
            return;
        }
        for k in 0..=left {
            acc.push(k as f64 / steps as f64);
            rec(n, left - k, steps, acc, f);
            acc.pop();
        }
    }
    rec(n, steps, steps, &mut Vec::new(), &mut f);
}

/// Largest mutual information over the simplex grid.
pub fn grid_capacity(p: &[Vec<f64>], steps: usize) -> f64 {
    let mut best = 0.0f64;
    simplex_grid(p.len(), steps, |a| best = best.max(mutual_information(a, p)));
    best
}

/// For each budget, the largest mutual information over grid points with
/// `sum a_x e_x <= budget`, in one pass over the grid.
pub fn grid_constrained_capacity(p: &[Vec<f64>], steps: usize, e: &[f64], budgets: &[f64]) -> Vec<f64> {
    let mut best = vec![0.0f64; budgets.len()];
    simplex_grid(p.len(), steps, |a| {
        let spent: f64 = a.iter().zip(e).map(|(x, c)| x * c).sum();
        if budgets.iter().all(|&b| spent > b + 1e-12) {
            return;
        }
        let i = mutual_information(a, p);
        for (slot, &b) in best.iter_mut().zip(budgets) {
            if spent <= b + 1e-12 {
                *slot = slot.max(i);
            }
        }
    });
    best
}

/// Closed-form capacity of the Z-channel whose `1` is erased to `0` with
/// probability `eps`.
pub fn z_channel_capacity(eps: f64) -> f64 {
    (1.0 + (1.0 - eps) * eps.powf(eps / (1.0 - eps))).log2()
}

/// First-passage density of drifted Brownian motion.
pub fn first_passage_density(l: f64, v: f64, sigma2: f64, w: f64) -> f64 {
    l / (2.0 * std::f64::consts::PI * sigma2 * w.powi(3)).sqrt() * (-(l - v * w).powi(2) / (2.0 * sigma2 * w)).exp()
}

/// `P(W <= w)` by composite Simpson quadrature of the density in `ln w`.
pub fn first_passage_cdf_quadrature(l: f64, v: f64, sigma2: f64, w: f64) -> f64 {
    let lo = (1e-12f64).ln();
    let hi = w.ln();
    let n = 200_000;
    let h = (hi - lo) / n as f64;
    let g = |s: f64| {
        let t = s.exp();
        first_passage_density(l, v, sigma2, t) * t
    };
    let mut acc = g(lo) + g(hi);
    for i in 1..n {
        acc += g(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// A random probability vector of length `n` with every entry positive.
pub fn random_law(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Flattens rows, for comparison with a row-major matrix.
pub fn flat(m: &[Vec<f64>]) -> Vec<f64> {
    m.iter().flatten().copied().collect()
}
