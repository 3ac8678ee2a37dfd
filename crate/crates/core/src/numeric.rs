//! Special functions and small probability kernels shared by the channel
//! builders and solvers.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Beyond this argument `erfc` is evaluated through the scaled form so that
/// its logarithm stays finite.
const ERFC_DIRECT_LIMIT: f64 = 25.0;

/// Scaled complementary error function `exp(x^2) erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < ERFC_DIRECT_LIMIT {
        return (x * x).exp() * libm::erfc(x);
    }
    // Continued fraction, evaluated from the tail; converges to full
    // precision within a few dozen terms at this range.
    let mut frac = 0.0;
    for k in (1..=60).rev() {
        frac = (k as f64 / 2.0) / (x + frac);
    }
    1.0 / (SQRT_PI * (x + frac))
}

/// Natural logarithm of `erfc(x)`, finite for every finite `x`.
pub fn log_erfc(x: f64) -> f64 {
    if x < ERFC_DIRECT_LIMIT {
        libm::erfc(x).ln()
    } else {
        -x * x + erfcx(x).ln()
    }
}

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Natural logarithm of the standard normal CDF.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z > 0.0 {
        // Phi(z) = 1 - Phi(-z); keep the small complement exact.
        (-0.5 * libm::erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else {
        -LN_2 + log_erfc(-z * FRAC_1_SQRT_2)
    }
}

/// `ln C(n, k)` through log-gamma; valid for any alphabet size.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Binomial probability mass `C(n, k) p^k (1 - p)^(n - k)`.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let log_mass = ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p();
    log_mass.exp()
}

/// Full binomial law over `0..=n`.
pub fn binomial_row(n: usize, p: f64) -> Vec<f64> {
    (0..=n as u64).map(|k| binomial_pmf(n as u64, k, p)).collect()
}

/// Probability that a group of `n` molecules splits into `first` arrivals
/// with probability `p_first` each, `second` arrivals with `p_second` each,
/// and the rest lost.
pub fn trinomial_pmf(n: u64, first: u64, second: u64, p_first: f64, p_second: f64) -> f64 {
    if first + second > n {
        return 0.0;
    }
    let lost = n - first - second;
    let p_lost = (1.0 - p_first - p_second).max(0.0);
    let mut log_mass = ln_binomial(n, first) + ln_binomial(n - first, second);
    for (count, p) in [(first, p_first), (second, p_second), (lost, p_lost)] {
        if count > 0 {
            if p <= 0.0 {
                return 0.0;
            }
            log_mass += count as f64 * p.ln();
        }
    }
    log_mass.exp()
}

/// Linear convolution of two mass functions.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `-p log2 p` with the `0 log 0 = 0` convention.
#[inline]
pub fn neg_xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter().map(|&x| neg_xlog2x(x)).sum()
}
