//! First-passage law of a drifting Brownian molecule and the per-slot
//! arrival probabilities derived from it.
//!
//! All quantities are treated as dimensionless; any consistent choice of
//! length and time units works.

use crate::error::{invalid, Result};
use crate::numeric::{log_norm_cdf, norm_cdf};

/// Physical parameters of the 1-D drift-diffusion link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    l: f64,
    v: f64,
    sigma2: f64,
}

impl MediumParams {
    /// `l` is the transmitter-receiver distance, `v` the drift velocity and
    /// `sigma2` the variance rate of the Wiener process (half the diffusion
    /// constant).
    pub fn new(l: f64, v: f64, sigma2: f64) -> Result<Self> {
        for (name, value) in [("l", l), ("v", v), ("sigma2", sigma2)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(invalid(name, format!("must be finite and > 0, got {value}")));
            }
        }
        Ok(Self { l, v, sigma2 })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Mean first-passage time `l / v`.
    pub fn mu(&self) -> f64 {
        self.l / self.v
    }

    /// Inverse-Gaussian shape `l^2 / sigma2`.
    pub fn lambda(&self) -> f64 {
        self.l * self.l / self.sigma2
    }
}

/// Slot duration and peak number of molecules released per slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotConfig {
    t: f64,
    xmax: usize,
}

impl SlotConfig {
    pub fn new(t: f64, xmax: usize) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("T", format!("slot duration must be finite and > 0, got {t}")));
        }
        if xmax < 1 {
            return Err(invalid("xmax", "at least one molecule per slot is required"));
        }
        Ok(Self { t, xmax })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn xmax(&self) -> usize {
        self.xmax
    }
}

/// Per-slot arrival probabilities of a single molecule.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalProbs {
    q: Vec<f64>,
    q_u: f64,
}

impl ArrivalProbs {
    /// Builds the table from direct probabilities, bypassing the propagation
    /// model. `q[0]` is the same-slot probability.
    pub fn new(q: Vec<f64>, q_u: f64) -> Result<Self> {
        if q.is_empty() {
            return Err(invalid("q", "at least one slot probability is required"));
        }
        if q.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid("q", "every slot probability must lie in [0, 1]"));
        }
        if q.iter().sum::<f64>() > 1.0 + 1e-12 {
            return Err(invalid("q", "slot probabilities sum above one"));
        }
        if !(0.0..=1.0).contains(&q_u) {
            return Err(invalid("qU", format!("must lie in [0, 1], got {q_u}")));
        }
        Ok(Self { q, q_u })
    }

    /// Probability of arriving in the `k`-th slot after release (1-based).
    pub fn get(&self, k: usize) -> f64 {
        assert!(k >= 1, "slot index is 1-based");
        self.q.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn q1(&self) -> f64 {
        self.q[0]
    }

    pub fn q2(&self) -> f64 {
        self.get(2)
    }

    /// Two-slot cumulative arrival probability `F_W(2T)`.
    pub fn q_u(&self) -> f64 {
        self.q_u
    }

    pub fn depth(&self) -> usize {
        self.q.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }
}

/// CDF of the first-passage time, `F_W(w)`.
///
/// The second term carries a factor `exp(2 lambda / mu)` that overflows
/// long before the product does, so it is combined with `log Phi` first.
pub fn aig_cdf(params: &MediumParams, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(invalid("w", format!("first-passage time must be > 0, got {w}")));
    }
    if w.is_infinite() {
        return Ok(1.0);
    }
    let mu = params.mu();
    let lambda = params.lambda();
    let scale = (lambda / w).sqrt();
    let leading = norm_cdf(scale * (w / mu - 1.0));
    let reflected = (2.0 * lambda / mu + log_norm_cdf(-scale * (w / mu + 1.0))).exp();
    Ok((leading + reflected).clamp(0.0, 1.0))
}

/// `q_k = F_W(kT) - F_W((k-1)T)` for `k = 1..=depth`, plus `F_W(2T)`.
pub fn slot_arrival_probs(params: &MediumParams, t: f64, depth: usize) -> Result<ArrivalProbs> {
    if depth < 1 {
        return Err(invalid("depth", "need at least one slot"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("T", format!("slot duration must be finite and > 0, got {t}")));
    }
    let mut q = Vec::with_capacity(depth);
    let mut prev = 0.0;
    for k in 1..=depth {
        let cur = aig_cdf(params, k as f64 * t)?;
        q.push((cur - prev).max(0.0));
        prev = cur;
    }
    let q_u = aig_cdf(params, 2.0 * t)?;
    Ok(ArrivalProbs { q, q_u })
}
