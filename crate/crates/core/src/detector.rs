//! Symbol-by-symbol MAP detection from a single slot's molecule count.

use std::fmt;

use crate::aig::{aig_cdf, slot_arrival_probs, MediumParams};
use crate::channel::{dmc_matrix, lb1_matrix, InputDistribution, TransitionMatrix};
use crate::error::{invalid, Error, Result};
use crate::report::{fmt_real, CsvTable};

/// Log-scores closer than this are treated as tied.
const TIE_TOL: f64 = 1e-12;

/// Channel law the detector is designed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorModel {
    /// No interference.
    Dmc,
    /// One slot of interference, drawn from the same input law.
    Stm,
}

impl DetectorModel {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dmc" => Some(Self::Dmc),
            "stm" => Some(Self::Stm),
            _ => None,
        }
    }
}

impl fmt::Display for DetectorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dmc => "dmc",
            Self::Stm => "stm",
        })
    }
}

/// Likelihoods `p(y | x)` under `model`.
pub fn likelihoods(
    model: DetectorModel,
    a: &InputDistribution,
    q1: f64,
    q2: f64,
    xmax: usize,
) -> Result<TransitionMatrix> {
    if a.len() != xmax + 1 {
        return Err(Error::DimensionMismatch {
            expected: xmax + 1,
            actual: a.len(),
        });
    }
    match model {
        DetectorModel::Dmc => dmc_matrix(q1, xmax),
        DetectorModel::Stm => lb1_matrix(a, q1, q2, xmax),
    }
}

/// Decision `x_hat(y)` for every count `y` the model can produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorTable {
    model: DetectorModel,
    decision: Vec<usize>,
    xmax: usize,
}

impl DetectorTable {
    pub fn model(&self) -> DetectorModel {
        self.model
    }

    pub fn xmax(&self) -> usize {
        self.xmax
    }

    pub fn decisions(&self) -> &[usize] {
        &self.decision
    }

    /// Decision for count `y`; counts past the table use its last entry.
    pub fn decide(&self, y: usize) -> usize {
        self.decision[y.min(self.decision.len() - 1)]
    }

    /// Decision regions `{y : x_hat(y) = x}` for each `x`.
    pub fn regions(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.xmax + 1];
        for (y, &x) in self.decision.iter().enumerate() {
            out[x].push(y);
        }
        out
    }

    /// Table of `y, x_hat, p_y, p_correct`, where `p_y` is the output mass
    /// and `p_correct` the joint mass of `y` with a correct decision.
    pub fn to_csv_table(&self, p: &TransitionMatrix, a: &InputDistribution) -> CsvTable {
        let mut table = CsvTable::new(["y", "x_hat", "p_y", "p_correct"]);
        let r = p.output_law(a.probs());
        for (y, &x) in self.decision.iter().enumerate() {
            let correct = a[x] * p.get(x, y);
            table.push_row(vec![y.to_string(), x.to_string(), fmt_real(r[y]), fmt_real(correct)]);
        }
        table
    }
}

/// MAP rule `x_hat(y) = argmax_x a_x p(y | x)`, ties to the smallest `x`.
/// Counts no input can produce take the decision of the nearest possible
/// count below them, or 0.
pub fn map_rule(
    a: &InputDistribution,
    q1: f64,
    q2: f64,
    xmax: usize,
    model: DetectorModel,
) -> Result<DetectorTable> {
    let p = likelihoods(model, a, q1, q2, xmax)?;
    Ok(map_from_likelihoods(&p, a, model))
}

fn map_from_likelihoods(p: &TransitionMatrix, a: &InputDistribution, model: DetectorModel) -> DetectorTable {
    let mut decision = Vec::with_capacity(p.cols());
    let mut last = 0;
    for y in 0..p.cols() {
        let mut best: Option<(usize, f64)> = None;
        for x in 0..p.rows() {
            let score = a[x].ln() + p.get(x, y).ln();
            if score == f64::NEG_INFINITY {
                continue;
            }
            if best.is_none_or(|(_, s)| score > s + TIE_TOL) {
                best = Some((x, score));
            }
        }
        if let Some((x, _)) = best {
            last = x;
        }
        decision.push(last);
    }
    DetectorTable {
        model,
        decision,
        xmax: p.rows() - 1,
    }
}

/// `P_e = sum_x a_x P(x_hat(Y) != x | x)` under the table's own model.
pub fn error_probability(table: &DetectorTable, a: &InputDistribution, q1: f64, q2: f64, xmax: usize) -> Result<f64> {
    if table.xmax != xmax {
        return Err(Error::DimensionMismatch {
            expected: table.xmax + 1,
            actual: xmax + 1,
        });
    }
    let p = likelihoods(table.model, a, q1, q2, xmax)?;
    Ok(error_from_likelihoods(table, &p, a))
}

fn error_from_likelihoods(table: &DetectorTable, p: &TransitionMatrix, a: &InputDistribution) -> f64 {
    let mut pe = 0.0;
    for x in 0..p.rows() {
        if a[x] == 0.0 {
            continue;
        }
        let miss: f64 = (0..p.cols()).filter(|&y| table.decide(y) != x).map(|y| p.get(x, y)).sum();
        pe += a[x] * miss;
    }
    pe.clamp(0.0, 1.0)
}

/// Analytical error probability at one slot duration.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPoint {
    pub t: f64,
    pub q1: f64,
    pub q2: f64,
    pub model: DetectorModel,
    pub pe: f64,
}

/// MAP error probability of `model` at slot duration `t`.
pub fn error_probability_at(
    params: &MediumParams,
    t: f64,
    a: &InputDistribution,
    model: DetectorModel,
) -> Result<ErrorPoint> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("T", format!("slot duration must be finite and > 0, got {t}")));
    }
    let q = slot_arrival_probs(params, t, 2)?;
    let xmax = a.xmax();
    let p = likelihoods(model, a, q.q1(), q.q2(), xmax)?;
    let table = map_from_likelihoods(&p, a, model);
    Ok(ErrorPoint {
        t,
        q1: q.q1(),
        q2: q.q2(),
        model,
        pe: error_from_likelihoods(&table, &p, a),
    })
}

/// Shorthand for the memoryless detector's error at `t`.
pub fn dmc_error_probability(params: &MediumParams, t: f64, a: &InputDistribution) -> Result<f64> {
    let q1 = aig_cdf(params, t)?;
    let table = map_rule(a, q1, 0.0, a.xmax(), DetectorModel::Dmc)?;
    error_probability(&table, a, q1, 0.0, a.xmax())
}
