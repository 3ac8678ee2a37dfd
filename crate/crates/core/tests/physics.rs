//! Qualitative behaviour of the propagation model, the bounds, and the
//! simulator.

mod common;

use molcap::aig::{aig_cdf, slot_arrival_probs, MediumParams, SlotConfig};
use molcap::capacity::{blahut_arimoto, capacity_per_unit_time, find_t_opt, SolverOptions, TWindow};
use molcap::channel::{dmc_matrix, InputDistribution};
use molcap::detector::{error_probability_at, DetectorModel};
use molcap::isi_bounds::{bounds_at, LowerBoundOptions, Policy};
use molcap::simulator::{run_link, SimConfig};

fn medium(l: f64, v: f64, s: f64) -> MediumParams {
    MediumParams::new(l, v, s).unwrap()
}

#[test]
fn faster_drift_and_shorter_distance_raise_arrival_probability() {
    let t = 5e-3;
    let mut prev = 0.0;
    for v in [0.5, 1.0, 2.0, 4.0] {
        let f = aig_cdf(&medium(1e-2, v, 1.0), t).unwrap();
        assert!(f > prev);
        prev = f;
    }
    let mut prev = 1.0;
    for l in [5e-3, 1e-2, 2e-2, 4e-2] {
        let f = aig_cdf(&medium(l, 1.0, 1.0), t).unwrap();
        assert!(f < prev);
        prev = f;
    }
}

#[test]
fn diffusion_helps_before_the_mean_and_hurts_after() {
    let lo = medium(1.0, 1.0, 0.05);
    let hi = medium(1.0, 1.0, 0.5);
    assert!(aig_cdf(&hi, 0.5).unwrap() > aig_cdf(&lo, 0.5).unwrap());
    assert!(aig_cdf(&hi, 2.0).unwrap() < aig_cdf(&lo, 2.0).unwrap());
}

#[test]
fn arrival_law_sharpens_with_drift() {
    // Probability mass within 10% of the mean travel time grows with v.
    let mut prev = 0.0;
    for v in [0.3, 1.0, 3.0, 10.0] {
        let p = medium(1.0, v, 1.0);
        let mass = aig_cdf(&p, 1.1 * p.mu()).unwrap() - aig_cdf(&p, 0.9 * p.mu()).unwrap();
        assert!(mass > prev, "v={v}: {mass}");
        prev = mass;
    }
}

#[test]
fn per_time_capacity_is_memoryless_capacity_over_t() {
    let params = medium(1e-2, 1.0, 0.5);
    for t in [1e-4, 3e-4, 1e-3] {
        let res = capacity_per_unit_time(&params, t, 2e4, None, &SolverOptions::default()).unwrap();
        let xmax = (2e4 * t).round() as usize;
        let direct = blahut_arimoto(&dmc_matrix(aig_cdf(&params, t).unwrap(), xmax).unwrap(), &SolverOptions::default())
            .unwrap();
        assert!((res.value - direct.value / t).abs() < 1e-9 * res.value);
    }
}

#[test]
fn optimal_slot_shrinks_with_drift() {
    let window = TWindow::new(3e-5, 3e-3, 32).unwrap();
    let mut prev = f64::INFINITY;
    for v in [0.1, 1.0, 10.0, 100.0] {
        let res = find_t_opt(&medium(1e-2, v, 0.5), 2e4, None, &window, &SolverOptions::default()).unwrap();
        assert!(!res.boundary, "v={v}");
        assert!(res.t_opt <= prev * (1.0 + 1e-9), "v={v}: {} after {prev}", res.t_opt);
        prev = res.t_opt;
    }
}

#[test]
fn optimal_slot_grows_with_distance() {
    let window = TWindow::new(3e-5, 3e-3, 32).unwrap();
    let near = find_t_opt(&medium(5e-3, 1.0, 0.5), 2e4, None, &window, &SolverOptions::default()).unwrap();
    let far = find_t_opt(&medium(4e-2, 1.0, 0.5), 2e4, None, &window, &SolverOptions::default()).unwrap();
    assert!(!near.boundary && !far.boundary);
    assert!(far.t_opt > near.t_opt);
    assert!(far.value < near.value);
}

#[test]
fn interference_gap_narrows_as_distance_shrinks() {
    let opts = LowerBoundOptions::default();
    let mut prev = f64::INFINITY;
    for l in [2e-2, 1e-2, 5e-3, 2.5e-3] {
        let q = slot_arrival_probs(&medium(l, 1.0, 1.0), 3e-3, 2).unwrap();
        let b = bounds_at(q.q1(), q.q2(), q.q_u(), 5, Policy::Uniform, &opts).unwrap();
        assert!(b.ub - b.lb2 < prev, "l={l}");
        prev = b.ub - b.lb2;
    }
}

#[test]
fn bounds_close_when_interference_vanishes() {
    let b = bounds_at(0.9, 0.0, 0.9, 4, Policy::SelfOptimal, &LowerBoundOptions::default()).unwrap();
    assert!((b.lb1 - b.ub).abs() < 1e-7);
    assert!((b.lb2 - b.ub).abs() < 1e-7);
    assert!((b.c_dmc - b.ub).abs() < 1e-9);
}

fn simulate(params: MediumParams, t: f64, frames: u64, truncation: usize, detector: DetectorModel) -> molcap::simulator::SimReport {
    let mut cfg = SimConfig::new(params, SlotConfig::new(t, 7).unwrap(), InputDistribution::uniform(7), frames, 11);
    cfg.memory_truncation = truncation;
    cfg.detector = detector;
    run_link(&cfg).unwrap()
}

/// `|observed - expected|` measured in binomial standard deviations.
fn z_score(observed: f64, expected: f64, n: u64) -> f64 {
    (observed - expected).abs() / (expected * (1.0 - expected) / n as f64).sqrt()
}

#[test]
fn one_slot_memory_reproduces_memoryless_error() {
    let params = medium(1e-2, 10.0, 1.0);
    let t = 2.4e-2;
    let report = simulate(params, t, 200_000, 1, DetectorModel::Dmc);
    let a = InputDistribution::uniform(7);
    let pe = error_probability_at(&params, t, &a, DetectorModel::Dmc).unwrap().pe;
    assert!(z_score(report.empirical_pe, pe, report.frames_run) < 4.0, "{} vs {pe}", report.empirical_pe);
}

#[test]
fn two_slot_memory_reproduces_interference_model_error() {
    let params = medium(1e-2, 10.0, 1.0);
    let t = 2.4e-2;
    let report = simulate(params, t, 200_000, 2, DetectorModel::Stm);
    let a = InputDistribution::uniform(7);
    let pe = error_probability_at(&params, t, &a, DetectorModel::Stm).unwrap().pe;
    assert!(z_score(report.empirical_pe, pe, report.frames_run) < 4.0, "{} vs {pe}", report.empirical_pe);
}

#[test]
fn arrival_histogram_matches_slot_probabilities() {
    let params = medium(1e-2, 1.0, 1.0);
    let t = 4e-3;
    let report = simulate(params, t, 50_000, 0, DetectorModel::Stm);
    let q = slot_arrival_probs(&params, t, 6).unwrap();
    for k in 0..6 {
        let z = z_score(report.slot_arrival_hist[k], q.get(k + 1), report.molecules);
        assert!(z < 4.5, "slot {}: {} vs {}", k + 1, report.slot_arrival_hist[k], q.get(k + 1));
    }
}

#[test]
fn longer_memory_captures_more_molecules() {
    let params = medium(1e-2, 1.0, 1.0);
    let mut prev = 0.0;
    for m in [1, 2, 4, 8, 0] {
        let captured = simulate(params, 4e-3, 20_000, m, DetectorModel::Stm).captured_fraction();
        assert!(captured >= prev, "memory {m}");
        prev = captured;
    }
}

#[test]
fn simulated_error_falls_with_slot_duration() {
    let params = medium(1e-2, 10.0, 1.0);
    let mut prev = 1.0;
    for t in [1e-2, 2e-2, 4e-2, 8e-2] {
        let pe = simulate(params, t, 50_000, 0, DetectorModel::Stm).empirical_pe;
        assert!(pe < prev, "T={t}");
        prev = pe;
    }
}
