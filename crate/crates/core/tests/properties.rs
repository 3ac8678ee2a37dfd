//! Randomized invariants.

mod common;

use molcap::capacity::{blahut_arimoto, constrained_blahut_arimoto, CostModel, SolverOptions};
use molcap::channel::{dmc_matrix, lb1_matrix, InputDistribution};
use molcap::detector::{error_probability, map_rule, DetectorModel};
use molcap::isi_bounds::{lb1_rate, lb2_rate};
use proptest::prelude::*;

fn law(len: usize) -> impl Strategy<Value = InputDistribution> {
    proptest::collection::vec(0.01f64..1.0, len).prop_map(|w| InputDistribution::from_weights(&w).unwrap())
}

fn capacity(q1: f64, xmax: usize) -> f64 {
    blahut_arimoto(&dmc_matrix(q1, xmax).unwrap(), &SolverOptions::default())
        .unwrap()
        .value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn capacity_does_not_depend_on_the_start(q1 in 0.05f64..0.99, xmax in 1usize..8, seed in 0u64..1000) {
        let p = dmc_matrix(q1, xmax).unwrap();
        let mut rng = common::rng(seed);
        let init = InputDistribution::new(common::random_law(&mut rng, xmax + 1)).unwrap();
        let from_uniform = blahut_arimoto(&p, &SolverOptions::default()).unwrap();
        let from_random = blahut_arimoto(&p, &SolverOptions { init: Some(init), ..SolverOptions::default() }).unwrap();
        prop_assert!((from_uniform.value - from_random.value).abs() < 1e-8);
    }

    #[test]
    fn capacity_grows_with_arrival_probability(q1 in 0.05f64..0.9, dq in 0.01f64..0.09, xmax in 1usize..8) {
        prop_assert!(capacity(q1 + dq, xmax) >= capacity(q1, xmax) - 1e-9);
    }

    #[test]
    fn capacity_grows_with_alphabet(q1 in 0.05f64..0.99, xmax in 1usize..10) {
        let c = capacity(q1, xmax);
        prop_assert!(capacity(q1, xmax + 1) >= c - 1e-9);
        prop_assert!(c <= ((xmax + 1) as f64).log2() + 1e-12);
    }

    #[test]
    fn constrained_capacity_is_concave(q1 in 0.1f64..0.95, xmax in 1usize..5, e0 in 0.05f64..1.0, step in 0.01f64..0.5) {
        let p = dmc_matrix(q1, xmax).unwrap();
        let cost = CostModel::molecules(xmax);
        let at = |e: f64| constrained_blahut_arimoto(&p, &cost, e, &SolverOptions::default()).unwrap();
        let (lo, mid, hi) = (at(e0), at(e0 + step), at(e0 + 2.0 * step));
        prop_assert!(mid.value >= 0.5 * (lo.value + hi.value) - 1e-8);
        prop_assert!(lo.value <= mid.value + 1e-9 && mid.value <= hi.value + 1e-9);
        prop_assert!(lo.achieved_e.unwrap() <= e0 + 1e-9);
    }

    #[test]
    fn same_law_orders_the_lower_bounds(a in law(4), q1 in 0.05f64..0.95, frac in 0.0f64..1.0) {
        let q2 = frac * (1.0 - q1);
        let lb1 = lb1_rate(&a, q1, q2, 3).unwrap();
        let lb2 = lb2_rate(&a, q1, q2, 3).unwrap();
        prop_assert!(lb1 <= lb2 + 1e-12);
        prop_assert!(lb1 >= -1e-12);
    }

    #[test]
    fn map_beats_any_table(a in law(4), q1 in 0.05f64..0.95, frac in 0.0f64..1.0, table in proptest::collection::vec(0usize..4, 7)) {
        let q2 = frac * (1.0 - q1);
        let rule = map_rule(&a, q1, q2, 3, DetectorModel::Stm).unwrap();
        let pe = error_probability(&rule, &a, q1, q2, 3).unwrap();
        let p = lb1_matrix(&a, q1, q2, 3).unwrap();
        let correct: f64 = table.iter().enumerate().map(|(y, &x)| a[x] * p.get(x, y)).sum();
        prop_assert!(pe <= 1.0 - correct + 1e-12);
    }

    #[test]
    fn transition_rows_are_stochastic(a in law(5), q1 in 0.0f64..1.0, frac in 0.0f64..1.0) {
        let q2 = frac * (1.0 - q1);
        for m in [dmc_matrix(q1, 4).unwrap(), lb1_matrix(&a, q1, q2, 4).unwrap(), molcap::channel::lb2_matrix(&a, q1, q2, 4).unwrap()] {
            for x in 0..m.rows() {
                prop_assert!((m.row(x).iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
