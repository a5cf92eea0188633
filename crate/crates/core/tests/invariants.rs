use lrssc::graph::{affinity, ipd_threshold, normalized_laplacian};
use lrssc::linalg::sym_eig;
use lrssc::metrics::{accuracy, nmi, pairwise_f1};
use lrssc::solver::lrssc_solve;
use lrssc::{PenaltyKind, PenaltySpec, SolverConfig};
use nalgebra::DMatrix;
use proptest::prelude::*;

type Metric = fn(&[usize], &[usize]) -> lrssc::Result<f64>;
const METRICS: [(&str, Metric); 3] = [("acc", accuracy), ("nmi", nmi), ("f1", pairwise_f1)];

fn labelling(max_len: usize, max_k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1..=max_k, 2..=max_len).prop_flat_map(move |(k, n)| {
        (
            prop::collection::vec(0..k, n),
            prop::collection::vec(0..max_k, n),
        )
    })
}

fn matrix(max: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max).prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![3 => -5.0..5.0f64, 1 => Just(0.0)], n * n)
            .prop_map(move |v| DMatrix::from_vec(n, n, v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn metrics_ignore_label_names((truth, pred) in labelling(40, 6), shift in 1usize..50, seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..6).collect();
        let mut s = seed;
        for i in (1..6).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (s >> 33) as usize % (i + 1));
        }
        let renamed_pred: Vec<usize> = pred.iter().map(|&l| perm[l]).collect();
        let renamed_truth: Vec<usize> = truth.iter().map(|&l| l + shift).collect();
        for (name, f) in METRICS {
            let base = f(&truth, &pred).unwrap();
            prop_assert!((0.0..=1.0).contains(&base), "{} = {}", name, base);
            prop_assert!((f(&truth, &renamed_pred).unwrap() - base).abs() <= 1e-12, "{}", name);
            prop_assert!((f(&renamed_truth, &pred).unwrap() - base).abs() <= 1e-12, "{}", name);
        }
    }

    #[test]
    fn metrics_are_one_on_identical_labellings((truth, _) in labelling(40, 6)) {
        prop_assume!(truth.iter().any(|&l| l != truth[0]));
        for (name, f) in METRICS {
            prop_assert!((f(&truth, &truth).unwrap() - 1.0).abs() <= 1e-12, "{}", name);
        }
    }

    #[test]
    fn ipd_keeps_exactly_d_values(c in matrix(12), d_frac in 0.0..1.0f64) {
        let n = c.nrows();
        let d = 1 + ((n - 1) as f64 * d_frac) as usize;
        let t = ipd_threshold(&c, d).unwrap();
        for j in 0..n {
            let nonzero_in = c.column(j).iter().filter(|v| **v != 0.0).count();
            let kept = t.column(j).iter().filter(|v| **v != 0.0).count();
            prop_assert_eq!(kept, nonzero_in.min(d));
            for i in 0..n {
                prop_assert!(t[(i, j)] == 0.0 || t[(i, j)] == c[(i, j)]);
            }
            let smallest_kept = t.column(j).iter().filter(|v| **v != 0.0).map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            let largest_dropped = (0..n).filter(|&i| t[(i, j)] == 0.0).map(|i| c[(i, j)].abs()).fold(0.0, f64::max);
            prop_assert!(kept == 0 || smallest_kept >= largest_dropped);
        }
    }

    #[test]
    fn affinity_is_transpose_invariant_and_laplacian_bounded(c in matrix(15)) {
        let a = affinity(&c).unwrap();
        prop_assert_eq!(&a, &affinity(&c.transpose()).unwrap());
        prop_assert!(a.iter().all(|v| *v >= 0.0));
        let g = normalized_laplacian(&a).unwrap();
        for (i, deg) in g.degrees.iter().enumerate() {
            prop_assert!((deg - a.row(i).sum()).abs() <= 1e-12 * (1.0 + deg));
        }
        for v in sym_eig(&g.l).unwrap().values.iter() {
            prop_assert!(*v >= -1e-8 && *v <= 2.0 + 1e-8, "eigenvalue {}", v);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn solver_iterates_respect_diagonal_and_stop_rule(
        data in prop::collection::vec(-1.0..1.0f64, 6 * 12),
        kind in prop::sample::select(PenaltyKind::ALL.to_vec()),
        lambda in 0.0..=1.0f64,
        mu0 in 2.0..4.0f64,
    ) {
        let x = DMatrix::from_vec(6, 12, data);
        let spec = match kind {
            PenaltyKind::ExpAdaptive => PenaltySpec::exp(0.7, 1.5, false).unwrap(),
            k => PenaltySpec::simple(k),
        };
        let cfg = SolverConfig::with_penalty(lambda, spec).mu0(mu0);
        let r = lrssc_solve(&x, &cfg).unwrap();
        prop_assert!((0..12).all(|i| r.c[(i, i)] == 0.0));
        prop_assert!(r.c.iter().all(|v| v.is_finite()));
        prop_assert_eq!(r.residual_history.len(), r.iterations);
        prop_assert_eq!(r.lagrangian_history.len(), r.iterations);
        let last = *r.residual_history.last().unwrap();
        prop_assert_eq!(r.converged, last <= cfg.eps);
        prop_assert!(r.converged || r.iterations == cfg.k_max);
        prop_assert_eq!(&r, &lrssc_solve(&x, &cfg).unwrap());
    }
}
