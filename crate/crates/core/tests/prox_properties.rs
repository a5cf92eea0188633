use lrssc::prox::{prox_oracle, prox_scalar, NumericProxSettings, ProxRequest};
use lrssc::{PenaltyKind, PenaltySpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn spec_strategy() -> impl Strategy<Value = PenaltySpec> {
    prop_oneof![
        Just(PenaltySpec::l0()),
        Just(PenaltySpec::l1()),
        Just(PenaltySpec::l_half()),
        Just(PenaltySpec::l_two_thirds()),
        (0.02f64..50.0, 1.0f64..2.0, any::<bool>())
            .prop_map(|(d, n, inv)| PenaltySpec::exp(d, n, inv).unwrap()),
    ]
}

proptest! {
    #[test]
    fn odd_symmetric_and_shrinking(spec in spec_strategy(), x in -10.0f64..10.0, lambda in 0.001f64..2.0) {
        let s = NumericProxSettings::default();
        let p = prox_scalar(&ProxRequest::new(spec, x, lambda), &s).unwrap();
        let m = prox_scalar(&ProxRequest::new(spec, -x, lambda), &s).unwrap();
        prop_assert_eq!(p, -m);
        prop_assert!(p.abs() <= x.abs());
        prop_assert!(p == 0.0 || p.signum() == x.signum());
    }
}

#[test]
fn random_exp_requests_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let s = NumericProxSettings::default();
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..400 {
        let spec = PenaltySpec::exp(
            rng.random_range(0.02..50.0),
            rng.random_range(1.0..2.0),
            rng.random_bool(0.5),
        )
        .unwrap();
        let req = ProxRequest::new(
            spec,
            rng.random_range(-10.0..10.0),
            rng.random_range(1e-3..2.0),
        );
        let p = prox_scalar(&req, &s).unwrap();
        let o = prox_oracle(&req).unwrap();
        let gap = req.objective(p) - req.objective(o);
        worst = worst.max(gap);
        assert!(
            gap <= 1e-6,
            "{req:?}: prox {p} (L={}), oracle {o} (L={})",
            req.objective(p),
            req.objective(o)
        );
    }
    println!("worst objective gap {worst:e}");
}

#[test]
fn all_kinds_match_oracle_on_fixed_grid() {
    let s = NumericProxSettings::default();
    for kind in PenaltyKind::ALL {
        let spec = match kind {
            PenaltyKind::ExpAdaptive => PenaltySpec::exp(30.0, 1.5, true).unwrap(),
            k => PenaltySpec::simple(k),
        };
        for &lambda in &[0.1, 1.0] {
            for i in -20..=20 {
                let req = ProxRequest::new(spec, i as f64 * 0.37, lambda);
                let p = prox_scalar(&req, &s).unwrap();
                let o = prox_oracle(&req).unwrap();
                assert!(
                    req.objective(p) <= req.objective(o) + 1e-6,
                    "{req:?}: {p} vs {o}"
                );
            }
        }
    }
}
