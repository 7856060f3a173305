mod common;

use common::{atoms, lp_transport_cost, real_measure};
use ergokit::distances::{tv_distance, wasserstein_1d, wasserstein_exact, weighted_tv};
use ergokit::markov::SparseDistribution;
use ergokit::metric::{Metric, RealLineMetric};
use ergokit::State;
use proptest::prelude::*;

fn measure() -> impl Strategy<Value = Vec<(f64, u32)>> {
    prop::collection::vec(((-20i32..20).prop_map(|k| f64::from(k) / 4.0), 1u32..10), 1..=6)
}

fn v_of(s: &State) -> f64 {
    s.real_line().unwrap().abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn wasserstein_matches_lp(a in measure(), b in measure(), p in prop::sample::select(vec![1.0, 2.0, 3.0])) {
        let (mu, nu) = (real_measure(&a), real_measure(&b));
        let got = wasserstein_exact(&mu, &nu, p, &RealLineMetric).unwrap();
        let lp = lp_transport_cost(&atoms(&mu), &atoms(&nu), |x, y| RealLineMetric.distance(x, y).powf(p));
        prop_assert!((got.value.powf(p) - lp).abs() <= 1e-9 * lp.max(1.0), "{} vs {}", got.value.powf(p), lp);
        let q = wasserstein_1d(&mu, &nu, p).unwrap();
        prop_assert!((got.value - q).abs() <= 1e-9 * q.max(1.0));
        got.plan.check_marginals(&mu, &nu, 1e-9).unwrap();
    }

    #[test]
    fn weighted_tv_matches_coupling_lp(a in measure(), b in measure()) {
        let (mu, nu) = (real_measure(&a), real_measure(&b));
        let closed = weighted_tv(&mu, &nu, &v_of).unwrap();
        let lp = lp_transport_cost(&atoms(&mu), &atoms(&nu), |x, y| {
            if x == y { 0.0 } else { 2.0 + v_of(x) + v_of(y) }
        });
        prop_assert!((closed - lp).abs() <= 1e-9 * lp.max(1.0), "{closed} vs {lp}");
    }

    #[test]
    fn metric_axioms(a in measure(), b in measure(), c in measure()) {
        let (x, y, z) = (real_measure(&a), real_measure(&b), real_measure(&c));
        type Dist = dyn Fn(&SparseDistribution, &SparseDistribution) -> f64;
        let tv = |p: &SparseDistribution, q: &SparseDistribution| tv_distance(p, q);
        let w1 = |p: &SparseDistribution, q: &SparseDistribution| wasserstein_exact(p, q, 1.0, &RealLineMetric).unwrap().value;
        let wtv = |p: &SparseDistribution, q: &SparseDistribution| weighted_tv(p, q, &v_of).unwrap();
        for d in [&tv as &Dist, &w1, &wtv] {
            prop_assert!(d(&x, &y) >= 0.0);
            prop_assert!(d(&x, &x).abs() <= 1e-12);
            prop_assert!((d(&x, &y) - d(&y, &x)).abs() <= 1e-9);
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-9);
            if x != y {
                prop_assert!(d(&x, &y) > 0.0);
            }
        }
    }

    #[test]
    fn weak_duality(a in measure(), b in measure(), slope in -1.0f64..1.0, shift in -5.0f64..5.0) {
        let (mu, nu) = (real_measure(&a), real_measure(&b));
        // 1-Lipschitz candidates
        let f = |s: &State| { let x = s.real_line().unwrap(); (slope * x + shift).sin() };
        let g = |s: &State| (s.real_line().unwrap() - shift).abs();
        let w = wasserstein_exact(&mu, &nu, 1.0, &RealLineMetric).unwrap().value;
        for h in [&f as &dyn Fn(&State) -> f64, &g] {
            let gap = (mu.integrate(h).unwrap() - nu.integrate(h).unwrap()).abs();
            prop_assert!(gap <= w + 1e-9);
        }
    }

    #[test]
    fn weighted_tv_monotone_and_dominates_tv(a in measure(), b in measure(), bump in 0.0f64..3.0) {
        let (mu, nu) = (real_measure(&a), real_measure(&b));
        let small = weighted_tv(&mu, &nu, &v_of).unwrap();
        let large = weighted_tv(&mu, &nu, &|s: &State| v_of(s) + bump * s.real_line().unwrap().cos().abs()).unwrap();
        prop_assert!(large >= small - 1e-12);
        prop_assert!(tv_distance(&mu, &nu) <= small + 1e-12);
    }
}
