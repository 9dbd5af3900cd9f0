use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use u2reg::diophantine::{complete_unimodular, decompose_theta, is_irrational_u64, verify_decomposition, Irrationality};
use u2reg::growth::GrowthFunction;
use u2reg::torus::TorusPoint;

fn primitive(max_d: usize, bound: i64) -> impl Strategy<Value = Vec<i64>> {
    (2..=max_d)
        .prop_flat_map(move |d| prop::collection::vec(-bound..=bound, d))
        .prop_filter("primitive", |v| v.iter().fold(0i64, |g, &x| g.gcd(&x)) == 1)
}

fn theta(max_d: usize, max_den: i64) -> impl Strategy<Value = TorusPoint> {
    prop::collection::vec((0i64..max_den, 1i64..=max_den), 1..=max_d).prop_map(|v| {
        TorusPoint::new(v.into_iter().map(|(p, q)| BigRational::new(p.into(), q.into())).collect())
    })
}

/// First violating `q` in order of `‖q‖₁`, then lexicographic, sign-normalized.
fn brute(theta: &TorusPoint, a: i64, n: i64) -> Option<Vec<i64>> {
    let d = theta.dim();
    for s in 1..=a {
        let mut found = None;
        let mut q = vec![0i64; d];
        fn rec(i: usize, left: i64, q: &mut Vec<i64>, out: &mut Option<Vec<i64>>, check: &dyn Fn(&[i64]) -> bool) {
            if out.is_some() {
                return;
            }
            if i == q.len() {
                if left == 0 && q.iter().find(|&&x| x != 0).map_or(false, |&x| x > 0) && check(q) {
                    *out = Some(q.clone());
                }
                return;
            }
            for x in -left..=left {
                q[i] = x;
                rec(i + 1, left - x.abs(), q, out, check);
            }
            q[i] = 0;
        }
        let check = |q: &[i64]| {
            let qb: Vec<BigInt> = q.iter().map(|&x| x.into()).collect();
            theta.dot_norm(&qb) * BigRational::from_integer(n.into()) < BigRational::from_integer(a.into())
        };
        rec(0, s, &mut q, &mut found, &check);
        if found.is_some() {
            return found;
        }
    }
    None
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn unimodular_completion(v in primitive(5, 1000)) {
        let q: Vec<BigInt> = v.iter().map(|&x| x.into()).collect();
        let chart = complete_unimodular(&q).unwrap();
        prop_assert!(chart.is_valid());
        prop_assert!(chart.matrix.det().is_one());
        prop_assert_eq!(chart.matrix.row(v.len() - 1), &q[..]);
    }

    #[test]
    fn scan_matches_brute_force(t in theta(2, 60), a in 1i64..12, n in 1i64..400) {
        let rec = is_irrational_u64(&t, a as u64, n as u64).unwrap();
        let want = brute(&t, a, n);
        match (&rec.outcome, want) {
            (Irrationality::Pass, None) => {}
            (Irrationality::Counterexample { q, .. }, Some(w)) => {
                let w: Vec<BigInt> = w.into_iter().map(BigInt::from).collect();
                prop_assert_eq!(q, &w);
            }
            (got, want) => prop_assert!(false, "scan {:?} vs brute force {:?}", got, want),
        }
    }

    #[test]
    fn decomposition_clauses(t in theta(3, 2000), n in 100u64..100_000, c in 1u32..4) {
        let g = GrowthFunction::parse(&format!("poly:{c},1")).unwrap();
        let dec = decompose_theta(&t, n, &g).unwrap();
        let rep = verify_decomposition(&dec);
        prop_assert!(rep.passed(), "{:?}", rep.failures());
        prop_assert_eq!(dec.smooth.add(&dec.rational).add(&dec.irrational), t.clone());
        prop_assert!(dec.steps.len() <= t.dim());
        let q = BigRational::from_integer(dec.torsion_order.clone());
        prop_assert!(dec.rational.coords().iter().all(|x| (x * &q).is_integer()));
        let bound = BigRational::new(dec.m_value.clone(), BigInt::from(n));
        prop_assert!(dec.smooth.sq_dist_to_zero() <= &bound * &bound);
        prop_assert!(!dec.chart.complexity.is_zero() || dec.chart.dim == 0);
    }
}
