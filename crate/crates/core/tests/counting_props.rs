use std::f64::consts::TAU;

use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use u2reg::counting::{
    equidistribution_trial, integral_estimate, structured_average, Progression, StructuredFn, TrigPolynomial,
};
use u2reg::torus::TorusPoint;

fn theta(d: usize) -> impl Strategy<Value = TorusPoint> {
    prop::collection::vec((0i64..100_003, Just(100_003i64)), d).prop_map(|v| {
        TorusPoint::new(v.into_iter().map(|(p, q)| BigRational::new(p.into(), q.into())).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_of_polynomial_is_constant_term(seed in any::<u64>(), d in 1usize..=3, deg in 0u64..=3) {
        let p = TrigPolynomial::random_real(d, deg, 10.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let e = integral_estimate(&p);
        prop_assert_eq!(e.value(), p.c0());
        prop_assert_eq!(e.error_bound, 0.0);
        prop_assert!(p.lip_bound() <= 10.0 + 1e-9);
    }

    #[test]
    fn geometric_bound_dominates(
        seed in any::<u64>(),
        (d, t) in (1usize..=2).prop_flat_map(|d| (Just(d), theta(d))),
        start in 0u64..50,
        step in 1u64..5,
        len in 1u64..3000,
    ) {
        let p = TrigPolynomial::random_real(d, 3, 10.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let trial = equidistribution_trial(&p, &t, &Progression { start, step, length: len }).unwrap();
        prop_assert!(trial.error <= trial.bound * (1.0 + 1e-9) + 1e-12, "{:?}", trial);
    }

    #[test]
    fn residue_average(q in 1u64..20, n in 1u64..3000, amp in prop::collection::vec(-1.0f64..1.0, 20)) {
        let table = amp.clone();
        let f = StructuredFn::new(q, 1, 2.0, move |_, y, _| Complex64::new(table[y as usize], 0.0));
        let t = TorusPoint::from_fractions(&[(1, 7)]).unwrap();
        let avg = structured_average(&f, &t, n).unwrap();
        let exact = amp[..q as usize].iter().sum::<f64>() / q as f64;
        prop_assert!((avg.re - exact).abs() <= 2.0 * q as f64 / n as f64 + 1e-12);
    }

    #[test]
    fn character_average_closed_form(p in 1i64..97, len in 1u64..500) {
        let t = TorusPoint::from_fractions(&[(p, 97)]).unwrap();
        let e = TrigPolynomial::new(1, vec![u2reg::counting::TrigTerm { m: vec![1], re: 1.0, im: 0.0 }]).unwrap();
        let tr = equidistribution_trial(&e, &t, &Progression::interval(len)).unwrap();
        let z = Complex64::from_polar(1.0, TAU * p as f64 / 97.0);
        let closed = z * (z.powu(len as u32) - 1.0) / (z - 1.0) / len as f64;
        prop_assert!((Complex64::new(tr.average_re, tr.average_im) - closed).norm() <= 1e-9);
    }
}
