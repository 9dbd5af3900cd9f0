use proptest::prelude::*;

use u2reg::growth::GrowthFunction;
use u2reg::irrational::{evaluate_structured_all, regularize_irrational, verify_irrational};
use u2reg::regularity::{regularize, stage_limit, verify_certificate};
use u2reg::synth::synth;

fn spec() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("uniform".to_string()),
        (1u32..20, 20u32..200).prop_map(|(r, q)| format!("0.5*uniform+0.5*cosine:{r},{q}")),
        (2u32..6).prop_map(|q| format!("0.4*uniform+0.6*residue:{q},1")),
        (1u32..30).prop_map(|a| format!("interval:{a},{}", a + 20)),
    ]
}

fn on_big_stack<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(256 << 20)
            .spawn_scoped(s, f)
            .unwrap()
            .join()
            .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn certificates_verify_and_repeat(s in spec(), n in 16usize..=128, seed in 0u64..1000, eps in 0.2f64..0.6) {
        let out = on_big_stack(|| {
            let f = synth(&s, n, seed).unwrap();
            let g = GrowthFunction::parse("poly:10,1").unwrap();
            let cert = regularize(&f, eps, &g).unwrap();
            let rep = verify_certificate(&cert, &f, eps, &g);
            let again = regularize(&f, eps, &g).unwrap();
            let same = u2reg::json::to_string(&cert).unwrap() == u2reg::json::to_string(&again).unwrap();
            let stages = cert.telemetry.stages.len();
            u2reg::json::dispose(cert);
            u2reg::json::dispose(again);
            (rep.failures().iter().map(|s| s.to_string()).collect::<Vec<_>>(), same, stages)
        });
        prop_assert!(out.0.is_empty(), "{:?}", out.0);
        prop_assert!(out.1);
        prop_assert!(out.2 <= stage_limit(eps));
    }

    #[test]
    fn structured_form_matches(s in spec(), n in 16usize..=128, seed in 0u64..1000) {
        let out = on_big_stack(|| {
            let f = synth(&s, n, seed).unwrap();
            let g = GrowthFunction::parse("poly:1,0.5").unwrap();
            let cert = regularize_irrational(&f, 0.3, &g).unwrap();
            let ev = evaluate_structured_all(&cert);
            let err = ev
                .iter()
                .zip(cert.base.f_str.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let rep = verify_irrational(&cert, &f, 0.3, &g);
            let audit = cert.growth_audit.passed;
            u2reg::json::dispose(cert);
            (err, rep.failures().iter().map(|s| s.to_string()).collect::<Vec<_>>(), audit)
        });
        prop_assert!(out.0 <= 1e-9);
        prop_assert!(out.1.is_empty(), "{:?}", out.1);
        prop_assert!(out.2);
    }
}
