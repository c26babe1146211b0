use proptest::prelude::*;
use ptd_core::{exact_solution, make_k1, settling_time, vector_field, K1Family, SystemParams};

fn catalog() -> Vec<K1Family> {
    vec![
        K1Family::Atan { a: 1.0 },
        K1Family::Rational { a: 2.0 },
        K1Family::Exponential { a: 3.0 },
        K1Family::GammaReg { a: 0.5 },
        K1Family::GammaReg { a: 2.0 },
        K1Family::BetaReg { a1: 1.5, a2: 0.7 },
    ]
}

fn closed_form_family() -> impl Strategy<Value = K1Family> {
    prop_oneof![
        (0.2f64..5.0).prop_map(|a| K1Family::Atan { a }),
        (0.2f64..5.0).prop_map(|a| K1Family::Rational { a }),
        (1.5f64..6.0).prop_map(|a| K1Family::Exponential { a }),
    ]
}

#[test]
fn solution_is_zero_at_rho1_for_every_initial_condition() {
    for fam in catalog() {
        let p = SystemParams::new(0.8, 0.4, make_k1(fam).unwrap()).unwrap();
        for i in 0..=56 {
            let x0 = 10f64.powf(-6.0 + i as f64 * 0.25);
            assert_eq!(exact_solution(&p, x0, p.rho1()).unwrap(), 0.0, "{fam} x0 = {x0}");
            assert_eq!(exact_solution(&p, -x0, p.rho1()).unwrap(), 0.0);
            assert!(settling_time(&p, x0).unwrap() <= p.rho1());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn semigroup(fam in closed_form_family(), rho1 in 0.2f64..5.0, rho2 in 0.0f64..0.9,
                 x0 in -50.0f64..50.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let p = SystemParams::new(rho1, rho2, make_k1(fam).unwrap()).unwrap();
        let (s, t) = (s * rho1, t * rho1);
        let two_stage = exact_solution(&p, exact_solution(&p, x0, s).unwrap(), t).unwrap();
        let direct = exact_solution(&p, x0, s + t).unwrap();
        prop_assert!((two_stage - direct).abs() <= 1e-9 * direct.abs().max(1.0), "{two_stage} vs {direct}");
    }

    #[test]
    fn odd_and_monotone(fam in closed_form_family(), rho2 in 0.0f64..0.9, x0 in 1e-3f64..1e4,
                        t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let p = SystemParams::new(1.0, rho2, make_k1(fam).unwrap()).unwrap();
        let (a, b) = (t1.min(t2), t1.max(t2));
        let xa = exact_solution(&p, x0, a).unwrap();
        let xb = exact_solution(&p, x0, b).unwrap();
        prop_assert!(xb.abs() <= xa.abs());
        prop_assert_eq!(exact_solution(&p, -x0, a).unwrap(), -xa);
        prop_assert!(xa >= 0.0);
    }

    #[test]
    fn derivative_in_time_matches_field(fam in closed_form_family(), rho2 in 0.1f64..0.9,
                                        x0 in 0.5f64..20.0, frac in 0.05f64..0.8) {
        let p = SystemParams::new(1.0, rho2, make_k1(fam).unwrap()).unwrap();
        let t = frac * settling_time(&p, x0).unwrap();
        let dt = 1e-6;
        let fd = (exact_solution(&p, x0, t + dt).unwrap() - exact_solution(&p, x0, t - dt).unwrap()) / (2.0 * dt);
        let x = exact_solution(&p, x0, t).unwrap();
        let field = vector_field(&p, x).unwrap();
        prop_assert!((fd - field).abs() <= 1e-4 * field.abs(), "fd {fd} field {field}");
    }
}
