use approx::assert_relative_eq;
use proptest::prelude::*;

use expfunc::bgamma::log_w;
use expfunc::montecarlo::Summary;
use expfunc::phi_star::{phi_star_real, varphi_star};
use expfunc::{fixtures, BernsteinSpec, C64};

fn model() -> impl Strategy<Value = BernsteinSpec> {
    prop_oneof![
        (0.05f64..0.95, 0.2f64..5.0).prop_map(|(a, c)| BernsteinSpec::stable(c, a).unwrap()),
        (0.2f64..5.0, 0.2f64..5.0).prop_map(|(a, b)| BernsteinSpec::gamma_sub(a, b).unwrap()),
        (0.2f64..5.0, 0.2f64..5.0).prop_map(|(r, s)| BernsteinSpec::exp_jump_cpp(r, s).unwrap()),
        (0.1f64..3.0).prop_map(|q| BernsteinSpec::pure_kill(q).unwrap()),
        (0.1f64..4.0, 0.1f64..4.0).prop_map(|(l, m)| BernsteinSpec::atoms(&[(l, m)]).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn phi_conjugate_symmetric(s in model(), re in 0.0f64..20.0, im in -50.0f64..50.0) {
        let z = C64::new(re, im);
        let (a, b) = (s.phi(z).unwrap(), s.phi(z.conj()).unwrap());
        prop_assert!((a - b.conj()).norm() <= 1e-12 * a.norm().max(1e-300));
    }

    #[test]
    fn phi_real_increasing_and_concave(s in model(), x in 0.01f64..50.0) {
        let [_, d1, d2, _] = s.derivs_real(x, 2).unwrap();
        prop_assert!(d1 >= 0.0);
        prop_assert!(d2 <= 0.0);
    }

    #[test]
    fn varphi_inverts_phi_star(s in model(), v in 0.5f64..200.0) {
        let x = phi_star_real(&s, v).unwrap();
        let back = varphi_star(&s, x).unwrap();
        prop_assert!((back - v).abs() <= 1e-9 * v, "{} vs {}", back, v);
    }

    #[test]
    fn w_recurrence(s in model(), re in 0.5f64..8.0, im in -20.0f64..20.0) {
        let z = C64::new(re, im);
        let lhs = log_w(&s, z + 1.0).unwrap();
        let rhs = log_w(&s, z).unwrap() + s.phi(z).unwrap().ln();
        let d = lhs - rhs;
        // equal modulo 2πi
        let wrapped = C64::new(d.re, d.im - (d.im / std::f64::consts::TAU).round() * std::f64::consts::TAU);
        prop_assert!(wrapped.norm() < 1e-9, "{}", d);
    }

    #[test]
    fn summary_matches_direct_computation(draws in prop::collection::vec(0.0f64..100.0, 2..200)) {
        let s = Summary::from_draws(&draws);
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        prop_assert_eq!(s.count, draws.len());
        prop_assert!((s.mean - mean).abs() <= 1e-12 * mean.max(1.0));
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert!(s.quantiles.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}

#[test]
fn fixture_phi_values() {
    let s = fixtures::spec("stable").unwrap().unwrap();
    assert_relative_eq!(s.phi_real(9.0).unwrap(), 3.0, max_relative = 1e-13);
    let g = fixtures::spec("gamma_sub").unwrap().unwrap();
    assert_relative_eq!(g.phi_real(1.0).unwrap(), 2f64.ln(), max_relative = 1e-13);
    let e = fixtures::spec("exp_jump_cpp").unwrap().unwrap();
    assert_relative_eq!(e.phi_real(3.0).unwrap(), 0.75, max_relative = 1e-13);
}
