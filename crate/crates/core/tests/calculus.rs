use pinchdyn::pinch::{compose_linear_beltrami, pullback_beltrami_holomorphic};
use pinchdyn::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Coefficients `(A, B)` of a real-linear map recovered from its values at 1 and i.
fn coefficients(l: impl Fn(Complex64) -> Complex64) -> (Complex64, Complex64) {
    let (l1, li) = (l(c(1.0, 0.0)), l(c(0.0, 1.0)));
    let i = c(0.0, 1.0);
    ((l1 - i * li) * 0.5, (l1 + i * li) * 0.5)
}

fn disc_point() -> impl Strategy<Value = Complex64> {
    (0.0..0.99f64, 0.0..std::f64::consts::TAU).prop_map(|(r, a)| Complex64::from_polar(r, a))
}

fn nonzero() -> impl Strategy<Value = Complex64> {
    (0.05..20.0f64, 0.0..std::f64::consts::TAU).prop_map(|(r, a)| Complex64::from_polar(r, a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn holomorphic_pullback_preserves_magnitude(mu in disc_point(), dh in nonzero()) {
        let pulled = pullback_beltrami_holomorphic(mu, dh).unwrap();
        prop_assert!((pulled.norm() - mu.norm()).abs() < 1e-12);
    }

    #[test]
    fn holomorphic_pullback_matches_composed_linear_map(mu in disc_point(), dh in nonzero()) {
        let (a, b) = coefficients(|z| {
            let w = dh * z;
            w + mu * w.conj()
        });
        let brute = b / a;
        let pulled = pullback_beltrami_holomorphic(mu, dh).unwrap();
        prop_assert!((pulled - brute).norm() < 1e-12);
    }

    #[test]
    fn linear_composition_matches_brute_force(
        a2 in nonzero(),
        k2 in disc_point(),
        a1 in nonzero(),
        mu1 in disc_point(),
    ) {
        let b2 = a2 * k2;
        let b1 = a1 * mu1;
        let l2 = |z: Complex64| a2 * z + b2 * z.conj();
        let l1 = |w: Complex64| a1 * w + b1 * w.conj();
        let (a, b) = coefficients(|z| l1(l2(z)));
        let brute = b / a;
        let formula = compose_linear_beltrami(a2, b2, mu1).unwrap();
        prop_assert!((formula - brute).norm() < 1e-12, "{formula} against {brute}");
    }
}

#[test]
fn pullback_through_a_critical_point_is_rejected() {
    assert!(pullback_beltrami_holomorphic(c(0.3, 0.0), c(0.0, 0.0)).is_err());
}

#[test]
fn orientation_reversing_linear_map_is_rejected() {
    assert!(compose_linear_beltrami(c(1.0, 0.0), c(2.0, 0.0), c(0.1, 0.0)).is_err());
    assert!(compose_linear_beltrami(c(1.0, 0.0), c(0.1, 0.0), c(1.0, 0.0)).is_err());
}

#[test]
fn composing_with_a_conformal_map_keeps_the_inner_coefficient() {
    let mu = compose_linear_beltrami(c(2.0, 1.0), c(0.5, -0.3), c(0.0, 0.0)).unwrap();
    assert!((mu - c(0.5, -0.3) / c(2.0, 1.0)).norm() < 1e-15);
}
