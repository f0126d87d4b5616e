use pinchdyn::plane::{chordal_distance, signed_area, spherical_diameter, winding_number, SpherePoint, Window};
use pinchdyn::Complex64;
use proptest::prelude::*;

fn sphere_point() -> impl Strategy<Value = SpherePoint> {
    prop_oneof![
        9 => (-50.0..50.0f64, -50.0..50.0f64).prop_map(|(x, y)| SpherePoint::new(x, y)),
        1 => Just(SpherePoint::Infinity),
    ]
}

fn inversion(p: SpherePoint) -> SpherePoint {
    match p {
        SpherePoint::Infinity => SpherePoint::new(0.0, 0.0),
        SpherePoint::Finite(z) if z.norm() == 0.0 => SpherePoint::Infinity,
        SpherePoint::Finite(z) => SpherePoint::Finite(1.0 / z),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn chordal_distance_is_a_metric(a in sphere_point(), b in sphere_point(), c in sphere_point()) {
        let (ab, bc, ac) = (chordal_distance(a, b), chordal_distance(b, c), chordal_distance(a, c));
        prop_assert!((0.0..=2.0).contains(&ab));
        prop_assert_eq!(ab, chordal_distance(b, a));
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn inversion_is_a_chordal_isometry(a in sphere_point(), b in sphere_point()) {
        let d = chordal_distance(a, b);
        let e = chordal_distance(inversion(a), inversion(b));
        prop_assert!((d - e).abs() < 1e-9);
    }

    #[test]
    fn pixel_centers_round_trip(col in 0usize..64, row in 0usize..48, cx in -5.0..5.0f64, cy in -5.0..5.0f64) {
        let w = Window::new(Complex64::new(cx, cy), 3.0, 2.0, 64, 48).unwrap();
        prop_assert_eq!(w.point_to_pixel(w.pixel_to_point(col, row)).unwrap(), (col, row));
    }

    #[test]
    fn diameter_bounds_every_pair(pts in prop::collection::vec(sphere_point(), 1..12)) {
        let d = spherical_diameter(&pts).unwrap();
        for a in &pts {
            for b in &pts {
                prop_assert!(chordal_distance(*a, *b) <= d);
            }
        }
    }
}

#[test]
fn square_orientation_and_winding() {
    let sq = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(1.0, 1.0), Complex64::new(0.0, 1.0)];
    assert_eq!(signed_area(&sq), 1.0);
    assert_eq!(winding_number(&sq, Complex64::new(0.5, 0.5)), 1);
    assert_eq!(winding_number(&sq, Complex64::new(2.0, 0.5)), 0);
}

#[test]
fn empty_diameter_is_an_error() {
    assert!(spherical_diameter(&[]).is_err());
}
