use pinchdyn::lang::{catalog, parse, EntireMap, Expr, Program, CATALOG};
use pinchdyn::{Complex64, Error};
use proptest::prelude::*;

fn constant() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0.0..10.0f64).prop_map(Expr::Num),
        (1u32..20).prop_map(|k| Expr::Num(k as f64)),
        Just(Expr::Pi),
        Just(Expr::I),
    ]
}

fn tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![3 => Just(Expr::Z), 2 => constant()];
    leaf.prop_recursive(4, 24, 2, |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            inner.clone().prop_map(move |a| Expr::Neg(b(a))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(move |(x, y)| Expr::Mul(b(x), b(y))),
            (inner.clone(), 1u32..9).prop_map(move |(x, k)| Expr::Div(b(x), b(Expr::Num(k as f64)))),
            inner.clone().prop_map(move |a| Expr::Exp(b(a))),
            inner.clone().prop_map(move |a| Expr::Sin(b(a))),
            inner.prop_map(move |a| Expr::Cos(b(a))),
        ]
    })
}

fn point() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(x, y)| Complex64::new(x, y))
}

/// Agreement up to `tol` relative to the values plus the cancellation error of
/// a central difference over values of size `size`.
fn close(a: Complex64, b: Complex64, tol: f64, size: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm())) + 1e-9 * size
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn printing_round_trips(e in tree()) {
        let text = e.to_string();
        prop_assert_eq!(parse(&text).unwrap(), e, "{}", text);
    }

    #[test]
    fn derivative_matches_difference_quotient(e in tree(), z in point()) {
        let m = EntireMap::from_expr("t", e);
        let h = 1e-5;
        let (Ok(a), Ok(b), Ok(d)) = (m.eval(z + h), m.eval(z - h), m.deriv(z)) else { return Ok(()) };
        let fd = (a - b) / (2.0 * h);
        prop_assume!(fd.norm() < 1e6 && d.norm().is_finite());
        prop_assert!(close(fd, d, 1e-5, a.norm().max(b.norm())), "{} vs {}", fd, d);
    }

    #[test]
    fn compiled_program_is_holomorphic(e in tree(), z in point()) {
        let p = Program::compile(&e);
        let h = 1e-5;
        let i = Complex64::new(0.0, 1.0);
        let (Ok(a), Ok(b), Ok(c), Ok(d)) = (p.eval(z + h), p.eval(z - h), p.eval(z + i * h), p.eval(z - i * h)) else {
            return Ok(())
        };
        let gx = (a - b) / (2.0 * h);
        let gy = (c - d) / (2.0 * h);
        prop_assume!(gx.norm() < 1e6);
        prop_assert!(close(gx, -i * gy, 1e-5, a.norm().max(c.norm())));
    }
}

#[test]
fn catalog_maps_parse_and_resolve() {
    for name in CATALOG {
        let m = catalog(name).unwrap();
        assert_eq!(m.name, name);
        let again = EntireMap::parse(name, &m.expr.to_string()).unwrap();
        assert_eq!(again.expr, m.expr);
        for c in &m.critical_seeds {
            assert!(m.deriv(*c).unwrap().norm() < 1e-12, "{name} at {c}");
        }
    }
}

#[test]
fn inline_expression_resolves() {
    let m = EntireMap::resolve("z*z + 1").unwrap();
    assert_eq!(m.eval(Complex64::new(2.0, 0.0)).unwrap(), Complex64::new(5.0, 0.0));
    assert_eq!(m.deriv(Complex64::new(2.0, 0.0)).unwrap(), Complex64::new(4.0, 0.0));
}

#[test]
fn bergweiler_values() {
    let m = catalog("bergweiler").unwrap();
    let l2 = Complex64::new(2f64.ln(), 0.0);
    assert!((m.eval(l2).unwrap() - l2).norm() < 1e-15);
    assert!(m.deriv(l2).unwrap().norm() < 1e-15);
    let t = m.translation.unwrap();
    let z = Complex64::new(-0.3, 0.7);
    let shifted = m.eval(z + t.period).unwrap();
    assert!((shifted - m.eval(z).unwrap() - t.period * t.multiplier as f64).norm() < 1e-12);
}

#[test]
fn malformed_text_is_rejected() {
    assert!(matches!(parse("(z"), Err(Error::Syntax { .. })));
    assert!(matches!(parse("z z"), Err(Error::Syntax { .. })));
    assert!(matches!(parse("exp z"), Err(Error::Syntax { .. })));
    assert!(matches!(parse("sin(z)/z"), Err(Error::NonEntire { .. })));
}
