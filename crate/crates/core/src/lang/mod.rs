//! Expression language for entire functions and the catalog of example maps.

mod eval;
mod expr;
mod parse;

use std::f64::consts::PI;

use num_complex::Complex64;

pub use eval::{Overflow, Program, SATURATION};
pub use expr::{add, div, mul, neg, sub, Expr};
pub use parse::parse;

use crate::error::{Error, Result};
use crate::plane::Window;

/// Deck translation `T` with `f(z + T) = f(z) + m*T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Translation {
    pub period: Complex64,
    pub multiplier: i32,
}

/// An entire function together with its derivative and singular data.
#[derive(Debug, Clone)]
pub struct EntireMap {
    pub name: String,
    pub expr: Expr,
    pub derivative: Expr,
    /// Critical point representatives; translates by `translation.period` are also critical.
    pub critical_seeds: Vec<Complex64>,
    pub asymptotic_values: Vec<Complex64>,
    pub translation: Option<Translation>,
    /// A point known to lie in a Baker domain, used as default probe.
    pub baker_probe: Option<Complex64>,
    f: Program,
    df: Program,
}

impl EntireMap {
    pub fn from_expr(name: &str, expr: Expr) -> EntireMap {
        let derivative = expr.derivative();
        EntireMap {
            name: name.to_string(),
            f: Program::compile(&expr),
            df: Program::compile(&derivative),
            expr,
            derivative,
            critical_seeds: Vec::new(),
            asymptotic_values: Vec::new(),
            translation: None,
            baker_probe: None,
        }
    }

    /// Parses an inline expression; singular metadata stays empty.
    pub fn parse(name: &str, text: &str) -> Result<EntireMap> {
        Ok(EntireMap::from_expr(name, parse(text)?))
    }

    /// Catalog name or inline expression.
    pub fn resolve(spec: &str) -> Result<EntireMap> {
        match catalog(spec) {
            Ok(m) => Ok(m),
            Err(Error::UnknownMap(_)) => EntireMap::parse(spec, spec),
            Err(e) => Err(e),
        }
    }

    #[inline]
    pub fn eval(&self, z: Complex64) -> std::result::Result<Complex64, Overflow> {
        self.f.eval(z)
    }

    #[inline]
    pub fn deriv(&self, z: Complex64) -> std::result::Result<Complex64, Overflow> {
        self.df.eval(z)
    }

    /// Critical points inside a window, from the seeds and their translates.
    pub fn critical_points_in(&self, w: &Window) -> Vec<Complex64> {
        let mut out = Vec::new();
        for &c in &self.critical_seeds {
            match self.translation {
                Some(t) => {
                    let span = (w.half_width.hypot(w.half_height) + (c - w.center).norm()) / t.period.norm();
                    let k_max = span.ceil() as i64 + 1;
                    for k in -k_max..=k_max {
                        let p = c + t.period * k as f64;
                        if w.contains(p) {
                            out.push(p);
                        }
                    }
                }
                None => {
                    if w.contains(c) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

pub const CATALOG: [&str; 5] = ["bergweiler", "fatou", "baker-dominguez", "hyp2", "parabolic"];

/// Named example maps.
pub fn catalog(name: &str) -> Result<EntireMap> {
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let (text, crit, translation, probe): (&str, Vec<Complex64>, Translation, Complex64) = match name {
        "bergweiler" => (
            "2 - log(2) + 2*z - exp(z)",
            vec![Complex64::new(2f64.ln(), 0.0)],
            Translation { period: two_pi_i, multiplier: 2 },
            Complex64::new(-10.0, 0.0),
        ),
        "fatou" => (
            "z + 1 + exp(-z)",
            vec![Complex64::new(0.0, 0.0)],
            Translation { period: two_pi_i, multiplier: 1 },
            Complex64::new(5.0, 0.0),
        ),
        "baker-dominguez" => (
            "z + exp(-z)",
            vec![Complex64::new(0.0, 0.0)],
            Translation { period: two_pi_i, multiplier: 1 },
            Complex64::new(5.0, 0.0),
        ),
        "hyp2" => (
            "z + 1.8 + 0.6*sin(z)",
            vec![Complex64::new(PI, 3f64.ln()), Complex64::new(PI, -(3f64.ln()))],
            Translation { period: Complex64::new(2.0 * PI, 0.0), multiplier: 1 },
            Complex64::new(0.0, 0.0),
        ),
        "parabolic" => (
            "z + log((sqrt(5) - 1)/2) + exp(z)",
            vec![Complex64::new(0.0, PI)],
            Translation { period: two_pi_i, multiplier: 1 },
            Complex64::new(-5.0, 0.0),
        ),
        _ => return Err(Error::UnknownMap(name.to_string())),
    };
    let mut m = EntireMap::parse(name, text)?;
    m.critical_seeds = crit;
    m.translation = Some(translation);
    m.baker_probe = Some(probe);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bergweiler_derivative_text() {
        let m = catalog("bergweiler").unwrap();
        assert_eq!(m.derivative.to_string(), "2.0 - exp(z)");
        let f = catalog("fatou").unwrap();
        assert_eq!(f.derivative.to_string(), "1.0 - exp(-z)");
    }

    #[test]
    fn rejects_non_entire() {
        assert!(matches!(parse("1/z"), Err(Error::NonEntire { .. })));
        assert!(matches!(parse("log(z)"), Err(Error::NonEntire { .. })));
        assert!(matches!(parse("sqrt(z+1)"), Err(Error::NonEntire { .. })));
        assert!(matches!(parse("z/(1-1)"), Err(Error::NonEntire { .. })));
        assert!(matches!(parse("2*"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("foo(z)"), Err(Error::Syntax { .. })));
        match parse("z + $") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn saturation_marker() {
        let m = EntireMap::parse("e", "exp(z)").unwrap();
        assert!(m.eval(Complex64::new(699.0, 0.0)).is_ok());
        assert_eq!(m.eval(Complex64::new(701.0, 0.0)), Err(Overflow));
        let s = EntireMap::parse("s", "sin(z)").unwrap();
        assert_eq!(s.eval(Complex64::new(0.0, 800.0)), Err(Overflow));
    }
}
