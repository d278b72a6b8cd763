//! Named test functions with closed-form derivatives, selectable by string key.
//!
//! | key | function |
//! |---|---|
//! | `zero` | 0 |
//! | `const:c` | c |
//! | `linear:a` | a·x |
//! | `affine:a:c` | a·x + c |
//! | `sin-offset:a:c` | a·sin x + c (defaults a=1, c=2) |
//! | `logistic-tanh:a:c` | a/(1+e^{−x}) + c (defaults a=1, c=0) |

use super::function::SmoothFunction;
use super::jet::Jet;
use crate::error::{Error, Result};

/// Highest derivative order provided by every fixture.
pub const FIXTURE_MAX_ORDER: usize = 8;

pub fn fixture(key: &str) -> Result<SmoothFunction> {
    let key = key.trim();
    let mut parts = key.split(':');
    let head = parts.next().unwrap_or_default();
    let args: Vec<f64> = parts
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::UnknownFixture(key.to_string()))?;
    let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
    let arity = |max: usize| {
        if args.len() > max {
            Err(Error::UnknownFixture(key.to_string()))
        } else {
            Ok(())
        }
    };
    let f = match head {
        "zero" => {
            arity(0)?;
            SmoothFunction::zero()
        }
        "const" => {
            arity(1)?;
            SmoothFunction::constant(arg(0, 1.0))
        }
        "linear" => {
            arity(1)?;
            affine(arg(0, 1.0), 0.0)
        }
        "affine" => {
            arity(2)?;
            affine(arg(0, 1.0), arg(1, 0.0))
        }
        "sin-offset" => {
            arity(2)?;
            sin_offset(arg(0, 1.0), arg(1, 2.0))
        }
        "logistic-tanh" => {
            arity(2)?;
            logistic(arg(0, 1.0), arg(1, 0.0))
        }
        _ => return Err(Error::UnknownFixture(key.to_string())),
    };
    Ok(f.with_name(key))
}

pub fn affine(a: f64, c: f64) -> SmoothFunction {
    if a == 0.0 {
        return SmoothFunction::constant(c);
    }
    SmoothFunction::new(format!("{a}x+{c}"), FIXTURE_MAX_ORDER, move |x, n| {
        Jet::from_fn(n, |k| match k {
            0 => a * x + c,
            1 => a,
            _ => 0.0,
        })
    })
}

pub fn sin_offset(a: f64, c: f64) -> SmoothFunction {
    SmoothFunction::new(format!("{a}sin+{c}"), FIXTURE_MAX_ORDER, move |x, n| {
        let (s, co) = x.sin_cos();
        Jet::from_fn(n, |k| {
            let base = match k % 4 {
                0 => s,
                1 => co,
                2 => -s,
                _ => -co,
            };
            a * base + if k == 0 { c } else { 0.0 }
        })
    })
}

/// Coefficients of `P_n(t)` with `d^n/du^n tanh(u) = P_n(tanh u)`.
fn tanh_derivative_polys(max: usize) -> Vec<Vec<f64>> {
    let mut polys = vec![vec![0.0, 1.0]];
    for n in 0..max {
        let p = &polys[n];
        // P_{n+1} = P_n'(t)·(1 − t²)
        let dp: Vec<f64> = (1..p.len()).map(|i| i as f64 * p[i]).collect();
        let mut next = vec![0.0; dp.len() + 2];
        for (i, &c) in dp.iter().enumerate() {
            next[i] += c;
            next[i + 2] -= c;
        }
        polys.push(next);
    }
    polys
}

fn horner(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

/// `a·logistic(x) + c`, using `logistic(x) = ½(1 + tanh(x/2))`.
pub fn logistic(a: f64, c: f64) -> SmoothFunction {
    let polys = tanh_derivative_polys(FIXTURE_MAX_ORDER);
    SmoothFunction::new(format!("{a}logistic+{c}"), FIXTURE_MAX_ORDER, move |x, n| {
        let t = (0.5 * x).tanh();
        Jet::from_fn(n, |k| {
            let d = 0.5 * 0.5f64.powi(k as i32) * horner(&polys[k], t);
            a * d + if k == 0 { 0.5 * a + c } else { 0.0 }
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_difference(f: &SmoothFunction, k: usize, x: f64) -> f64 {
        let eps = 1e-5;
        let g = |y: f64| f.jet(y, k).unwrap().get(k);
        (g(x + eps) - g(x - eps)) / (2.0 * eps)
    }

    #[test]
    fn every_derivative_matches_finite_differences() {
        for key in ["affine:1.5:0.3", "sin-offset", "logistic-tanh:2:1", "linear:-2"] {
            let f = fixture(key).unwrap();
            for &x in &[-1.7, -0.2, 0.0, 0.9, 2.4] {
                for k in 0..FIXTURE_MAX_ORDER {
                    let exact = f.jet(x, k + 1).unwrap().get(k + 1);
                    let fd = central_difference(&f, k, x);
                    assert!(
                        (exact - fd).abs() < 1e-6 * (1.0 + exact.abs()),
                        "{key} order {} at {x}: {exact} vs {fd}",
                        k + 1
                    );
                }
            }
        }
    }

    #[test]
    fn logistic_values() {
        let f = fixture("logistic-tanh").unwrap();
        let j = f.jet(0.0, 2).unwrap();
        assert!((j.get(0) - 0.5).abs() < 1e-15);
        assert!((j.get(1) - 0.25).abs() < 1e-15);
        assert!(j.get(2).abs() < 1e-15);
        let x = 1.3f64;
        assert!((f.value(x) - 1.0 / (1.0 + (-x).exp())).abs() < 1e-15);
    }

    #[test]
    fn prefixes_agree_across_orders() {
        let f = fixture("sin-offset:0.7:2").unwrap();
        let hi = f.jet(0.4, 8).unwrap();
        for n in 0..8 {
            assert_eq!(f.jet(0.4, n).unwrap().coeffs(), &hi.coeffs()[..=n]);
        }
    }

    #[test]
    fn registry_parsing() {
        assert!(fixture("zero").unwrap().is_zero());
        assert_eq!(fixture("const:3").unwrap().value(9.0), 3.0);
        assert_eq!(fixture("sin-offset").unwrap().value(0.0), 2.0);
        assert!(matches!(fixture("cosh"), Err(Error::UnknownFixture(_))));
        assert!(matches!(fixture("affine:1:2:3"), Err(Error::UnknownFixture(_))));
        assert!(matches!(fixture("linear:abc"), Err(Error::UnknownFixture(_))));
    }
}
