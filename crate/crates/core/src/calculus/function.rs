use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::jet::{Jet, MAX_JET_LEN};
use crate::error::{Error, Result};

type EvalFn = dyn Fn(f64, usize) -> Jet + Send + Sync;

/// A scalar function carried with its derivatives up to `max_order`.
///
/// Cloning is cheap; the evaluator is shared.
#[derive(Clone)]
pub struct SmoothFunction {
    name: Arc<str>,
    max_order: usize,
    zero: bool,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for SmoothFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothFunction({}, order ≤ {})", self.name, self.max_order)
    }
}

impl SmoothFunction {
    /// `eval(x, n)` must return a jet of order exactly `n` for every `n ≤ max_order`.
    pub fn new(
        name: impl Into<String>,
        max_order: usize,
        eval: impl Fn(f64, usize) -> Jet + Send + Sync + 'static,
    ) -> SmoothFunction {
        SmoothFunction {
            name: Arc::from(name.into()),
            max_order: max_order.min(MAX_JET_LEN - 1),
            zero: false,
            eval: Arc::new(eval),
        }
    }

    pub fn zero() -> SmoothFunction {
        let mut f = SmoothFunction::new("0", MAX_JET_LEN - 1, |_, n| Jet::constant(0.0, n));
        f.zero = true;
        f
    }

    pub fn constant(c: f64) -> SmoothFunction {
        if c == 0.0 {
            return SmoothFunction::zero();
        }
        SmoothFunction::new(format!("{c}"), MAX_JET_LEN - 1, move |_, n| Jet::constant(c, n))
    }

    pub fn identity() -> SmoothFunction {
        SmoothFunction::new("x", MAX_JET_LEN - 1, Jet::variable)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> SmoothFunction {
        self.name = Arc::from(name.into());
        self
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// True only for functions built as the zero function (no numerical test).
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn jet(&self, x: f64, order: usize) -> Result<Jet> {
        self.require(order)?;
        Ok((self.eval)(x, order))
    }

    /// Jet without the order check; callers must have validated `order` beforehand.
    pub(crate) fn jet_unchecked(&self, x: f64, order: usize) -> Jet {
        debug_assert!(order <= self.max_order);
        (self.eval)(x, order)
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.eval)(x, 0).value()
    }

    pub fn require(&self, order: usize) -> Result<()> {
        if order > self.max_order {
            return Err(Error::JetOrder {
                function: self.name.to_string(),
                requested: order,
                available: self.max_order,
            });
        }
        Ok(())
    }

    pub fn derivative(&self) -> Result<SmoothFunction> {
        self.require(1)?;
        if self.zero {
            return Ok(SmoothFunction::zero());
        }
        let f = self.clone();
        Ok(SmoothFunction::new(
            format!("({})'", self.name),
            self.max_order - 1,
            move |x, n| f.jet_unchecked(x, n + 1).derivative(),
        ))
    }

    pub fn scale(&self, s: f64) -> SmoothFunction {
        if self.zero || s == 0.0 {
            return SmoothFunction::zero();
        }
        let f = self.clone();
        SmoothFunction::new(format!("{s}·{}", self.name), self.max_order, move |x, n| {
            f.jet_unchecked(x, n).scale(s)
        })
    }

    fn combine(
        &self,
        other: &SmoothFunction,
        op: &str,
        f: impl Fn(Jet, Jet) -> Jet + Send + Sync + 'static,
    ) -> SmoothFunction {
        let (a, b) = (self.clone(), other.clone());
        SmoothFunction::new(
            format!("({} {op} {})", self.name, other.name),
            self.max_order.min(other.max_order),
            move |x, n| f(a.jet_unchecked(x, n), b.jet_unchecked(x, n)),
        )
    }
}

impl Add for &SmoothFunction {
    type Output = SmoothFunction;
    fn add(self, rhs: &SmoothFunction) -> SmoothFunction {
        match (self.zero, rhs.zero) {
            (true, _) => rhs.clone(),
            (_, true) => self.clone(),
            _ => self.combine(rhs, "+", |a, b| a + b),
        }
    }
}

impl Sub for &SmoothFunction {
    type Output = SmoothFunction;
    fn sub(self, rhs: &SmoothFunction) -> SmoothFunction {
        if rhs.zero {
            return self.clone();
        }
        self.combine(rhs, "-", |a, b| a - b)
    }
}

impl Mul for &SmoothFunction {
    type Output = SmoothFunction;
    fn mul(self, rhs: &SmoothFunction) -> SmoothFunction {
        if self.zero || rhs.zero {
            return SmoothFunction::zero();
        }
        self.combine(rhs, "·", |a, b| a * b)
    }
}

impl Neg for &SmoothFunction {
    type Output = SmoothFunction;
    fn neg(self) -> SmoothFunction {
        self.scale(-1.0)
    }
}
