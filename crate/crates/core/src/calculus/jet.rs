use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Capacity of a [`Jet`]: derivatives of order `0..MAX_JET_LEN`.
pub const MAX_JET_LEN: usize = 16;

/// Derivatives `[f(x), f'(x), …, f^{(N)}(x)]` at an implicit point.
///
/// Arithmetic truncates to the smaller order of its operands, so the result of
/// an operation on order-`N` jets is exact to order `N`.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    len: usize,
    c: [f64; MAX_JET_LEN],
}

impl Jet {
    /// Builds a jet from derivative values; panics beyond [`MAX_JET_LEN`].
    pub fn new(coeffs: &[f64]) -> Jet {
        assert!(
            !coeffs.is_empty() && coeffs.len() <= MAX_JET_LEN,
            "jet length {} outside 1..={MAX_JET_LEN}",
            coeffs.len()
        );
        let mut c = [0.0; MAX_JET_LEN];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Jet {
            len: coeffs.len(),
            c,
        }
    }

    /// Jet of length `order + 1` filled from `f(k)`.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize) -> f64) -> Jet {
        assert!(order < MAX_JET_LEN, "jet order {order} exceeds capacity");
        let mut c = [0.0; MAX_JET_LEN];
        for (k, slot) in c.iter_mut().enumerate().take(order + 1) {
            *slot = f(k);
        }
        Jet { len: order + 1, c }
    }

    pub fn constant(value: f64, order: usize) -> Jet {
        Jet::from_fn(order, |k| if k == 0 { value } else { 0.0 })
    }

    /// Jet of the identity map at `x`.
    pub fn variable(x: f64, order: usize) -> Jet {
        Jet::from_fn(order, |k| match k {
            0 => x,
            1 => 1.0,
            _ => 0.0,
        })
    }

    pub fn order(&self) -> usize {
        self.len - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.len]
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// The `k`-th derivative value.
    pub fn get(&self, k: usize) -> f64 {
        assert!(k < self.len, "derivative {k} not carried by an order-{} jet", self.order());
        self.c[k]
    }

    /// Jet of `f'`, one order shorter.
    pub fn derivative(&self) -> Jet {
        assert!(self.len >= 2, "derivative of an order-0 jet");
        let mut c = [0.0; MAX_JET_LEN];
        c[..self.len - 1].copy_from_slice(&self.c[1..self.len]);
        Jet {
            len: self.len - 1,
            c,
        }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let mut out = *self;
        out.len = self.len.min(order + 1);
        out.c[out.len..].fill(0.0);
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = *self;
        for v in &mut out.c[..out.len] {
            *v *= s;
        }
        out
    }

    /// `n`-fold power by repeated Leibniz products.
    pub fn powi(&self, n: u32) -> Jet {
        let mut acc = Jet::constant(1.0, self.order());
        for _ in 0..n {
            acc = acc * *self;
        }
        acc
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coeffs()).finish()
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let len = self.len.min(rhs.len);
        let mut c = [0.0; MAX_JET_LEN];
        for k in 0..len {
            c[k] = self.c[k] + rhs.c[k];
        }
        Jet { len, c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Leibniz rule: `(uv)^{(n)} = Σ_k C(n,k) u^{(k)} v^{(n−k)}`.
impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let len = self.len.min(rhs.len);
        let mut c = [0.0; MAX_JET_LEN];
        for (n, slot) in c.iter_mut().enumerate().take(len) {
            let mut binom = 1.0;
            let mut acc = 0.0;
            for k in 0..=n {
                acc += binom * self.c[k] * rhs.c[n - k];
                binom = binom * (n - k) as f64 / (k + 1) as f64;
            }
            *slot = acc;
        }
        Jet { len, c }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}
