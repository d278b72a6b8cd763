//! One-step schemes, their formal expansions and the regime table.

mod expansion;
mod regime;

pub use expansion::{expansion_of, fbar, term_size, ExpansionTerm, StepExpansion};
pub use regime::{
    classify_regime, classify_with_model, vanishing_order, Coefficient, CoefficientTerm, Condition, Convergence,
    ErrorStatus, LimitKind, RegimeReport,
};

use std::fmt;
use std::str::FromStr;

use crate::calculus::{d_tower, Jet, SdeModel, SmoothFunction, MAX_JET_LEN};
use crate::error::{Error, Result};
use crate::fbm::FbmPath;
use crate::reference::{SolutionMeta, SolutionPath};

/// Fixed-point settings for the implicit trapezoidal step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnSolver {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CnSolver {
    fn default() -> Self {
        CnSolver {
            tol: 1e-13,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub enum SchemeSpec {
    EulerMaruyama,
    /// `(k)`-Milstein, `k ≥ 2`.
    Milstein(usize),
    CrankNicolson(CnSolver),
    Custom(StepExpansion),
}

impl SchemeSpec {
    pub fn milstein(k: usize) -> Result<SchemeSpec> {
        if k < 2 {
            return Err(Error::InvalidScheme(format!("Milstein order must be ≥ 2, got {k}")));
        }
        if k + 1 >= MAX_JET_LEN {
            return Err(Error::InvalidScheme(format!("Milstein order {k} exceeds jet capacity")));
        }
        Ok(SchemeSpec::Milstein(k))
    }

    pub fn cn() -> SchemeSpec {
        SchemeSpec::CrankNicolson(CnSolver::default())
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeSpec::EulerMaruyama => write!(f, "em"),
            SchemeSpec::Milstein(k) => write!(f, "milstein:{k}"),
            SchemeSpec::CrankNicolson(_) => write!(f, "cn"),
            SchemeSpec::Custom(_) => write!(f, "custom"),
        }
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<SchemeSpec> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "em" => Ok(SchemeSpec::EulerMaruyama),
            "cn" => Ok(SchemeSpec::cn()),
            _ => {
                let k = s
                    .strip_prefix("milstein:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| {
                        Error::InvalidScheme(format!(
                            "{s:?} (expected \"em\", \"milstein:k\" or \"cn\")"
                        ))
                    })?;
                SchemeSpec::milstein(k)
            }
        }
    }
}

/// `y + σ(y)dB + b(y)dt`.
pub fn em_step(model: &SdeModel, y: f64, db: f64, dt: f64) -> f64 {
    y + model.sigma.value(y) * db + model.b.value(y) * dt
}

pub fn milstein_step(model: &SdeModel, k: usize, y: f64, db: f64, dt: f64) -> Result<f64> {
    Stepper::new(&SchemeSpec::milstein(k)?, model, false)?.step(y, db, dt)
}

pub fn cn_step(
    model: &SdeModel,
    y: f64,
    db: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    Stepper::new(&SchemeSpec::CrankNicolson(CnSolver { tol, max_iter }), model, false)?
        .step(y, db, dt)
}

enum Kind {
    Em,
    Milstein(usize),
    Cn(CnSolver),
    Custom(StepExpansion),
}

/// A scheme bound to a model with derivative orders validated once.
pub struct Stepper {
    kind: Kind,
    sigma: SmoothFunction,
    b: SmoothFunction,
    b_zero: bool,
    jacobian: bool,
}

impl Stepper {
    /// With `jacobian`, [`step_with_jacobian`](Self::step_with_jacobian) is
    /// available (Milstein only).
    pub fn new(spec: &SchemeSpec, model: &SdeModel, jacobian: bool) -> Result<Stepper> {
        let b_zero = model.b_vanishes();
        let need_b = |n: usize| if b_zero { Ok(()) } else { model.b.require(n) };
        let kind = match spec {
            SchemeSpec::EulerMaruyama => Kind::Em,
            SchemeSpec::Milstein(k) => {
                let k = *k;
                if k < 2 {
                    return Err(Error::InvalidScheme(format!("Milstein order must be ≥ 2, got {k}")));
                }
                model.sigma.require(if jacobian { k } else { k - 1 })?;
                need_b(if jacobian { 2 } else { 1 })?;
                Kind::Milstein(k)
            }
            SchemeSpec::CrankNicolson(s) => {
                model.sigma.require(1)?;
                need_b(1)?;
                Kind::Cn(*s)
            }
            SchemeSpec::Custom(e) => {
                e.validate(model)?;
                Kind::Custom(e.clone())
            }
        };
        if jacobian && !matches!(kind, Kind::Milstein(_)) {
            return Err(Error::InvalidScheme(format!(
                "Jacobian propagation is only implemented for Milstein schemes, not {spec}"
            )));
        }
        Ok(Stepper {
            kind,
            sigma: model.sigma.clone(),
            b: model.b.clone(),
            b_zero,
            jacobian,
        })
    }

    pub fn step(&self, y: f64, db: f64, dt: f64) -> Result<f64> {
        match &self.kind {
            Kind::Em => {
                let mut out = y + self.sigma.value(y) * db;
                if !self.b_zero {
                    out += self.b.value(y) * dt;
                }
                Ok(out)
            }
            Kind::Milstein(k) => Ok(self.milstein(*k, y, db, dt, false).0),
            Kind::Cn(s) => self.cn(*s, y, db, dt),
            Kind::Custom(e) => Ok(y + e.increment(y, db, dt)),
        }
    }

    /// Next value and the Jacobian multiplier `∂y⁺/∂y` of the Milstein map.
    pub fn step_with_jacobian(&self, y: f64, db: f64, dt: f64) -> (f64, f64) {
        match self.kind {
            Kind::Milstein(k) if self.jacobian => self.milstein(k, y, db, dt, true),
            _ => panic!("stepper was not prepared for Jacobian propagation"),
        }
    }

    fn milstein(&self, k: usize, y: f64, db: f64, dt: f64, jac: bool) -> (f64, f64) {
        let order = if jac { k } else { k - 1 };
        let sj = self.sigma.jet_unchecked(y, order);
        let mut tower = [Jet::constant(0.0, 0); MAX_JET_LEN];
        d_tower(&sj, k, &mut tower);
        let mut inc = 0.0;
        let mut dinc = 0.0;
        let mut p = 1.0;
        for (l, t) in tower.iter().enumerate().take(k) {
            p *= db / (l + 1) as f64;
            inc += t.value() * p;
            if jac {
                dinc += t.get(1) * p;
            }
        }
        if !self.b_zero {
            let bj = self.b.jet_unchecked(y, if jac { 2 } else { 1 });
            let (s0, s1) = (sj.get(0), sj.get(1));
            let (b0, b1) = (bj.get(0), bj.get(1));
            inc += b0 * dt + 0.5 * b0 * b1 * dt * dt + 0.5 * (s1 * b0 + b1 * s0) * dt * db;
            if jac {
                let (s2, b2) = (sj.get(2), bj.get(2));
                dinc += b1 * dt
                    + 0.5 * (b1 * b1 + b0 * b2) * dt * dt
                    + 0.5 * (s2 * b0 + 2.0 * s1 * b1 + b2 * s0) * dt * db;
            }
        }
        (y + inc, 1.0 + dinc)
    }

    fn cn(&self, solver: CnSolver, y: f64, db: f64, dt: f64) -> Result<f64> {
        let s0 = self.sigma.jet_unchecked(y, 1);
        let (b0, b1) = if self.b_zero {
            (0.0, 0.0)
        } else {
            let j = self.b.jet_unchecked(y, 1);
            (j.get(0), j.get(1))
        };
        let fixed = 0.5 * s0.get(0) * db + 0.5 * b0 * dt;
        let g = |z: f64| {
            let bz = if self.b_zero { 0.0 } else { self.b.value(z) };
            y + fixed + 0.5 * self.sigma.value(z) * db + 0.5 * bz * dt
        };
        // (2)-Milstein predictor
        let mut z = y
            + s0.get(0) * db
            + 0.5 * s0.get(1) * s0.get(0) * db * db
            + b0 * dt
            + 0.5 * b0 * b1 * dt * dt
            + 0.5 * (s0.get(1) * b0 + b1 * s0.get(0)) * dt * db;
        let mut residual = f64::INFINITY;
        for _ in 0..solver.max_iter {
            let next = g(z);
            residual = (next - z).abs();
            z = next;
            if residual < solver.tol * z.abs().max(1.0) {
                return Ok(z);
            }
        }
        // fixed-point iteration stalls once ½|σ′δB| approaches 1; Newton on z − g(z)
        for _ in 0..solver.max_iter {
            let sz = self.sigma.jet_unchecked(z, 1);
            let bz = if self.b_zero { 0.0 } else { self.b.jet_unchecked(z, 1).get(1) };
            let slope = 1.0 - 0.5 * sz.get(1) * db - 0.5 * bz * dt;
            let f = z - g(z);
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            z -= f / slope;
            residual = (z - g(z)).abs();
            if residual < solver.tol * z.abs().max(1.0) {
                return Ok(z);
            }
        }
        Err(Error::ImplicitSolve {
            y,
            db,
            dt,
            residual,
        })
    }
}

/// Integrates the scheme along `path` starting from `model.y0`.
pub fn run_scheme(spec: &SchemeSpec, model: &SdeModel, path: &FbmPath) -> Result<SolutionPath> {
    let stepper = Stepper::new(spec, model, false)?;
    let dt = path.grid().step();
    let mut values = Vec::with_capacity(path.grid().len());
    let mut y = model.y0;
    values.push(y);
    for (r, w) in path.values().windows(2).enumerate() {
        y = stepper.step(y, w[1] - w[0], dt).map_err(|e| Error::Step {
            step: r,
            source: Box::new(e),
        })?;
        values.push(y);
    }
    SolutionPath::new(
        path.grid(),
        values,
        None,
        SolutionMeta {
            scheme: spec.to_string(),
            model: model.id(),
        },
    )
}
