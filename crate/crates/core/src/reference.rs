//! High-order proxy for the exact solution `Y` and the Jacobian `J = ∂Y/∂y0`.

use serde::{Deserialize, Serialize};

use crate::calculus::{d_tower, factorial, Jet, SdeModel, MAX_JET_LEN};
use crate::error::{Error, Result};
use crate::fbm::{DyadicGrid, FbmPath};
use crate::schemes::{SchemeSpec, Stepper};

/// Extra Milstein orders above `q + 1` used by default for reference runs.
pub const DEFAULT_ORDER_MARGIN: usize = 1;

/// Default number of levels between the finest scheme level and the reference.
pub const DEFAULT_REFERENCE_GAP: u32 = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionMeta {
    pub scheme: String,
    pub model: String,
}

/// A trajectory on a grid, optionally with the Jacobian at the same points.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    grid: DyadicGrid,
    values: Vec<f64>,
    jacobian: Option<Vec<f64>>,
    meta: SolutionMeta,
}

impl SolutionPath {
    pub fn new(
        grid: DyadicGrid,
        values: Vec<f64>,
        jacobian: Option<Vec<f64>>,
        meta: SolutionMeta,
    ) -> Result<SolutionPath> {
        if values.len() != grid.len() {
            return Err(Error::Length(format!(
                "{} solution values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = &jacobian {
            if j.len() != grid.len() {
                return Err(Error::Length(format!(
                    "{} Jacobian values for {} grid points",
                    j.len(),
                    grid.len()
                )));
            }
            if let Some(index) = j.iter().position(|&v| !(v > 0.0)) {
                return Err(Error::NonPositiveJacobian { index, value: j[index] });
            }
        }
        Ok(SolutionPath {
            grid,
            values,
            jacobian,
            meta,
        })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jacobian(&self) -> Option<&[f64]> {
        self.jacobian.as_deref()
    }

    pub fn meta(&self) -> &SolutionMeta {
        &self.meta
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn restrict(&self, coarser: u32) -> Result<SolutionPath> {
        let grid = self.grid.coarsen(coarser)?;
        let stride = 1usize << (self.grid.level() - coarser);
        let sub = |v: &[f64]| v.iter().step_by(stride).copied().collect::<Vec<_>>();
        Ok(SolutionPath {
            grid,
            values: sub(&self.values),
            jacobian: self.jacobian.as_deref().map(sub),
            meta: self.meta.clone(),
        })
    }
}

fn check_same_grid(path: &FbmPath, sol: &SolutionPath) -> Result<()> {
    if path.grid() != sol.grid() {
        return Err(Error::Length(format!(
            "path grid {:?} differs from solution grid {:?}",
            path.grid(),
            sol.grid()
        )));
    }
    Ok(())
}

/// `(q + 1 + order_margin)`-Milstein run on `path` together with its Jacobian.
pub fn reference_solution(
    model: &SdeModel,
    path: &FbmPath,
    order_margin: usize,
) -> Result<SolutionPath> {
    let k = path.hurst().q() as usize + 1 + order_margin;
    let spec = SchemeSpec::milstein(k)?;
    let stepper = Stepper::new(&spec, model, true)?;
    let dt = path.grid().step();
    let n = path.grid().len();
    let mut values = Vec::with_capacity(n);
    let mut jac = Vec::with_capacity(n);
    let (mut y, mut j) = (model.y0, 1.0);
    values.push(y);
    jac.push(j);
    for (r, w) in path.values().windows(2).enumerate() {
        let (yn, factor) = stepper.step_with_jacobian(y, w[1] - w[0], dt);
        y = yn;
        j *= factor;
        if !(j > 0.0) {
            return Err(Error::NonPositiveJacobian { index: r + 1, value: j });
        }
        values.push(y);
        jac.push(j);
    }
    SolutionPath::new(
        path.grid(),
        values,
        Some(jac),
        SolutionMeta {
            scheme: spec.to_string(),
            model: model.id(),
        },
    )
}

/// Jacobian of the augmented Milstein system along an existing reference run.
///
/// The order is read from `y_ref`'s scheme descriptor.
pub fn jacobian_path(model: &SdeModel, path: &FbmPath, y_ref: &SolutionPath) -> Result<Vec<f64>> {
    check_same_grid(path, y_ref)?;
    let spec: SchemeSpec = y_ref.meta().scheme.parse()?;
    let stepper = Stepper::new(&spec, model, true)?;
    let dt = path.grid().step();
    let mut out = Vec::with_capacity(path.grid().len());
    let mut j = 1.0;
    out.push(j);
    for (r, (w, &y)) in path.values().windows(2).zip(y_ref.values()).enumerate() {
        j *= stepper.step_with_jacobian(y, w[1] - w[0], dt).1;
        if !(j > 0.0) {
            return Err(Error::NonPositiveJacobian { index: r + 1, value: j });
        }
        out.push(j);
    }
    Ok(out)
}

/// Running product `Π_r (1 + Ξ′[σ; Y, τ_r, τ_{r+1}] + b′(Y_{τ_r})δt)` with the
/// Taylor sum truncated at `q`.
pub fn discrete_jacobian_product(
    model: &SdeModel,
    path: &FbmPath,
    y_ref: &SolutionPath,
) -> Result<Vec<f64>> {
    check_same_grid(path, y_ref)?;
    let q = path.hurst().q() as usize;
    if q + 1 > MAX_JET_LEN {
        return Err(Error::InvalidScheme(format!("q = {q} exceeds jet capacity")));
    }
    model.sigma.require(q)?;
    let b_zero = model.b_vanishes();
    if !b_zero {
        model.b.require(1)?;
    }
    let dt = path.grid().step();
    let inv_fact: Vec<f64> = (0..=q).map(|k| 1.0 / factorial(k)).collect();
    let mut tower = [Jet::constant(0.0, 0); MAX_JET_LEN];
    let mut out = Vec::with_capacity(path.grid().len());
    let mut m = 1.0;
    out.push(m);
    for (r, (w, &y)) in path.values().windows(2).zip(y_ref.values()).enumerate() {
        let db = w[1] - w[0];
        d_tower(&model.sigma.jet(y, q)?, q, &mut tower);
        let mut factor = 1.0;
        let mut p = 1.0;
        for (k, t) in tower.iter().enumerate().take(q) {
            p *= db;
            factor += inv_fact[k + 1] * t.get(1) * p;
        }
        if !b_zero {
            factor += model.b.jet(y, 1)?.get(1) * dt;
        }
        if !(factor > 0.0) {
            return Err(Error::NonPositiveJacobian { index: r, value: factor });
        }
        m *= factor;
        out.push(m);
    }
    Ok(out)
}
