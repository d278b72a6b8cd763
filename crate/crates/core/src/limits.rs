//! Limit objects of normalized errors: pathwise drift integrals
//! `J·∫J⁻¹g(Y)dt` and conditional variances of mixed-normal limits.

use serde::Serialize;

use crate::calculus::{
    apply_v, cn_g3, gaussian_moment_kappa, milstein_g12, milstein_g_k1, milstein_gbar, SdeModel,
    SmoothFunction,
};
use crate::error::{Error, Result};
use crate::fbm::{DyadicGrid, FbmPath, Hurst};
use crate::reference::SolutionPath;
use crate::schemes::{classify_with_model, Coefficient, LimitKind, RegimeReport, SchemeSpec};
use crate::variations::c_l_constant;

/// Tolerance used for `C_(3)` in mixed-normal predictions.
pub const CONSTANT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PredictionKind {
    /// `values` is the limit path itself.
    AlmostSure,
    /// `values` is the conditional variance path given `B`.
    MixedNormal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPrediction {
    pub kind: PredictionKind,
    pub grid: DyadicGrid,
    pub values: Vec<f64>,
    pub constants: Vec<(String, f64)>,
}

impl LimitPrediction {
    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

fn jacobian(y_ref: &SolutionPath) -> Result<&[f64]> {
    y_ref.jacobian().ok_or(Error::MissingJacobian)
}

/// `t ↦ J_t Σ_{τ_r < t} J_{τ_r}⁻¹ w(Y_{τ_r}) δt`, left-point rule.
fn weighted_integral(
    y_ref: &SolutionPath,
    integrand: impl Fn(f64, f64) -> Result<f64>,
    outer: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let j = jacobian(y_ref)?;
    let dt = y_ref.grid().step();
    let mut out = Vec::with_capacity(j.len());
    let mut acc = 0.0;
    out.push(0.0);
    for (r, &y) in y_ref.values()[..j.len() - 1].iter().enumerate() {
        acc += integrand(y, j[r])? * dt;
        out.push(outer(j[r + 1]) * acc);
    }
    Ok(out)
}

/// Pathwise limit `J_t ∫_0^t J_s⁻¹ g(Y_s) ds` on the reference grid.
pub fn as_limit(g: &SmoothFunction, y_ref: &SolutionPath) -> Result<LimitPrediction> {
    g.require(0)?;
    let values = if g.is_zero() {
        jacobian(y_ref)?;
        vec![0.0; y_ref.grid().len()]
    } else {
        weighted_integral(y_ref, |y, j| Ok(g.value(y) / j), |j| j)?
    };
    Ok(LimitPrediction {
        kind: PredictionKind::AlmostSure,
        grid: y_ref.grid(),
        values,
        constants: Vec::new(),
    })
}

/// Limit of `2^{(2H−1)m}(Ŷ − Y)` for the Euler scheme: `−½J∫J⁻¹σ′σ(Y)dt`.
pub fn em_limit(model: &SdeModel, y_ref: &SolutionPath) -> Result<LimitPrediction> {
    as_limit(&coefficient(model, None, Coefficient::EmDefect)?, y_ref)
}

/// `C_(3)² J_t² ∫_0^t (J_s⁻¹ g̃₃ᶜᴺ(Y_s))² ds`.
pub fn cn_limit_variance(model: &SdeModel, y_ref: &SolutionPath, h: Hurst) -> Result<LimitPrediction> {
    let c3 = c_l_constant(3, h, CONSTANT_TOL)?.value;
    let g = cn_g3(model)?;
    let values = weighted_integral(
        y_ref,
        |y, j| {
            let v = g.value(y) / j;
            Ok(v * v)
        },
        |j| c3 * c3 * j * j,
    )?;
    Ok(LimitPrediction {
        kind: PredictionKind::MixedNormal,
        grid: y_ref.grid(),
        values,
        constants: vec![("C_(3)".into(), c3)],
    })
}

/// `J_t ∫_0^t J_s⁻¹ f(Y_s) dB_s` by a compensated Riemann sum on the reference
/// grid; the `δB^k/k!` corrections (k ≤ 4) use `d(J⁻¹f(Y)) = J⁻¹𝒱f(Y)dB + O(dt)`.
pub fn rough_integral(
    f: &SmoothFunction,
    model: &SdeModel,
    path: &FbmPath,
    y_ref: &SolutionPath,
) -> Result<LimitPrediction> {
    if path.grid() != y_ref.grid() {
        return Err(Error::Length("path and reference grids differ".into()));
    }
    let j = jacobian(y_ref)?;
    let mut fs = vec![f.clone()];
    for _ in 0..3 {
        fs.push(apply_v(fs.last().unwrap(), &model.sigma)?);
    }
    let mut out = Vec::with_capacity(j.len());
    let mut acc = 0.0;
    out.push(0.0);
    for (r, (w, &y)) in path.values().windows(2).zip(y_ref.values()).enumerate() {
        let db = w[1] - w[0];
        let (mut term, mut inc) = (db, 0.0);
        for (k, g) in fs.iter().enumerate() {
            inc += g.value(y) * term;
            term *= db / (k + 2) as f64;
        }
        acc += inc / j[r];
        out.push(j[r + 1] * acc);
    }
    Ok(LimitPrediction {
        kind: PredictionKind::AlmostSure,
        grid: y_ref.grid(),
        values: out,
        constants: Vec::new(),
    })
}

/// The function behind a named coefficient; `h` is needed only for `g̃_(1,2)`.
pub fn coefficient(model: &SdeModel, h: Option<Hurst>, c: Coefficient) -> Result<SmoothFunction> {
    match c {
        Coefficient::GTilde(k) => milstein_g_k1(model, k),
        Coefficient::GBar(l) => milstein_gbar(model, l),
        Coefficient::G12 => milstein_g12(
            model,
            h.ok_or_else(|| Error::NoPrediction("g~_(1,2) needs a Hurst index".into()))?,
        ),
        Coefficient::Cn3 => cn_g3(model),
        Coefficient::EmDefect => {
            let s = &model.sigma;
            Ok((&s.derivative()? * s).scale(-0.5).with_name("-(1/2)sigma'sigma"))
        }
    }
}

/// Predicted limit of the normalized error for `(spec, H)`, evaluated along `y_ref`.
pub fn predicted_normalized_error(
    spec: &SchemeSpec,
    model: &SdeModel,
    h: Hurst,
    y_ref: &SolutionPath,
) -> Result<(RegimeReport, LimitPrediction)> {
    let report = classify_with_model(spec, h, model)?;
    let prediction = match report.limit_kind {
        LimitKind::AlmostSureDriftIntegral => {
            let mut g = SmoothFunction::zero();
            let mut constants = Vec::new();
            for t in &report.terms {
                let mut f = coefficient(model, Some(h), t.function)?;
                if let Some(l) = t.kappa {
                    let kappa = gaussian_moment_kappa(l);
                    constants.push((format!("kappa_{l}"), kappa));
                    f = f.scale(kappa);
                }
                g = &g + &f;
            }
            let mut p = as_limit(&g, y_ref)?;
            p.constants = constants;
            p
        }
        LimitKind::MixedNormal => cn_limit_variance(model, y_ref, h)?,
        LimitKind::Divergent => {
            return Err(Error::NoPrediction(format!(
                "{spec} diverges at H = {}",
                h.value()
            )))
        }
        LimitKind::Open => {
            return Err(Error::NoPrediction(format!(
                "no closed-form limit for {spec} at H = {}",
                h.value()
            )))
        }
    };
    Ok((report, prediction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{fixture, SdeModel};
    use crate::fbm::{CirculantSampler, SeedSpec};
    use crate::reference::{reference_solution, SolutionMeta};

    fn h(x: f64) -> Hurst {
        Hurst::new(x).unwrap()
    }

    fn model(sigma: &str, b: &str, y0: f64) -> SdeModel {
        SdeModel::new(fixture(sigma).unwrap(), fixture(b).unwrap(), y0)
    }

    fn flat(level: u32) -> SolutionPath {
        let grid = DyadicGrid::new(level, 1).unwrap();
        SolutionPath::new(
            grid,
            vec![1.0; grid.len()],
            Some(vec![1.0; grid.len()]),
            SolutionMeta { scheme: "milstein:2".into(), model: "flat".into() },
        )
        .unwrap()
    }

    #[test]
    fn trivial_cases() {
        let y = flat(6);
        assert!(as_limit(&SmoothFunction::zero(), &y).unwrap().values.iter().all(|&v| v == 0.0));
        let c = as_limit(&SmoothFunction::constant(2.5), &y).unwrap();
        for (i, t) in y.grid().times().enumerate() {
            assert!((c.values[i] - 2.5 * t).abs() < 1e-12);
        }
        let bare = SolutionPath::new(y.grid(), y.values().to_vec(), None, y.meta().clone()).unwrap();
        assert_eq!(as_limit(&SmoothFunction::constant(1.0), &bare), Err(Error::MissingJacobian));
        let m = model("const:1.5", "zero", 1.0);
        assert!(em_limit(&m, &y).unwrap().values.iter().all(|&v| v == 0.0));
        let v = cn_limit_variance(&model("sin-offset", "zero", 1.0), &y, h(0.3)).unwrap();
        assert_eq!(v.values[0], 0.0);
    }

    #[test]
    fn linear_sigma_closed_forms() {
        let hv = h(0.3);
        let grid = DyadicGrid::new(12, 1).unwrap();
        let path = CirculantSampler::new(grid, hv).unwrap().sample(SeedSpec::new(5, 0));
        let y0 = 1.3;
        let m = model("linear:1", "zero", y0);
        let y = reference_solution(&m, &path, 1).unwrap();
        let bt = path.terminal();
        let x = as_limit(&SmoothFunction::identity(), &y).unwrap();
        let exact = y0 * bt.exp();
        assert!((x.terminal() - exact).abs() < 1e-3 * exact.abs());
        let e = em_limit(&m, &y).unwrap();
        assert!((e.terminal() + 0.5 * exact).abs() < 1e-3 * exact.abs());
        let v = cn_limit_variance(&m, &y, hv).unwrap();
        let c3 = v.constants[0].1;
        let want = c3 * c3 * (2.0 * bt).exp() * (y0 / 12.0).powi(2);
        assert!((v.terminal() - want).abs() < 1e-3 * want);
    }

    #[test]
    fn rough_integral_linear_sigma() {
        let grid = DyadicGrid::new(12, 1).unwrap();
        let path = CirculantSampler::new(grid, h(0.3)).unwrap().sample(SeedSpec::new(8, 0));
        let m = model("linear:1", "zero", 0.7);
        let y = reference_solution(&m, &path, 1).unwrap();
        let r = rough_integral(&SmoothFunction::identity(), &m, &path, &y).unwrap();
        let bt = path.terminal();
        let want = bt.exp() * 0.7 * bt;
        assert!((r.terminal() - want).abs() < 1e-3 * want.abs().max(1e-3));
        // f = 1: 𝒱1 = −σ′ = −1, 𝒱²1 = 1, so J⁻¹ = e^{−B} integrates to 1 − e^{−B_T}
        let one = rough_integral(&SmoothFunction::constant(1.0), &m, &path, &y).unwrap();
        assert!((one.terminal() - (bt.exp() - 1.0)).abs() < 1e-3, "{} {}", one.terminal(), bt.exp() - 1.0);
    }

    #[test]
    fn cn_variance_is_non_decreasing_after_removing_the_jacobian() {
        let hv = h(0.3);
        let grid = DyadicGrid::new(10, 1).unwrap();
        let path = CirculantSampler::new(grid, hv).unwrap().sample(SeedSpec::new(6, 1));
        let m = model("sin-offset", "logistic-tanh", 0.5);
        let y = reference_solution(&m, &path, 1).unwrap();
        let v = cn_limit_variance(&m, &y, hv).unwrap();
        let j = y.jacobian().unwrap();
        let inner: Vec<f64> = v.values.iter().zip(j).map(|(v, j)| v / (j * j)).collect();
        assert!(inner.windows(2).all(|w| w[1] >= w[0]));
        assert!(v.values.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn dispatch_examples() {
        let grid = DyadicGrid::new(8, 1).unwrap();
        let hv = h(0.35);
        let path = CirculantSampler::new(grid, hv).unwrap().sample(SeedSpec::new(7, 0));
        let m = model("sin-offset", "logistic-tanh", 0.5);
        let y = reference_solution(&m, &path, 1).unwrap();
        let (r, p) = predicted_normalized_error(&SchemeSpec::Milstein(3), &m, hv, &y).unwrap();
        assert!((r.rate.unwrap() - (4.0 * 0.35 - 1.0)).abs() < 1e-12);
        let direct = as_limit(&milstein_g_k1(&m, 4).unwrap(), &y).unwrap().terminal() * 3.0;
        assert!((p.terminal() - direct).abs() < 1e-12 * direct.abs().max(1.0));
        assert_eq!(p.constants, vec![("kappa_4".to_string(), 3.0)]);

        let h3 = h(0.3);
        let (r, p) = predicted_normalized_error(&SchemeSpec::Milstein(5), &m, h3, &y).unwrap();
        assert!((r.rate.unwrap() - 0.6).abs() < 1e-12);
        let direct = as_limit(&milstein_g12(&m, h3).unwrap(), &y).unwrap().terminal();
        assert!((p.terminal() - direct).abs() < 1e-12 * direct.abs().max(1.0));

        assert!(matches!(
            predicted_normalized_error(&SchemeSpec::cn(), &m, h(0.15), &y),
            Err(Error::NoPrediction(_))
        ));
    }

    #[test]
    fn dispatch_is_total() {
        let grid = DyadicGrid::new(4, 1).unwrap();
        let path = CirculantSampler::new(grid, h(0.3)).unwrap().sample(SeedSpec::new(1, 0));
        let m = model("sin-offset", "logistic-tanh", 0.5);
        let y = reference_solution(&m, &path, 1).unwrap();
        let specs = [
            SchemeSpec::EulerMaruyama,
            SchemeSpec::Milstein(2),
            SchemeSpec::Milstein(3),
            SchemeSpec::Milstein(4),
            SchemeSpec::Milstein(5),
            SchemeSpec::Milstein(6),
            SchemeSpec::cn(),
        ];
        for i in 1..=50 {
            let hv = h(i as f64 / 51.0);
            for s in &specs {
                match predicted_normalized_error(s, &m, hv, &y) {
                    Ok((_, p)) => assert!(p.values.iter().all(|v| v.is_finite())),
                    Err(Error::NoPrediction(_)) => {}
                    Err(e) => panic!("{s} at {}: {e}", hv.value()),
                }
            }
        }
    }
}
