//! Jets, smooth functions, the operators `𝒟_g`, `𝒟^Γ`, `𝒱`, Hermite
//! polynomials and the coefficient functions of the error limits.

mod fixtures;
mod function;
mod jet;

pub use fixtures::{affine, fixture, logistic, sin_offset, FIXTURE_MAX_ORDER};
pub use function::SmoothFunction;
pub use jet::{Jet, MAX_JET_LEN};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::Hurst;

/// `dY = σ(Y) dB + b(Y) dt`, `Y_0 = y0`.
#[derive(Debug, Clone)]
pub struct SdeModel {
    pub sigma: SmoothFunction,
    pub b: SmoothFunction,
    pub y0: f64,
}

/// Registry keys describing a model; see [`fixture`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelKeys {
    pub sigma: String,
    pub b: String,
    pub y0: f64,
}

impl SdeModel {
    pub fn new(sigma: SmoothFunction, b: SmoothFunction, y0: f64) -> SdeModel {
        SdeModel { sigma, b, y0 }
    }

    pub fn from_keys(keys: &ModelKeys) -> Result<SdeModel> {
        Ok(SdeModel::new(fixture(&keys.sigma)?, fixture(&keys.b)?, keys.y0))
    }

    pub fn b_vanishes(&self) -> bool {
        self.b.is_zero()
    }

    /// Short identifier `σ=…;b=…;y0=…`.
    pub fn id(&self) -> String {
        format!("sigma={};b={};y0={}", self.sigma.name(), self.b.name(), self.y0)
    }
}

/// `𝒟_g f = f′g`.
pub fn apply_d_g(f: &SmoothFunction, g: &SmoothFunction) -> Result<SmoothFunction> {
    f.require(1)?;
    if f.is_zero() || g.is_zero() {
        return Ok(SmoothFunction::zero());
    }
    let (f2, g2) = (f.clone(), g.clone());
    Ok(SmoothFunction::new(
        format!("D_[{}]({})", g.name(), f.name()),
        (f.max_order() - 1).min(g.max_order()),
        move |x, n| f2.jet_unchecked(x, n + 1).derivative() * g2.jet_unchecked(x, n),
    ))
}

/// `𝒟^k σ` with `𝒟 = 𝒟_σ` and `𝒟⁰σ = σ`.
pub fn iterate_d(sigma: &SmoothFunction, k: usize) -> Result<SmoothFunction> {
    sigma.require(k)?;
    let mut out = sigma.clone();
    for _ in 0..k {
        out = apply_d_g(&out, sigma)?;
    }
    Ok(out.with_name(format!("D^{k}({})", sigma.name())))
}

/// `𝒱f = σf′ − σ′f`.
pub fn apply_v(f: &SmoothFunction, sigma: &SmoothFunction) -> Result<SmoothFunction> {
    Ok(&apply_d_g(f, sigma)? - &apply_d_g(sigma, f)?)
}

/// Jets of `𝒟^0σ, …, 𝒟^{count−1}σ` from one jet of σ; the `l`-th has order
/// `σ.order() − l`.
pub fn d_tower(sigma: &Jet, count: usize, out: &mut [Jet]) {
    assert!(count >= 1 && count <= sigma.order() + 1 && out.len() >= count);
    out[0] = *sigma;
    for l in 1..count {
        let prev = out[l - 1];
        out[l] = prev.derivative() * *sigma;
    }
}

/// `f_Γ = 𝒟^Γ(Id)`: letter 0 applies `𝒟_b`, letter 1 applies `𝒟_σ`, starting
/// from the identity with the first letter.
pub fn taylor_coefficient_f_gamma(model: &SdeModel, gamma: &[u8]) -> Result<SmoothFunction> {
    let mut f = SmoothFunction::identity();
    for &letter in gamma {
        let g = match letter {
            0 => &model.b,
            1 => &model.sigma,
            other => {
                return Err(Error::InvalidScheme(format!(
                    "word letters must be 0 or 1, got {other}"
                )))
            }
        };
        f = apply_d_g(&f, g)?;
    }
    Ok(f)
}

/// Probabilists' Hermite polynomial `H_l(x)`.
pub fn hermite(l: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if l == 0 {
        return prev;
    }
    for n in 1..l {
        let next = x * cur - n as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `κ_l = l!/(2^{⌊l/2⌋}(⌊l/2⌋)!)`.
pub fn gaussian_moment_kappa(l: usize) -> f64 {
    let h = l / 2;
    factorial(l) / (2f64.powi(h as i32) * factorial(h))
}

/// `g̃_{k,1} = −(1/k!)𝒟^{k−1}σ`.
pub fn milstein_g_k1(model: &SdeModel, k: usize) -> Result<SmoothFunction> {
    if k == 0 {
        return Err(Error::InvalidScheme("coefficient index k must be ≥ 1".into()));
    }
    Ok(iterate_d(&model.sigma, k - 1)?
        .scale(-1.0 / factorial(k))
        .with_name(format!("g~_{{{k},1}}")))
}

/// `g̃_{k,2} = g̃_{k,1} − σ′g̃_{k−1,1}`.
pub fn milstein_g_k2(model: &SdeModel, k: usize) -> Result<SmoothFunction> {
    if k < 2 {
        return Err(Error::InvalidScheme("g~_{k,2} needs k ≥ 2".into()));
    }
    let lower = milstein_g_k1(model, k - 1)?;
    let ds = model.sigma.derivative()?;
    Ok((&milstein_g_k1(model, k)? - &(&ds * &lower)).with_name(format!("g~_{{{k},2}}")))
}

/// `ḡ_{l,1} = g̃_{l+1,2} − ½𝒱g̃_{l,1}` for odd `l = 2j+1`.
pub fn milstein_gbar(model: &SdeModel, l: usize) -> Result<SmoothFunction> {
    if l % 2 == 0 {
        return Err(Error::InvalidScheme(format!("g-bar_{{l,1}} needs odd l, got {l}")));
    }
    let v = apply_v(&milstein_g_k1(model, l)?, &model.sigma)?;
    Ok((&milstein_g_k2(model, l + 1)? - &v.scale(0.5)).with_name(format!("g-bar_{{{l},1}}")))
}

/// `g̃_(1,2)`, the drift-noise cross coefficient.
pub fn milstein_g12(model: &SdeModel, h: Hurst) -> Result<SmoothFunction> {
    let hv = h.value();
    let a = -(6.0 * hv - 1.0) / (4.0 * (1.0 + 2.0 * hv));
    let c = -(3.0 - 2.0 * hv) / (4.0 * (1.0 + 2.0 * hv));
    model.sigma.require(2)?;
    model.b.require(2)?;
    if model.b.is_zero() {
        return Ok(SmoothFunction::zero());
    }
    let (s, b) = (model.sigma.clone(), model.b.clone());
    Ok(SmoothFunction::new(
        "g~_(1,2)",
        s.max_order().min(b.max_order()) - 2,
        move |x, n| {
            let sj = s.jet_unchecked(x, n + 2);
            let bj = b.jet_unchecked(x, n + 2);
            let (s0, s1, s2) = (sj.truncate(n), sj.derivative().truncate(n), sj.derivative().derivative());
            let (b0, b1, b2) = (bj.truncate(n), bj.derivative().truncate(n), bj.derivative().derivative());
            (s0 * s2 * b0 + s0 * s1 * b1) * a + (s1 * s1 * b0 + s0 * s0 * b2) * c
        },
    ))
}

/// `g̃₃ᶜᴺ = (1/12)𝒟²σ`.
pub fn cn_g3(model: &SdeModel) -> Result<SmoothFunction> {
    Ok(iterate_d(&model.sigma, 2)?.scale(1.0 / 12.0).with_name("g~_3^CN"))
}
