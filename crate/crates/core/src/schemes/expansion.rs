use super::SchemeSpec;
use crate::calculus::{
    apply_d_g, factorial, iterate_d, Jet, SdeModel, SmoothFunction,
};
use crate::error::{Error, Result};
use crate::fbm::Hurst;

/// One term `f̂(y)·dB^{db_power}·dt^{dt_power}` of a step expansion.
#[derive(Debug, Clone)]
pub struct ExpansionTerm {
    pub db_power: u32,
    pub dt_power: u32,
    pub coeff: SmoothFunction,
}

/// Formal expansion of a one-step map:
/// `y⁺ − y = Σ f̂_Γ̂(y) dB^{Γ̂₁} dt^{Γ̂₂} + remainder`.
///
/// `omitted` lists the minimal multi-indices not represented, which bound the
/// size of the remainder.
#[derive(Debug, Clone)]
pub struct StepExpansion {
    pub terms: Vec<ExpansionTerm>,
    pub omitted: Vec<(u32, u32)>,
}

/// `|Γ̂| = Γ̂₁H + Γ̂₂`.
pub fn term_size(db_power: u32, dt_power: u32, h: Hurst) -> f64 {
    db_power as f64 * h.value() + dt_power as f64
}

impl StepExpansion {
    pub fn term(&self, db_power: u32, dt_power: u32) -> Option<&SmoothFunction> {
        self.terms
            .iter()
            .find(|t| t.db_power == db_power && t.dt_power == dt_power)
            .map(|t| &t.coeff)
    }

    /// Smallest size of an omitted term; the remainder is `O(dt^{this})` when `dB ~ dt^H`.
    pub fn remainder_order(&self, h: Hurst) -> f64 {
        self.omitted
            .iter()
            .map(|&(i, j)| term_size(i, j, h))
            .fold(f64::INFINITY, f64::min)
    }

    /// The truncated increment `Σ f̂(y) dB^i dt^j`.
    pub fn increment(&self, y: f64, db: f64, dt: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff.value(y) * db.powi(t.db_power as i32) * dt.powi(t.dt_power as i32))
            .sum()
    }

    /// Checks the `[1]` term is present and equal to σ at a few probe points.
    pub fn validate(&self, model: &SdeModel) -> Result<()> {
        let first = self
            .term(1, 0)
            .ok_or_else(|| Error::InvalidScheme("custom expansion lacks the dB term".into()))?;
        for &y in &[-1.5, -0.3, 0.0, 0.7, 2.1] {
            let (a, b) = (first.value(y), model.sigma.value(y));
            if (a - b).abs() > 1e-12 * (1.0 + b.abs()) {
                return Err(Error::InvalidScheme(format!(
                    "custom dB coefficient differs from sigma at {y}: {a} vs {b}"
                )));
            }
        }
        Ok(())
    }

    fn push(&mut self, db_power: u32, dt_power: u32, coeff: SmoothFunction) {
        if !coeff.is_zero() {
            self.terms.push(ExpansionTerm {
                db_power,
                dt_power,
                coeff,
            });
        }
    }
}

fn drift_terms(exp: &mut StepExpansion, model: &SdeModel) -> Result<()> {
    if model.b_vanishes() {
        return Ok(());
    }
    let (s, b) = (&model.sigma, &model.b);
    exp.push(0, 1, b.clone());
    exp.push(0, 2, apply_d_g(b, b)?.scale(0.5));
    exp.push(1, 1, (&apply_d_g(s, b)? + &apply_d_g(b, s)?).scale(0.5));
    Ok(())
}

pub fn expansion_of(spec: &SchemeSpec, model: &SdeModel) -> Result<StepExpansion> {
    match spec {
        SchemeSpec::EulerMaruyama => {
            let mut e = StepExpansion {
                terms: Vec::new(),
                omitted: vec![(2, 0), (1, 1), (0, 2)],
            };
            e.push(1, 0, model.sigma.clone());
            if !model.b_vanishes() {
                e.push(0, 1, model.b.clone());
            }
            Ok(e)
        }
        SchemeSpec::Milstein(k) => {
            let k = *k;
            let mut e = StepExpansion {
                terms: Vec::new(),
                omitted: vec![(k as u32 + 1, 0), (2, 1), (1, 2), (0, 3)],
            };
            for l in 1..=k {
                e.push(l as u32, 0, iterate_d(&model.sigma, l - 1)?.scale(1.0 / factorial(l)));
            }
            drift_terms(&mut e, model)?;
            Ok(e)
        }
        SchemeSpec::CrankNicolson(_) => cn_expansion(model),
        SchemeSpec::Custom(e) => Ok(e.clone()),
    }
}

/// `f̄_l = f̂_[l] − (1/l!)𝒟^{l−1}σ`, absent terms read as zero.
pub fn fbar(spec: &SchemeSpec, model: &SdeModel, l: usize) -> Result<SmoothFunction> {
    if l == 0 {
        return Err(Error::InvalidScheme("f-bar index starts at 1".into()));
    }
    let e = expansion_of(spec, model)?;
    let taylor = iterate_d(&model.sigma, l - 1)?.scale(1.0 / factorial(l));
    let hat = e.term(l as u32, 0).cloned().unwrap_or_else(SmoothFunction::zero);
    Ok((&hat - &taylor).with_name(format!("f-bar_{l}")))
}

// Bivariate truncated series in (x = dB, t = dt) with weight i + 2j ≤ MAX_WEIGHT.
const MAX_WEIGHT: usize = 4;
const NI: usize = MAX_WEIGHT + 1;
const NJ: usize = MAX_WEIGHT / 2 + 1;

#[derive(Clone, Copy)]
struct Series([[Jet; NJ]; NI]);

impl Series {
    fn zero(order: usize) -> Series {
        Series([[Jet::constant(0.0, order); NJ]; NI])
    }

    fn kept(i: usize, j: usize) -> bool {
        i + 2 * j <= MAX_WEIGHT
    }

    fn add(&self, o: &Series) -> Series {
        let mut out = *self;
        for i in 0..NI {
            for j in 0..NJ {
                if Series::kept(i, j) {
                    out.0[i][j] = self.0[i][j] + o.0[i][j];
                }
            }
        }
        out
    }

    fn mul(&self, o: &Series, order: usize) -> Series {
        let mut out = Series::zero(order);
        for i in 0..NI {
            for j in 0..NJ {
                if !Series::kept(i, j) {
                    continue;
                }
                let mut acc = Jet::constant(0.0, order);
                for i1 in 0..=i {
                    for j1 in 0..=j {
                        acc = acc + self.0[i1][j1] * o.0[i - i1][j - j1];
                    }
                }
                out.0[i][j] = acc;
            }
        }
        out
    }

    fn scale_jet(&self, s: Jet) -> Series {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for c in row.iter_mut() {
                *c = *c * s;
            }
        }
        out
    }

    /// Multiplies by `x^di t^dj`.
    fn shift(&self, di: usize, dj: usize, order: usize) -> Series {
        let mut out = Series::zero(order);
        for i in di..NI {
            for j in dj..NJ {
                if Series::kept(i, j) {
                    out.0[i][j] = self.0[i - di][j - dj];
                }
            }
        }
        out
    }
}

/// `Σ_p f^{(p)}(y)/p!·Δ^p` for `p ≤ pmax`.
fn compose(f: &Jet, delta: &Series, pmax: usize, order: usize) -> Series {
    let mut out = Series::zero(order);
    let mut power = Series::zero(order);
    power.0[0][0] = Jet::constant(1.0, order);
    let mut d = *f;
    for p in 0..=pmax {
        let coeff = d.truncate(order).scale(1.0 / factorial(p));
        out = out.add(&power.scale_jet(coeff));
        if p < pmax {
            power = power.mul(delta, order);
            d = d.derivative();
        }
    }
    out
}

/// Coefficient jets of `Δ = y⁺ − y` for the trapezoidal implicit step, by
/// fixed-point iteration on formal series.
fn cn_series(sigma: &Jet, b: &Jet, order: usize) -> Series {
    let mut delta = Series::zero(order);
    let s0 = {
        let mut s = Series::zero(order);
        s.0[0][0] = sigma.truncate(order);
        s
    };
    let b0 = {
        let mut s = Series::zero(order);
        s.0[0][0] = b.truncate(order);
        s
    };
    for _ in 0..=MAX_WEIGHT {
        let sig = compose(sigma, &delta, MAX_WEIGHT - 1, order).add(&s0);
        let drf = compose(b, &delta, MAX_WEIGHT / 2 - 1, order).add(&b0);
        let half = Jet::constant(0.5, order);
        delta = sig
            .shift(1, 0, order)
            .add(&drf.shift(0, 1, order))
            .scale_jet(half);
    }
    delta
}

fn cn_expansion(model: &SdeModel) -> Result<StepExpansion> {
    let (s, b) = (model.sigma.clone(), model.b.clone());
    s.require(MAX_WEIGHT - 1)?;
    b.require(MAX_WEIGHT / 2 - 1)?;
    let max_order = (s.max_order() - (MAX_WEIGHT - 1)).min(b.max_order() - (MAX_WEIGHT / 2 - 1));
    let mut e = StepExpansion {
        terms: Vec::new(),
        omitted: vec![(5, 0), (3, 1), (1, 2), (0, 3)],
    };
    for j in 0..NJ {
        for i in 0..NI {
            if (i, j) == (0, 0) || !Series::kept(i, j) || (j > 0 && model.b_vanishes()) {
                continue;
            }
            let (s2, b2) = (s.clone(), b.clone());
            let coeff = SmoothFunction::new(format!("f^CN_({i},{j})"), max_order, move |y, n| {
                let sj = s2.jet_unchecked(y, n + MAX_WEIGHT - 1);
                let bj = b2.jet_unchecked(y, n + MAX_WEIGHT / 2 - 1);
                cn_series(&sj, &bj, n).0[i][j]
            });
            e.push(i as u32, j as u32, coeff);
        }
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::fixture;
    use crate::schemes::CnSolver;

    fn model(s: &str, b: &str) -> SdeModel {
        SdeModel::new(fixture(s).unwrap(), fixture(b).unwrap(), 1.0)
    }

    #[test]
    fn cn_closed_forms() {
        let m = model("sin-offset:0.8:2", "logistic-tanh:1:-0.3");
        let e = expansion_of(&SchemeSpec::CrankNicolson(CnSolver::default()), &m).unwrap();
        for &y in &[-1.0, 0.2, 1.7] {
            let sj = m.sigma.jet(y, 3).unwrap();
            let bj = m.b.jet(y, 1).unwrap();
            let (s, s1, s2, s3) = (sj.get(0), sj.get(1), sj.get(2), sj.get(3));
            let (b0, b1) = (bj.get(0), bj.get(1));
            let d2 = s2 * s * s + s1 * s1 * s;
            let want = [
                (1, 0, s),
                (2, 0, 0.5 * s1 * s),
                (3, 0, 0.25 * d2),
                (4, 0, s * s1.powi(3) / 8.0 + 3.0 / 8.0 * s * s * s1 * s2 + s.powi(3) * s3 / 12.0),
                (0, 1, b0),
                (1, 1, 0.5 * (s * b1 + b0 * s1)),
                (0, 2, 0.5 * b0 * b1),
            ];
            for (i, j, w) in want {
                let got = e.term(i, j).unwrap().value(y);
                assert!((got - w).abs() < 1e-13, "({i},{j}) at {y}: {got} vs {w}");
            }
        }
    }

    #[test]
    fn expansion_examples() {
        let m = model("linear:1", "zero");
        let cn = expansion_of(&SchemeSpec::CrankNicolson(CnSolver::default()), &m).unwrap();
        assert!((cn.term(3, 0).unwrap().value(2.0) - 0.5).abs() < 1e-14);
        assert!(cn.term(0, 1).is_none());
        let em = expansion_of(&SchemeSpec::EulerMaruyama, &m).unwrap();
        assert!(em.term(2, 0).is_none());
        let m3 = expansion_of(&SchemeSpec::Milstein(3), &m).unwrap();
        assert!((m3.term(3, 0).unwrap().value(1.2) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn fbar_examples() {
        let m = model("sin-offset", "logistic-tanh");
        let cn = SchemeSpec::CrankNicolson(CnSolver::default());
        let d2 = iterate_d(&m.sigma, 2).unwrap();
        for &y in &[-0.4, 0.9] {
            assert!(fbar(&cn, &m, 1).unwrap().value(y).abs() < 1e-12);
            assert!(fbar(&cn, &m, 2).unwrap().value(y).abs() < 1e-12);
            assert!((fbar(&cn, &m, 3).unwrap().value(y) - d2.value(y) / 12.0).abs() < 1e-12);
            for k in 2..=4 {
                for l in 1..=k {
                    assert!(fbar(&SchemeSpec::Milstein(k), &m, l).unwrap().value(y).abs() < 1e-12);
                }
            }
            assert!(fbar(&SchemeSpec::EulerMaruyama, &m, 2).unwrap().value(y).abs() > 1e-3);
        }
    }

    #[test]
    fn remainder_orders() {
        let h = Hurst::new(0.3).unwrap();
        let m = model("sin-offset", "logistic-tanh");
        let e = expansion_of(&SchemeSpec::Milstein(2), &m).unwrap();
        assert!((e.remainder_order(h) - 0.9).abs() < 1e-12);
        let cn = expansion_of(&SchemeSpec::CrankNicolson(CnSolver::default()), &m).unwrap();
        assert!((cn.remainder_order(h) - 1.5).abs() < 1e-12);
    }
}
