use std::fmt;

use serde::Serialize;

use super::{fbar, SchemeSpec};
use crate::calculus::SdeModel;
use crate::error::Result;
use crate::fbm::Hurst;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Condition {
    A,
    B,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Convergence {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorStatus {
    Determined,
    None,
    Unsolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitKind {
    /// `J·∫J⁻¹g(Y)dt`, almost surely.
    AlmostSureDriftIntegral,
    /// `C·J·∫J⁻¹g(Y)dW`, in law, `W` independent of `B`.
    MixedNormal,
    Divergent,
    /// No closed form available here.
    Open,
}

/// Named coefficient functions of the limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coefficient {
    /// `g̃_{k,1} = −(1/k!)𝒟^{k−1}σ`
    GTilde(usize),
    /// `ḡ_{l,1}`
    GBar(usize),
    /// `g̃_(1,2)`
    G12,
    /// `g̃₃ᶜᴺ = 𝒟²σ/12`
    Cn3,
    /// `−½σ′σ`, the one-step defect of the Euler scheme
    EmDefect,
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::GTilde(k) => write!(f, "g~_{{{k},1}}"),
            Coefficient::GBar(l) => write!(f, "g-bar_{{{l},1}}"),
            Coefficient::G12 => write!(f, "g~_(1,2)"),
            Coefficient::Cn3 => write!(f, "g~_3^CN"),
            Coefficient::EmDefect => write!(f, "-(1/2)sigma'sigma"),
        }
    }
}

/// `κ_l·g` when `kappa = Some(l)`, otherwise `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CoefficientTerm {
    pub kappa: Option<usize>,
    pub function: Coefficient,
}

impl fmt::Display for CoefficientTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kappa {
            Some(l) => write!(f, "kappa_{l}*{}", self.function),
            None => write!(f, "{}", self.function),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeReport {
    pub scheme: String,
    pub hurst: f64,
    pub q: u32,
    pub condition: Condition,
    pub convergence: Convergence,
    pub error: ErrorStatus,
    /// `ρ` with normalizer `2^{−ρm}`; the normalized error is `2^{ρm}(Ŷ − Y)`.
    pub rate: Option<f64>,
    pub limit_kind: LimitKind,
    /// Integrand terms, summed.
    pub terms: Vec<CoefficientTerm>,
    /// Multiplicative constant of a mixed-normal limit, e.g. `C_(3)`.
    pub constant: Option<String>,
}

impl RegimeReport {
    pub fn is_determined(&self) -> bool {
        matches!(
            self.limit_kind,
            LimitKind::AlmostSureDriftIntegral | LimitKind::MixedNormal
        )
    }

    pub fn describe(&self) -> String {
        let terms: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        let rate = self.rate.map_or("-".to_string(), |r| format!("{r:.6}"));
        format!(
            "{} H={} q={} condition={:?} convergence={:?} error={:?} rate={} limit={:?}{}{}",
            self.scheme,
            self.hurst,
            self.q,
            self.condition,
            self.convergence,
            self.error,
            rate,
            self.limit_kind,
            if terms.is_empty() { String::new() } else { format!(" integrand={}", terms.join("+")) },
            self.constant.as_ref().map_or(String::new(), |c| format!(" constant={c}")),
        )
    }
}

impl fmt::Display for RegimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Largest `v` with `f̄_l ≡ 0` for all `l ≤ v`.
///
/// Known schemes use their closed form; custom expansions are probed at sample points.
pub fn vanishing_order(spec: &SchemeSpec, model: Option<&SdeModel>) -> Result<usize> {
    match spec {
        SchemeSpec::EulerMaruyama => Ok(1),
        SchemeSpec::Milstein(k) => Ok(*k),
        SchemeSpec::CrankNicolson(_) => Ok(2),
        SchemeSpec::Custom(_) => {
            let model = model.ok_or_else(|| {
                crate::Error::InvalidScheme("custom expansions need a model to probe".into())
            })?;
            let mut v = 0;
            for l in 1..=model.sigma.max_order() {
                let f = fbar(spec, model, l)?;
                let vanishes = [-1.3, -0.2, 0.4, 1.9]
                    .iter()
                    .all(|&y| f.value(y).abs() < 1e-12);
                if !vanishes {
                    break;
                }
                v = l;
            }
            Ok(v)
        }
    }
}

fn condition(q: u32, v: usize) -> Condition {
    let q = q as usize;
    if q <= v {
        Condition::A
    } else if q % 2 == 1 && q - 1 <= v {
        Condition::B
    } else {
        Condition::Neither
    }
}

struct Case {
    convergence: Convergence,
    error: ErrorStatus,
    rate: Option<f64>,
    kind: LimitKind,
    terms: Vec<CoefficientTerm>,
    constant: Option<String>,
}

impl Case {
    fn simple(convergence: Convergence, error: ErrorStatus, kind: LimitKind) -> Case {
        Case {
            convergence,
            error,
            rate: None,
            kind,
            terms: Vec::new(),
            constant: None,
        }
    }

    fn almost_sure(rate: f64, terms: Vec<CoefficientTerm>) -> Case {
        Case {
            convergence: Convergence::Yes,
            error: ErrorStatus::Determined,
            rate: Some(rate),
            kind: LimitKind::AlmostSureDriftIntegral,
            terms,
            constant: None,
        }
    }
}

fn term(kappa: Option<usize>, function: Coefficient) -> CoefficientTerm {
    CoefficientTerm { kappa, function }
}

fn milstein_case(k: usize, h: Hurst, b_vanishes: bool) -> Case {
    let hv = h.value();
    let kf = k as f64;
    let even = k % 2 == 0;
    // leading Taylor-defect term and its rate
    let leading = if even {
        ((kf + 2.0) * hv - 1.0, term(Some(k + 1), Coefficient::GBar(k + 1)))
    } else {
        ((kf + 1.0) * hv - 1.0, term(Some(k + 1), Coefficient::GTilde(k + 1)))
    };
    if !h.below(0.5) {
        return Case::simple(Convergence::Yes, ErrorStatus::Determined, LimitKind::Open);
    }
    if h.above(1.0 / (kf + 1.0)) {
        if b_vanishes {
            return Case::almost_sure(leading.0, vec![leading.1]);
        }
        let boundary = if even { 1.0 / kf } else { 1.0 / (kf - 1.0) };
        let cross = term(None, Coefficient::G12);
        return if h.below(boundary) {
            Case::almost_sure(leading.0, vec![leading.1])
        } else if h.is_at(boundary) {
            Case::almost_sure(2.0 * boundary, vec![cross, leading.1])
        } else {
            Case::almost_sure(2.0 * hv, vec![cross])
        };
    }
    if even && h.above(1.0 / (kf + 2.0)) {
        return Case::almost_sure(leading.0, vec![leading.1]);
    }
    Case::simple(Convergence::No, ErrorStatus::None, LimitKind::Divergent)
}

fn cn_case(h: Hurst) -> Case {
    if !h.below(0.5) {
        Case::simple(Convergence::Yes, ErrorStatus::Determined, LimitKind::Open)
    } else if h.above(0.25) {
        Case {
            convergence: Convergence::Yes,
            error: ErrorStatus::Determined,
            rate: Some(3.0 * h.value() - 0.5),
            kind: LimitKind::MixedNormal,
            terms: vec![term(None, Coefficient::Cn3)],
            constant: Some("C_(3)".into()),
        }
    } else if h.above(1.0 / 6.0) {
        Case::simple(Convergence::Unknown, ErrorStatus::Unsolved, LimitKind::Open)
    } else {
        Case::simple(Convergence::No, ErrorStatus::None, LimitKind::Divergent)
    }
}

fn em_case(h: Hurst) -> Case {
    if h.above(0.5) {
        // 2^{(2H−1)m}(Ŷ − Y) → −½J∫J⁻¹σ′σ(Y)dt
        Case::almost_sure(2.0 * h.value() - 1.0, vec![term(None, Coefficient::EmDefect)])
    } else if h.is_at(0.5) {
        Case::simple(Convergence::Yes, ErrorStatus::Determined, LimitKind::Open)
    } else {
        // Σ δB² grows like 2^{(1−2H)m}, so the scheme drifts away from Y
        Case::simple(Convergence::No, ErrorStatus::None, LimitKind::Divergent)
    }
}

/// Convergence regime of `spec` at Hurst index `h`.
pub fn classify_regime(spec: &SchemeSpec, h: Hurst, b_vanishes: bool) -> RegimeReport {
    let q = h.q();
    let (v, case) = match spec {
        SchemeSpec::EulerMaruyama => (Some(1), em_case(h)),
        SchemeSpec::Milstein(k) => (Some(*k), milstein_case(*k, h, b_vanishes)),
        SchemeSpec::CrankNicolson(_) => (Some(2), cn_case(h)),
        SchemeSpec::Custom(_) => (
            None,
            Case::simple(Convergence::Unknown, ErrorStatus::Unsolved, LimitKind::Open),
        ),
    };
    RegimeReport {
        scheme: spec.to_string(),
        hurst: h.value(),
        q,
        condition: v.map_or(Condition::Neither, |v| condition(q, v)),
        convergence: case.convergence,
        error: case.error,
        rate: case.rate,
        limit_kind: case.kind,
        terms: case.terms,
        constant: case.constant,
    }
}

/// Like [`classify_regime`], with the condition of custom expansions probed on `model`.
pub fn classify_with_model(spec: &SchemeSpec, h: Hurst, model: &SdeModel) -> Result<RegimeReport> {
    let mut r = classify_regime(spec, h, model.b_vanishes());
    if let SchemeSpec::Custom(_) = spec {
        r.condition = condition(r.q, vanishing_order(spec, Some(model))?);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> Hurst {
        Hurst::new(x).unwrap()
    }

    #[test]
    fn documented_cases() {
        let r = classify_regime(&SchemeSpec::Milstein(2), h(0.3), false);
        assert!((r.rate.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(r.terms, vec![term(Some(3), Coefficient::GBar(3))]);
        assert_eq!(r.limit_kind, LimitKind::AlmostSureDriftIntegral);
        assert_eq!(r.condition, Condition::B);

        let r = classify_regime(&SchemeSpec::cn(), h(0.3), true);
        assert!((r.rate.unwrap() - 0.4).abs() < 1e-12);
        assert_eq!(r.limit_kind, LimitKind::MixedNormal);
        assert_eq!(r.constant.as_deref(), Some("C_(3)"));

        let r = classify_regime(&SchemeSpec::Milstein(4), h(0.25), false);
        assert!((r.rate.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(
            r.terms,
            vec![term(None, Coefficient::G12), term(Some(5), Coefficient::GBar(5))]
        );

        let r = classify_regime(&SchemeSpec::Milstein(3), h(0.35), false);
        assert_eq!(r.terms, vec![term(Some(4), Coefficient::GTilde(4))]);
        let r = classify_regime(&SchemeSpec::Milstein(5), h(0.3), false);
        assert!((r.rate.unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(r.terms, vec![term(None, Coefficient::G12)]);

        assert_eq!(classify_regime(&SchemeSpec::cn(), h(0.15), false).limit_kind, LimitKind::Divergent);
        assert_eq!(classify_regime(&SchemeSpec::cn(), h(0.2), false).error, ErrorStatus::Unsolved);
        let em = classify_regime(&SchemeSpec::EulerMaruyama, h(0.6), false);
        assert!((em.rate.unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(em.terms, vec![term(None, Coefficient::EmDefect)]);
        assert_eq!(classify_regime(&SchemeSpec::EulerMaruyama, h(0.4), false).limit_kind, LimitKind::Divergent);
    }

    #[test]
    fn custom_condition_is_probed() {
        let m = SdeModel::new(
            crate::calculus::fixture("sin-offset").unwrap(),
            crate::calculus::fixture("zero").unwrap(),
            1.0,
        );
        let e = super::super::expansion_of(&SchemeSpec::Milstein(3), &m).unwrap();
        let custom = SchemeSpec::Custom(e);
        assert_eq!(vanishing_order(&custom, Some(&m)).unwrap(), 3);
        let r = classify_with_model(&custom, h(0.3), &m).unwrap();
        assert_eq!(r.condition, Condition::A);
        assert_eq!(r.limit_kind, LimitKind::Open);
    }
}
