//! Monte Carlo error experiments: per-path errors against a reference run,
//! rate fits, and comparisons with predicted limits.

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{ModelKeys, SdeModel};
use crate::error::{Error, Result};
use crate::fbm::{CirculantSampler, DyadicGrid, FbmPath, Hurst, SeedSpec};
use crate::limits::{predicted_normalized_error, PredictionKind};
use crate::reference::{reference_solution, SolutionPath, DEFAULT_ORDER_MARGIN};
use crate::schemes::{classify_with_model, run_scheme, RegimeReport, SchemeSpec};
use crate::stats::{self, LineFit};

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub model: ModelKeys,
    pub scheme: SchemeSpec,
    pub hurst: Hurst,
    pub horizon: u32,
    pub m_levels: Vec<u32>,
    pub m_ref: u32,
    pub n_paths: usize,
    pub seed: u64,
    pub order_margin: usize,
}

impl ExperimentSpec {
    pub fn new(model: ModelKeys, scheme: SchemeSpec, hurst: Hurst, m_levels: Vec<u32>, m_ref: u32) -> Self {
        ExperimentSpec {
            model,
            scheme,
            hurst,
            horizon: 1,
            m_levels,
            m_ref,
            n_paths: 100,
            seed: 0,
            order_margin: DEFAULT_ORDER_MARGIN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_levels.is_empty() {
            return Err(Error::InvalidGrid("m_levels is empty".into()));
        }
        if let Some(m) = self.m_levels.iter().find(|&&m| m >= self.m_ref) {
            return Err(Error::InvalidGrid(format!("m_levels entry {m} is not below m_ref = {}", self.m_ref)));
        }
        if self.n_paths == 0 {
            return Err(Error::InvalidGrid("n_paths must be at least 1".into()));
        }
        DyadicGrid::new(self.m_ref, self.horizon)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelError {
    pub m: u32,
    /// `max_r |Ŷ_{τ_r} − Y_{τ_r}|`
    pub max_abs_error: f64,
    /// `Ŷ_T − Y_T`
    pub terminal_error: f64,
    /// `2^{ρm}(Ŷ_T − Y_T)` when the regime has a rate.
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub index: usize,
    pub b_terminal: f64,
    pub y_terminal: f64,
    pub j_terminal: f64,
    pub levels: Vec<LevelError>,
    /// Limit at `T` (almost-sure) or its conditional variance (mixed normal).
    pub prediction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub m: u32,
    pub mean_abs_terminal: f64,
    pub se_abs_terminal: f64,
    pub mean_max_abs: f64,
    pub mean_normalized: Option<f64>,
    pub se_normalized: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub regime: RegimeReport,
    pub prediction_kind: Option<PredictionKind>,
    /// Reason no prediction is available.
    pub prediction_missing: Option<String>,
    pub records: Vec<PathRecord>,
    pub summary: Vec<LevelSummary>,
    /// Least-squares fit of `log₂ mean|Ŷ_T − Y_T|` against `m`.
    pub slope: Option<LineFit>,
}

/// Everything computed for one driving path.
pub struct PathRun {
    pub path: FbmPath,
    pub reference: SolutionPath,
    pub record: PathRecord,
}

fn run_one(
    spec: &ExperimentSpec,
    model: &SdeModel,
    sampler: &CirculantSampler,
    rate: Option<f64>,
    index: usize,
) -> Result<PathRun> {
    let path = sampler.sample(SeedSpec::new(spec.seed, index as u64));
    let reference = reference_solution(model, &path, spec.order_margin)?;
    let mut levels = Vec::with_capacity(spec.m_levels.len());
    for &m in &spec.m_levels {
        let coarse = path.restrict(m)?;
        let approx = run_scheme(&spec.scheme, model, &coarse)?;
        let exact = reference.restrict(m)?;
        let max_abs_error = approx
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let terminal_error = approx.terminal() - exact.terminal();
        levels.push(LevelError {
            m,
            max_abs_error,
            terminal_error,
            normalized: rate.map(|r| (r * m as f64).exp2() * terminal_error),
        });
    }
    let prediction = match predicted_normalized_error(&spec.scheme, model, spec.hurst, &reference) {
        Ok((_, p)) => Some(p.terminal()),
        Err(Error::NoPrediction(_)) => None,
        Err(e) => return Err(e),
    };
    let record = PathRecord {
        index,
        b_terminal: path.terminal(),
        y_terminal: reference.terminal(),
        j_terminal: reference.jacobian().map_or(f64::NAN, |j| *j.last().unwrap()),
        levels,
        prediction,
    };
    Ok(PathRun { path, reference, record })
}

/// Runs every path in parallel on the current rayon pool and calls `visit`
/// with each finished run. Results do not depend on scheduling.
pub fn run_paths<T: Send>(
    spec: &ExperimentSpec,
    visit: impl Fn(&PathRun) -> Result<T> + Sync,
) -> Result<(RegimeReport, Vec<T>)> {
    spec.validate()?;
    let model = SdeModel::from_keys(&spec.model)?;
    let regime = classify_with_model(&spec.scheme, spec.hurst, &model)?;
    let sampler = CirculantSampler::new(DyadicGrid::new(spec.m_ref, spec.horizon)?, spec.hurst)?;
    let rate = regime.rate;
    let out = (0..spec.n_paths)
        .into_par_iter()
        .map(|i| run_one(spec, &model, &sampler, rate, i).and_then(|run| visit(&run)))
        .collect::<Result<Vec<_>>>()?;
    Ok((regime, out))
}

pub fn error_table(spec: &ExperimentSpec) -> Result<ErrorReport> {
    let (regime, records) = run_paths(spec, |run| Ok(run.record.clone()))?;
    report_from_records(spec, regime, records)
}

/// Summaries and fitted slope for records produced by [`run_paths`].
pub fn report_from_records(spec: &ExperimentSpec, regime: RegimeReport, records: Vec<PathRecord>) -> Result<ErrorReport> {
    let mut summary = Vec::new();
    for (i, &m) in spec.m_levels.iter().enumerate() {
        let abs: Vec<f64> = records.iter().map(|r| r.levels[i].terminal_error.abs()).collect();
        let maxes: Vec<f64> = records.iter().map(|r| r.levels[i].max_abs_error).collect();
        let (mean_abs_terminal, se_abs_terminal) = stats::mean_and_se(&abs);
        let normalized: Option<Vec<f64>> = records.iter().map(|r| r.levels[i].normalized).collect();
        let (mean_normalized, se_normalized) = match normalized {
            Some(v) => {
                let (m, s) = stats::mean_and_se(&v);
                (Some(m), Some(s))
            }
            None => (None, None),
        };
        summary.push(LevelSummary {
            m,
            mean_abs_terminal,
            se_abs_terminal,
            mean_max_abs: stats::mean(&maxes),
            mean_normalized,
            se_normalized,
        });
    }
    let slope = (summary.len() >= 2 && summary.iter().all(|s| s.mean_abs_terminal > 0.0)).then(|| {
        let xs: Vec<f64> = summary.iter().map(|s| s.m as f64).collect();
        let ys: Vec<f64> = summary.iter().map(|s| s.mean_abs_terminal.log2()).collect();
        stats::fit_line(&xs, &ys)
    });
    let model = SdeModel::from_keys(&spec.model)?;
    let (prediction_kind, prediction_missing) = match prediction_kind(spec, &model, &regime) {
        Ok(k) => (Some(k), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ErrorReport {
        regime,
        prediction_kind,
        prediction_missing,
        records,
        summary,
        slope,
    })
}

fn prediction_kind(spec: &ExperimentSpec, model: &SdeModel, regime: &RegimeReport) -> Result<PredictionKind> {
    use crate::schemes::LimitKind;
    match regime.limit_kind {
        LimitKind::AlmostSureDriftIntegral => Ok(PredictionKind::AlmostSure),
        LimitKind::MixedNormal => Ok(PredictionKind::MixedNormal),
        _ => Err(Error::NoPrediction(format!(
            "no closed-form limit for {} at H = {} ({})",
            spec.scheme,
            spec.hurst.value(),
            model.id()
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCheck {
    pub m: u32,
    /// Almost-sure: median of normalized error over prediction.
    pub median_ratio: Option<f64>,
    /// Almost-sure: share of paths whose ratio lies in the band.
    pub fraction_in_band: Option<f64>,
    /// Mixed normal: KS p-value of residuals standardized by the conditional SD.
    pub ks_conditional_p: Option<f64>,
    /// Mixed normal: KS p-value using the unconditional mixture variance.
    pub ks_unconditional_p: Option<f64>,
    /// Correlation of the normalized error with `B_T`, and its SE.
    pub corr_with_b: (f64, f64),
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitCheck {
    pub kind: PredictionKind,
    pub band: (f64, f64),
    pub levels: Vec<LevelCheck>,
}

/// Compares normalized errors with predicted limits level by level.
pub fn verify_limit(report: &ErrorReport, band: (f64, f64)) -> Result<LimitCheck> {
    let kind = report
        .prediction_kind
        .ok_or_else(|| Error::NoPrediction(report.prediction_missing.clone().unwrap_or_default()))?;
    let preds: Vec<f64> = report
        .records
        .iter()
        .map(|r| r.prediction.ok_or_else(|| Error::NoPrediction("path without prediction".into())))
        .collect::<Result<_>>()?;
    let b: Vec<f64> = report.records.iter().map(|r| r.b_terminal).collect();
    let mut levels = Vec::new();
    for (i, s) in report.summary.iter().enumerate() {
        let z: Vec<f64> = report
            .records
            .iter()
            .map(|r| r.levels[i].normalized.unwrap_or(f64::NAN))
            .collect();
        let corr_with_b = stats::correlation(&z, &b);
        let mut check = LevelCheck {
            m: s.m,
            median_ratio: None,
            fraction_in_band: None,
            ks_conditional_p: None,
            ks_unconditional_p: None,
            corr_with_b,
        };
        match kind {
            PredictionKind::AlmostSure => {
                let ratios: Vec<f64> = z.iter().zip(&preds).map(|(z, p)| z / p).collect();
                check.median_ratio = Some(stats::median(&ratios));
                let inside = ratios.iter().filter(|r| **r >= band.0 && **r <= band.1).count();
                check.fraction_in_band = Some(inside as f64 / ratios.len() as f64);
            }
            PredictionKind::MixedNormal => {
                let cond: Vec<f64> = z.iter().zip(&preds).map(|(z, v)| z / v.sqrt()).collect();
                check.ks_conditional_p = Some(stats::ks_standard_normal(&cond).p_value);
                let sd = stats::mean(&preds).sqrt();
                let uncond: Vec<f64> = z.iter().map(|z| z / sd).collect();
                check.ks_unconditional_p = Some(stats::ks_standard_normal(&uncond).p_value);
            }
        }
        levels.push(check);
    }
    Ok(LimitCheck { kind, band, levels })
}
