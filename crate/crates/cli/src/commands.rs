use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use fsde::calculus::gaussian_moment_kappa;
use fsde::experiment::{error_table, verify_limit, ErrorReport, LimitCheck};
use fsde::fbm::{CirculantSampler, DyadicGrid, Hurst, SeedSpec};
use fsde::io::{write_path_csv, write_solution_csv};
use fsde::limits::PredictionKind;
use fsde::reference::reference_solution;
use fsde::schemes::{classify_with_model, classify_regime, run_scheme, SchemeSpec};
use fsde::variations::{c_10star_constant, c_l_constant, VariationConstant};

use crate::config::{Config, ConfigError};

/// Options shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Output {
    pub reproducible: bool,
}

impl Output {
    fn stamp(&self) -> Option<u64> {
        (!self.reproducible).then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
    }

    fn create(&self, path: &Path, meta: &[(&str, String)]) -> Result<BufWriter<File>> {
        let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
        if let Some(t) = self.stamp() {
            writeln!(w, "# generated_unix={t}")?;
        }
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(w)
    }

    fn sidecar(&self, dir: &Path, command: &str, body: serde_json::Value, files: &[PathBuf]) -> Result<PathBuf> {
        let mut doc = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "outputs": files.iter().map(|f| f.file_name().unwrap_or_default().to_string_lossy().into_owned()).collect::<Vec<_>>(),
        });
        if let Some(t) = self.stamp() {
            doc["generated_unix"] = json!(t);
        }
        if let (Some(d), serde_json::Value::Object(extra)) = (doc.as_object_mut(), body) {
            d.extend(extra);
        }
        let path = dir.join(format!("{command}.json"));
        fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(path)
    }
}

fn out_dir(config: &Config) -> Result<PathBuf> {
    let dir = config.raw.out_dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("NaN".into(), |v| v.to_string())
}

/// Writes `n_paths` paths sampled at `m_ref`.
pub fn sample_fbm(config: &Config, out: Output) -> Result<Vec<PathBuf>> {
    let dir = out_dir(config)?;
    let spec = &config.spec;
    let grid = DyadicGrid::new(spec.m_ref, spec.horizon)?;
    let sampler = CirculantSampler::new(grid, spec.hurst)?;
    let mut files = Vec::with_capacity(spec.n_paths);
    for i in 0..spec.n_paths {
        let path = sampler.sample(SeedSpec::new(spec.seed, i as u64));
        let file = dir.join(format!("path_{i:05}.csv"));
        let mut w = out.create(&file, &[])?;
        write_path_csv(&mut w, &path)?;
        w.flush()?;
        files.push(file);
    }
    out.sidecar(&dir, "sample-fbm", json!({ "config": config.raw }), &files)?;
    Ok(files)
}

/// Solves every path with the configured scheme at each level, plus the reference at `m_ref`.
pub fn solve(config: &Config, out: Output) -> Result<Vec<PathBuf>> {
    let dir = out_dir(config)?;
    let spec = &config.spec;
    let regime = classify_with_model(&spec.scheme, spec.hurst, &config.model)?;
    let grid = DyadicGrid::new(spec.m_ref, spec.horizon)?;
    let sampler = CirculantSampler::new(grid, spec.hurst)?;
    let meta = [("regime", regime.describe())];
    let mut files = Vec::new();
    for i in 0..spec.n_paths {
        let path = sampler.sample(SeedSpec::new(spec.seed, i as u64));
        let reference = reference_solution(&config.model, &path, spec.order_margin)?;
        let file = dir.join(format!("reference_{i:05}.csv"));
        let mut w = out.create(&file, &meta)?;
        write_solution_csv(&mut w, &path, &reference)?;
        w.flush()?;
        files.push(file);
        for &m in &spec.m_levels {
            let coarse = path.restrict(m)?;
            let sol = run_scheme(&spec.scheme, &config.model, &coarse)?;
            let file = dir.join(format!("solution_{i:05}_m{m:02}.csv"));
            let mut w = out.create(&file, &meta)?;
            write_solution_csv(&mut w, &coarse, &sol)?;
            w.flush()?;
            files.push(file);
        }
    }
    out.sidecar(&dir, "solve", json!({ "config": config.raw, "regime": regime }), &files)?;
    Ok(files)
}

fn write_error_table(out: Output, dir: &Path, report: &ErrorReport) -> Result<Vec<PathBuf>> {
    let mut meta = vec![("regime", report.regime.describe())];
    meta.push((
        "prediction",
        match (&report.prediction_kind, &report.prediction_missing) {
            (Some(k), _) => format!("{k:?}"),
            (None, reason) => format!("absent: {}", reason.clone().unwrap_or_default()),
        },
    ));
    let rate = report.regime.rate;
    let table = dir.join("error_table.csv");
    let mut w = out.create(&table, &meta)?;
    writeln!(w, "path,m,max_abs_error,terminal_error,normalized,prediction")?;
    for rec in &report.records {
        for l in &rec.levels {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                rec.index,
                l.m,
                l.max_abs_error,
                l.terminal_error,
                fmt_opt(l.normalized),
                fmt_opt(rec.prediction)
            )?;
        }
    }
    w.flush()?;

    let summary = dir.join("error_summary.csv");
    let mut meta = meta.clone();
    meta.push(("rate", fmt_opt(rate)));
    if let Some(fit) = &report.slope {
        meta.push(("slope", fit.slope.to_string()));
        meta.push(("slope_ci95", fit.slope_ci95().to_string()));
    }
    let mut w = out.create(&summary, &meta)?;
    writeln!(w, "m,mean_abs_terminal,se_abs_terminal,mean_max_abs,mean_normalized,se_normalized")?;
    for s in &report.summary {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.m,
            s.mean_abs_terminal,
            s.se_abs_terminal,
            s.mean_max_abs,
            fmt_opt(s.mean_normalized),
            fmt_opt(s.se_normalized)
        )?;
    }
    w.flush()?;
    Ok(vec![table, summary])
}

pub fn error_table_cmd(config: &Config, out: Output) -> Result<ErrorReport> {
    let dir = out_dir(config)?;
    let report = error_table(&config.spec)?;
    let files = write_error_table(out, &dir, &report)?;
    out.sidecar(
        &dir,
        "error-table",
        json!({
            "config": config.raw,
            "regime": report.regime,
            "prediction_kind": report.prediction_kind,
            "prediction_missing": report.prediction_missing,
            "summary": report.summary,
            "slope": report.slope,
            "slope_ci95": report.slope.as_ref().map(|f| f.slope_ci95()),
        }),
        &files,
    )?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct Verdict {
    pub m: u32,
    pub pass: bool,
}

/// Runs the error table, then compares normalized errors with the predicted limit.
pub fn verify_limit_cmd(config: &Config, out: Output) -> Result<(LimitCheck, Vec<Verdict>)> {
    let dir = out_dir(config)?;
    let report = error_table(&config.spec)?;
    let mut files = write_error_table(out, &dir, &report)?;
    let check = verify_limit(&report, config.raw.band)?;
    let mut verdicts = Vec::new();
    let file = dir.join("verify_limit.csv");
    let meta = [
        ("regime", report.regime.describe()),
        ("kind", format!("{:?}", check.kind)),
        ("band", format!("{}:{}", check.band.0, check.band.1)),
        ("ks_p", config.raw.ks_p.to_string()),
        ("corr_se", config.raw.corr_se.to_string()),
    ];
    let mut w = out.create(&file, &meta)?;
    writeln!(w, "m,median_ratio,fraction_in_band,ks_conditional_p,ks_unconditional_p,corr_b,corr_b_se,pass")?;
    for l in &check.levels {
        let (r, se) = l.corr_with_b;
        let pass = match check.kind {
            PredictionKind::AlmostSure => l.median_ratio.is_some_and(|x| x >= check.band.0 && x <= check.band.1),
            PredictionKind::MixedNormal => {
                l.ks_conditional_p.is_some_and(|p| p > config.raw.ks_p) && r.abs() <= config.raw.corr_se * se
            }
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            l.m,
            fmt_opt(l.median_ratio),
            fmt_opt(l.fraction_in_band),
            fmt_opt(l.ks_conditional_p),
            fmt_opt(l.ks_unconditional_p),
            r,
            se,
            pass as u8
        )?;
        verdicts.push(Verdict { m: l.m, pass });
    }
    w.flush()?;
    files.push(file);
    out.sidecar(
        &dir,
        "verify-limit",
        json!({ "config": config.raw, "regime": report.regime, "check": check, "verdicts": verdicts }),
        &files,
    )?;
    Ok((check, verdicts))
}

pub struct ConstantsArgs {
    pub hurst: Vec<f64>,
    pub orders: Vec<usize>,
    pub tol: f64,
    pub out: Option<PathBuf>,
}

fn constant_row(c: &VariationConstant, kappa: Option<f64>) -> String {
    format!(
        "{},{},{},{},{},{}",
        c.name,
        c.hurst,
        c.value,
        c.truncation_terms,
        c.truncation_error_bound,
        fmt_opt(kappa)
    )
}

/// `C_(l)` for each order and `C_10*`, one row per H.
pub fn constants(args: &ConstantsArgs, out: Output) -> Result<String> {
    if args.hurst.is_empty() || args.orders.is_empty() {
        return Err(ConfigError("--hurst and --orders must not be empty".into()).into());
    }
    if !(args.tol > 0.0) {
        return Err(ConfigError(format!("--tol: must be positive, got {}", args.tol)).into());
    }
    let mut text = String::new();
    if let Some(t) = out.stamp() {
        text.push_str(&format!("# generated_unix={t}\n"));
    }
    text.push_str(&format!("# tol={}\n", args.tol));
    text.push_str("name,H,value,truncation_terms,bound,kappa\n");
    for &hv in &args.hurst {
        let h = Hurst::new(hv).map_err(|e| ConfigError(format!("--hurst: {e}")))?;
        for &l in &args.orders {
            if l == 0 {
                return Err(ConfigError("--orders: orders start at 1".into()).into());
            }
            let c = c_l_constant(l, h, args.tol)?;
            text.push_str(&constant_row(&c, Some(gaussian_moment_kappa(l))));
            text.push('\n');
        }
        if hv <= 0.5 {
            text.push_str(&constant_row(&c_10star_constant(h, args.tol)?, None));
            text.push('\n');
        }
    }
    if let Some(path) = &args.out {
        fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(text)
}

pub fn classify(scheme: &str, hurst: &[f64], b_vanishes: bool) -> Result<String> {
    let spec: SchemeSpec = scheme.parse().map_err(|e| ConfigError(format!("--scheme: {e}")))?;
    let mut text = String::from("scheme,H,b_vanishes,rate,regime\n");
    for &hv in hurst {
        let h = Hurst::new(hv).map_err(|e| ConfigError(format!("--hurst: {e}")))?;
        let r = classify_regime(&spec, h, b_vanishes);
        text.push_str(&format!("{},{},{},{},\"{}\"\n", spec, hv, b_vanishes, fmt_opt(r.rate), r.describe()));
    }
    Ok(text)
}
