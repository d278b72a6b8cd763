//! Flat TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fsde::calculus::{ModelKeys, SdeModel};
use fsde::experiment::ExperimentSpec;
use fsde::fbm::Hurst;
use fsde::schemes::SchemeSpec;

/// Keys accepted in a config file. Unknown keys are rejected.
pub const KEY_HELP: &str = "\
Config keys (flat TOML):
  sigma       fixture key for the diffusion coefficient, e.g. \"sin-offset\" or \"linear:1\"
  b           fixture key for the drift (default \"zero\")
  y0          initial value (default 1.0)
  scheme      \"em\", \"milstein:k\" or \"cn\"
  H           Hurst parameter in (0, 1)
  T           integer horizon (default 1)
  m_levels    list of coarse levels, each below m_ref
  m_ref       reference level
  n_paths     number of paths (default 100)
  seed        master seed (default 0)
  order_margin  extra Milstein order of the reference scheme (default 1)
  out_dir     output directory (default \"out\")
  band        ratio band of the almost-sure check (default [0.8, 1.2])
  ks_p        KS p-value threshold (default 0.01)
  corr_se     correlation threshold in standard errors (default 3.0)
Fixtures: zero, const:c, linear:a, affine:a:c, sin-offset:a:c, logistic-tanh:a:c";

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub sigma: String,
    #[serde(default = "default_b")]
    pub b: String,
    #[serde(default = "default_y0")]
    pub y0: f64,
    pub scheme: String,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "T", default = "default_t")]
    pub t: u32,
    pub m_levels: Vec<u32>,
    pub m_ref: u32,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_margin")]
    pub order_margin: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default = "default_band")]
    pub band: (f64, f64),
    #[serde(default = "default_ks")]
    pub ks_p: f64,
    #[serde(default = "default_corr")]
    pub corr_se: f64,
}

fn default_b() -> String {
    "zero".into()
}
fn default_y0() -> f64 {
    1.0
}
fn default_t() -> u32 {
    1
}
fn default_paths() -> usize {
    100
}
fn default_margin() -> usize {
    1
}
fn default_out() -> PathBuf {
    "out".into()
}
fn default_band() -> (f64, f64) {
    (0.8, 1.2)
}
fn default_ks() -> f64 {
    0.01
}
fn default_corr() -> f64 {
    3.0
}

/// Invalid configuration; maps to exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

fn bad(key: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("{key}: {msg}"))
}

#[derive(Debug, Clone)]
pub struct Config {
    pub raw: RawConfig,
    pub spec: ExperimentSpec,
    pub model: SdeModel,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        Config::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Config, ConfigError> {
        let hurst = Hurst::new(raw.h).map_err(|e| bad("H", e))?;
        let scheme: SchemeSpec = raw.scheme.parse().map_err(|e| bad("scheme", e))?;
        let keys = ModelKeys {
            sigma: raw.sigma.clone(),
            b: raw.b.clone(),
            y0: raw.y0,
        };
        let sigma = fsde::calculus::fixture(&raw.sigma).map_err(|e| bad("sigma", e))?;
        let b = fsde::calculus::fixture(&raw.b).map_err(|e| bad("b", e))?;
        if !raw.y0.is_finite() {
            return Err(bad("y0", "must be finite"));
        }
        if raw.t == 0 {
            return Err(bad("T", "must be at least 1"));
        }
        if raw.m_levels.is_empty() {
            return Err(bad("m_levels", "must not be empty"));
        }
        if let Some(m) = raw.m_levels.iter().find(|&&m| m >= raw.m_ref) {
            return Err(bad("m_levels", format!("entry {m} is not below m_ref = {}", raw.m_ref)));
        }
        if raw.m_ref > 24 {
            return Err(bad("m_ref", "must be at most 24"));
        }
        if raw.n_paths == 0 {
            return Err(bad("n_paths", "must be at least 1"));
        }
        if !(raw.band.0 < raw.band.1) {
            return Err(bad("band", "lower bound must be below upper bound"));
        }
        if !(0.0..1.0).contains(&raw.ks_p) {
            return Err(bad("ks_p", "must lie in [0, 1)"));
        }
        if !(raw.corr_se > 0.0) {
            return Err(bad("corr_se", "must be positive"));
        }
        let mut spec = ExperimentSpec::new(keys, scheme, hurst, raw.m_levels.clone(), raw.m_ref);
        spec.horizon = raw.t;
        spec.n_paths = raw.n_paths;
        spec.seed = raw.seed;
        spec.order_margin = raw.order_margin;
        spec.validate().map_err(|e| bad("config", e))?;
        let model = SdeModel::new(sigma, b, raw.y0);
        Ok(Config { raw, spec, model })
    }
}
