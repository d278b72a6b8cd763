//! Dyadic time grids and exact sampling of one-dimensional fractional
//! Brownian motion.
//!
//! Every experiment samples a single path at its finest level and derives the
//! coarser levels with [`FbmPath::restrict`], so all levels see the same noise.

mod sampler;

pub use sampler::{
    sample_fbm_cholesky, sample_fbm_circulant, CholeskySampler, CirculantSampler,
    DEFAULT_CHOLESKY_LIMIT,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when comparing a Hurst parameter against rational
/// thresholds such as `1/k`.
pub const THRESHOLD_EPS: f64 = 1e-9;

/// Hurst parameter `H ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hurst(f64);

impl Hurst {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 && h < 1.0 {
            Ok(Hurst(h))
        } else {
            Err(Error::InvalidHurst(h))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The integer `q` with `1/(q+1) < H <= 1/q`.
    pub fn q(self) -> u32 {
        (1.0 / self.0 + THRESHOLD_EPS).floor() as u32
    }

    /// Whether `H` equals `x` up to [`THRESHOLD_EPS`].
    pub fn is_at(self, x: f64) -> bool {
        (self.0 - x).abs() <= THRESHOLD_EPS
    }

    /// Strictly above `x`, treating values within tolerance as equal.
    pub fn above(self, x: f64) -> bool {
        self.0 > x + THRESHOLD_EPS
    }

    /// Strictly below `x`, treating values within tolerance as equal.
    pub fn below(self, x: f64) -> bool {
        self.0 < x - THRESHOLD_EPS
    }
}

impl TryFrom<f64> for Hurst {
    type Error = Error;
    fn try_from(h: f64) -> Result<Self> {
        Hurst::new(h)
    }
}

impl From<Hurst> for f64 {
    fn from(h: Hurst) -> f64 {
        h.0
    }
}

/// The grid `τ_r = 2^{-m} r`, `r = 0..=T·2^m`, on `[0, T]` for integer `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DyadicGrid {
    level: u32,
    horizon: u32,
}

impl DyadicGrid {
    pub fn new(level: u32, horizon: u32) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidGrid("horizon T must be a positive integer".into()));
        }
        if level > 30 || (horizon as u64) << level > (1u64 << 31) {
            return Err(Error::InvalidGrid(format!(
                "level {level} with horizon {horizon} is too fine"
            )));
        }
        Ok(DyadicGrid { level, horizon })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Number of intervals, `T·2^m`.
    pub fn steps(&self) -> usize {
        (self.horizon as usize) << self.level
    }

    /// Number of grid points, `T·2^m + 1`.
    pub fn len(&self) -> usize {
        self.steps() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, r: usize) -> f64 {
        r as f64 * self.step()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |r| self.time(r))
    }

    /// Index of `t` on the grid, if `t` is a grid point.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let scaled = t * (self.level as f64).exp2();
        let r = scaled.round();
        if !(0.0..=self.steps() as f64).contains(&r) || (scaled - r).abs() > 1e-9 {
            return Err(Error::OffGrid(t));
        }
        Ok(r as usize)
    }

    pub fn coarsen(&self, level: u32) -> Result<DyadicGrid> {
        if level > self.level {
            return Err(Error::RestrictionLevel {
                fine: self.level,
                coarse: level,
            });
        }
        DyadicGrid::new(level, self.horizon)
    }
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        SeedSpec { seed, stream }
    }

    /// Counter-based generator for this stream; independent of scheduling.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Covariance `½(|s|^{2H} + |t|^{2H} − |t−s|^{2H})` of fractional Brownian motion.
pub fn fbm_covariance(s: f64, t: f64, h: Hurst) -> f64 {
    let two_h = 2.0 * h.value();
    0.5 * (s.abs().powf(two_h) + t.abs().powf(two_h) - (t - s).abs().powf(two_h))
}

/// Autocovariance of unit-spaced fractional Gaussian noise at lag `k`.
pub fn fgn_autocovariance(k: usize, h: Hurst) -> f64 {
    let two_h = 2.0 * h.value();
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

/// A sampled fBm path on a dyadic grid, `B(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    grid: DyadicGrid,
    hurst: Hurst,
    seed: Option<SeedSpec>,
    values: Vec<f64>,
}

impl FbmPath {
    /// Wraps externally supplied values, e.g. a fixture or a deterministic test path.
    pub fn from_values(
        grid: DyadicGrid,
        hurst: Hurst,
        seed: Option<SeedSpec>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Length(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::Format(format!("B(0) must be 0, got {}", values[0])));
        }
        Ok(FbmPath {
            grid,
            hurst,
            seed,
            values,
        })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    pub fn seed(&self) -> Option<SeedSpec> {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, r: usize) -> f64 {
        self.values[r]
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `δB_r = B(τ_{r+1}) − B(τ_r)`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Subsamples every `2^{m − coarser}`-th point.
    pub fn restrict(&self, coarser: u32) -> Result<FbmPath> {
        let grid = self.grid.coarsen(coarser)?;
        let stride = 1usize << (self.grid.level - coarser);
        Ok(FbmPath {
            grid,
            hurst: self.hurst,
            seed: self.seed,
            values: self.values.iter().step_by(stride).copied().collect(),
        })
    }
}

/// Free-function form of [`FbmPath::restrict`].
pub fn restrict_path(path: &FbmPath, coarser: u32) -> Result<FbmPath> {
    path.restrict(coarser)
}

/// Free-function form of [`FbmPath::increments`].
pub fn increments(path: &FbmPath) -> Vec<f64> {
    path.increments()
}
