use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{fbm_covariance, fgn_autocovariance, DyadicGrid, FbmPath, Hurst, SeedSpec};
use crate::error::{Error, Result};

/// Default bound on the number of sampled points for the Cholesky sampler.
pub const DEFAULT_CHOLESKY_LIMIT: usize = 1 << 14;

/// Maximum number of embedding doublings tried by the circulant sampler.
const MAX_EMBEDDING_DOUBLINGS: u32 = 8;

/// Exact sampler through the Cholesky factor of `Cov(B_{τ_i}, B_{τ_j})`.
///
/// The factorization is computed once; each call to [`sample`](Self::sample)
/// costs one matrix-vector product.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    grid: DyadicGrid,
    hurst: Hurst,
    lower: DMatrix<f64>,
}

impl CholeskySampler {
    pub fn new(grid: DyadicGrid, hurst: Hurst) -> Result<Self> {
        Self::with_limit(grid, hurst, DEFAULT_CHOLESKY_LIMIT)
    }

    pub fn with_limit(grid: DyadicGrid, hurst: Hurst, limit: usize) -> Result<Self> {
        let n = grid.steps();
        if n > limit {
            return Err(Error::CholeskyTooLarge { points: n, limit });
        }
        let cov = DMatrix::from_fn(n, n, |i, j| {
            fbm_covariance(grid.time(i + 1), grid.time(j + 1), hurst)
        });
        let chol = cov.cholesky().ok_or(Error::NotPositiveDefinite {
            level: grid.level(),
            hurst: hurst.value(),
        })?;
        Ok(CholeskySampler {
            grid,
            hurst,
            lower: chol.unpack(),
        })
    }

    pub fn sample(&self, seed: SeedSpec) -> FbmPath {
        let mut rng = seed.rng();
        let n = self.grid.steps();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = &self.lower * z;
        let mut values = Vec::with_capacity(n + 1);
        values.push(0.0);
        values.extend(b.iter().copied());
        FbmPath {
            grid: self.grid,
            hurst: self.hurst,
            seed: Some(seed),
            values,
        }
    }
}

pub fn sample_fbm_cholesky(grid: DyadicGrid, hurst: Hurst, seed: SeedSpec) -> Result<FbmPath> {
    Ok(CholeskySampler::new(grid, hurst)?.sample(seed))
}

/// Circulant-embedding (Davies–Harte) sampler for the stationary increments.
#[derive(Clone)]
pub struct CirculantSampler {
    grid: DyadicGrid,
    hurst: Hurst,
    /// `sqrt(λ_k / M)` for the embedding eigenvalues `λ_k`.
    weights: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantSampler")
            .field("grid", &self.grid)
            .field("hurst", &self.hurst)
            .field("embedding", &self.weights.len())
            .finish()
    }
}

impl CirculantSampler {
    pub fn new(grid: DyadicGrid, hurst: Hurst) -> Result<Self> {
        let n = grid.steps();
        let mut half = n.next_power_of_two().max(1);
        let mut planner = FftPlanner::new();
        let mut worst = 0.0;
        for _ in 0..=MAX_EMBEDDING_DOUBLINGS {
            let size = 2 * half;
            let mut row: Vec<Complex<f64>> = (0..size)
                .map(|j| {
                    let lag = if j <= half { j } else { size - j };
                    Complex::new(fgn_autocovariance(lag, hurst), 0.0)
                })
                .collect();
            let fft = planner.plan_fft_forward(size);
            fft.process(&mut row);
            let max = row.iter().map(|c| c.re).fold(0.0, f64::max);
            worst = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
            if worst >= -1e-10 * max {
                let weights = row
                    .iter()
                    .map(|c| (c.re.max(0.0) / size as f64).sqrt())
                    .collect();
                return Ok(CirculantSampler {
                    grid,
                    hurst,
                    weights,
                    fft,
                });
            }
            half *= 2;
        }
        Err(Error::NegativeEigenvalue {
            eigenvalue: worst,
            size: half,
        })
    }

    pub fn grid(&self) -> DyadicGrid {
        self.grid
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    /// Fractional Gaussian noise increments with variance `step^{2H}`.
    pub fn sample_increments(&self, seed: SeedSpec) -> Vec<f64> {
        let mut rng = seed.rng();
        let mut buf: Vec<Complex<f64>> = self
            .weights
            .iter()
            .map(|&w| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(w * re, w * im)
            })
            .collect();
        self.fft.process(&mut buf);
        let scale = self.grid.step().powf(self.hurst.value());
        buf.iter()
            .take(self.grid.steps())
            .map(|c| c.re * scale)
            .collect()
    }

    pub fn sample(&self, seed: SeedSpec) -> FbmPath {
        let incs = self.sample_increments(seed);
        let mut values = Vec::with_capacity(incs.len() + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for d in incs {
            acc += d;
            values.push(acc);
        }
        FbmPath {
            grid: self.grid,
            hurst: self.hurst,
            seed: Some(seed),
            values,
        }
    }
}

pub fn sample_fbm_circulant(grid: DyadicGrid, hurst: Hurst, seed: SeedSpec) -> Result<FbmPath> {
    Ok(CirculantSampler::new(grid, hurst)?.sample(seed))
}
