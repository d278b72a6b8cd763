//! Discrete Stieltjes sums, Hermite variations, iterated-integral kernels and
//! the constants `C_(l)` and `C_10*`.

use serde::Serialize;

use crate::calculus::{factorial, gaussian_moment_kappa, hermite};
use crate::error::{Error, Result};
use crate::fbm::{DyadicGrid, FbmPath, Hurst};

/// Default number of levels between a coarse grid and the quadrature grid.
pub const DEFAULT_QUADRATURE_GAP: u32 = 6;

/// Series truncation cap for the constants.
const MAX_SERIES_TERMS: usize = 50_000_000;

/// Lags from which the binomial expansions replace the direct differences.
const ASYMPTOTIC_LAG: usize = 16;

/// Per-interval values `x^{(2)}_{τ_r, τ_{r+1}}` of a two-parameter increment.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub name: String,
    pub grid: DyadicGrid,
    pub values: Vec<f64>,
}

impl Kernel {
    pub fn new(name: impl Into<String>, grid: DyadicGrid, values: Vec<f64>) -> Result<Kernel> {
        if values.len() != grid.steps() {
            return Err(Error::Length(format!(
                "{} kernel values for {} intervals",
                values.len(),
                grid.steps()
            )));
        }
        Ok(Kernel {
            name: name.into(),
            grid,
            values,
        })
    }
}

pub fn increment_kernel(path: &FbmPath) -> Kernel {
    Kernel {
        name: "dB".into(),
        grid: path.grid(),
        values: path.increments(),
    }
}

pub fn time_kernel(grid: DyadicGrid) -> Kernel {
    Kernel {
        name: "dt".into(),
        grid,
        values: vec![grid.step(); grid.steps()],
    }
}

/// `δB^k`.
pub fn power_kernel(path: &FbmPath, k: u32) -> Kernel {
    Kernel {
        name: format!("dB^{k}"),
        grid: path.grid(),
        values: path.increments().iter().map(|d| d.powi(k as i32)).collect(),
    }
}

/// `B̃^{(k)} = δB^k − κ_k δt^{kH}` for even `k`; plain `δB^k` for odd `k`.
pub fn centered_power_kernel(path: &FbmPath, k: u32) -> Kernel {
    let mut kern = power_kernel(path, k);
    if k % 2 == 0 {
        let shift = gaussian_moment_kappa(k as usize)
            * path.grid().step().powf(k as f64 * path.hurst().value());
        kern.values.iter_mut().for_each(|v| *v -= shift);
    }
    kern.name = format!("B~^({k})");
    kern
}

/// `V^{(l)}_{s,t} = (t−s)^{1/2} H_l((t−s)^{−H} δB_{s,t})`.
pub fn hermite_variation_kernel(l: usize, path: &FbmPath) -> Kernel {
    let dt = path.grid().step();
    let scale = dt.powf(-path.hurst().value());
    let root = dt.sqrt();
    Kernel {
        name: format!("V^({l})"),
        grid: path.grid(),
        values: path
            .increments()
            .iter()
            .map(|d| root * hermite(l, scale * d))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// weight at `τ_r`
    Forward,
    /// weight at `τ_{r+1}`
    Backward,
}

/// `Σ_{r < 2^m t} w_r K_r` (forward) or `Σ w_{r+1} K_r` (backward).
pub fn stieltjes_sum(weights: &[f64], kernel: &Kernel, t: f64, weighting: Weighting) -> Result<f64> {
    if weights.len() != kernel.grid.len() {
        return Err(Error::Length(format!(
            "{} weights for {} grid points",
            weights.len(),
            kernel.grid.len()
        )));
    }
    let n = kernel.grid.index_of(t)?;
    let offset = match weighting {
        Weighting::Forward => 0,
        Weighting::Backward => 1,
    };
    Ok((0..n).map(|r| weights[r + offset] * kernel.values[r]).sum())
}

/// Running forward sums `t ↦ ℐ_t` at every grid point.
pub fn stieltjes_path(weights: &[f64], kernel: &Kernel) -> Vec<f64> {
    let mut out = Vec::with_capacity(kernel.grid.len());
    let mut acc = 0.0;
    out.push(acc);
    for (w, k) in weights.iter().zip(&kernel.values) {
        acc += w * k;
        out.push(acc);
    }
    out
}

/// Iterated integrals of `(B, t)` over the intervals of a coarse grid.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratedKernels {
    pub b10: Kernel,
    pub b01: Kernel,
    pub b10_star: Kernel,
    pub b110_star: Kernel,
    pub b101_star: Kernel,
    pub b011_star: Kernel,
}

/// Approximates the iterated integrals on level `target_m` by trapezoid
/// quadrature on `fine`, which must be at least `gap` levels finer.
///
/// Only `∫(B_u−B_s)du` and `½∫(B_u−B_s)²du` are integrated numerically; the
/// other words follow from integration by parts and the shuffle relation.
pub fn iterated_integral_kernels(fine: &FbmPath, target_m: u32, gap: u32) -> Result<IteratedKernels> {
    let required = target_m + gap;
    if fine.grid().level() < required {
        return Err(Error::Refinement {
            fine: fine.grid().level(),
            required,
        });
    }
    let coarse = fine.grid().coarsen(target_m)?;
    let stride = 1usize << (fine.grid().level() - target_m);
    let h = fine.grid().step();
    let big = coarse.step();
    let hv = fine.hurst().value();
    let mean_sq = big.powf(1.0 + 2.0 * hv) / (2.0 * (1.0 + 2.0 * hv));
    let n = coarse.steps();
    let mut out = [(); 6].map(|_| Vec::with_capacity(n));
    let v = fine.values();
    for r in 0..n {
        let seg = &v[r * stride..=(r + 1) * stride];
        let base = seg[0];
        let mut i10 = 0.0;
        let mut i110 = 0.0;
        for w in seg.windows(2) {
            let (a, b) = (w[0] - base, w[1] - base);
            i10 += 0.5 * (a + b) * h;
            i110 += 0.25 * (a * a + b * b) * h;
        }
        let db = seg[stride] - base;
        let i01 = big * db - i10;
        let i101 = i10 * db - 2.0 * i110;
        let i011 = 0.5 * big * db * db - i101 - i110;
        out[0].push(i10);
        out[1].push(i01);
        out[2].push(i10 - 0.5 * db * big);
        out[3].push(i110 - mean_sq);
        out[4].push(i101 + (1.0 - 2.0 * hv) * mean_sq);
        out[5].push(i011 - mean_sq);
    }
    let [b10, b01, s10, s110, s101, s011] = out;
    let k = |name: &str, values| Kernel {
        name: name.into(),
        grid: coarse,
        values,
    };
    Ok(IteratedKernels {
        b10: k("B^10", b10),
        b01: k("B^01", b01),
        b10_star: k("B^10*", s10),
        b110_star: k("B^110*", s110),
        b101_star: k("B^101*", s101),
        b011_star: k("B^011*", s011),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstantName {
    /// `C_(l)`
    HermiteVariation(usize),
    /// `C_10*`
    TenStar,
}

impl std::fmt::Display for ConstantName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstantName::HermiteVariation(l) => write!(f, "C_({l})"),
            ConstantName::TenStar => write!(f, "C_10*"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariationConstant {
    pub name: ConstantName,
    pub hurst: f64,
    pub value: f64,
    pub truncation_terms: usize,
    /// Bound on `|value − exact|` from the discarded tail.
    pub truncation_error_bound: f64,
}

/// Generalized binomial coefficient `C(a, j)`.
fn binom(a: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (a - i as f64) / (i + 1) as f64)
}

/// `|r+1|^{2H} + |r−1|^{2H} − 2r^{2H}`, twice the unit-lag fGn autocovariance.
pub fn second_difference(r: usize, h: f64) -> f64 {
    let c = 2.0 * h;
    let rf = r as f64;
    if r < ASYMPTOTIC_LAG {
        return (rf + 1.0).powf(c) + (rf - 1.0).abs().powf(c) - 2.0 * rf.powf(c);
    }
    let x = 1.0 / rf;
    let mut s = 0.0;
    let mut xp = x * x;
    for j in (2..60).step_by(2) {
        let t = binom(c, j) * xp;
        s += t;
        if t.abs() < 1e-18 * s.abs() {
            break;
        }
        xp *= x * x;
    }
    2.0 * rf.powf(c) * s
}

/// `E[(B^{10*}_{0,1})²] = 1/(2H+2) − 1/4`.
pub fn b10_star_variance(h: f64) -> f64 {
    1.0 / (2.0 * h + 2.0) - 0.25
}

/// `E[B^{10*}_{0,1} B^{10*}_{r,r+1}]` for `r ≥ 1`.
pub fn b10_star_lag_covariance(r: usize, h: f64) -> f64 {
    assert!(r >= 1);
    let (a, b, c) = (2.0 * h + 2.0, 2.0 * h + 1.0, 2.0 * h);
    let rf = r as f64;
    if r < ASYMPTOTIC_LAG {
        return (2.0 * rf.powf(a) - (rf + 1.0).powf(a) - (rf - 1.0).powf(a)) / (2.0 * a * b)
            + ((rf + 1.0).powf(b) - (rf - 1.0).powf(b)) / (2.0 * b)
            - (2.0 * rf.powf(c) + (rf + 1.0).powf(c) + (rf - 1.0).powf(c)) / 8.0;
    }
    // Σ_{n even} e_n r^{2H+2−n}; the n = 0, 2, 4 coefficients vanish identically
    let x = 1.0 / rf;
    let mut s = 0.0;
    for n in (6..64).step_by(2) {
        let e = -binom(a, n) / (a * b) + binom(b, n - 1) / b - binom(c, n - 2) / 4.0;
        let t = e * x.powi(n as i32);
        s += t;
        if t.abs() < 1e-18 * s.abs() {
            break;
        }
    }
    rf.powf(a) * s
}

fn check_summable(name: ConstantName, h: Hurst, decay: f64) -> Result<()> {
    if decay <= 1.0 {
        return Err(Error::SeriesDomain {
            name: name.to_string(),
            hurst: h.value(),
        });
    }
    Ok(())
}

/// Sums `base + 2^{…}Σ terms` until the value bound drops below `tol`.
fn sum_series(
    name: ConstantName,
    h: Hurst,
    base: f64,
    weight: f64,
    tol: f64,
    max_terms: Option<usize>,
    term: impl Fn(usize) -> f64,
    tail: impl Fn(usize) -> f64,
) -> Result<VariationConstant> {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut r = 0;
    let cap = max_terms.unwrap_or(MAX_SERIES_TERMS);
    loop {
        let square = base + weight * sum;
        let bound = weight * tail(r) / (2.0 * square.max(f64::MIN_POSITIVE).sqrt());
        let done = match max_terms {
            Some(n) => r >= n,
            None => bound < tol,
        };
        if done {
            return Ok(VariationConstant {
                name,
                hurst: h.value(),
                value: square.max(0.0).sqrt(),
                truncation_terms: r,
                truncation_error_bound: bound,
            });
        }
        if r >= cap {
            return Err(Error::SeriesTolerance {
                name: name.to_string(),
                tol,
                terms: r,
            });
        }
        r += 1;
        // Kahan summation keeps the long tails accurate
        let y = term(r) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
}

/// `C_(l) = √(l!(1 + 2^{1−l} Σ_{r≥1} ρ(r)^l))`, `ρ(r) = |r+1|^{2H}+|r−1|^{2H}−2r^{2H}`.
pub fn c_l_constant(l: usize, h: Hurst, tol: f64) -> Result<VariationConstant> {
    c_l_impl(l, h, tol, None)
}

/// [`c_l_constant`] with exactly `terms` summands.
pub fn c_l_constant_with_terms(l: usize, h: Hurst, terms: usize) -> Result<VariationConstant> {
    c_l_impl(l, h, 0.0, Some(terms))
}

fn c_l_impl(l: usize, h: Hurst, tol: f64, terms: Option<usize>) -> Result<VariationConstant> {
    let name = ConstantName::HermiteVariation(l);
    if l < 2 {
        return Err(Error::InvalidScheme(format!("C_(l) needs l ≥ 2, got {l}")));
    }
    let hv = h.value();
    let decay = l as f64 * (2.0 - 2.0 * hv);
    check_summable(name, h, decay)?;
    let lf = factorial(l);
    // |ρ(r)| ≤ 2H|2H−1|(r−1)^{2H−2} for r ≥ 2
    let c = 2.0 * hv * (2.0 * hv - 1.0).abs();
    let tail = move |r: usize| {
        if c == 0.0 {
            return 0.0;
        }
        if r < 2 {
            return f64::INFINITY;
        }
        c.powi(l as i32) * ((r - 1) as f64).powf(1.0 - decay) / (decay - 1.0)
    };
    sum_series(
        name,
        h,
        lf,
        lf * 2f64.powi(1 - l as i32),
        tol,
        terms,
        |r| second_difference(r, hv).powi(l as i32),
        tail,
    )
}

/// `C_10* = √(E[(B^{10*}_{0,1})²] + 2Σ_{r≥1} E[B^{10*}_{0,1}B^{10*}_{r,r+1}])`.
pub fn c_10star_constant(h: Hurst, tol: f64) -> Result<VariationConstant> {
    c_10star_impl(h, tol, None)
}

pub fn c_10star_constant_with_terms(h: Hurst, terms: usize) -> Result<VariationConstant> {
    c_10star_impl(h, 0.0, Some(terms))
}

fn c_10star_impl(h: Hurst, tol: f64, terms: Option<usize>) -> Result<VariationConstant> {
    let hv = h.value();
    let name = ConstantName::TenStar;
    check_summable(name, h, 4.0 - 2.0 * hv)?;
    // |Cov_r| ≤ (1/128)·max_{[r−1,r+1]}|g″|, g(x) = H(2H−1)x^{2H−2}
    let k = hv * (2.0 * hv - 1.0).abs() * (2.0 - 2.0 * hv) * (3.0 - 2.0 * hv) / 128.0;
    let tail = move |r: usize| {
        if k == 0.0 {
            return 0.0;
        }
        if r < 2 {
            return f64::INFINITY;
        }
        k * ((r - 1) as f64).powf(2.0 * hv - 3.0) / (3.0 - 2.0 * hv)
    };
    sum_series(
        name,
        h,
        b10_star_variance(hv),
        2.0,
        tol,
        terms,
        |r| b10_star_lag_covariance(r, hv),
        tail,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbm::SeedSpec;

    fn h(x: f64) -> Hurst {
        Hurst::new(x).unwrap()
    }

    #[test]
    fn kernel_sums() {
        let grid = DyadicGrid::new(2, 1).unwrap();
        let p = FbmPath::from_values(grid, h(0.3), None, vec![0.0, 0.5, -0.25, 1.0, 2.0]).unwrap();
        let ones = vec![1.0; 5];
        let kb = increment_kernel(&p);
        assert_eq!(stieltjes_sum(&ones, &kb, 1.0, Weighting::Forward).unwrap(), 2.0);
        assert_eq!(stieltjes_sum(&ones, &kb, 0.5, Weighting::Forward).unwrap(), -0.25);
        let kt = time_kernel(grid);
        assert_eq!(stieltjes_sum(&[3.0; 5], &kt, 0.75, Weighting::Backward).unwrap(), 2.25);
        // hand sum: 1·0.5 + 2·(−0.75) + 3·1.25
        let w = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(stieltjes_sum(&w, &kb, 0.75, Weighting::Forward).unwrap(), 2.75);
        assert_eq!(stieltjes_sum(&w, &kb, 0.75, Weighting::Backward).unwrap(), 2.0 * 0.5 - 3.0 * 0.75 + 4.0 * 1.25);
        assert!(matches!(stieltjes_sum(&w, &kb, 0.3, Weighting::Forward), Err(Error::OffGrid(_))));
        assert_eq!(stieltjes_path(&w, &kb).last().copied().unwrap(), 1.0 * 0.5 - 2.0 * 0.75 + 3.0 * 1.25 + 4.0);
    }

    #[test]
    fn hermite_kernel_values() {
        let grid = DyadicGrid::new(2, 1).unwrap();
        let hv = 0.3;
        let unit = 0.25f64.powf(hv);
        let p = FbmPath::from_values(grid, h(hv), None, vec![0.0, unit, 0.7, 0.1, 0.4]).unwrap();
        let v2 = hermite_variation_kernel(2, &p);
        assert!(v2.values[0].abs() < 1e-15);
        for (r, d) in p.increments().iter().enumerate() {
            let x = d / unit;
            assert!((v2.values[r] - 0.5 * (x * x - 1.0)).abs() < 1e-14);
            // δB³ = δt^{3H}(H₃(x) + 3H₁(x))
            let v3 = hermite_variation_kernel(3, &p).values[r];
            let v1 = hermite_variation_kernel(1, &p).values[r];
            let rebuilt = 0.25f64.powf(3.0 * hv - 0.5) * (v3 + gaussian_moment_kappa(3) * v1);
            assert!((rebuilt - d.powi(3)).abs() < 1e-14);
        }
    }

    #[test]
    fn iterated_integrals_of_a_ramp() {
        let grid = DyadicGrid::new(8, 1).unwrap();
        let p = FbmPath::from_values(grid, h(0.5), None, grid.times().collect()).unwrap();
        let k = iterated_integral_kernels(&p, 2, 6).unwrap();
        let big = 0.25f64;
        for r in 0..4 {
            assert!((k.b10.values[r] - big * big / 2.0).abs() < grid.step().powi(2));
            assert!((k.b01.values[r] - big * big / 2.0).abs() < grid.step().powi(2));
            assert!(k.b10_star.values[r].abs() < grid.step().powi(2));
        }
        assert!(matches!(
            iterated_integral_kernels(&p, 3, 6),
            Err(Error::Refinement { fine: 8, required: 9 })
        ));
    }

    #[test]
    fn constants_at_half_are_factorial_roots() {
        for l in 2..=4 {
            let c = c_l_constant(l, h(0.5), 1e-12).unwrap();
            assert!((c.value - factorial(l).sqrt()).abs() < 1e-10);
        }
        let c = c_10star_constant(h(0.5), 1e-12).unwrap();
        assert!((c.value - (1.0f64 / 12.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn c2_matches_brute_force_partial_sum() {
        let hv = 0.25;
        assert!((second_difference(1, hv) - (2f64.sqrt() - 2.0)).abs() < 1e-15);
        let c = c_l_constant(2, h(hv), 1e-10).unwrap();
        let mut s = 0.0;
        for r in 1..=1_000_000usize {
            let rf = r as f64;
            s += ((rf + 1.0).sqrt() + (rf - 1.0).sqrt() - 2.0 * rf.sqrt()).powi(2);
        }
        let brute = (2.0 * (1.0 + 0.5 * s)).sqrt();
        assert!((c.value - brute).abs() < 1e-9, "{} vs {brute}", c.value);
        assert!(c.truncation_error_bound < 1e-10);
    }

    #[test]
    fn asymptotic_branches_agree_with_direct_formulas() {
        for hv in [0.1, 0.25, 0.3, 0.45] {
            for r in [ASYMPTOTIC_LAG, ASYMPTOTIC_LAG + 3, 40] {
                let rf = r as f64;
                let c = 2.0 * hv;
                let direct = (rf + 1.0).powf(c) + (rf - 1.0).powf(c) - 2.0 * rf.powf(c);
                assert!((second_difference(r, hv) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lag_covariance_matches_quadrature_and_is_continuous() {
        use crate::fbm::fbm_covariance;
        let hv = 0.25;
        let hu = h(hv);
        // Gauss–Legendre on [0,1]², oracle from the covariance of B
        let (nodes, weights) = gauss_legendre(40);
        for r in [1usize, 2, 5] {
            let rf = r as f64;
            let mut q = 0.0;
            for (i, &u) in nodes.iter().enumerate() {
                for (j, &v) in nodes.iter().enumerate() {
                    // X_r = ∫_0^1 (B_{r+v} − B_r − ½(B_{r+1} − B_r)) dv
                    let inc = |a0: f64, a1: f64, b0: f64, b1: f64| {
                        fbm_covariance(a1, b1, hu) - fbm_covariance(a1, b0, hu)
                            - fbm_covariance(a0, b1, hu)
                            + fbm_covariance(a0, b0, hu)
                    };
                    let e = inc(0.0, u, rf, rf + v) - 0.5 * inc(0.0, u, rf, rf + 1.0)
                        - 0.5 * inc(0.0, 1.0, rf, rf + v)
                        + 0.25 * inc(0.0, 1.0, rf, rf + 1.0);
                    q += weights[i] * weights[j] * e;
                }
            }
            let exact = b10_star_lag_covariance(r, hv);
            let tol = if r == 1 { 1e-5 } else { 1e-9 };
            assert!((q - exact).abs() < tol, "r={r}: quadrature {q} vs {exact}");
        }
        let below = b10_star_lag_covariance(ASYMPTOTIC_LAG - 1, 0.3);
        let at = b10_star_lag_covariance(ASYMPTOTIC_LAG, 0.3);
        assert!(below.abs() > at.abs() && at.abs() > 0.5 * below.abs());
    }

    fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    let (mut p0, mut p1) = (1.0, z);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                    x[i] = 0.5 * (1.0 - z);
                    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
                    break;
                }
            }
        }
        (x, w)
    }

    #[test]
    fn truncation_is_stable_under_doubling() {
        let c = c_l_constant(2, h(0.3), 1e-10).unwrap();
        let d = c_l_constant_with_terms(2, h(0.3), 2 * c.truncation_terms).unwrap();
        assert!((c.value - d.value).abs() < 1e-8);
        let e = c_10star_constant(h(0.3), 1e-10).unwrap();
        let f = c_10star_constant_with_terms(h(0.3), 2 * e.truncation_terms).unwrap();
        assert!((e.value - f.value).abs() < 1e-10);
    }

    #[test]
    fn b10_star_moments_monte_carlo() {
        let hv = 0.3;
        let grid = DyadicGrid::new(8, 2).unwrap();
        let s = crate::fbm::CirculantSampler::new(grid, h(hv)).unwrap();
        let (mut sq, mut lag, mut cross) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..4000 {
            let p = s.sample(SeedSpec::new(30, i));
            let k = iterated_integral_kernels(&p, 1, 7).unwrap();
            let b = &k.b10_star.values;
            sq.push(b[0] * b[0]);
            lag.push(b[0] * b[1]);
            let d = p.increments();
            let db0: f64 = d[..128].iter().sum();
            cross.push(db0 * k.b10.values[0]);
        }
        // unit-interval quantities scale by (½)^{2+2H}
        let scale = 0.5f64.powf(2.0 + 2.0 * hv);
        let (m, se) = crate::stats::mean_and_se(&sq);
        assert!((m / scale - b10_star_variance(hv)).abs() < 3.0 * se / scale + 1e-3);
        let (m, se) = crate::stats::mean_and_se(&lag);
        assert!((m / scale - b10_star_lag_covariance(1, hv)).abs() < 3.0 * se / scale + 1e-3);
        // E[δB·B^10] = ½(t−s)^{1+2H}
        let scale = 0.5f64.powf(1.0 + 2.0 * hv);
        let (m, se) = crate::stats::mean_and_se(&cross);
        assert!((m / scale - 0.5).abs() < 3.0 * se / scale + 1e-3);
    }
}
