//! Level Fourier series of 2π-periodic fuzzy valued functions and their
//! Abel-Poisson means.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{monotone_repair, AlphaGrid, FuzzyError, FuzzyNumber};

pub const DEFAULT_SAMPLES: usize = 1024;

#[derive(Debug, Error)]
pub enum FourierError {
    #[error("radius {0} outside [0, 1)")]
    RadiusOutOfRange(f64),
    #[error("Poisson kernel at r = {r} is narrower than the {sample_count}-point grid resolves (needs at least {needed} samples)")]
    KernelUnderResolved { r: f64, sample_count: usize, needed: usize },
    #[error("harmonic {n} exceeds sample_count/4 = {}", .sample_count / 4)]
    QuadratureUnderResolved { n: usize, sample_count: usize },
    #[error("sample_count must be even and at least 4, got {0}")]
    SampleCount(usize),
    #[error("radii must be strictly increasing")]
    RadiiNotIncreasing,
    #[error("unknown function preset '{0}'")]
    UnknownPreset(String),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

type EvalFn = dyn Fn(f64) -> FuzzyNumber + Send + Sync;

/// A 2π-periodic map `x ↦ f(x)` into fuzzy numbers on a fixed α grid.
#[derive(Clone)]
pub struct FuzzyPeriodicFunction {
    name: String,
    grid: AlphaGrid,
    eval: Arc<EvalFn>,
    sample_count: usize,
}

impl fmt::Debug for FuzzyPeriodicFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FuzzyPeriodicFunction")
            .field("name", &self.name)
            .field("sample_count", &self.sample_count)
            .finish()
    }
}

/// Named test functions.
pub const FUNCTION_PRESETS: [&str; 5] = ["smooth", "constant", "cos", "sin", "square"];

impl FuzzyPeriodicFunction {
    /// `eval` must return values on `grid`; other grids are resampled.
    pub fn new<F>(name: impl Into<String>, grid: AlphaGrid, eval: F) -> Self
    where
        F: Fn(f64) -> FuzzyNumber + Send + Sync + 'static,
    {
        let g = grid.clone();
        FuzzyPeriodicFunction {
            name: name.into(),
            grid,
            eval: Arc::new(move |x| {
                let v = eval(x);
                if v.grid().same_as(&g) {
                    v
                } else {
                    v.resample(&g)
                }
            }),
            sample_count: DEFAULT_SAMPLES,
        }
    }

    /// `x ↦ g(x) · u0`.
    pub fn scaled<G>(name: impl Into<String>, profile: G, u0: FuzzyNumber) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let grid = u0.grid().clone();
        FuzzyPeriodicFunction::new(name, grid, move |x| u0.scale(profile(x)))
    }

    /// Presets: `smooth` = (1 + cos x)·(0,1,2), `constant` = (−1,0,1),
    /// `cos`/`sin` crisp, `square` = (0,1,2) on [0, π) and its negative on
    /// [π, 2π) (discontinuous).
    pub fn preset(name: &str, grid: &AlphaGrid) -> Result<Self, FourierError> {
        let tri = |a, b, c| FuzzyNumber::triangular_on(grid, a, b, c);
        let one = FuzzyNumber::crisp_on(grid, 1.0);
        Ok(match name {
            "smooth" => FuzzyPeriodicFunction::scaled(name, |x: f64| 1.0 + x.cos(), tri(0.0, 1.0, 2.0)?),
            "constant" => FuzzyPeriodicFunction::scaled(name, |_| 1.0, tri(-1.0, 0.0, 1.0)?),
            "cos" => FuzzyPeriodicFunction::scaled(name, f64::cos, one),
            "sin" => FuzzyPeriodicFunction::scaled(name, f64::sin, one),
            "square" => FuzzyPeriodicFunction::scaled(
                name,
                |x: f64| if x.rem_euclid(2.0 * PI) < PI { 1.0 } else { -1.0 },
                tri(0.0, 1.0, 2.0)?,
            ),
            _ => return Err(FourierError::UnknownPreset(name.to_string())),
        })
    }

    pub fn with_sample_count(mut self, n: usize) -> Result<Self, FourierError> {
        check_samples(n)?;
        self.sample_count = n;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> &AlphaGrid {
        &self.grid
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn eval(&self, x: f64) -> FuzzyNumber {
        (self.eval)(x)
    }
}

fn check_samples(n: usize) -> Result<(), FourierError> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(FourierError::SampleCount(n));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<(), FourierError> {
    if !(0.0..1.0).contains(&r) {
        return Err(FourierError::RadiusOutOfRange(r));
    }
    Ok(())
}

/// `x_m = −π + 2πm/count`, `m = 0..count`.
pub fn uniform_x_grid(count: usize) -> Vec<f64> {
    (0..count).map(|m| -PI + 2.0 * PI * m as f64 / count as f64).collect()
}

/// Level Fourier coefficients of one harmonic. `a_0` is stored undivided;
/// the series uses `a_0 / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCoefficients {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub a_lo: Vec<f64>,
    pub a_hi: Vec<f64>,
    pub b_lo: Vec<f64>,
    pub b_hi: Vec<f64>,
}

/// `a_n^∓(α) = (1/π)∫ f_α^∓(x) cos(nx) dx` and `b_n^∓(α)` likewise with
/// `sin`, by the trapezoid rule on `x_j = −π + 2πj/N`.
pub fn level_coeffs(f: &FuzzyPeriodicFunction, n: usize) -> Result<LevelCoefficients, FourierError> {
    let big_n = f.sample_count;
    if n > big_n / 4 {
        return Err(FourierError::QuadratureUnderResolved { n, sample_count: big_n });
    }
    let levels = f.grid.len();
    let mut out = LevelCoefficients {
        n,
        alphas: f.grid.as_slice().to_vec(),
        a_lo: vec![0.0; levels],
        a_hi: vec![0.0; levels],
        b_lo: vec![0.0; levels],
        b_hi: vec![0.0; levels],
    };
    let w = 2.0 / big_n as f64;
    for x in uniform_x_grid(big_n) {
        let v = f.eval(x);
        let (sin, cos) = ((n as f64) * x).sin_cos();
        let (c, s) = (cos * w, sin * w);
        for i in 0..levels {
            out.a_lo[i] += v.lower()[i] * c;
            out.a_hi[i] += v.upper()[i] * c;
            out.b_lo[i] += v.lower()[i] * s;
            out.b_hi[i] += v.upper()[i] * s;
        }
    }
    Ok(out)
}

/// Writes `n,alpha,a_lo,a_hi,b_lo,b_hi` rows.
pub fn write_coefficients_csv<W: Write>(coeffs: &[LevelCoefficients], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "alpha", "a_lo", "a_hi", "b_lo", "b_hi"])?;
    for c in coeffs {
        for i in 0..c.alphas.len() {
            w.write_record([
                c.n.to_string(),
                c.alphas[i].to_string(),
                c.a_lo[i].to_string(),
                c.a_hi[i].to_string(),
                c.b_lo[i].to_string(),
                c.b_hi[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `ḟ_n^∓(α, x) = (1/π)∫ f_α^∓(x − t) cos(nt) dt` (`1/(2π)` for `n = 0`),
/// by direct convolution quadrature. Returns the lower and upper arrays.
pub fn fourier_term(f: &FuzzyPeriodicFunction, n: usize, x: f64) -> Result<(Vec<f64>, Vec<f64>), FourierError> {
    let big_n = f.sample_count;
    if n > big_n / 4 {
        return Err(FourierError::QuadratureUnderResolved { n, sample_count: big_n });
    }
    let levels = f.grid.len();
    let mut lo = vec![0.0; levels];
    let mut hi = vec![0.0; levels];
    let scale = if n == 0 { 1.0 } else { 2.0 } / big_n as f64;
    for j in 0..big_n {
        let t = 2.0 * PI * j as f64 / big_n as f64;
        let v = f.eval(x - t);
        let w = scale * (n as f64 * t).cos();
        for i in 0..levels {
            lo[i] += w * v.lower()[i];
            hi[i] += w * v.upper()[i];
        }
    }
    Ok((lo, hi))
}

/// `K_r(t) = (1 − r²) / (2π(1 − 2r cos t + r²))`.
pub fn poisson_kernel(r: f64, t: f64) -> Result<f64, FourierError> {
    check_radius(r)?;
    Ok((1.0 - r * r) / (2.0 * PI * (1.0 - 2.0 * r * t.cos() + r * r)))
}

/// Plain trapezoid value of `∫_{−π}^{π} K_r` on `samples` points.
pub fn kernel_integral(r: f64, samples: usize) -> Result<f64, FourierError> {
    check_radius(r)?;
    check_samples(samples)?;
    let h = 2.0 * PI / samples as f64;
    let mut acc = 0.0;
    for j in 0..samples {
        acc += poisson_kernel(r, j as f64 * h)?;
    }
    Ok(acc * h)
}

/// Quadrature weights for `∫ K_r(t) g(t) dt` on `t_j = 2πj/N`.
///
/// The plain trapezoid weights `(2π/N) K_r(t_j)` alias the kernel's
/// harmonics `r^{|k|}` for `|k| ≥ N/2`, which costs about `2 r^N` in every
/// moment. These weights instead integrate `e^{ikt}` to exactly `r^{|k|}`
/// for `|k| < N/2`: `w_j = (2π/N) K_r(t_j) (1 − (−1)^j r^{N/2})`. They stay
/// positive, so the quadrature is a positive operator.
pub fn poisson_weights(r: f64, samples: usize) -> Result<Vec<f64>, FourierError> {
    check_radius(r)?;
    check_samples(samples)?;
    let rm = r.powi((samples / 2) as i32);
    let h = 2.0 * PI / samples as f64;
    Ok((0..samples)
        .map(|j| {
            let t = j as f64 * h;
            let alias = if j % 2 == 0 { 1.0 - rm } else { 1.0 + rm };
            (1.0 - r * r) / (1.0 - 2.0 * r * t.cos() + r * r) / samples as f64 * alias
        })
        .collect())
}

/// Smallest even sample count that resolves the kernel peak at `r`.
pub fn min_samples_for(r: f64) -> usize {
    let n = (4.0 * PI / (1.0 - r)).ceil() as usize;
    n + n % 2
}

fn check_resolved(r: f64, samples: usize) -> Result<(), FourierError> {
    if 1.0 - r < 4.0 * PI / samples as f64 {
        return Err(FourierError::KernelUnderResolved {
            r,
            sample_count: samples,
            needed: min_samples_for(r),
        });
    }
    Ok(())
}

/// Σ_j w_j v(x − t_j), endpoint-wise, then repaired.
fn convolve_at(f: &FuzzyPeriodicFunction, weights: &[f64], x: f64) -> Result<FuzzyNumber, FourierError> {
    let big_n = weights.len();
    let levels = f.grid.len();
    let mut lo = vec![0.0; levels];
    let mut hi = vec![0.0; levels];
    for (j, w) in weights.iter().enumerate() {
        let v = f.eval(x - 2.0 * PI * j as f64 / big_n as f64);
        for i in 0..levels {
            lo[i] += w * v.lower()[i];
            hi[i] += w * v.upper()[i];
        }
    }
    Ok(monotone_repair(&f.grid, lo, hi, 1e-9)?.value)
}

/// Abel-Poisson mean `P_r(f; x) = ∫ K_r(t) f(x − t) dt`, level by level.
pub fn abel_poisson(f: &FuzzyPeriodicFunction, r: f64, x: f64) -> Result<FuzzyNumber, FourierError> {
    check_radius(r)?;
    check_resolved(r, f.sample_count)?;
    let w = poisson_weights(r, f.sample_count)?;
    convolve_at(f, &w, x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub r: f64,
    pub sample_count: usize,
    /// max_x |P_r(1; x) − 1|
    pub one: f64,
    /// max_x |P_r(cos; x) − r cos x|
    pub cos: f64,
    /// max_x |P_r(sin; x) − r sin x|
    pub sin: f64,
    /// |Σ_j w_j − 1| for the production weights.
    pub normalization: f64,
    /// |∫K_r − 1| by plain trapezoid on a 65536-point grid.
    pub normalization_fine: f64,
}

impl MomentReport {
    pub fn max_deviation(&self) -> f64 {
        self.one
            .max(self.cos)
            .max(self.sin)
            .max(self.normalization)
            .max(self.normalization_fine)
    }
}

const FINE_SAMPLES: usize = 65_536;

/// Checks `P_r(1) = 1`, `P_r(cos t; x) = r cos x`, `P_r(sin t; x) = r sin x`
/// on `x_grid` with `sample_count` quadrature points.
pub fn trig_moment_check(r: f64, x_grid: &[f64], sample_count: usize) -> Result<MomentReport, FourierError> {
    let w = poisson_weights(r, sample_count)?;
    let h = 2.0 * PI / sample_count as f64;
    let apply =
        |g: &dyn Fn(f64) -> f64, x: f64| -> f64 { w.iter().enumerate().map(|(j, wj)| wj * g(x - j as f64 * h)).sum() };
    let (mut one, mut cos, mut sin) = (0.0_f64, 0.0_f64, 0.0_f64);
    for &x in x_grid {
        one = one.max((apply(&|_| 1.0, x) - 1.0).abs());
        cos = cos.max((apply(&f64::cos, x) - r * x.cos()).abs());
        sin = sin.max((apply(&f64::sin, x) - r * x.sin()).abs());
    }
    let total: f64 = w.iter().sum();
    Ok(MomentReport {
        r,
        sample_count,
        one,
        cos,
        sin,
        normalization: (total - 1.0).abs(),
        normalization_fine: (kernel_integral(r, FINE_SAMPLES)? - 1.0).abs(),
    })
}

/// `D*(f, g) = max_x D(f(x), g(x))` over `x_grid`.
pub fn sup_distance(f: &FuzzyPeriodicFunction, g: &FuzzyPeriodicFunction, x_grid: &[f64]) -> f64 {
    x_grid
        .iter()
        .map(|&x| f.eval(x).distance(&g.eval(x)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub r: f64,
    pub sup_distance: f64,
}

/// Positions of `x_grid` on the quadrature grid, if every point lies on it.
fn grid_indices(x_grid: &[f64], samples: usize) -> Option<Vec<usize>> {
    let h = 2.0 * PI / samples as f64;
    x_grid
        .iter()
        .map(|&x| {
            let pos = (x + PI) / h;
            let k = pos.round();
            ((pos - k).abs() < 1e-9).then(|| (k as i64).rem_euclid(samples as i64) as usize)
        })
        .collect()
}

/// `D*(P_r f, f)` for each `r`.
///
/// When `x_grid` sits on the quadrature grid the convolution is done by FFT
/// (the weights' discrete spectrum is exactly `r^{min(k, N−k)}`); otherwise
/// point by point.
pub fn convergence_sweep(
    f: &FuzzyPeriodicFunction,
    r_list: &[f64],
    x_grid: &[f64],
) -> Result<Vec<SweepPoint>, FourierError> {
    if r_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(FourierError::RadiiNotIncreasing);
    }
    for &r in r_list {
        check_radius(r)?;
        check_resolved(r, f.sample_count)?;
    }
    let targets: Vec<FuzzyNumber> = x_grid.iter().map(|&x| f.eval(x)).collect();
    let means: Vec<Vec<FuzzyNumber>> = match grid_indices(x_grid, f.sample_count) {
        Some(idx) => spectral_means(f, r_list, &idx)?,
        None => r_list
            .iter()
            .map(|&r| {
                let w = poisson_weights(r, f.sample_count)?;
                x_grid.par_iter().map(|&x| convolve_at(f, &w, x)).collect()
            })
            .collect::<Result<_, FourierError>>()?,
    };
    Ok(r_list
        .iter()
        .zip(means)
        .map(|(&r, row)| SweepPoint {
            r,
            sup_distance: row.iter().zip(&targets).map(|(p, t)| p.distance(t)).fold(0.0, f64::max),
        })
        .collect())
}

fn spectral_means(
    f: &FuzzyPeriodicFunction,
    r_list: &[f64],
    idx: &[usize],
) -> Result<Vec<Vec<FuzzyNumber>>, FourierError> {
    let big_n = f.sample_count;
    let levels = f.grid.len();
    // samples[j] = f(x_j), x_j = −π + 2πj/N
    let samples: Vec<FuzzyNumber> = uniform_x_grid(big_n).into_par_iter().map(|x| f.eval(x)).collect();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(big_n);
    let inv = planner.plan_fft_inverse(big_n);
    let multipliers: Vec<Vec<f64>> = r_list
        .iter()
        .map(|&r| {
            (0..big_n)
                .map(|k| r.powi(k.min(big_n - k) as i32) / big_n as f64)
                .collect()
        })
        .collect();

    // out[c][ri][m]: component c (lo levels, then hi levels), radius ri, x index m.
    let out: Vec<Vec<Vec<f64>>> = (0..2 * levels)
        .into_par_iter()
        .map(|c| {
            let mut spec: Vec<Complex<f64>> = samples
                .iter()
                .map(|v| {
                    let val = if c < levels {
                        v.lower()[c]
                    } else {
                        v.upper()[c - levels]
                    };
                    Complex::new(val, 0.0)
                })
                .collect();
            fwd.process(&mut spec);
            multipliers
                .iter()
                .map(|mult| {
                    let mut buf: Vec<Complex<f64>> = spec.iter().zip(mult).map(|(z, m)| z * m).collect();
                    inv.process(&mut buf);
                    idx.iter().map(|&j| buf[j].re).collect()
                })
                .collect()
        })
        .collect();

    (0..r_list.len())
        .map(|ri| {
            idx.iter()
                .enumerate()
                .map(|(m, _)| {
                    let lo = (0..levels).map(|c| out[c][ri][m]).collect();
                    let hi = (0..levels).map(|c| out[levels + c][ri][m]).collect();
                    Ok(monotone_repair(&f.grid, lo, hi, 1e-9)?.value)
                })
                .collect()
        })
        .collect()
}
