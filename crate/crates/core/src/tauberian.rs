//! Numerical evaluation of the Tauberian growth conditions and a labeled
//! heuristic for their o(1)/O(1) behaviour.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::methods::{LambdaSeq, MethodKind, PhiMethod};
use crate::series::{fit_slope, FuzzySeries, SeriesError, GROWTH_SLOPE};

#[derive(Debug, Error)]
pub enum TauberianError {
    #[error("lambda_{n} = {value} equals its predecessor; the gap quotient is undefined")]
    DegenerateGap { n: usize, value: f64 },
    #[error("lambda_{n} = {value} is not strictly positive")]
    LambdaNotPositive { n: usize, value: f64 },
    #[error("no Tauberian condition for {0:?} kernels")]
    UnsupportedKind(MethodKind),
    #[error("classification needs n_max >= 100, got {0}")]
    TooFewTerms(usize),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// `λ_n/(λ_n − λ_{n−1}) · D(u_n, 0̄)`, with `λ_{−1} = 0`.
pub fn dirichlet_tau(series: &FuzzySeries, lambda: &LambdaSeq, n: usize) -> Result<f64, TauberianError> {
    let ln = lambda.get(n);
    let prev = if n == 0 { 0.0 } else { lambda.get(n - 1) };
    if ln == prev {
        return Err(TauberianError::DegenerateGap { n, value: ln });
    }
    let d = series.with_term(n, |u| u.norm())?;
    if d == 0.0 {
        return Ok(0.0);
    }
    Ok(ln / (ln - prev) * d)
}

/// `λ_n γ_n · D(u_n, 0̄)` with `γ_n = Σ_{r≤n} 1/λ_r`.
pub fn factorial_tau(series: &FuzzySeries, lambda: &LambdaSeq, n: usize) -> Result<f64, TauberianError> {
    let ln = lambda.get(n);
    if !(ln > 0.0) {
        return Err(TauberianError::LambdaNotPositive { n, value: ln });
    }
    let d = series.with_term(n, |u| u.norm())?;
    if d == 0.0 {
        return Ok(0.0);
    }
    Ok(ln * lambda.gamma(n) * d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauberianClass {
    Vanishing,
    Bounded,
    Unbounded,
    Inconclusive,
}

/// Roughness of `ln τ_n` above which the trend fit is not trusted.
pub const NOISE_LIMIT: f64 = 0.5;

/// `τ_n` for `n = 1..=n_max` (`tau[i]` belongs to `n = i + 1`), the log-log
/// slope over the last decade of indices and the resulting class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauberianReport {
    pub tau: Vec<f64>,
    pub slope: Option<f64>,
    pub class: TauberianClass,
}

impl TauberianReport {
    /// Writes `n,tau` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "tau"])?;
        for (i, t) in self.tau.iter().enumerate() {
            w.write_record([(i + 1).to_string(), format!("{t:e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least-squares slope of `pts`, and the RMS of second differences of the
/// `y` values as a roughness measure (zero for any smooth trend, large for
/// oscillating sequences).
fn fit_with_roughness(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let slope = fit_slope(pts)?;
    let rough = if pts.len() < 3 {
        0.0
    } else {
        let ss: f64 = pts.windows(3).map(|w| (w[2].1 - 2.0 * w[1].1 + w[0].1).powi(2)).sum();
        (ss / (pts.len() - 2) as f64).sqrt()
    };
    Some((slope, rough))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

/// Classifies from a τ sequence indexed from `n = 1`.
///
/// A heuristic: `unbounded` if the slope exceeds 0.05, `bounded` if it lies
/// within ±0.05, `vanishing` if it is below −0.05 and the last value is
/// under the median of `τ_1..τ_10`; noisy fits and anything else are
/// `inconclusive`.
pub fn classify_values(tau: Vec<f64>) -> TauberianReport {
    let n_max = tau.len();
    let start = (n_max / 10).max(1);
    let pts: Vec<(f64, f64)> = (start..=n_max)
        .filter_map(|n| {
            let t = tau[n - 1];
            (t > 0.0).then(|| ((n as f64).ln(), t.ln()))
        })
        .collect();
    let any_positive = tau.iter().any(|&t| t > 0.0);
    let head_median = median(tau.iter().take(10).copied().collect());
    let last = tau.last().copied().unwrap_or(0.0);

    let (slope, class) = match fit_with_roughness(&pts) {
        // Nothing positive left in the window: either identically zero or
        // every late term vanishes.
        None if pts.is_empty() => {
            if any_positive || last == 0.0 {
                (None, TauberianClass::Vanishing)
            } else {
                (None, TauberianClass::Inconclusive)
            }
        }
        None => (None, TauberianClass::Inconclusive),
        Some((slope, rough)) => {
            let class = if rough > NOISE_LIMIT {
                TauberianClass::Inconclusive
            } else if slope > GROWTH_SLOPE {
                TauberianClass::Unbounded
            } else if slope >= -GROWTH_SLOPE {
                TauberianClass::Bounded
            } else if last < head_median {
                TauberianClass::Vanishing
            } else {
                TauberianClass::Inconclusive
            };
            (Some(slope), class)
        }
    };
    TauberianReport { tau, slope, class }
}

/// Evaluates the condition that matches `method` for `n = 1..=n_max` and
/// classifies it.
pub fn classify(series: &FuzzySeries, method: &PhiMethod, n_max: usize) -> Result<TauberianReport, TauberianError> {
    if n_max < 100 {
        return Err(TauberianError::TooFewTerms(n_max));
    }
    let lambda = match (method.kind(), method.lambda()) {
        (MethodKind::Dirichlet | MethodKind::Factorial, Some(l)) => l,
        (kind, _) => return Err(TauberianError::UnsupportedKind(kind)),
    };
    let tau = (1..=n_max)
        .map(|n| match method.kind() {
            MethodKind::Dirichlet => dirichlet_tau(series, lambda, n),
            _ => factorial_tau(series, lambda, n),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(classify_values(tau))
}
