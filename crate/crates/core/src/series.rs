//! Series of fuzzy numbers as lazily generated, memoized term sequences.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::fuzzy::{AlphaGrid, FuzzyError, FuzzyNumber};

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("unknown series preset '{0}'")]
    UnknownPreset(String),
    #[error("series file: {0}")]
    Format(String),
    #[error("invalid series parameter: {0}")]
    InvalidParam(String),
    #[error("term {n}: {source}")]
    Term { n: usize, source: FuzzyError },
    #[error("decay hint {hint:e} below D(u_{n}, 0) = {actual:e}")]
    DecayHint { n: usize, hint: f64, actual: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type TermFn = dyn Fn(usize) -> Result<FuzzyNumber, SeriesError> + Send + Sync;
pub type HintFn = dyn Fn(usize) -> f64 + Send + Sync;

/// Memo budget in stored endpoint values (about 32 MiB of f64).
const MEMO_BUDGET: usize = 1 << 22;

/// A series `Σ u_n` given by its term generator `n ↦ u_n`.
///
/// Terms are produced on demand and cached up to the largest index touched
/// (subject to a memory budget); the cache is filled under a write lock and
/// each slot is written once, so concurrent readers see identical values.
pub struct FuzzySeries {
    name: String,
    grid: AlphaGrid,
    term: Arc<TermFn>,
    decay_hint: Option<Arc<HintFn>>,
    memo: RwLock<Vec<FuzzyNumber>>,
    memo_cap: usize,
}

impl fmt::Debug for FuzzySeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FuzzySeries")
            .field("name", &self.name)
            .field("levels", &self.grid.len())
            .field("decay_hint", &self.decay_hint.is_some())
            .finish()
    }
}

impl FuzzySeries {
    pub fn new<F>(name: impl Into<String>, grid: AlphaGrid, term: F) -> Self
    where
        F: Fn(usize) -> Result<FuzzyNumber, SeriesError> + Send + Sync + 'static,
    {
        let memo_cap = (MEMO_BUDGET / (2 * grid.len())).max(1024);
        FuzzySeries {
            name: name.into(),
            grid,
            term: Arc::new(term),
            decay_hint: None,
            memo: RwLock::new(Vec::new()),
            memo_cap,
        }
    }

    /// Attaches a known bound `hint(n) ≥ D(u_n, 0̄)`.
    pub fn with_decay_hint<H>(mut self, hint: H) -> Self
    where
        H: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        self.decay_hint = Some(Arc::new(hint));
        self
    }

    /// Series with finitely many given terms, zero afterwards.
    pub fn explicit(name: impl Into<String>, terms: Vec<FuzzyNumber>) -> Result<Self, SeriesError> {
        if terms.is_empty() {
            return Err(SeriesError::Format("explicit series has no terms".into()));
        }
        let grid = terms
            .iter()
            .skip(1)
            .fold(terms[0].grid().clone(), |g, t| g.union(t.grid()));
        let terms: Vec<FuzzyNumber> = terms.iter().map(|t| t.resample(&grid)).collect();
        let norms: Vec<f64> = terms.iter().map(FuzzyNumber::norm).collect();
        let zero = FuzzyNumber::zero_on(&grid);
        let terms = Arc::new(terms);
        Ok(FuzzySeries::new(name, grid, move |n| {
            Ok(terms.get(n).cloned().unwrap_or_else(|| zero.clone()))
        })
        .with_decay_hint(move |n| norms.get(n).copied().unwrap_or(0.0)))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> &AlphaGrid {
        &self.grid
    }

    pub fn decay_hint(&self, n: usize) -> Option<f64> {
        self.decay_hint.as_ref().map(|h| h(n))
    }

    pub fn has_decay_hint(&self) -> bool {
        self.decay_hint.is_some()
    }

    fn generate(&self, n: usize) -> Result<FuzzyNumber, SeriesError> {
        let u = (self.term)(n)?;
        Ok(if u.grid().same_as(&self.grid) {
            u
        } else {
            u.resample(&self.grid)
        })
    }

    /// Runs `f` on `u_n` without cloning it out of the cache.
    pub fn with_term<R>(&self, n: usize, f: impl FnOnce(&FuzzyNumber) -> R) -> Result<R, SeriesError> {
        {
            let memo = self.memo.read().unwrap_or_else(|e| e.into_inner());
            if let Some(u) = memo.get(n) {
                return Ok(f(u));
            }
        }
        if n >= self.memo_cap {
            return Ok(f(&self.generate(n)?));
        }
        let mut memo = self.memo.write().unwrap_or_else(|e| e.into_inner());
        while memo.len() <= n {
            let next = self.generate(memo.len())?;
            memo.push(next);
        }
        Ok(f(&memo[n]))
    }

    pub fn term(&self, n: usize) -> Result<FuzzyNumber, SeriesError> {
        self.with_term(n, FuzzyNumber::clone)
    }

    /// `s_n = u_0 + … + u_n`.
    pub fn partial_sum(&self, n: usize) -> Result<FuzzyNumber, SeriesError> {
        let mut acc = self.term(0)?;
        for k in 1..=n {
            self.with_term(k, |u| acc.add_assign(u))?;
        }
        Ok(acc)
    }

    /// Iterator over `(n, s_n, max_{k≤n} D(s_k, 0̄))`.
    pub fn partial_sums(&self) -> PartialSums<'_> {
        PartialSums {
            series: self,
            next: 0,
            acc: None,
            diameter_seen: 0.0,
        }
    }

    /// Sliding-window Cauchy test: returns `s_N` once every partial sum in
    /// the preceding `window` indices lies within `tol` of it.
    pub fn detect_limit(&self, tol: f64, window: usize, n_max: usize) -> Result<Option<FuzzyNumber>, SeriesError> {
        if !(tol > 0.0) || window < 2 {
            return Err(SeriesError::InvalidParam(format!(
                "detect_limit needs tol > 0 and window >= 2 (tol={tol}, window={window})"
            )));
        }
        let mut recent: VecDeque<FuzzyNumber> = VecDeque::with_capacity(window);
        for step in self.partial_sums().take(n_max + 1) {
            let step = step?;
            if recent.len() == window - 1 && recent.iter().all(|s| s.distance(&step.value) < tol) {
                return Ok(Some(step.value));
            }
            if recent.len() == window - 1 {
                recent.pop_front();
            }
            recent.push_back(step.value);
        }
        Ok(None)
    }

    /// Largest `D(s_n, 0̄)` for `n ≤ n_max` and whether its trend over the
    /// last decade of indices is still growing.
    pub fn boundedness_scan(&self, n_max: usize) -> Result<BoundednessReport, SeriesError> {
        if n_max < 1 {
            return Err(SeriesError::InvalidParam("boundedness_scan needs n_max >= 1".into()));
        }
        let start = (n_max / 10).max(1);
        let mut pts = Vec::with_capacity(n_max - start + 1);
        let mut bound = 0.0;
        for step in self.partial_sums().take(n_max + 1) {
            let step = step?;
            bound = step.diameter_seen;
            if step.upto >= start {
                pts.push(((step.upto as f64).ln(), step.diameter_seen));
            }
        }
        let slope = if bound > 0.0 {
            let logs: Vec<(f64, f64)> = pts.iter().map(|&(x, m)| (x, m.max(f64::MIN_POSITIVE).ln())).collect();
            fit_slope(&logs).unwrap_or(0.0)
        } else {
            0.0
        };
        Ok(BoundednessReport {
            bounded_estimate: bound,
            slope,
            monotone_growth: slope > GROWTH_SLOPE,
        })
    }

    /// Spot-checks `decay_hint(n) ≥ D(u_n, 0̄)` for `n < count`.
    pub fn check_decay_hint(&self, count: usize) -> Result<(), SeriesError> {
        let Some(hint) = &self.decay_hint else {
            return Ok(());
        };
        for n in 0..count {
            let actual = self.with_term(n, FuzzyNumber::norm)?;
            let h = hint(n);
            if h < actual * (1.0 - 1e-12) {
                return Err(SeriesError::DecayHint { n, hint: h, actual });
            }
        }
        Ok(())
    }
}

/// Slope threshold (log-log) separating flat from growing trends.
pub const GROWTH_SLOPE: f64 = 0.05;

/// Least-squares slope of `y` against `x`.
pub(crate) fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(sxy, sxx), &(x, y)| {
        (sxy + (x - mx) * (y - my), sxx + (x - mx) * (x - mx))
    });
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub bounded_estimate: f64,
    pub slope: f64,
    pub monotone_growth: bool,
}

/// One step of the partial-sum sequence.
#[derive(Debug, Clone)]
pub struct PartialSumTrace {
    pub upto: usize,
    pub value: FuzzyNumber,
    pub diameter_seen: f64,
}

pub struct PartialSums<'a> {
    series: &'a FuzzySeries,
    next: usize,
    acc: Option<FuzzyNumber>,
    diameter_seen: f64,
}

impl Iterator for PartialSums<'_> {
    type Item = Result<PartialSumTrace, SeriesError>;

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.next;
        let step = match self.acc.as_mut() {
            None => self.series.term(0).map(|u| {
                self.acc = Some(u);
            }),
            Some(acc) => self.series.with_term(n, |u| acc.add_assign(u)),
        };
        if let Err(e) = step {
            return Some(Err(e));
        }
        self.next += 1;
        let value = self.acc.clone().expect("accumulator set");
        self.diameter_seen = self.diameter_seen.max(value.norm());
        Some(Ok(PartialSumTrace {
            upto: n,
            value,
            diameter_seen: self.diameter_seen,
        }))
    }
}

/// Built-in series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesPreset {
    /// `u_n = tri((-1)^n, (-1)^n + (n+1)^-2, (-1)^n + 2(n+1)^-2)`, divergent
    /// but summable by the ordinary Dirichlet kernel.
    PaperDirichlet,
    /// `u_n = tri(c_n, c_n + (n+1)^-4, c_n + 2(n+1)^-4)` with
    /// `c_n = (-1)^n (n+1)`, summable by the ordinary factorial kernel.
    PaperFactorial,
    /// `u_n = q^n u_0`.
    ConvergentGeometric,
    /// `u_n = (-1)^n` as crisp numbers.
    CrispAlternating,
    /// Terms read from a series file.
    CustomFile,
}

impl SeriesPreset {
    pub const ALL: [SeriesPreset; 5] = [
        SeriesPreset::PaperDirichlet,
        SeriesPreset::PaperFactorial,
        SeriesPreset::ConvergentGeometric,
        SeriesPreset::CrispAlternating,
        SeriesPreset::CustomFile,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SeriesPreset::PaperDirichlet => "paper-dirichlet",
            SeriesPreset::PaperFactorial => "paper-factorial",
            SeriesPreset::ConvergentGeometric => "convergent-geometric",
            SeriesPreset::CrispAlternating => "crisp-alternating",
            SeriesPreset::CustomFile => "custom-file",
        }
    }
}

impl FromStr for SeriesPreset {
    type Err = SeriesError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SeriesPreset::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| SeriesError::UnknownPreset(s.to_string()))
    }
}

/// Parameters shared by the presets; unused fields are ignored.
#[derive(Debug, Clone)]
pub struct PresetParams {
    pub grid: AlphaGrid,
    pub q: f64,
    pub u0: Option<FuzzyNumber>,
    pub path: Option<std::path::PathBuf>,
}

impl Default for PresetParams {
    fn default() -> Self {
        PresetParams {
            grid: AlphaGrid::default(),
            q: 0.5,
            u0: None,
            path: None,
        }
    }
}

fn sign(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn preset(name: &str, params: &PresetParams) -> Result<FuzzySeries, SeriesError> {
    let grid = params.grid.clone();
    match name.parse::<SeriesPreset>()? {
        SeriesPreset::PaperDirichlet => {
            let g = grid.clone();
            Ok(FuzzySeries::new(name, grid, move |n| {
                let c = sign(n);
                let w = ((n + 1) as f64).powi(-2);
                FuzzyNumber::triangular_on(&g, c, c + w, c + 2.0 * w).map_err(|source| SeriesError::Term { n, source })
            })
            .with_decay_hint(|n| 1.0 + 2.0 * ((n + 1) as f64).powi(-2)))
        }
        SeriesPreset::PaperFactorial => {
            let g = grid.clone();
            Ok(FuzzySeries::new(name, grid, move |n| {
                let c = sign(n) * (n + 1) as f64;
                let w = ((n + 1) as f64).powi(-4);
                FuzzyNumber::triangular_on(&g, c, c + w, c + 2.0 * w).map_err(|source| SeriesError::Term { n, source })
            })
            .with_decay_hint(|n| (n + 1) as f64 + 2.0 * ((n + 1) as f64).powi(-4)))
        }
        SeriesPreset::ConvergentGeometric => {
            let q = params.q;
            if !(q > 0.0 && q < 1.0) {
                return Err(SeriesError::InvalidParam(format!(
                    "geometric ratio must lie in (0,1), got {q}"
                )));
            }
            let u0 = match &params.u0 {
                Some(u) => u.resample(&grid),
                None => FuzzyNumber::triangular_on(&grid, 0.0, 1.0, 2.0)?,
            };
            Ok(geometric(name, u0, q))
        }
        SeriesPreset::CrispAlternating => {
            let g = grid.clone();
            Ok(FuzzySeries::new(name, grid, move |n| Ok(FuzzyNumber::crisp_on(&g, sign(n)))).with_decay_hint(|_| 1.0))
        }
        SeriesPreset::CustomFile => {
            let path = params
                .path
                .as_ref()
                .ok_or_else(|| SeriesError::InvalidParam("custom-file needs a path".into()))?;
            load_series_file(path, &grid)
        }
    }
}

/// `u_n = q^n u_0`.
pub fn geometric(name: impl Into<String>, u0: FuzzyNumber, q: f64) -> FuzzySeries {
    let d0 = u0.norm();
    let grid = u0.grid().clone();
    FuzzySeries::new(name, grid, move |n| Ok(u0.scale(q.powi(n as i32))))
        .with_decay_hint(move |n| d0 * q.powi(n as i32))
}

/// Series file contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SeriesSpec {
    Explicit {
        terms: Vec<FuzzyNumber>,
    },
    TriangularGenerator {
        core: Expr,
        half_width_left: Expr,
        half_width_right: Expr,
    },
    Preset {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u0: Option<FuzzyNumber>,
    },
}

/// How many leading terms of a generator are validated at load time.
const GENERATOR_PROBE: usize = 1024;

impl SeriesSpec {
    pub fn build(&self, grid: &AlphaGrid) -> Result<FuzzySeries, SeriesError> {
        match self {
            SeriesSpec::Explicit { terms } => FuzzySeries::explicit("explicit", terms.clone()),
            SeriesSpec::TriangularGenerator {
                core,
                half_width_left,
                half_width_right,
            } => {
                let (c, l, r) = (core.clone(), half_width_left.clone(), half_width_right.clone());
                let g = grid.clone();
                let name = format!("triangular[{}; -{}; +{}]", c, l, r);
                let hint_exprs = (c.clone(), l.clone(), r.clone());
                let series = FuzzySeries::new(name, grid.clone(), move |n| {
                    let (m, wl, wr) = (c.eval(n), l.eval(n), r.eval(n));
                    if !(wl >= 0.0 && wr >= 0.0) || !m.is_finite() || !wl.is_finite() || !wr.is_finite() {
                        return Err(SeriesError::Format(format!(
                            "generator term {n}: core={m}, half widths ({wl}, {wr}) must be finite and nonnegative"
                        )));
                    }
                    FuzzyNumber::triangular_on(&g, m - wl, m, m + wr).map_err(|source| SeriesError::Term { n, source })
                })
                .with_decay_hint(move |n| {
                    let m = hint_exprs.0.eval(n);
                    (m - hint_exprs.1.eval(n)).abs().max((m + hint_exprs.2.eval(n)).abs())
                });
                for n in 0..GENERATOR_PROBE {
                    series.with_term(n, |_| ())?;
                }
                Ok(series)
            }
            SeriesSpec::Preset { name, q, u0 } => {
                let params = PresetParams {
                    grid: grid.clone(),
                    q: q.unwrap_or(0.5),
                    u0: u0.clone(),
                    path: None,
                };
                if name == SeriesPreset::CustomFile.name() {
                    return Err(SeriesError::Format(
                        "custom-file cannot be nested in a series file".into(),
                    ));
                }
                preset(name, &params)
            }
        }
    }
}

pub fn parse_series_json(text: &str, grid: &AlphaGrid) -> Result<FuzzySeries, SeriesError> {
    if text.trim().is_empty() {
        return Err(SeriesError::Format("empty series file".into()));
    }
    let spec: SeriesSpec = serde_json::from_str(text).map_err(|e| SeriesError::Format(e.to_string()))?;
    spec.build(grid)
}

pub fn load_series_file(path: &Path, grid: &AlphaGrid) -> Result<FuzzySeries, SeriesError> {
    let text = std::fs::read_to_string(path)?;
    parse_series_json(&text, grid).map_err(|e| match e {
        SeriesError::Format(msg) => SeriesError::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}
