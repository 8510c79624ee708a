//! Fuzzy numbers stored as families of nested α-level intervals.
//!
//! A fuzzy number is held as its endpoint functions `u⁻(α)` and `u⁺(α)`
//! sampled on an ordered grid `0 = α_0 < … < α_M = 1`. Arithmetic, the
//! partial order and the sup-metric all reduce to level-wise array work.
//! Operands living on different grids are first resampled onto the union
//! of both grids by linear interpolation, which keeps the endpoint
//! functions monotone.

use std::fmt;
use std::ops::{Add, Mul, Neg};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of α levels used when none is specified (`M = 100`).
pub const DEFAULT_LEVELS: usize = 101;

/// Absolute tolerance used by [`FuzzyNumber::approx_eq`] callers that have no
/// better scale at hand.
pub const DEFAULT_EQ_TOL: f64 = 1e-12;

/// Which half of the representation conditions failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepCondition {
    /// `u⁻` must be non-decreasing in α.
    LowerNonDecreasing,
    /// `u⁺` must be non-increasing in α.
    UpperNonIncreasing,
    /// `u⁻(1) ≤ u⁺(1)`.
    CoreOrdered,
}

impl fmt::Display for RepCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RepCondition::LowerNonDecreasing => "(i) lower endpoint non-decreasing",
            RepCondition::UpperNonIncreasing => "(ii) upper endpoint non-increasing",
            RepCondition::CoreOrdered => "(iv) lower(1) <= upper(1)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FuzzyError {
    #[error("malformed alpha grid: {0}")]
    Grid(String),
    #[error("condition {condition} violated at level index {index}")]
    Monotonicity { condition: RepCondition, index: usize },
    #[error("non-finite endpoint at level index {index}")]
    NonFinite { index: usize },
    #[error("triangular parameters must satisfy a <= b <= c, got ({a}, {b}, {c})")]
    Order { a: f64, b: f64, c: f64 },
    #[error("monotone repair needs a correction of {correction:e}, above tolerance {tol:e}")]
    RepairExceedsTolerance { correction: f64, tol: f64 },
}

/// Ordered α grid shared cheaply between fuzzy numbers.
#[derive(Clone)]
pub struct AlphaGrid(Arc<[f64]>);

impl AlphaGrid {
    /// Uniform grid with `points` nodes (`points = M + 1`).
    pub fn uniform(points: usize) -> Result<Self, FuzzyError> {
        if points < 2 {
            return Err(FuzzyError::Grid(format!("need at least 2 alpha levels, got {points}")));
        }
        let m = (points - 1) as f64;
        let mut alphas: Vec<f64> = (0..points).map(|i| i as f64 / m).collect();
        alphas[points - 1] = 1.0;
        Ok(AlphaGrid(alphas.into()))
    }

    pub fn new(alphas: Vec<f64>) -> Result<Self, FuzzyError> {
        if alphas.len() < 2 {
            return Err(FuzzyError::Grid(format!(
                "need at least 2 alpha levels, got {}",
                alphas.len()
            )));
        }
        if alphas[0] != 0.0 || alphas[alphas.len() - 1] != 1.0 {
            return Err(FuzzyError::Grid("grid must start at 0 and end at 1".to_string()));
        }
        if let Some(i) = alphas.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(FuzzyError::Grid(format!(
                "grid not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(AlphaGrid(alphas.into()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn same_as(&self, other: &AlphaGrid) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0[..] == other.0[..]
    }

    /// Sorted union of both grids; equal to either input when one contains
    /// the other.
    pub fn union(&self, other: &AlphaGrid) -> AlphaGrid {
        let (a, b) = (self.as_slice(), other.as_slice());
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(&x), Some(&y)) if y < x => {
                    j += 1;
                    y
                }
                (Some(&x), Some(_)) => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        if out.len() == a.len() {
            return self.clone();
        }
        if out.len() == b.len() {
            return other.clone();
        }
        AlphaGrid(out.into())
    }
}

impl Default for AlphaGrid {
    fn default() -> Self {
        AlphaGrid::uniform(DEFAULT_LEVELS).expect("default grid is valid")
    }
}

impl PartialEq for AlphaGrid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for AlphaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AlphaGrid({} levels)", self.len())
    }
}

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Option<Self> {
        (lower <= upper).then_some(Interval { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A fuzzy number as nested α-cuts `[lo[i], hi[i]]` over an [`AlphaGrid`].
///
/// Construction always validates: `lo` non-decreasing, `hi` non-increasing,
/// `lo[M] ≤ hi[M]`, all entries finite. The value is immutable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LevelsRepr", into = "LevelsRepr")]
pub struct FuzzyNumber {
    alphas: AlphaGrid,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LevelsRepr {
    alphas: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl TryFrom<LevelsRepr> for FuzzyNumber {
    type Error = FuzzyError;

    fn try_from(r: LevelsRepr) -> Result<Self, Self::Error> {
        FuzzyNumber::from_levels(r.alphas, r.lo, r.hi)
    }
}

impl From<FuzzyNumber> for LevelsRepr {
    fn from(u: FuzzyNumber) -> Self {
        LevelsRepr {
            alphas: u.alphas.as_slice().to_vec(),
            lo: u.lo,
            hi: u.hi,
        }
    }
}

fn validate(lo: &[f64], hi: &[f64]) -> Result<(), FuzzyError> {
    if let Some(index) = lo.iter().zip(hi).position(|(l, h)| !l.is_finite() || !h.is_finite()) {
        return Err(FuzzyError::NonFinite { index });
    }
    if let Some(i) = lo.windows(2).position(|w| w[1] < w[0]) {
        return Err(FuzzyError::Monotonicity {
            condition: RepCondition::LowerNonDecreasing,
            index: i + 1,
        });
    }
    if let Some(i) = hi.windows(2).position(|w| w[1] > w[0]) {
        return Err(FuzzyError::Monotonicity {
            condition: RepCondition::UpperNonIncreasing,
            index: i + 1,
        });
    }
    let m = lo.len() - 1;
    if lo[m] > hi[m] {
        return Err(FuzzyError::Monotonicity {
            condition: RepCondition::CoreOrdered,
            index: m,
        });
    }
    Ok(())
}

impl FuzzyNumber {
    /// Builds a fuzzy number from raw level data, checking the grid and the
    /// representation conditions.
    pub fn from_levels(alphas: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, FuzzyError> {
        if lo.len() != alphas.len() || hi.len() != alphas.len() {
            return Err(FuzzyError::Grid(format!(
                "length mismatch: {} alphas, {} lower, {} upper",
                alphas.len(),
                lo.len(),
                hi.len()
            )));
        }
        let grid = AlphaGrid::new(alphas)?;
        FuzzyNumber::on_grid(grid, lo, hi)
    }

    pub fn on_grid(alphas: AlphaGrid, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, FuzzyError> {
        if lo.len() != alphas.len() || hi.len() != alphas.len() {
            return Err(FuzzyError::Grid(format!(
                "length mismatch: {} alphas, {} lower, {} upper",
                alphas.len(),
                lo.len(),
                hi.len()
            )));
        }
        validate(&lo, &hi)?;
        Ok(FuzzyNumber { alphas, lo, hi })
    }

    /// Triangular number with support `[a, c]` and peak `b` on the default grid.
    pub fn triangular(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        FuzzyNumber::triangular_on(&AlphaGrid::default(), a, b, c)
    }

    pub fn triangular_on(grid: &AlphaGrid, a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        if !(a <= b && b <= c) {
            return Err(FuzzyError::Order { a, b, c });
        }
        // Anchored at the peak so that α = 1 reproduces b exactly and
        // rounding cannot push a cut past the core.
        let (left, right) = (b - a, c - b);
        let lo = grid.as_slice().iter().map(|&al| b - (1.0 - al) * left).collect();
        let hi = grid.as_slice().iter().map(|&al| b + (1.0 - al) * right).collect();
        FuzzyNumber::on_grid(grid.clone(), lo, hi)
    }

    /// Crisp embedding `r̄` on the default grid.
    pub fn crisp(r: f64) -> Self {
        FuzzyNumber::crisp_on(&AlphaGrid::default(), r)
    }

    pub fn crisp_on(grid: &AlphaGrid, r: f64) -> Self {
        assert!(r.is_finite(), "crisp value must be finite");
        FuzzyNumber {
            alphas: grid.clone(),
            lo: vec![r; grid.len()],
            hi: vec![r; grid.len()],
        }
    }

    pub fn zero_on(grid: &AlphaGrid) -> Self {
        FuzzyNumber::crisp_on(grid, 0.0)
    }

    pub fn grid(&self) -> &AlphaGrid {
        &self.alphas
    }

    pub fn alphas(&self) -> &[f64] {
        self.alphas.as_slice()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> &[f64] {
        &self.hi
    }

    pub fn levels(&self) -> usize {
        self.lo.len()
    }

    /// α-cut at grid index `i`.
    pub fn level(&self, i: usize) -> Interval {
        Interval {
            lower: self.lo[i],
            upper: self.hi[i],
        }
    }

    /// α-cut at an arbitrary α ∈ [0, 1], linearly interpolated between grid nodes.
    pub fn cut(&self, alpha: f64) -> Interval {
        let a = alpha.clamp(0.0, 1.0);
        Interval {
            lower: interpolate(self.alphas(), &self.lo, a),
            upper: interpolate(self.alphas(), &self.hi, a),
        }
    }

    pub fn is_crisp(&self, tol: f64) -> bool {
        (self.hi[0] - self.lo[0]).abs() <= tol
    }

    /// Re-expresses the number on `grid` by linear interpolation of the
    /// endpoint functions.
    pub fn resample(&self, grid: &AlphaGrid) -> FuzzyNumber {
        if self.alphas.same_as(grid) {
            return self.clone();
        }
        let src = self.alphas();
        let lo = grid.as_slice().iter().map(|&a| interpolate(src, &self.lo, a)).collect();
        let hi = grid.as_slice().iter().map(|&a| interpolate(src, &self.hi, a)).collect();
        FuzzyNumber {
            alphas: grid.clone(),
            lo,
            hi,
        }
    }

    fn aligned<'a>(
        &'a self,
        other: &'a FuzzyNumber,
    ) -> (std::borrow::Cow<'a, FuzzyNumber>, std::borrow::Cow<'a, FuzzyNumber>) {
        use std::borrow::Cow;
        if self.alphas.same_as(&other.alphas) {
            (Cow::Borrowed(self), Cow::Borrowed(other))
        } else {
            let grid = self.alphas.union(&other.alphas);
            (Cow::Owned(self.resample(&grid)), Cow::Owned(other.resample(&grid)))
        }
    }

    /// Level-wise interval sum.
    pub fn add(&self, other: &FuzzyNumber) -> FuzzyNumber {
        let (u, v) = self.aligned(other);
        FuzzyNumber {
            alphas: u.alphas.clone(),
            lo: u.lo.iter().zip(&v.lo).map(|(a, b)| a + b).collect(),
            hi: u.hi.iter().zip(&v.hi).map(|(a, b)| a + b).collect(),
        }
    }

    /// Scalar multiple; a negative factor swaps the endpoint roles.
    pub fn scale(&self, k: f64) -> FuzzyNumber {
        let (lo, hi) = if k >= 0.0 {
            (
                self.lo.iter().map(|x| k * x).collect(),
                self.hi.iter().map(|x| k * x).collect(),
            )
        } else {
            (
                self.hi.iter().map(|x| k * x).collect(),
                self.lo.iter().map(|x| k * x).collect(),
            )
        };
        FuzzyNumber {
            alphas: self.alphas.clone(),
            lo,
            hi,
        }
    }

    /// The sup-metric `D(u, v)`.
    pub fn distance(&self, other: &FuzzyNumber) -> f64 {
        let (u, v) = self.aligned(other);
        u.lo.iter()
            .zip(&v.lo)
            .chain(u.hi.iter().zip(&v.hi))
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `D(u, 0̄)`.
    pub fn norm(&self) -> f64 {
        self.lo.iter().chain(&self.hi).fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Partial order: every cut of `self` lies left of the matching cut of `other`.
    pub fn leq(&self, other: &FuzzyNumber) -> bool {
        let (u, v) = self.aligned(other);
        u.lo.iter().zip(&v.lo).all(|(a, b)| a <= b) && u.hi.iter().zip(&v.hi).all(|(a, b)| a <= b)
    }

    pub fn approx_eq(&self, other: &FuzzyNumber, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// `self = self + other`, bit-identical to [`FuzzyNumber::add`].
    pub(crate) fn add_assign(&mut self, other: &FuzzyNumber) {
        if !self.alphas.same_as(&other.alphas) {
            *self = FuzzyNumber::add(self, other);
            return;
        }
        for (a, b) in self.lo.iter_mut().zip(&other.lo) {
            *a += b;
        }
        for (a, b) in self.hi.iter_mut().zip(&other.hi) {
            *a += b;
        }
    }

    /// Grid, lower and upper endpoint arrays.
    pub fn into_parts(self) -> (AlphaGrid, Vec<f64>, Vec<f64>) {
        (self.alphas, self.lo, self.hi)
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.binary_search_by(|p| p.total_cmp(&x)) {
        Ok(i) => ys[i],
        Err(0) => ys[0],
        Err(i) if i >= xs.len() => ys[xs.len() - 1],
        Err(i) => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

impl Add for &FuzzyNumber {
    type Output = FuzzyNumber;

    fn add(self, rhs: &FuzzyNumber) -> FuzzyNumber {
        FuzzyNumber::add(self, rhs)
    }
}

impl Mul<&FuzzyNumber> for f64 {
    type Output = FuzzyNumber;

    fn mul(self, rhs: &FuzzyNumber) -> FuzzyNumber {
        rhs.scale(self)
    }
}

impl Neg for &FuzzyNumber {
    type Output = FuzzyNumber;

    fn neg(self) -> FuzzyNumber {
        self.scale(-1.0)
    }
}

/// Outcome of [`monotone_repair`]: the repaired number and the largest
/// single-entry change that was applied.
#[derive(Debug, Clone)]
pub struct Repaired {
    pub value: FuzzyNumber,
    pub correction: f64,
}

/// Restores the representation conditions on endpoint data perturbed by
/// rounding.
///
/// `lo` gets a running maximum, `hi` a running minimum. Where the cuts then
/// cross, both endpoints collapse onto a single core value bracketed by the
/// last uncrossed cut. Fails when any entry moves by more than `tol`.
pub fn monotone_repair(
    alphas: &AlphaGrid,
    mut lo: Vec<f64>,
    mut hi: Vec<f64>,
    tol: f64,
) -> Result<Repaired, FuzzyError> {
    if lo.len() != alphas.len() || hi.len() != alphas.len() {
        return Err(FuzzyError::Grid("length mismatch in repair".to_string()));
    }
    if let Some(index) = lo.iter().zip(&hi).position(|(l, h)| !l.is_finite() || !h.is_finite()) {
        return Err(FuzzyError::NonFinite { index });
    }
    let orig_lo = lo.clone();
    let orig_hi = hi.clone();

    for i in 1..lo.len() {
        lo[i] = lo[i].max(lo[i - 1]);
        hi[i] = hi[i].min(hi[i - 1]);
    }
    if let Some(k) = lo.iter().zip(&hi).position(|(l, h)| l > h) {
        let mut core = 0.5 * (lo[k] + hi[k]);
        if k > 0 {
            core = core.clamp(lo[k - 1], hi[k - 1]);
        }
        for i in k..lo.len() {
            lo[i] = core;
            hi[i] = core;
        }
    }

    let correction = orig_lo
        .iter()
        .zip(&lo)
        .chain(orig_hi.iter().zip(&hi))
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if correction > tol {
        return Err(FuzzyError::RepairExceedsTolerance { correction, tol });
    }
    Ok(Repaired {
        value: FuzzyNumber {
            alphas: alphas.clone(),
            lo,
            hi,
        },
        correction,
    })
}
