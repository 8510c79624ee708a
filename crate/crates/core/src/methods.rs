//! (φ) summation: kernel families, validity checks, evaluation of
//! `S(s) = Σ u_n φ_n(s)` and the `s → 0⁺` limit driver.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accel::{aitken, iterated_average, EULER_DEPTH, EULER_WINDOW};
use crate::expr::{Expr, ExprError};
use crate::fuzzy::{monotone_repair, AlphaGrid, FuzzyError, FuzzyNumber};
use crate::series::{FuzzySeries, SeriesError};
use crate::special::ln_gamma;

#[derive(Debug, Error)]
pub enum MethodError {
    #[error("lambda is not strictly increasing at n = {n}: {prev} -> {next}")]
    LambdaNotIncreasing { n: usize, prev: f64, next: f64 },
    #[error("lambda_0 = {0} is negative")]
    LambdaNegativeStart(f64),
    #[error("lambda_{n} = {value} is not strictly positive")]
    LambdaNotPositive { n: usize, value: f64 },
    #[error("lambda_{n} is not finite")]
    LambdaNonFinite { n: usize },
    #[error("lambda looks bounded (decade increments shrink from {prev:e} to {last:e})")]
    LambdaBounded { prev: f64, last: f64 },
    #[error("inner series not converged at s = {s} after {n_max} terms (tail estimate {tail:e})")]
    InnerNotConverged { s: f64, n_max: usize, tail: f64 },
    #[error("bad s schedule: {0}")]
    BadSchedule(String),
    #[error("bad option: {0}")]
    BadOption(String),
    #[error("method spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("level repair failed: {0}")]
    Repair(#[from] FuzzyError),
}

/// Entries kept in the λ/γ cache (two f64 per index).
const LAMBDA_MEMO_CAP: usize = 1 << 21;

/// A sequence `λ_n` with memoized values and prefix sums `γ_n = Σ_{r≤n} 1/λ_r`.
pub struct LambdaSeq {
    label: String,
    gen: Arc<dyn Fn(usize) -> f64 + Send + Sync>,
    cache: RwLock<(Vec<f64>, Vec<f64>)>,
}

impl fmt::Debug for LambdaSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LambdaSeq({})", self.label)
    }
}

impl LambdaSeq {
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        LambdaSeq {
            label: label.into(),
            gen: Arc::new(f),
            cache: RwLock::new((Vec::new(), Vec::new())),
        }
    }

    pub fn from_expr(expr: Expr) -> Self {
        let label = expr.source().to_string();
        LambdaSeq::from_fn(label, move |n| expr.eval(n))
    }

    /// Parses an expression in `n`, or the name `lindelof`, which stands for
    /// `(n+1) ln(n+1)`: the sequence `m ln m` re-indexed so that `m = 1`
    /// sits at `n = 0`.
    pub fn parse(text: &str) -> Result<Self, MethodError> {
        match text.trim() {
            "lindelof" => Ok(LambdaSeq::from_fn("lindelof", |n| {
                let m = (n + 1) as f64;
                m * m.ln()
            })),
            other => Ok(LambdaSeq::from_expr(Expr::parse(other)?)),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn fill(&self, n: usize) {
        let mut guard = self.cache.write().unwrap_or_else(|e| e.into_inner());
        let (lam, gam) = &mut *guard;
        while lam.len() <= n {
            let k = lam.len();
            let v = (self.gen)(k);
            let g = gam.last().copied().unwrap_or(0.0) + 1.0 / v;
            lam.push(v);
            gam.push(g);
        }
    }

    pub fn get(&self, n: usize) -> f64 {
        if n >= LAMBDA_MEMO_CAP {
            return (self.gen)(n);
        }
        {
            let guard = self.cache.read().unwrap_or_else(|e| e.into_inner());
            if let Some(&v) = guard.0.get(n) {
                return v;
            }
        }
        self.fill(n);
        self.cache.read().unwrap_or_else(|e| e.into_inner()).0[n]
    }

    /// `γ_n = Σ_{r=0}^{n} 1/λ_r`.
    pub fn gamma(&self, n: usize) -> f64 {
        if n >= LAMBDA_MEMO_CAP {
            let base = self.gamma(LAMBDA_MEMO_CAP - 1);
            return (LAMBDA_MEMO_CAP..=n).fold(base, |acc, k| acc + 1.0 / (self.gen)(k));
        }
        {
            let guard = self.cache.read().unwrap_or_else(|e| e.into_inner());
            if let Some(&v) = guard.1.get(n) {
                return v;
            }
        }
        self.fill(n);
        self.cache.read().unwrap_or_else(|e| e.into_inner()).1[n]
    }
}

/// How many leading λ values are checked for finiteness and strict increase.
const LAMBDA_PREFIX: usize = 10_000;

fn check_lambda_prefix(lambda: &LambdaSeq) -> Result<(), MethodError> {
    let mut prev = lambda.get(0);
    if !prev.is_finite() {
        return Err(MethodError::LambdaNonFinite { n: 0 });
    }
    for n in 1..LAMBDA_PREFIX {
        let next = lambda.get(n);
        if !next.is_finite() {
            return Err(MethodError::LambdaNonFinite { n });
        }
        if !(next > prev) {
            return Err(MethodError::LambdaNotIncreasing { n, prev, next });
        }
        prev = next;
    }
    // Unboundedness heuristic: increments over successive decades of the
    // index must not collapse geometrically.
    let at = |k: u32| (lambda.gen)(10usize.pow(k));
    let prev_incr = at(4) - at(3);
    let last_incr = at(5) - at(4);
    if !(last_incr >= 0.5 * prev_incr) {
        return Err(MethodError::LambdaBounded {
            prev: prev_incr,
            last: last_incr,
        });
    }
    Ok(())
}

/// Kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    Dirichlet,
    Factorial,
    MittagLeffler,
    Custom,
}

type CustomKernel = dyn Fn(usize, f64) -> f64 + Send + Sync;

/// A summation kernel `φ_n(s)`.
#[derive(Clone)]
pub struct PhiMethod {
    kind: MethodKind,
    label: String,
    lambda: Option<Arc<LambdaSeq>>,
    custom: Option<Arc<CustomKernel>>,
    relaxed: bool,
    warnings: Vec<String>,
}

impl fmt::Debug for PhiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiMethod")
            .field("kind", &self.kind)
            .field("label", &self.label)
            .field("relaxed", &self.relaxed)
            .finish()
    }
}

impl PhiMethod {
    /// Generalized Dirichlet kernel `φ_n(s) = exp(-λ_n s)`.
    pub fn dirichlet(lambda: LambdaSeq) -> Result<Self, MethodError> {
        let l0 = lambda.get(0);
        if l0 < 0.0 {
            return Err(MethodError::LambdaNegativeStart(l0));
        }
        check_lambda_prefix(&lambda)?;
        Ok(PhiMethod {
            kind: MethodKind::Dirichlet,
            label: format!("dirichlet[{}]", lambda.label()),
            lambda: Some(Arc::new(lambda)),
            custom: None,
            relaxed: false,
            warnings: Vec::new(),
        })
    }

    /// Abel summation: the Dirichlet kernel with `λ_n = n`.
    pub fn abel() -> Self {
        let mut m = PhiMethod::dirichlet(LambdaSeq::from_fn("n", |n| n as f64)).expect("λ_n = n is valid");
        m.label = "abel".into();
        m
    }

    /// Generalized factorial kernel `φ_n(s) = Π_{k≤n} λ_k / (s + λ_k)`.
    pub fn factorial(lambda: LambdaSeq) -> Result<Self, MethodError> {
        let l0 = lambda.get(0);
        if !(l0 > 0.0) {
            return Err(MethodError::LambdaNotPositive { n: 0, value: l0 });
        }
        check_lambda_prefix(&lambda)?;
        let mut warnings = Vec::new();
        // Σ 1/λ_n must diverge; compare the growth of γ over the last two
        // decades up to 10^6.
        let mut g = 0.0;
        let mut marks = [0.0; 3];
        for k in 0..1_000_000usize {
            g += 1.0 / (lambda.gen)(k);
            match k + 1 {
                10_000 => marks[0] = g,
                100_000 => marks[1] = g,
                1_000_000 => marks[2] = g,
                _ => {}
            }
        }
        let (d1, d2) = (marks[1] - marks[0], marks[2] - marks[1]);
        if !(d2 >= 0.5 * d1) {
            warnings.push(format!(
                "GammaStagnation: gamma grew by {d1:.3e} then {d2:.3e} over the last two decades; sum of 1/lambda may converge"
            ));
        }
        Ok(PhiMethod {
            kind: MethodKind::Factorial,
            label: format!("factorial[{}]", lambda.label()),
            lambda: Some(Arc::new(lambda)),
            custom: None,
            relaxed: false,
            warnings,
        })
    }

    /// Mittag-Leffler kernel `φ_n(s) = 1/Γ(1 + s n)`.
    ///
    /// Not monotone in `n` while `s n` is below the minimum of Γ near 0.46,
    /// so [`phi_limit`] rejects it unless the method is marked relaxed.
    pub fn mittag_leffler() -> Self {
        PhiMethod {
            kind: MethodKind::MittagLeffler,
            label: "mittag-leffler".into(),
            lambda: None,
            custom: None,
            relaxed: false,
            warnings: vec!["phi_{n+1}(s) <= phi_n(s) fails where s*n < ~0.46".into()],
        }
    }

    pub fn custom<F>(label: impl Into<String>, phi: F) -> Self
    where
        F: Fn(usize, f64) -> f64 + Send + Sync + 'static,
    {
        PhiMethod {
            kind: MethodKind::Custom,
            label: label.into(),
            lambda: None,
            custom: Some(Arc::new(phi)),
            relaxed: false,
            warnings: Vec::new(),
        }
    }

    /// Skip kernel validation in [`phi_limit`].
    pub fn relaxed(mut self, relaxed: bool) -> Self {
        self.relaxed = relaxed;
        self
    }

    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    pub fn kind(&self) -> MethodKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lambda(&self) -> Option<&LambdaSeq> {
        self.lambda.as_deref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `φ_n(s)` evaluated directly.
    pub fn phi(&self, n: usize, s: f64) -> f64 {
        match self.kind {
            MethodKind::Factorial => {
                let lam = self.lambda.as_ref().expect("factorial has lambda");
                let log: f64 = (0..=n).map(|k| (s / lam.get(k)).ln_1p()).sum();
                (-log).exp()
            }
            _ => self.kernel(s).nth(n).expect("kernel iterator is infinite"),
        }
    }

    /// `φ_0(s), φ_1(s), …` computed incrementally.
    pub fn kernel(&self, s: f64) -> Kernel<'_> {
        Kernel {
            method: self,
            s,
            n: 0,
            log_acc: 0.0,
        }
    }
}

pub struct Kernel<'a> {
    method: &'a PhiMethod,
    s: f64,
    n: usize,
    log_acc: f64,
}

impl Iterator for Kernel<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let n = self.n;
        self.n += 1;
        let m = self.method;
        let v = match m.kind {
            MethodKind::Dirichlet => {
                let lam = m.lambda.as_ref().expect("dirichlet has lambda").get(n);
                if self.s == 0.0 {
                    1.0
                } else {
                    (-lam * self.s).exp()
                }
            }
            MethodKind::Factorial => {
                let lam = m.lambda.as_ref().expect("factorial has lambda").get(n);
                // Products of many factors underflow; accumulate in log space.
                self.log_acc += (self.s / lam).ln_1p();
                (-self.log_acc).exp()
            }
            MethodKind::MittagLeffler => (-ln_gamma(1.0 + self.s * n as f64)).exp(),
            MethodKind::Custom => (m.custom.as_ref().expect("custom kernel"))(n, self.s),
        };
        Some(v)
    }
}

/// JSON method description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MethodSpec {
    Dirichlet {
        lambda: String,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        relaxed: bool,
    },
    Factorial {
        lambda: String,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        relaxed: bool,
    },
    MittagLeffler {
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        relaxed: bool,
    },
    Abel {
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        relaxed: bool,
    },
}

impl MethodSpec {
    /// Accepts JSON (`{"kind":"factorial","lambda":"n+1"}`) or the shorthand
    /// forms `abel`, `mittag-leffler`, `dirichlet:<λ>`, `factorial:<λ>`.
    pub fn parse(text: &str) -> Result<Self, MethodError> {
        let t = text.trim();
        if t.starts_with('{') {
            return serde_json::from_str(t).map_err(|e| MethodError::Spec(e.to_string()));
        }
        let (head, arg) = match t.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim().to_string())),
            None => (t, None),
        };
        match (head, arg) {
            ("abel", None) => Ok(MethodSpec::Abel { relaxed: false }),
            ("mittag-leffler", None) => Ok(MethodSpec::MittagLeffler { relaxed: false }),
            ("dirichlet", Some(lambda)) => Ok(MethodSpec::Dirichlet { lambda, relaxed: false }),
            ("factorial", Some(lambda)) => Ok(MethodSpec::Factorial { lambda, relaxed: false }),
            _ => Err(MethodError::Spec(format!("unrecognized method '{t}'"))),
        }
    }

    pub fn with_relaxed(mut self, flag: bool) -> Self {
        match &mut self {
            MethodSpec::Dirichlet { relaxed, .. }
            | MethodSpec::Factorial { relaxed, .. }
            | MethodSpec::MittagLeffler { relaxed }
            | MethodSpec::Abel { relaxed } => *relaxed |= flag,
        }
        self
    }

    pub fn build(&self) -> Result<PhiMethod, MethodError> {
        Ok(match self {
            MethodSpec::Dirichlet { lambda, relaxed } => {
                PhiMethod::dirichlet(LambdaSeq::parse(lambda)?)?.relaxed(*relaxed)
            }
            MethodSpec::Factorial { lambda, relaxed } => {
                PhiMethod::factorial(LambdaSeq::parse(lambda)?)?.relaxed(*relaxed)
            }
            MethodSpec::MittagLeffler { relaxed } => PhiMethod::mittag_leffler().relaxed(*relaxed),
            MethodSpec::Abel { relaxed } => PhiMethod::abel().relaxed(*relaxed),
        })
    }
}

impl FromStr for MethodSpec {
    type Err = MethodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MethodSpec::parse(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Negative,
    NotMonotone,
    NotOneAtZero,
    NotFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub n: usize,
    pub s: f64,
    /// `None` when the kernel value is not finite.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiValidationReport {
    pub method: String,
    pub n_max: usize,
    pub s_samples: Vec<f64>,
    /// Largest kernel value seen; the uniform bound on the samples.
    pub sup: f64,
    pub violations: Vec<Violation>,
}

impl PhiValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks nonnegativity, finiteness (uniform bound), monotone non-increase in
/// `n`, and `φ_n(0) = 1` on the sample grid `s_samples × {0..=n_max}`.
pub fn validate_phi(method: &PhiMethod, s_samples: &[f64], n_max: usize) -> PhiValidationReport {
    let mut violations = Vec::new();
    let mut sup = 0.0_f64;
    for (n, v) in method.kernel(0.0).take(n_max + 1).enumerate() {
        if (v - 1.0).abs() > 1e-12 {
            violations.push(Violation {
                kind: ViolationKind::NotOneAtZero,
                n,
                s: 0.0,
                value: v.is_finite().then_some(v),
            });
        }
        if v.is_finite() {
            sup = sup.max(v);
        }
    }
    for &s in s_samples {
        let mut prev: Option<f64> = None;
        for (n, v) in method.kernel(s).take(n_max + 1).enumerate() {
            if !v.is_finite() {
                violations.push(Violation {
                    kind: ViolationKind::NotFinite,
                    n,
                    s,
                    value: v.is_finite().then_some(v),
                });
                prev = None;
                continue;
            }
            sup = sup.max(v);
            if v < 0.0 {
                violations.push(Violation {
                    kind: ViolationKind::Negative,
                    n,
                    s,
                    value: v.is_finite().then_some(v),
                });
            }
            if let Some(p) = prev {
                if v > p * (1.0 + 1e-14) {
                    violations.push(Violation {
                        kind: ViolationKind::NotMonotone,
                        n,
                        s,
                        value: v.is_finite().then_some(v),
                    });
                }
            }
            prev = Some(v);
        }
    }
    PhiValidationReport {
        method: method.label().to_string(),
        n_max,
        s_samples: s_samples.to_vec(),
        sup,
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accel {
    None,
    #[default]
    Euler,
}

impl FromStr for Accel {
    type Err = MethodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Accel::None),
            "euler" => Ok(Accel::Euler),
            _ => Err(MethodError::BadOption(format!("accel must be euler|none, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extrapolate {
    #[default]
    None,
    Linear,
}

impl FromStr for Extrapolate {
    type Err = MethodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Extrapolate::None),
            "linear" => Ok(Extrapolate::Linear),
            _ => Err(MethodError::BadOption(format!(
                "extrapolate must be linear|none, got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    pub inner_tol: f64,
    pub n_max: usize,
    pub accel: Accel,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            inner_tol: 1e-8,
            n_max: 1_000_000,
            accel: Accel::Euler,
        }
    }
}

/// Output of [`phi_transform`].
#[derive(Debug, Clone)]
pub struct Transformed {
    pub value: FuzzyNumber,
    pub terms_used: usize,
    pub accelerated: bool,
    pub repair_correction: f64,
}

/// Consecutive small kernel-weighted terms required before truncating.
const QUIET_RUN: usize = 20;
/// First index at which accelerated estimates are compared.
const FIRST_CHECKPOINT: usize = 128;
/// Aitken steps are taken only for contraction ratios below this.
const AITKEN_MAX_RATIO: f64 = 0.95;

/// Neumaier-compensated running sums for every endpoint of every level.
struct Accumulator {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl Accumulator {
    fn new(len: usize) -> Self {
        Accumulator {
            sum: vec![0.0; len],
            comp: vec![0.0; len],
        }
    }

    #[inline]
    fn add(&mut self, i: usize, x: f64) {
        let s = self.sum[i];
        let t = s + x;
        if s.abs() >= x.abs() {
            self.comp[i] += (s - t) + x;
        } else {
            self.comp[i] += (x - t) + s;
        }
        self.sum[i] = t;
    }

    #[inline]
    fn value(&self, i: usize) -> f64 {
        self.sum[i] + self.comp[i]
    }
}

/// `S(s) = Σ_n u_n φ_n(s)` evaluated level-wise.
///
/// Since `φ_n(s) ≥ 0`, every endpoint sequence is an ordinary real series
/// `Σ lo_n(α) φ_n(s)` / `Σ hi_n(α) φ_n(s)`. Summation stops at the first
/// index where `bound(n) φ_n(s) < inner_tol / 10` has held for 20
/// consecutive terms (`bound` is the series' decay hint or a running max of
/// recent `D(u_n, 0̄)`). With [`Accel::Euler`] the sums are also checked at
/// indices `128·2^k`: components whose last 64 terms alternate in sign are
/// replaced by the Euler transform of their last 64 partial sums, the
/// checkpoint estimates are passed through one Aitken step, and summation
/// stops once two successive estimates agree to `inner_tol`.
pub fn phi_transform(
    series: &FuzzySeries,
    method: &PhiMethod,
    s: f64,
    opts: &TransformOptions,
) -> Result<Transformed, MethodError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(MethodError::BadOption(format!("s must be positive, got {s}")));
    }
    if !(opts.inner_tol > 0.0) || opts.n_max == 0 {
        return Err(MethodError::BadOption("inner_tol must be > 0 and n_max >= 1".into()));
    }
    let grid = series.grid().clone();
    let levels = grid.len();
    let comps = 2 * levels;
    let use_euler = opts.accel == Accel::Euler;

    let mut acc = Accumulator::new(comps);
    let mut ring = if use_euler {
        vec![0.0; EULER_WINDOW * comps]
    } else {
        Vec::new()
    };
    let mut last_sign = vec![0i8; comps];
    let mut streak = vec![0usize; comps];
    let mut recent_norms: VecDeque<f64> = VecDeque::with_capacity(QUIET_RUN);
    let mut quiet = 0usize;
    let mut kernel = method.kernel(s);
    let mut estimates: VecDeque<Vec<f64>> = VecDeque::with_capacity(3);
    let mut prev_accel: Option<Vec<f64>> = None;
    let mut next_checkpoint = FIRST_CHECKPOINT;
    let mut tail = f64::INFINITY;
    let mut scratch = vec![0.0; EULER_WINDOW];

    for n in 0..opts.n_max {
        let phi = kernel.next().expect("kernel iterator is infinite");
        let norm = series.with_term(n, |u| {
            let (lo, hi) = (u.lower(), u.upper());
            for i in 0..levels {
                let tl = lo[i] * phi;
                let th = hi[i] * phi;
                acc.add(i, tl);
                acc.add(levels + i, th);
                if use_euler {
                    track_sign(&mut last_sign, &mut streak, i, tl);
                    track_sign(&mut last_sign, &mut streak, levels + i, th);
                }
            }
            u.norm()
        })?;
        if use_euler {
            let row = (n % EULER_WINDOW) * comps;
            for c in 0..comps {
                ring[row + c] = acc.value(c);
            }
        }

        if recent_norms.len() == QUIET_RUN {
            recent_norms.pop_front();
        }
        recent_norms.push_back(norm);
        let bound = series
            .decay_hint(n)
            .unwrap_or_else(|| recent_norms.iter().fold(0.0_f64, |m, &x| m.max(x)));
        let weighted = bound * phi;
        tail = tail.min(weighted * QUIET_RUN as f64).max(weighted);
        if weighted < opts.inner_tol / 10.0 {
            quiet += 1;
            if quiet >= QUIET_RUN {
                let vals: Vec<f64> = (0..comps).map(|c| acc.value(c)).collect();
                return finish(&grid, vals, n + 1, false, opts.inner_tol);
            }
        } else {
            quiet = 0;
        }

        if use_euler && n + 1 == next_checkpoint {
            next_checkpoint *= 2;
            let count = n + 1;
            let est: Vec<f64> = (0..comps)
                .map(|c| {
                    if streak[c] + 1 >= EULER_WINDOW {
                        for (j, slot) in scratch.iter_mut().enumerate() {
                            let idx = (count - EULER_WINDOW + j) % EULER_WINDOW;
                            *slot = ring[idx * comps + c];
                        }
                        iterated_average(&scratch, EULER_DEPTH)
                            .map(|(v, _)| v)
                            .unwrap_or_else(|| acc.value(c))
                    } else {
                        acc.value(c)
                    }
                })
                .collect();
            if estimates.len() == 3 {
                estimates.pop_front();
            }
            estimates.push_back(est);
            let current: Vec<f64> = if estimates.len() == 3 {
                (0..comps)
                    .map(|c| aitken(estimates[0][c], estimates[1][c], estimates[2][c], AITKEN_MAX_RATIO))
                    .collect()
            } else {
                estimates.back().cloned().expect("just pushed")
            };
            if let Some(prev) = &prev_accel {
                let diff = prev
                    .iter()
                    .zip(&current)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                tail = diff;
                if diff < opts.inner_tol {
                    return finish(&grid, current, count, true, opts.inner_tol);
                }
            }
            prev_accel = Some(current);
        }
    }
    Err(MethodError::InnerNotConverged {
        s,
        n_max: opts.n_max,
        tail,
    })
}

#[inline]
fn track_sign(last: &mut [i8], streak: &mut [usize], c: usize, x: f64) {
    let sg = if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    };
    if sg != 0 && sg == -last[c] {
        streak[c] += 1;
    } else {
        streak[c] = 0;
    }
    last[c] = sg;
}

fn finish(
    grid: &AlphaGrid,
    mut vals: Vec<f64>,
    terms_used: usize,
    accelerated: bool,
    inner_tol: f64,
) -> Result<Transformed, MethodError> {
    let hi = vals.split_off(grid.len());
    let repaired = monotone_repair(grid, vals, hi, 10.0 * inner_tol)?;
    Ok(Transformed {
        value: repaired.value,
        terms_used,
        accelerated,
        repair_correction: repaired.correction,
    })
}

/// Options for [`phi_limit`].
#[derive(Debug, Clone, PartialEq)]
pub struct LimitOptions {
    /// Strictly decreasing positive values of `s`.
    pub schedule: Vec<f64>,
    pub outer_tol: f64,
    pub inner: TransformOptions,
    pub extrapolate: Extrapolate,
    /// Largest `n` used when validating the kernel before summing.
    pub validate_n: usize,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            schedule: halving_schedule(1.0, 14),
            outer_tol: 1e-4,
            inner: TransformOptions::default(),
            extrapolate: Extrapolate::None,
            validate_n: 1000,
        }
    }
}

/// `s_j = s_max · 2^{-j}` for `j = 0..steps`.
pub fn halving_schedule(s_max: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|j| s_max * 0.5f64.powi(j as i32)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    Stalled,
    KernelInvalid,
}

/// One point `s_j` of the limit schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub s: f64,
    pub terms: Option<usize>,
    pub value: Option<FuzzyNumber>,
    /// `D(S_j, S_{j'})` against the previous successful step.
    pub step_distance: Option<f64>,
    /// Distance between successive linear extrapolations to `s = 0`.
    pub extrapolated_step: Option<f64>,
    pub accelerated: bool,
    pub repair_correction: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummationResult {
    pub series: String,
    pub method: String,
    pub status: Status,
    pub limit: Option<FuzzyNumber>,
    pub trace: Vec<TraceEntry>,
    pub violations: Vec<Violation>,
}

/// Endpoint-wise straight line through `(s_a, a)` and `(s_b, b)` evaluated at 0.
fn extrapolate_to_zero(s_a: f64, a: &FuzzyNumber, s_b: f64, b: &FuzzyNumber, tol: f64) -> Option<FuzzyNumber> {
    let w = s_b / (s_a - s_b);
    let line = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(xa, yb)| yb + w * (yb - xa)).collect() };
    let a = a.resample(b.grid());
    let lo = line(a.lower(), b.lower());
    let hi = line(a.upper(), b.upper());
    monotone_repair(b.grid(), lo, hi, tol).ok().map(|r| r.value)
}

/// Drives `s → 0⁺`: evaluates `S(s_j)` along the schedule and stops once two
/// consecutive step distances fall below `outer_tol`. With linear
/// extrapolation the run also counts as converged once two consecutive
/// extrapolated estimates agree to `outer_tol`, and the reported limit is
/// the extrapolation from the last two successful steps.
pub fn phi_limit(
    series: &FuzzySeries,
    method: &PhiMethod,
    opts: &LimitOptions,
) -> Result<SummationResult, MethodError> {
    let sched = &opts.schedule;
    if sched.is_empty() {
        return Err(MethodError::BadSchedule("empty schedule".into()));
    }
    if sched.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(MethodError::BadSchedule(
            "all s values must be positive and finite".into(),
        ));
    }
    if sched.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(MethodError::BadSchedule("schedule must be strictly decreasing".into()));
    }
    if !(opts.outer_tol > 0.0) {
        return Err(MethodError::BadOption("outer_tol must be > 0".into()));
    }

    let mut result = SummationResult {
        series: series.name().to_string(),
        method: method.label().to_string(),
        status: Status::Stalled,
        limit: None,
        trace: Vec::with_capacity(sched.len()),
        violations: Vec::new(),
    };
    if !method.is_relaxed() {
        let report = validate_phi(method, sched, opts.validate_n.min(opts.inner.n_max));
        if !report.is_valid() {
            result.status = Status::KernelInvalid;
            result.violations = report.violations;
            return Ok(result);
        }
    }

    let mut good: Vec<(f64, FuzzyNumber)> = Vec::new();
    let mut last_extrap: Option<FuzzyNumber> = None;
    let mut small_raw = 0usize;
    let mut small_extrap = 0usize;

    for &s in sched {
        match phi_transform(series, method, s, &opts.inner) {
            Ok(t) => {
                let step_distance = good.last().map(|(_, prev)| prev.distance(&t.value));
                let mut extrapolated_step = None;
                if opts.extrapolate == Extrapolate::Linear {
                    if let Some((sp, prev)) = good.last() {
                        let e = extrapolate_to_zero(*sp, prev, s, &t.value, opts.outer_tol);
                        if let (Some(e), Some(le)) = (&e, &last_extrap) {
                            extrapolated_step = Some(e.distance(le));
                        }
                        last_extrap = e;
                    }
                }
                small_raw = match step_distance {
                    Some(d) if d < opts.outer_tol => small_raw + 1,
                    _ => 0,
                };
                small_extrap = match extrapolated_step {
                    Some(d) if d < opts.outer_tol => small_extrap + 1,
                    _ => 0,
                };
                result.trace.push(TraceEntry {
                    s,
                    terms: Some(t.terms_used),
                    value: Some(t.value.clone()),
                    step_distance,
                    extrapolated_step,
                    accelerated: t.accelerated,
                    repair_correction: t.repair_correction,
                    error: None,
                });
                good.push((s, t.value));
                if small_raw >= 2 || small_extrap >= 2 {
                    result.status = Status::Converged;
                    break;
                }
            }
            Err(e @ (MethodError::InnerNotConverged { .. } | MethodError::Repair(_))) => {
                result.trace.push(TraceEntry {
                    s,
                    terms: None,
                    value: None,
                    step_distance: None,
                    extrapolated_step: None,
                    accelerated: false,
                    repair_correction: 0.0,
                    error: Some(e.to_string()),
                });
            }
            Err(e) => return Err(e),
        }
    }

    result.limit = match (opts.extrapolate, good.as_slice()) {
        (_, []) => None,
        (Extrapolate::Linear, [.., (sa, a), (sb, b)]) => {
            Some(extrapolate_to_zero(*sa, a, *sb, b, opts.outer_tol).unwrap_or_else(|| b.clone()))
        }
        (_, [.., (_, last)]) => Some(last.clone()),
    };
    Ok(result)
}
