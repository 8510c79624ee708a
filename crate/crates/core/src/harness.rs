//! Batch front-end: configuration merging, experiment drivers and artifact
//! writers behind the `fuzzy-resum` binary.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::fourier::{
    convergence_sweep, level_coeffs, trig_moment_check, uniform_x_grid, write_coefficients_csv, FourierError,
    FuzzyPeriodicFunction,
};
use crate::fuzzy::AlphaGrid;
use crate::methods::{
    halving_schedule, phi_limit, validate_phi, Accel, Extrapolate, LimitOptions, MethodSpec, PhiMethod, Status,
    SummationResult, TransformOptions,
};
use crate::series::{parse_series_json, preset, FuzzySeries, PresetParams, SeriesSpec};
use crate::tauberian::classify;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Config = 1,
    Numeric = 2,
    KernelInvalid = 3,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("i/o on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl HarnessError {
    pub fn exit_status(&self) -> ExitStatus {
        match self {
            HarnessError::Numeric(_) => ExitStatus::Numeric,
            _ => ExitStatus::Config,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sum,
    Tauberian,
    Fourier,
    ValidatePhi,
}

/// Everything a run can be configured with. Every field is optional so that
/// a config file and command-line flags can be layered.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    /// `"preset:NAME"`, a file path, inline JSON text, or a series object.
    pub series: Option<Value>,
    /// Shorthand (`abel`, `dirichlet:ln(n+1)`, …), JSON text, or an object.
    pub method: Option<Value>,
    /// `"preset:NAME"` or a bare preset name.
    pub function: Option<String>,
    pub alpha_levels: Option<usize>,
    pub q: Option<f64>,
    pub s_max: Option<f64>,
    pub s_steps: Option<usize>,
    pub outer_tol: Option<f64>,
    pub inner_tol: Option<f64>,
    pub n_max: Option<usize>,
    pub accel: Option<Accel>,
    pub extrapolate: Option<Extrapolate>,
    pub relaxed: Option<bool>,
    pub s_samples: Option<Vec<f64>>,
    pub r_list: Option<Vec<f64>>,
    pub sample_count: Option<usize>,
    pub x_grid: Option<usize>,
    pub harmonics: Option<usize>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// Reads a JSON config; errors carry serde's line/column diagnostics.
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` win over `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        let base = self;
        overlay_fields!(base, top; command, series, method, function, alpha_levels, q, s_max, s_steps,
            outer_tol, inner_tol, n_max, accel, extrapolate, relaxed, s_samples, r_list, sample_count,
            x_grid, harmonics, out, threads)
    }

    fn grid(&self) -> Result<AlphaGrid, HarnessError> {
        let levels = self.alpha_levels.unwrap_or(crate::fuzzy::DEFAULT_LEVELS);
        if levels < 2 {
            return Err(config_err("alpha_levels must be >= 2"));
        }
        AlphaGrid::uniform(levels).map_err(config_err)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn positive(name: &str, v: f64) -> Result<f64, HarnessError> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(HarnessError::Config(format!(
                "{name} must be positive and finite, got {v}"
            )))
        }
    }

    pub fn build_series(&self) -> Result<FuzzySeries, HarnessError> {
        let grid = self.grid()?;
        let value = self.series.as_ref().ok_or_else(|| config_err("missing --series"))?;
        match value {
            Value::String(text) => series_from_text(text, &grid, self.q),
            other => {
                let spec: SeriesSpec = serde_json::from_value(other.clone()).map_err(config_err)?;
                spec.build(&grid).map_err(config_err)
            }
        }
    }

    pub fn build_method(&self) -> Result<PhiMethod, HarnessError> {
        let value = self.method.as_ref().ok_or_else(|| config_err("missing --method"))?;
        let spec = match value {
            Value::String(text) => MethodSpec::parse(text).map_err(config_err)?,
            other => serde_json::from_value::<MethodSpec>(other.clone()).map_err(config_err)?,
        };
        spec.with_relaxed(self.relaxed.unwrap_or(false))
            .build()
            .map_err(config_err)
    }

    pub fn limit_options(&self) -> Result<LimitOptions, HarnessError> {
        let s_max = Self::positive("s_max", self.s_max.unwrap_or(1.0))?;
        let steps = self.s_steps.unwrap_or(14);
        if steps == 0 {
            return Err(config_err("s_steps must be >= 1"));
        }
        let n_max = self.n_max.unwrap_or(1_000_000);
        if n_max == 0 {
            return Err(config_err("n_max must be >= 1"));
        }
        Ok(LimitOptions {
            schedule: halving_schedule(s_max, steps),
            outer_tol: Self::positive("outer_tol", self.outer_tol.unwrap_or(1e-4))?,
            inner: TransformOptions {
                inner_tol: Self::positive("inner_tol", self.inner_tol.unwrap_or(1e-8))?,
                n_max,
                accel: self.accel.unwrap_or_default(),
            },
            extrapolate: self.extrapolate.unwrap_or_default(),
            ..LimitOptions::default()
        })
    }

    pub fn function(&self) -> Result<FuzzyPeriodicFunction, HarnessError> {
        let grid = self.grid()?;
        let spec = self
            .function
            .as_deref()
            .ok_or_else(|| config_err("missing --function"))?;
        let name = spec.strip_prefix("preset:").unwrap_or(spec);
        let f = FuzzyPeriodicFunction::preset(name, &grid).map_err(config_err)?;
        f.with_sample_count(self.sample_count.unwrap_or(crate::fourier::DEFAULT_SAMPLES))
            .map_err(config_err)
    }
}

/// Resolves a textual series spec: `preset:NAME` (with `preset:custom-file:PATH`
/// for files under the preset name), inline JSON, or a path to a JSON file.
pub fn series_from_text(text: &str, grid: &AlphaGrid, q: Option<f64>) -> Result<FuzzySeries, HarnessError> {
    let t = text.trim();
    if let Some(rest) = t.strip_prefix("preset:") {
        let (name, path) = match rest.split_once(':') {
            Some((n, p)) => (n, Some(PathBuf::from(p))),
            None => (rest, None),
        };
        let params = PresetParams {
            grid: grid.clone(),
            q: q.unwrap_or(0.5),
            u0: None,
            path,
        };
        return preset(name, &params).map_err(config_err);
    }
    if t.starts_with('{') {
        return parse_series_json(t, grid).map_err(config_err);
    }
    let path = Path::new(t);
    let body = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_series_json(&body, grid).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// Outcome of a run: exit status plus a one-line summary for the terminal.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: ExitStatus,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn new(dir: PathBuf) -> Result<Self, HarnessError> {
        fs::create_dir_all(&dir).map_err(|source| HarnessError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Artifacts {
            dir,
            written: Vec::new(),
        })
    }

    fn write_with<F>(&mut self, name: &str, body: F) -> Result<(), HarnessError>
    where
        F: FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>,
    {
        let path = self.dir.join(name);
        let io_err = |source| HarnessError::Io {
            path: path.clone(),
            source,
        };
        let file = fs::File::create(&path).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), HarnessError> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)
        })
    }
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

/// Writes `s,terms,step_distance,lo_alpha0,hi_alpha0,lo_alpha1,hi_alpha1,error`.
pub fn write_trace_csv<W: Write>(result: &SummationResult, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "s",
        "terms",
        "step_distance",
        "lo_alpha0",
        "hi_alpha0",
        "lo_alpha1",
        "hi_alpha1",
        "error",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for e in &result.trace {
        let (l0, h0, l1, h1) = match &e.value {
            Some(v) => {
                let last = v.levels() - 1;
                (
                    Some(v.lower()[0]),
                    Some(v.upper()[0]),
                    Some(v.lower()[last]),
                    Some(v.upper()[last]),
                )
            }
            None => (None, None, None, None),
        };
        w.write_record([
            e.s.to_string(),
            e.terms.map(|n| n.to_string()).unwrap_or_default(),
            opt(e.step_distance),
            opt(l0),
            opt(h0),
            opt(l1),
            opt(h1),
            e.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Drives `phi_limit`; writes `summation.json` and `trace.csv`.
pub fn run_sum(cfg: &RunConfig) -> Result<Outcome, HarnessError> {
    let series = cfg.build_series()?;
    let method = cfg.build_method()?;
    let opts = cfg.limit_options()?;
    let result = phi_limit(&series, &method, &opts).map_err(config_err)?;

    let mut art = Artifacts::new(cfg.out_dir())?;
    art.json("summation.json", &result)?;
    art.write_with("trace.csv", |w| write_trace_csv(&result, w).map_err(csv_io))?;

    let status = match result.status {
        Status::Converged => ExitStatus::Ok,
        Status::Stalled => ExitStatus::Numeric,
        Status::KernelInvalid => ExitStatus::KernelInvalid,
    };
    let summary = match (&result.status, &result.limit) {
        (Status::KernelInvalid, _) => format!("kernel_invalid: {} violations", result.violations.len()),
        (st, Some(lim)) => {
            let last = lim.levels() - 1;
            format!(
                "{st:?}: support [{}, {}], core [{}, {}]",
                lim.lower()[0],
                lim.upper()[0],
                lim.lower()[last],
                lim.upper()[last]
            )
        }
        (st, None) => format!("{st:?}: no step converged"),
    };
    Ok(Outcome {
        status,
        summary,
        artifacts: art.written,
    })
}

/// Drives `classify`; writes `tauberian.json` and `tau.csv`.
pub fn run_tauberian(cfg: &RunConfig) -> Result<Outcome, HarnessError> {
    let series = cfg.build_series()?;
    let method = cfg.build_method()?;
    let n_max = cfg.n_max.unwrap_or(100_000);
    let report = classify(&series, &method, n_max).map_err(config_err)?;
    let mut art = Artifacts::new(cfg.out_dir())?;
    art.json("tauberian.json", &report)?;
    art.write_with("tau.csv", |w| report.write_csv(w).map_err(csv_io))?;
    Ok(Outcome {
        status: ExitStatus::Ok,
        summary: format!("class {:?}, slope {:?}", report.class, report.slope),
        artifacts: art.written,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub function: String,
    pub sample_count: usize,
    pub x_grid: usize,
    pub points: Vec<crate::fourier::SweepPoint>,
}

/// Drives the sweep, coefficient dump and moment check; writes `sweep.csv`,
/// `sweep.json`, `coefficients.csv` and `moments.json`.
pub fn run_fourier(cfg: &RunConfig) -> Result<Outcome, HarnessError> {
    let f = cfg.function()?;
    let r_list = cfg.r_list.clone().unwrap_or_else(|| vec![0.9, 0.99, 0.999]);
    let x_count = cfg.x_grid.unwrap_or(256);
    if x_count == 0 {
        return Err(config_err("x_grid must be >= 1"));
    }
    let xs = uniform_x_grid(x_count);
    let points = convergence_sweep(&f, &r_list, &xs).map_err(|e| match e {
        FourierError::KernelUnderResolved { .. } => HarnessError::Numeric(e.to_string()),
        other => config_err(other),
    })?;
    let harmonics = cfg.harmonics.unwrap_or(8).min(f.sample_count() / 4);
    let coeffs = (0..=harmonics)
        .map(|n| level_coeffs(&f, n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(config_err)?;
    let moments = r_list
        .iter()
        .map(|&r| trig_moment_check(r, &xs, f.sample_count()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(config_err)?;

    let record = SweepRecord {
        function: f.name().to_string(),
        sample_count: f.sample_count(),
        x_grid: x_count,
        points,
    };
    let mut art = Artifacts::new(cfg.out_dir())?;
    art.write_with("sweep.csv", |w| {
        writeln!(w, "r,sup_distance")?;
        for p in &record.points {
            writeln!(w, "{},{}", p.r, p.sup_distance)?;
        }
        Ok(())
    })?;
    art.json("sweep.json", &record)?;
    art.write_with("coefficients.csv", |w| {
        write_coefficients_csv(&coeffs, w).map_err(csv_io)
    })?;
    art.json("moments.json", &moments)?;
    let summary = record
        .points
        .iter()
        .map(|p| format!("r={} D*={:.3e}", p.r, p.sup_distance))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        status: ExitStatus::Ok,
        summary,
        artifacts: art.written,
    })
}

/// Drives `validate_phi`; writes `validation.json`. Exit 3 on violations.
pub fn run_validate_phi(cfg: &RunConfig) -> Result<Outcome, HarnessError> {
    let method = cfg.build_method()?;
    let s = cfg.s_samples.clone().unwrap_or_else(|| vec![1e-3, 1e-2, 0.1, 1.0]);
    if let Some(bad) = s.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(HarnessError::Config(format!("s samples must be positive, got {bad}")));
    }
    let n_max = cfg.n_max.unwrap_or(1000);
    let report = validate_phi(&method, &s, n_max);
    let mut art = Artifacts::new(cfg.out_dir())?;
    art.json("validation.json", &report)?;
    let (status, summary) = if report.is_valid() {
        (ExitStatus::Ok, format!("{}: valid (sup {})", report.method, report.sup))
    } else {
        (
            ExitStatus::KernelInvalid,
            format!("{}: {} violations", report.method, report.violations.len()),
        )
    };
    Ok(Outcome {
        status,
        summary,
        artifacts: art.written,
    })
}

/// Dispatches on `cfg.command`.
pub fn run(cfg: &RunConfig) -> Result<Outcome, HarnessError> {
    match cfg.command.ok_or_else(|| config_err("missing command"))? {
        Command::Sum => run_sum(cfg),
        Command::Tauberian => run_tauberian(cfg),
        Command::Fourier => run_fourier(cfg),
        Command::ValidatePhi => run_validate_phi(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: RunConfig = serde_json::from_str(r#"{"s_max": 0.5, "n_max": 10, "method": "abel"}"#).unwrap();
        let flags = RunConfig {
            n_max: Some(20),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.s_max, Some(0.5));
        assert_eq!(merged.n_max, Some(20));
        assert_eq!(merged.method, Some(Value::String("abel".into())));
    }

    #[test]
    fn config_errors_name_the_field() {
        let err = serde_json::from_str::<RunConfig>("{\n  \"s_maxx\": 1\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("s_maxx") && msg.contains("line 2"), "{msg}");
        let cfg = RunConfig {
            outer_tol: Some(-1.0),
            ..Default::default()
        };
        assert!(matches!(cfg.limit_options(), Err(HarnessError::Config(_))));
        let cfg = RunConfig {
            alpha_levels: Some(1),
            series: Some(Value::String("preset:crisp-alternating".into())),
            ..Default::default()
        };
        assert!(cfg.build_series().is_err());
    }

    #[test]
    fn series_and_method_forms() {
        let g = AlphaGrid::uniform(5).unwrap();
        assert_eq!(
            series_from_text("preset:paper-dirichlet", &g, None).unwrap().name(),
            "paper-dirichlet"
        );
        let inline = r#"{"kind":"preset","name":"convergent-geometric","q":0.25}"#;
        assert!(series_from_text(inline, &g, None).is_ok());
        assert!(series_from_text("preset:nope", &g, None).is_err());
        let cfg = RunConfig {
            method: Some(serde_json::json!({"kind": "factorial", "lambda": "n+1"})),
            ..Default::default()
        };
        assert_eq!(cfg.build_method().unwrap().label(), "factorial[n+1]");
        let cfg = RunConfig {
            method: Some(Value::String("mittag-leffler".into())),
            relaxed: Some(true),
            ..Default::default()
        };
        assert!(cfg.build_method().unwrap().is_relaxed());
    }
}
