use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use fuzzy_resum::harness::{run, Command, ExitStatus, RunConfig};
use fuzzy_resum::methods::{Accel, Extrapolate};

#[derive(Parser, Debug)]
#[command(
    name = "fuzzy-resum",
    version,
    about = "Resummation experiments on series of fuzzy numbers"
)]
struct Cli {
    /// JSON config file; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Sum a series with a (phi) method and drive s -> 0+.
    Sum(SumArgs),
    /// Evaluate and classify the Tauberian condition.
    Tauberian(TauberianArgs),
    /// Abel-Poisson sweep, level coefficients and moment checks.
    Fourier(FourierArgs),
    /// Check a kernel's validity conditions on a sample grid.
    ValidatePhi(ValidateArgs),
}

#[derive(Args, Debug)]
struct SeriesMethod {
    /// preset:NAME, a series JSON file, or inline JSON.
    #[arg(long)]
    series: Option<String>,
    /// abel | mittag-leffler | dirichlet:<lambda> | factorial:<lambda> | JSON.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    alpha_levels: Option<usize>,
    /// Ratio for the convergent-geometric preset.
    #[arg(long)]
    q: Option<f64>,
    /// Skip kernel validation.
    #[arg(long)]
    relaxed: bool,
}

#[derive(Args, Debug)]
struct SumArgs {
    #[command(flatten)]
    common: SeriesMethod,
    #[arg(long)]
    s_max: Option<f64>,
    #[arg(long)]
    s_steps: Option<usize>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    /// euler | none
    #[arg(long)]
    accel: Option<Accel>,
    /// linear | none
    #[arg(long)]
    extrapolate: Option<Extrapolate>,
}

#[derive(Args, Debug)]
struct TauberianArgs {
    #[command(flatten)]
    common: SeriesMethod,
    #[arg(long)]
    n_max: Option<usize>,
}

#[derive(Args, Debug)]
struct FourierArgs {
    /// preset:NAME (smooth, constant, cos, sin, square).
    #[arg(long)]
    function: Option<String>,
    /// Comma-separated radii in [0, 1).
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    #[arg(long)]
    sample_count: Option<usize>,
    /// Number of evaluation points in x.
    #[arg(long)]
    x_grid: Option<usize>,
    /// Highest harmonic in the coefficient dump.
    #[arg(long)]
    harmonics: Option<usize>,
    #[arg(long)]
    alpha_levels: Option<usize>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    method: Option<String>,
    /// Comma-separated s samples.
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<f64>>,
    #[arg(long)]
    n_max: Option<usize>,
}

fn text(v: Option<String>) -> Option<Value> {
    v.map(Value::String)
}

impl SeriesMethod {
    fn into_config(self, command: Command) -> RunConfig {
        RunConfig {
            command: Some(command),
            series: text(self.series),
            method: text(self.method),
            alpha_levels: self.alpha_levels,
            q: self.q,
            relaxed: self.relaxed.then_some(true),
            ..Default::default()
        }
    }
}

fn flags_config(cli: Cli) -> RunConfig {
    let base = RunConfig {
        out: cli.out,
        threads: cli.threads,
        ..Default::default()
    };
    let specific = match cli.command {
        Sub::Sum(a) => RunConfig {
            s_max: a.s_max,
            s_steps: a.s_steps,
            outer_tol: a.outer_tol,
            inner_tol: a.inner_tol,
            n_max: a.n_max,
            accel: a.accel,
            extrapolate: a.extrapolate,
            ..a.common.into_config(Command::Sum)
        },
        Sub::Tauberian(a) => RunConfig {
            n_max: a.n_max,
            ..a.common.into_config(Command::Tauberian)
        },
        Sub::Fourier(a) => RunConfig {
            command: Some(Command::Fourier),
            function: a.function,
            r_list: a.r,
            sample_count: a.sample_count,
            x_grid: a.x_grid,
            harmonics: a.harmonics,
            alpha_levels: a.alpha_levels,
            ..Default::default()
        },
        Sub::ValidatePhi(a) => RunConfig {
            command: Some(Command::ValidatePhi),
            method: text(a.method),
            s_samples: a.s,
            n_max: a.n_max,
            ..Default::default()
        },
    };
    base.overlay(specific)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match &cli.config {
        Some(path) => match RunConfig::from_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(ExitStatus::Config.code());
            }
        },
        None => RunConfig::default(),
    };
    let cfg = file.overlay(flags_config(cli));

    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(ExitStatus::Config.code());
        }
    }

    match run(&cfg) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for p in &outcome.artifacts {
                println!("wrote {}", p.display());
            }
            ExitCode::from(outcome.status.code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_status().code())
        }
    }
}
