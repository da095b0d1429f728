mod output;
mod run;
mod runspec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::runspec::{parse_list, parse_range, Dir, Format, RunSpec, SpecError};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("GIT_DESCRIBE"), ")");

#[derive(Parser)]
#[command(name = "pushasep", version = VERSION, about = "Simulate PushASEP with a wall and related processes, evaluate exact laws, run checks")]
struct Cli {
    /// Worker threads for replicas (output does not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one of: pushasep-wall, zdagger, x-array, gt-pushblock, lpp-field, seq-chain.
    Simulate(SimulateArgs),
    /// Evaluate one of: pmf, sup-cdf, transition, field-pmf, schur, sp-schur.
    Exact(ExactArgs),
    /// Run a check suite: exact, oracles, kernels, theorems, dynamics, fast, all.
    Verify(VerifyArgs),
    /// Re-run the spec stored in a manifest or in an output file's first line.
    Replay {
        file: PathBuf,
        /// Write here instead of the recorded output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Rates v_1..v_n as decimals or fractions, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    v: String,
    /// Number of particles; must match the number of rates when given.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Mass allowed outside truncated windows (or the stopping tolerance for --sup).
    #[arg(long)]
    tail: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    process: String,
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    replicas: usize,
    /// Recording window after burn-in.
    #[arg(long)]
    horizon: Option<f64>,
    /// Time run before recording; a number or "auto" for 20 n / min(1 - v_i^2).
    #[arg(long)]
    burn_in: Option<String>,
    /// Initial state, comma separated (bottom row z for gt-pushblock).
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    #[arg(long, value_enum, default_value = "forward")]
    direction: Dir,
    /// Record every event instead of the final state.
    #[arg(long)]
    trajectory: bool,
    /// zdagger only: sample the all-time supremum with the certified stop.
    #[arg(long)]
    sup: bool,
}

#[derive(Args)]
struct ExactArgs {
    quantity: String,
    #[command(flatten)]
    common: Common,
    /// Range `a..b` for sup-cdf.
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<String>,
    /// Largest coordinate enumerated for pmf, transition and field-pmf.
    #[arg(long)]
    max: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long)]
    t: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "fast")]
    suite: String,
    #[arg(long, default_value = "0.3,0.5", allow_hyphen_values = true)]
    v: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    replicas: usize,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn rates(s: &str) -> Vec<String> {
    s.split(',').map(|p| p.trim().to_string()).collect()
}

fn base_spec(command: &str, target: String, v: &str, n: Option<usize>, seed: u64) -> RunSpec {
    let rates = rates(v);
    RunSpec {
        command: command.into(),
        target,
        n: n.unwrap_or(rates.len()),
        rates,
        seed,
        replicas: 1,
        horizon: None,
        burn_in: None,
        direction: Dir::Forward,
        init: None,
        trajectory: false,
        sup: false,
        eta: None,
        max: None,
        x: None,
        t: None,
        tail: None,
        format: Format::Csv,
        out: None,
    }
}

fn with_common(mut s: RunSpec, c: &Common) -> RunSpec {
    s.format = c.format;
    s.out = c.out.clone();
    s.tail = c.tail;
    s
}

fn build_spec(cmd: Command) -> Result<RunSpec, SpecError> {
    let spec = match cmd {
        Command::Simulate(a) => {
            let c = &a.common;
            let mut s = with_common(base_spec("simulate", a.process, &c.v, c.n, c.seed), c);
            s.replicas = a.replicas;
            s.horizon = a.horizon;
            s.burn_in = match a.burn_in.as_deref() {
                None => None,
                Some("auto") => run::auto_burn_in(&s.rates),
                Some(x) => Some(x.parse::<f64>().map_err(|e| SpecError { field: "burn-in", message: format!("'{x}': {e}") })?),
            };
            s.init = a.init.as_deref().map(|x| parse_list("init", x)).transpose()?;
            s.direction = a.direction;
            s.trajectory = a.trajectory;
            s.sup = a.sup;
            s
        }
        Command::Exact(a) => {
            let c = &a.common;
            let mut s = with_common(base_spec("exact", a.quantity, &c.v, c.n, c.seed), c);
            s.eta = a.eta.as_deref().map(|x| parse_range("eta", x)).transpose()?;
            s.max = a.max;
            s.x = a.x.as_deref().map(|x| parse_list("x", x)).transpose()?;
            s.t = a.t;
            s
        }
        Command::Verify(a) => {
            let mut s = base_spec("verify", a.suite, &a.v, a.n, a.seed);
            s.replicas = a.replicas;
            s.out = a.out;
            s.format = Format::Json;
            s
        }
        Command::Replay { file, out } => {
            let mut s = output::read_spec(&file).map_err(|m| SpecError { field: "file", message: m })?;
            if out.is_some() {
                s.out = out;
            }
            s
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let spec = match build_spec(cli.command) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match output::run_and_write(&spec) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(output::RunError::Spec(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(output::RunError::Other(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
