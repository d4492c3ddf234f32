//! `branchdecay` command-line interface.
//!
//! Exit codes: 0 on success, 1 when an identity check fails, 2 on usage or
//! validation errors.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analytic::{erlang_survival, ErlangSpec, RateParams};
use crate::config::{parse_key_values, ConfigOverrides, ExperimentConfig};
use crate::error::{invalid, Result};
use crate::estimate::{estimate, required_sample_size};
use crate::numeric::{compensated_sum, fmt_f64};
use crate::oracle::{run_suite, Lattice, QUADRATURE_TOLERANCE, SERIES_TOLERANCE};
use crate::rng::RngStream;
use crate::sim::{read_dataset, sample_branch_tree, simulate_sample, write_dataset, write_tree, SamplerKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "branchdecay", version, about = "Simulate and analyse branching excited-state decay")]
pub struct Cli {
    /// Worker threads for simulation; output bytes do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate observer records and write a dataset CSV.
    Simulate(SimulateArgs),
    /// Estimate lambda_A and epsilon from a dataset CSV.
    Estimate(EstimateArgs),
    /// Print per-branch survival curves S_1..S_5 against t/W.
    Figure2(Figure2Args),
    /// Check every closed-form identity against its series or quadrature oracle.
    Verify(VerifyArgs),
    /// Sample size at which the one-sided upper limit reaches a target epsilon.
    Power(PowerArgs),
    /// Sample one outside-view branch tree and print its spine events.
    Tree(TreeArgs),
}

#[derive(Debug, Args, Default)]
pub struct ExperimentArgs {
    /// `key=value` config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "lambda-b")]
    pub lambda_b: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Number of particles.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, value_enum)]
    pub sampler: Option<SamplerArg>,
}

#[derive(Debug, Args)]
pub struct TreeArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SamplerArg {
    Mechanistic,
    Direct,
}

impl From<SamplerArg> for SamplerKind {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Mechanistic => SamplerKind::Mechanistic,
            SamplerArg::Direct => SamplerKind::Direct,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Dataset CSV produced by `simulate`.
    pub data: PathBuf,
    /// Theoretical branching rate lambda_B.
    #[arg(long = "lambda-b")]
    pub lambda_b: f64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct Figure2Args {
    #[arg(long = "lambda-b", default_value_t = 1.0)]
    pub lambda_b: f64,
    /// Upper end of the t/W axis.
    #[arg(long = "t-max", default_value_t = 6.0)]
    pub t_max_over_w: f64,
    #[arg(long, default_value_t = 61)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Tolerance for the series identities.
    #[arg(long, default_value_t = SERIES_TOLERANCE)]
    pub tol: f64,
    /// Tolerance for the quadrature identity.
    #[arg(long = "quad-tol", default_value_t = QUADRATURE_TOLERANCE)]
    pub quad_tol: f64,
    /// Restrict the lattice to one epsilon.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Restrict the lattice to one lambda_B.
    #[arg(long = "lambda-b")]
    pub lambda_b: Option<f64>,
    /// Emit one JSON report per line instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    pub epsilon_target: f64,
    #[arg(default_value_t = 0.95)]
    pub confidence: f64,
}

fn experiment_overrides(args: &ExperimentArgs) -> Result<ConfigOverrides> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
            ConfigOverrides::from_key_values(&parse_key_values(&text)?)?
        }
        None => ConfigOverrides::default(),
    };
    let flags = ConfigOverrides {
        lambda_b: args.lambda_b,
        epsilon: args.epsilon,
        seed: args.seed,
        output_path: args.out.clone(),
        ..Default::default()
    };
    Ok(flags.or(file))
}

fn simulate_config(args: &SimulateArgs) -> Result<ExperimentConfig> {
    let flags = ConfigOverrides {
        n_particles: args.n,
        sampler: args.sampler.map(SamplerKind::from),
        ..Default::default()
    };
    flags.or(experiment_overrides(&args.experiment)?).finish()
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => Ok(Box::new(BufWriter::new(File::create(p).map_err(|e| {
            invalid(format!("cannot create {}: {e}", p.display()))
        })?))),
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let config = simulate_config(args)?;
    let path = config
        .output_path
        .clone()
        .ok_or_else(|| invalid("simulate needs an output path (--out or out= in config)"))?;
    let dataset = simulate_sample(&config)?;
    let file = File::create(&path).map_err(|e| invalid(format!("cannot create {}: {e}", path.display())))?;
    write_dataset(&dataset, BufWriter::new(file))?;
    let total = compensated_sum(dataset.records().iter().map(|r| r.decay_time));
    let n = dataset.len() as f64;
    writeln!(
        stdout,
        "n={} mean_lifetime={} lambda_A_hat={}",
        dataset.len(),
        fmt_f64(total / n),
        fmt_f64(n / total)
    )?;
    Ok(EXIT_OK)
}

fn cmd_estimate(args: &EstimateArgs, stdout: &mut dyn Write) -> Result<i32> {
    let file = File::open(&args.data)
        .map_err(|e| invalid(format!("cannot open {}: {e}", args.data.display())))?;
    let dataset = read_dataset(BufReader::new(file))?;
    let result = estimate(&dataset, args.lambda_b, args.confidence)?;
    match args.format {
        OutputFormat::Json => writeln!(stdout, "{}", result.to_json())?,
        OutputFormat::Csv => result.write_csv(&mut *stdout)?,
    }
    Ok(EXIT_OK)
}

/// Rows `(t/W, S_1..S_5)` over `points` evenly spaced values of `t/W`.
pub fn figure2_rows(lambda_b: f64, t_max_over_w: f64, points: usize) -> Result<Vec<[f64; 6]>> {
    if !(t_max_over_w > 0.0 && t_max_over_w.is_finite()) {
        return Err(invalid("t-max must be positive"));
    }
    if points < 2 {
        return Err(invalid("figure2 needs at least 2 points"));
    }
    let w = RateParams::new(lambda_b, 0.0)?.waiting_time();
    (0..points)
        .map(|k| {
            let x = t_max_over_w * k as f64 / (points - 1) as f64;
            let mut row = [x, 0.0, 0.0, 0.0, 0.0, 0.0];
            for (i, cell) in row.iter_mut().enumerate().skip(1) {
                *cell = erlang_survival(ErlangSpec::new(i as u64, lambda_b)?, x * w)?;
            }
            Ok(row)
        })
        .collect()
}

fn cmd_figure2(args: &Figure2Args, stdout: &mut dyn Write) -> Result<i32> {
    let rows = figure2_rows(args.lambda_b, args.t_max_over_w, args.points)?;
    writeln!(stdout, "t_over_W,S1,S2,S3,S4,S5")?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(stdout, "{}", cells.join(","))?;
    }
    Ok(EXIT_OK)
}

fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write) -> Result<i32> {
    let mut lattice = Lattice::default();
    if let Some(eps) = args.epsilon {
        RateParams::new(1.0, eps)?;
        lattice.epsilons = vec![eps];
    }
    if let Some(lb) = args.lambda_b {
        RateParams::new(lb, 0.0)?;
        lattice.lambda_bs = vec![lb];
    }
    let suite = run_suite(&lattice, args.tol, args.quad_tol)?;
    if args.json {
        for report in &suite.reports {
            writeln!(stdout, "{}", report.to_json())?;
        }
    } else {
        writeln!(
            stdout,
            "{:<18} {:>9} {:>9} {:>6} {:>13} {:>9} {:>6}  result",
            "identity", "lambda_B", "epsilon", "shape", "max_abs_error", "tolerance", "terms"
        )?;
        for r in &suite.reports {
            writeln!(
                stdout,
                "{:<18} {:>9} {:>9} {:>6} {:>13.3e} {:>9.1e} {:>6}  {}",
                r.identity_name.as_str(),
                r.params.lambda_b(),
                r.params.epsilon(),
                r.shape.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
                r.max_abs_error,
                r.tolerance,
                r.terms_used,
                if r.pass { "PASS" } else { "FAIL" }
            )?;
        }
    }
    for skip in &suite.skipped {
        writeln!(stdout, "SKIP {}: {}", skip.identity_name.as_str(), skip.reason)?;
    }
    let passed = suite.reports.iter().filter(|r| r.pass).count();
    if !args.json {
        writeln!(stdout, "{passed}/{} identity checks passed", suite.reports.len())?;
    }
    Ok(if suite.all_pass() { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn cmd_power(args: &PowerArgs, stdout: &mut dyn Write) -> Result<i32> {
    let n = required_sample_size(args.epsilon_target, args.confidence)?;
    writeln!(stdout, "{n}")?;
    Ok(EXIT_OK)
}

fn cmd_tree(args: &TreeArgs, stdout: &mut dyn Write) -> Result<i32> {
    let flags = ConfigOverrides {
        horizon: args.horizon,
        ..Default::default()
    };
    let config = flags.or(experiment_overrides(&args.experiment)?).finish()?;
    let params = config.rate_params()?;
    let mut stream = RngStream::new(config.seed, 0);
    let tree = sample_branch_tree(&params, config.horizon, &mut stream)?;
    match &config.output_path {
        Some(_) => write_tree(&tree, open_output(&config.output_path)?)?,
        None => write_tree(&tree, &mut *stdout)?,
    }
    Ok(EXIT_OK)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Estimate(a) => cmd_estimate(a, stdout),
        Command::Figure2(a) => cmd_figure2(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Power(a) => cmd_power(a, stdout),
        Command::Tree(a) => cmd_tree(a, stdout),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{rendered}");
            } else {
                let _ = write!(stdout, "{rendered}");
            }
            return code;
        }
    };
    let outcome = match cli.threads {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
            Ok(pool) => {
                let mut buffer = Vec::new();
                let outcome = pool.install(|| dispatch(&cli, &mut buffer));
                stdout.write_all(&buffer).map_err(Into::into).and(outcome)
            }
            Err(e) => Err(invalid(format!("cannot start thread pool: {e}"))),
        },
        None => dispatch(&cli, stdout),
    };
    let _ = stdout.flush();
    match outcome {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            EXIT_USAGE
        }
    }
}

pub fn main() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
