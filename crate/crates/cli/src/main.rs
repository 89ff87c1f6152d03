//! `impulse` — solve and simulate delayed impulse-control policies.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{PolicySource, Resolved};
use config::RunConfig;
use impulse_core::models::ModelRegistry;
use impulse_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_SIMULATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "impulse",
    version,
    about = "Threshold and band impulse-control policies with implementation delay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a one-sided threshold problem (e.g. --model forex)
    SolveThreshold(SolveThresholdArgs),
    /// Solve a two-sided band problem (e.g. --model labor)
    SolveBand(SolveArgs),
    /// Monte-Carlo estimate of a policy's discounted value
    Simulate(SimulateArgs),
    /// Re-solve across a list of values of one model parameter
    Sweep(SweepArgs),
    /// Reproduce the bundled reference tables with relative errors
    PaperTable(PaperTableArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Config file (JSON or TOML); command-line flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model name: forex | labor
    #[arg(long)]
    model: Option<String>,

    /// forex: fixed intervention cost c
    #[arg(long)]
    c: Option<f64>,
    /// forex: proportional intervention cost lambda
    #[arg(long)]
    lambda: Option<f64>,
    /// forex: discount rate alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// forex: implementation delay; labor: quit rate
    #[arg(long)]
    delta: Option<f64>,
    /// forex: use the legacy algebra of the delayed cost (audit aid)
    #[arg(long)]
    legacy_r: bool,

    /// labor: demand drift b
    #[arg(long)]
    b: Option<f64>,
    /// labor: discount rate r
    #[arg(long)]
    r: Option<f64>,
    /// labor: monopoly exponent mu
    #[arg(long)]
    mu: Option<f64>,
    /// labor: demand volatility sigma
    #[arg(long)]
    sigma: Option<f64>,
    /// labor: productivity A
    #[arg(long = "A")]
    productivity: Option<f64>,
    /// labor: wage w
    #[arg(long)]
    w: Option<f64>,
    /// labor: firing implementation delay
    #[arg(long)]
    delta_lag: Option<f64>,
    /// labor: hire cost per unit
    #[arg(long)]
    c1: Option<f64>,
    /// labor: hire overhead per unit of labor
    #[arg(long)]
    c2: Option<f64>,
    /// labor: firing cost per unit
    #[arg(long)]
    c3: Option<f64>,
    /// labor: firing overhead per unit of labor
    #[arg(long)]
    c4: Option<f64>,

    /// Additional parameter overrides, repeatable: --set key=value
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Computational window override: lo,hi
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    window: Option<String>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: IMPULSE_THREADS env var, then all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Curve sample range: lo,hi
    #[arg(long, value_name = "LO,HI", allow_hyphen_values = true)]
    curve_range: Option<String>,
    #[arg(long)]
    curve_samples: Option<usize>,
}

#[derive(Args)]
struct SolveThresholdArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Also solve the no-delay problem and emit the pointwise cost difference
    #[arg(long)]
    emit_diff: bool,
    /// Skip the fixed-point oracle cross-check in the summary
    #[arg(long)]
    no_oracle: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Solution summary JSON to take the policy (and analytic value) from
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Explicit policy: "a,b" (threshold) or "p,q,c,d" (band)
    #[arg(long, allow_hyphen_values = true)]
    policy: Option<String>,
    /// Initial state
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Disable the Brownian-bridge crossing correction
    #[arg(long)]
    no_bridge: bool,
    /// Disable antithetic pairing
    #[arg(long)]
    no_antithetic: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Parameter to vary
    #[arg(long)]
    sweep_param: String,
    /// Comma-separated parameter values
    #[arg(long, allow_hyphen_values = true)]
    values: String,
}

#[derive(Args)]
struct PaperTableArgs {
    /// Output directory for the CSV copy of the table
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pair(text: &str, what: &str) -> Result<(f64, f64), Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Config(format!("{what} needs the form lo,hi")));
    }
    let lo = parts[0]
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{what}: {e}")))?;
    let hi = parts[1]
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{what}: {e}")))?;
    Ok((lo, hi))
}

fn parse_floats(text: &str, what: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{what}: '{s}': {e}")))
        })
        .collect()
}

impl ModelArgs {
    /// File config + flag overrides -> resolved model/params/settings.
    fn resolve(&self) -> Result<Resolved, Error> {
        let mut run = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(name) = &self.model {
            run.model.name = Some(name.clone());
        }
        let model_name = run
            .model
            .name
            .clone()
            .ok_or_else(|| Error::Config("no model selected (use --model or a config file)".into()))?;

        let registry = ModelRegistry::builtin();
        let spec = registry.get(&model_name)?;
        let mut params = spec.default_params();
        params.extend(run.model.params.clone());

        let flag_params: [(&str, Option<f64>); 15] = [
            ("c", self.c),
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("b", self.b),
            ("r", self.r),
            ("mu", self.mu),
            ("sigma", self.sigma),
            ("A", self.productivity),
            ("w", self.w),
            ("delta_lag", self.delta_lag),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
        ];
        for (key, value) in flag_params {
            if let Some(v) = value {
                params.insert(key.to_string(), v);
            }
        }
        if self.legacy_r {
            params.insert("legacy_r".to_string(), 1.0);
        }
        for assignment in &self.set {
            let (key, value) = assignment.split_once('=').ok_or_else(|| {
                Error::Config(format!("--set needs key=value, got '{assignment}'"))
            })?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|e| Error::Config(format!("--set {key}: {e}")))?;
            params.insert(key.trim().to_string(), v);
        }
        // Drop defaults for parameters the model does not know.
        let known: Vec<&str> = spec.param_names().to_vec();
        params.retain(|k, _| known.contains(&k.as_str()));

        if let Some(w) = &self.window {
            run.solver.window = Some(parse_pair(w, "--window")?);
        }
        if let Some(t) = self.threads {
            run.simulation.threads = Some(t);
        }
        let out_dir = if self.out.as_os_str() == "." {
            run.output
                .out_dir
                .clone()
                .map(PathBuf::from)
                .unwrap_or_else(|| self.out.clone())
        } else {
            self.out.clone()
        };
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| Error::Config(format!("cannot create {}: {e}", out_dir.display())))?;

        Ok(Resolved {
            model_name,
            params: params.into_iter().collect::<BTreeMap<_, _>>(),
            run,
            out_dir,
        })
    }
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Error> {
    let n = threads.or_else(|| {
        std::env::var("IMPULSE_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::SolveThreshold(args) => {
            let mut resolved = args.solve.model.resolve()?;
            apply_curve_flags(&mut resolved, &args.solve)?;
            commands::solve_threshold_cmd(&resolved, args.emit_diff, args.no_oracle)
        }
        Command::SolveBand(args) => {
            let mut resolved = args.model.resolve()?;
            apply_curve_flags(&mut resolved, &args)?;
            commands::solve_band_cmd(&resolved)
        }
        Command::Simulate(args) => {
            let mut resolved = args.model.resolve()?;
            let sim = &mut resolved.run.simulation;
            sim.paths = args.paths.or(sim.paths);
            sim.dt = args.dt.or(sim.dt);
            sim.horizon = args.horizon.or(sim.horizon);
            sim.seed = args.seed.or(sim.seed);
            if args.no_bridge {
                sim.bridge_correction = Some(false);
            }
            if args.no_antithetic {
                sim.antithetic = Some(false);
            }
            let source = match (&args.solution, &args.policy) {
                (Some(path), None) => PolicySource::SolutionFile(path.clone()),
                (None, Some(text)) => {
                    PolicySource::Explicit(parse_floats(text, "--policy")?)
                }
                (Some(_), Some(_)) => {
                    return Err(Error::Config(
                        "--solution and --policy are mutually exclusive".into(),
                    ))
                }
                (None, None) => {
                    return Err(Error::Config(
                        "simulate needs --solution <file> or --policy <values>".into(),
                    ))
                }
            };
            let x0 = args
                .x0
                .ok_or_else(|| Error::Config("simulate needs --x0".into()))?;
            let pool = thread_pool(resolved.run.simulation.threads)?;
            pool.install(|| commands::simulate_cmd(&resolved, source, x0))
        }
        Command::Sweep(args) => {
            let resolved = args.model.resolve()?;
            let values = parse_floats(&args.values, "--values")?;
            if values.is_empty() {
                return Err(Error::Config("--values is empty".into()));
            }
            commands::sweep_cmd(&resolved, &args.sweep_param, &values)
        }
        Command::PaperTable(args) => {
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir)
                    .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
            }
            let pool = thread_pool(None)?;
            pool.install(|| commands::paper_table_cmd(args.out.as_deref()))
        }
    }
}

fn apply_curve_flags(resolved: &mut Resolved, args: &SolveArgs) -> Result<(), Error> {
    if let Some(range) = &args.curve_range {
        resolved.run.solver.curve_range = Some(parse_pair(range, "--curve-range")?);
    }
    if args.curve_samples.is_some() {
        resolved.run.solver.curve_samples = args.curve_samples;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) | Error::Domain(_) => EXIT_CONFIG,
                Error::Simulation(_) => EXIT_SIMULATION,
                _ => EXIT_SOLVER,
            };
            ExitCode::from(code)
        }
    }
}
