use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nlq_core::extension::{has_symmetric_extension, ExtensionMode, ExtensionVerdict, QuantifyOptions, SettingsCount};
use nlq_core::sdpsolve::SdpOptions;

use nlq_cli::cache::{quantify_cached, ResultsCache};
use nlq_cli::report::{ExtensionSummary, MetricsReport};
use nlq_cli::statefile::parse_state_spec;
use nlq_cli::sweep::{run_sweep, CustomGrid, Experiment, FamilyKind, SweepSpec, DEFAULT_POINTS};
use nlq_cli::{CliError, CliResult, EXIT_OK, EXIT_SOLVER};

#[derive(Parser)]
#[command(
    name = "nlq",
    version,
    about = "Quantify nonlocality of bipartite states via symmetric extensions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimal white-noise fraction λ* for a local model with MA,MB settings.
    Quantify {
        #[command(flatten)]
        state: StateArg,
        #[command(flatten)]
        solve: SolveArgs,
        /// Bisect with the alternating-projection oracle.
        #[arg(long)]
        bisect: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Decide whether the state itself has a symmetric extension.
    CheckExtension {
        #[command(flatten)]
        state: StateArg,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Bell-violation and entanglement measures.
    Metrics {
        #[command(flatten)]
        state: StateArg,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Figure-data sweeps written as CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct StateArg {
    /// `preset:bell`, `preset:pure-theta:<θ>`, `preset:mems:<γ>`,
    /// `preset:ghz3:<ξ>:<β>`, `preset:noise:<d>`, or a state file path.
    #[arg(long)]
    state: String,
}

#[derive(Args)]
struct SolveArgs {
    /// Measurement settings as MA,MB.
    #[arg(long, default_value = "2,2")]
    settings: String,
    /// Extension constraint: positive or ppt-quasi.
    #[arg(long, default_value = "positive")]
    mode: String,
    /// Gap and feasibility tolerance of the interior-point solver.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    experiment: ExperimentArg,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    points: usize,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    solve: SolveArgs,
    /// Report the CHSH violation fraction instead of CHSH/2√2.
    #[arg(long)]
    chsh_violation: bool,
    /// Family for a custom sweep: pure-theta, mems or ghz3.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    start: Option<f64>,
    #[arg(long)]
    end: Option<f64>,
    /// Fixed ξ for a custom ghz3 sweep over β.
    #[arg(long)]
    xi: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Fig2a,
    Fig2b,
    Fig3,
    Custom,
}

impl SolveArgs {
    fn settings(&self) -> CliResult<SettingsCount> {
        Ok(self.settings.parse()?)
    }

    fn mode(&self) -> CliResult<ExtensionMode> {
        Ok(self.mode.parse()?)
    }

    fn solver(&self) -> CliResult<SdpOptions> {
        let mut opts = SdpOptions::default();
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(CliError::Input(format!("--tol {t} must lie in (0, 1)")));
            }
            opts.gap_tol = t;
            opts.feasibility_tol = t;
        }
        Ok(opts)
    }

    fn quantify_options(&self, bisect: bool) -> CliResult<QuantifyOptions> {
        Ok(QuantifyOptions {
            mode: self.mode()?,
            solver: self.solver()?,
            bisect,
            ..QuantifyOptions::default()
        })
    }
}

fn cache() -> CliResult<Option<Mutex<ResultsCache>>> {
    Ok(ResultsCache::from_env()?.map(Mutex::new))
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Quantify {
            state,
            solve,
            bisect,
            format,
        } => {
            let rho = parse_state_spec(&state.state)?;
            let settings = solve.settings()?;
            let opts = solve.quantify_options(bisect)?;
            let cache = cache()?;
            let start = Instant::now();
            let (summary, hit) = quantify_cached(&rho, settings, &opts, cache.as_ref())?;
            match format {
                Format::Text => print!("{}", summary.to_text()),
                Format::Json => println!("{}", summary.to_json()),
            }
            eprintln!(
                "{} in {:.3} s",
                if hit { "cache hit" } else { "solved" },
                start.elapsed().as_secs_f64()
            );
            Ok(if summary.is_optimal() { EXIT_OK } else { EXIT_SOLVER })
        }
        Command::CheckExtension { state, solve, format } => {
            let rho = parse_state_spec(&state.state)?;
            let settings = solve.settings()?;
            let mode = solve.mode()?;
            let decision = has_symmetric_extension(&rho, settings, mode, &solve.solver()?)?;
            let summary = ExtensionSummary::new(&settings.to_string(), mode.as_str(), &decision);
            match format {
                Format::Text => print!("{}", summary.to_text()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&summary).expect("serialises")),
            }
            Ok(match decision.verdict {
                ExtensionVerdict::Indeterminate => EXIT_SOLVER,
                _ => EXIT_OK,
            })
        }
        Command::Metrics { state, format } => {
            let rho = parse_state_spec(&state.state)?;
            let report = MetricsReport::compute(&rho)?;
            match format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => println!("{}", report.to_json()),
            }
            Ok(EXIT_OK)
        }
        Command::Sweep(args) => sweep(args),
    }
}

fn sweep(args: SweepArgs) -> CliResult<i32> {
    let experiment = match args.experiment {
        ExperimentArg::Fig2a => Experiment::Fig2a,
        ExperimentArg::Fig2b => Experiment::Fig2b,
        ExperimentArg::Fig3 => Experiment::Fig3,
        ExperimentArg::Custom => {
            let family: FamilyKind = args
                .family
                .as_deref()
                .ok_or_else(|| CliError::Input("a custom sweep needs --family".into()))?
                .parse()?;
            let need =
                |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::Input(format!("a custom sweep needs --{name}")));
            Experiment::Custom(CustomGrid {
                family,
                start: need(args.start, "start")?,
                end: need(args.end, "end")?,
                xi: args.xi,
            })
        }
    };
    let spec = SweepSpec {
        experiment,
        points: args.points,
        settings: args.solve.settings()?,
        options: args.solve.quantify_options(false)?,
        threads: args.threads,
        chsh_violation: args.chsh_violation,
    };
    let cache = cache()?;
    let start = Instant::now();
    let report = run_sweep(&spec, cache.as_ref())?;
    for path in report.write(&args.out)? {
        println!("{}", path.display());
    }
    eprintln!(
        "{}: {}/{} rows optimal in {:.2} s",
        spec.experiment.name(),
        report.optimal_rows,
        report.rows,
        start.elapsed().as_secs_f64()
    );
    Ok(if report.passed() { EXIT_OK } else { EXIT_SOLVER })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
