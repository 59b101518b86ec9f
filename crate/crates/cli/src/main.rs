use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use minentlab::discretize::Metric;
use minentlab::MetricSpace;
use minentlab_cli::config::{
    check, parse_config, validate_config, CommandKind, ExactConfig, ExperimentConfig, Format, OutputConfig,
    SpaceConfig, VerifyTarget,
};
use minentlab_cli::export::write_reports;
use minentlab_cli::run::{run, Output};
use minentlab_cli::spec::StateSpec;
use minentlab_cli::CliError;

#[derive(Parser)]
#[command(name = "minentlab", version, about = "Min-entropy, singlet fractions and learning bounds on finite instances")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Pass tolerance for reports, or the solver tolerance for `minent`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    tol: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SpaceArgs {
    /// One-dimensional grid `lo:hi:step`.
    #[arg(long)]
    space: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy ε-packing/net and its covering partition.
    Discretize(SpaceArgs),
    /// Conditional min-entropy of a bipartite state.
    Minent {
        #[arg(long)]
        state: Option<String>,
    },
    /// Optimal singlet fraction with the recovered decoder.
    SingletFraction {
        #[arg(long)]
        state: Option<String>,
    },
    /// Check one family of bounds.
    Verify {
        #[arg(value_enum)]
        target: Option<VerifyTarget>,
        #[arg(long)]
        suite: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        partition_size: Option<usize>,
        /// identity, dephasing, depolarizing:<λ> or random:<kraus>
        #[arg(long)]
        channel: Option<String>,
        #[arg(long)]
        state: Option<String>,
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Monte Carlo risk of an estimator on the configured task.
    Simulate {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        batches: Option<usize>,
        /// map or constant:<x1,…>
        #[arg(long)]
        estimator: Option<String>,
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Concept learning from labelled examples.
    ExactLearning {
        #[arg(long)]
        bits: Option<usize>,
        /// Comma-separated truth tables, e.g. 0001,0011
        #[arg(long)]
        concepts: Option<String>,
        #[arg(long)]
        queries: Option<usize>,
        /// Comma-separated input distribution
        #[arg(long)]
        px: Option<String>,
        #[arg(long)]
        coherent: bool,
    },
    /// Report schema problems in a configuration file.
    ValidateConfig { path: PathBuf },
}

impl Command {
    fn kind(&self) -> Option<CommandKind> {
        Some(match self {
            Command::Discretize(_) => CommandKind::Discretize,
            Command::Minent { .. } => CommandKind::Minent,
            Command::SingletFraction { .. } => CommandKind::SingletFraction,
            Command::Verify { .. } => CommandKind::Verify,
            Command::Simulate { .. } => CommandKind::Simulate,
            Command::ExactLearning { .. } => CommandKind::ExactLearning,
            Command::ValidateConfig { .. } => return None,
        })
    }
}

fn parse_grid(s: &str) -> Result<SpaceConfig, CliError> {
    let parts: Vec<f64> = s
        .split(':')
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--space expects lo:hi:step, got \"{s}\"")))?;
    let [lo, hi, step] = parts[..] else {
        return Err(CliError::Usage(format!("--space expects lo:hi:step, got \"{s}\"")));
    };
    let grid = MetricSpace::grid_1d(lo, hi, step)?;
    Ok(SpaceConfig {
        bounds: Some(vec![(lo, hi)]),
        counts: None,
        points: Some(grid.points().to_vec()),
        metric: Metric::AbsoluteDifference,
    })
}

fn apply_space(cfg: &mut ExperimentConfig, args: SpaceArgs) -> Result<(), CliError> {
    if let Some(s) = args.space {
        cfg.space = Some(parse_grid(&s)?);
    }
    cfg.epsilon = args.epsilon.or(cfg.epsilon);
    Ok(())
}

fn parse_list(s: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|x| x.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("{flag} expects comma-separated numbers")))
}

/// Configuration file (if any) with command-line flags layered on top.
fn resolve(common: &Common, command: Command, kind: CommandKind) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let cfg = parse_config(&text).map_err(CliError::Config)?;
            if cfg.command != kind {
                return Err(CliError::Usage(format!(
                    "configuration is for {:?}, not {kind:?}",
                    cfg.command
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(kind),
    };
    cfg.seed = common.seed.or(cfg.seed);
    cfg.tol = common.tol.or(cfg.tol);
    match command {
        Command::Discretize(space) => apply_space(&mut cfg, space)?,
        Command::Minent { state } | Command::SingletFraction { state } => {
            cfg.state = state.map(StateSpec::Named).or(cfg.state);
        }
        Command::Verify { target, suite, n, partition_size, channel, state, space } => {
            cfg.target = target.or(cfg.target);
            cfg.suite = suite.or(cfg.suite);
            cfg.n = n.or(cfg.n);
            cfg.partition_size = partition_size.or(cfg.partition_size);
            cfg.channel = channel.or(cfg.channel);
            cfg.state = state.map(StateSpec::Named).or(cfg.state);
            apply_space(&mut cfg, space)?;
        }
        Command::Simulate { samples, batches, estimator, space } => {
            cfg.samples = samples.or(cfg.samples);
            cfg.batches = batches.or(cfg.batches);
            cfg.estimator = estimator.or(cfg.estimator);
            apply_space(&mut cfg, space)?;
        }
        Command::ExactLearning { bits, concepts, queries, px, coherent } => {
            let mut exact = cfg.exact.take().unwrap_or_default();
            exact.bits = bits.unwrap_or(exact.bits);
            if let Some(c) = concepts {
                exact.concepts = c.split(',').map(|s| s.trim().to_string()).collect();
            }
            exact.queries = queries.unwrap_or(exact.queries);
            if let Some(p) = px {
                exact.p_x = Some(parse_list(&p, "--px")?);
            }
            exact.coherent |= coherent;
            cfg.exact = (exact != ExactConfig::default()).then_some(exact);
        }
        Command::ValidateConfig { .. } => unreachable!("handled before resolution"),
    }
    if common.out.is_some() || common.format.is_some() {
        let mut output = cfg.output.take().unwrap_or_default();
        output.path = common.out.as_ref().map(|p| p.display().to_string()).or(output.path);
        output.format = common.format.or(output.format);
        cfg.output = Some(output);
    }
    let diagnostics = check(&cfg);
    if !diagnostics.is_empty() {
        return Err(CliError::Config(diagnostics));
    }
    Ok(cfg)
}

fn sink(path: Option<&str>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("MINENTLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("MINENTLAB_THREADS must be a positive integer, got \"{value}\"")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    if let Command::ValidateConfig { path } = &cli.command {
        let diagnostics = validate_config(path)?;
        for d in &diagnostics {
            println!("{d}");
        }
        return if diagnostics.is_empty() {
            Ok(true)
        } else {
            Err(CliError::Usage(format!("{} problem(s) in {}", diagnostics.len(), path.display())))
        };
    }
    let kind = cli.command.kind().expect("validate-config handled above");
    let cfg = resolve(&cli.common, cli.command, kind)?;
    let output = run(&cfg)?;
    let OutputConfig { path, format } = cfg.output.clone().unwrap_or_default();
    let mut out = sink(path.as_deref())?;
    match &output {
        Output::Reports(reports) => {
            write_reports(reports, format.unwrap_or(Format::Jsonl), &mut out)?;
            let failed = reports.iter().filter(|r| !r.pass).count();
            eprintln!("{} report(s), {failed} failed", reports.len());
        }
        Output::Document(doc, _) => {
            serde_json::to_writer_pretty(&mut out, doc)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(output.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
