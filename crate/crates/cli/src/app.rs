//! Command-line front end. Flag names follow the library's field names.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use carrier_sched::metrics::run_benchmark;
use carrier_sched::{
    emit_corpus, emit_schedule, generate_corpus, parse_corpus, parse_instance, parse_schedule,
    schedule_with_gnn, solve_heuristic, solve_optimal, validate_schedule, BenchError, ExactScheduler,
    GeneratorConfig, GnnConfig, GnnModel, GnnScheduler, GraphModel, HeuristicScheduler,
    InferencePolicy, PeMode, RadioParams, RepairPolicy, Scheduler, SolverBudget,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::service::{router, ServiceState};

pub const WEIGHTS_ENV: &str = "CARRIER_SCHED_WEIGHTS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "carrier-sched", version, about = "Carrier scheduling for backscatter IoT networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a JSONL corpus of random instances
    Gen(GenArgs),
    /// Schedule one instance and print the schedule JSON
    Solve(SolveArgs),
    /// Check a schedule against an instance
    Validate(ValidateArgs),
    /// Run schedulers over a corpus and report metrics
    Bench(BenchArgs),
    /// Serve schedule requests over HTTP
    Serve(ServeArgs),
    /// Write a randomly initialized weight file
    InitWeights(InitWeightsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphModelArg {
    RandomGeometric,
    ErdosRenyi,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], default_values_t = [2, 10])]
    pub node_range: Vec<usize>,
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"], default_values_t = [1, 14])]
    pub tag_range: Vec<usize>,
    #[arg(long, value_enum, default_value = "random-geometric")]
    pub graph_model: GraphModelArg,
    /// Connection radius for random geometric graphs
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    /// Edge probability for Erdős–Rényi graphs
    #[arg(long, default_value_t = 0.5)]
    pub edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub max_retries: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Output file; stdout if omitted
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchedulerArg {
    Gnn,
    Heuristic,
    Optimal,
}

impl SchedulerArg {
    fn name(self) -> &'static str {
        match self {
            SchedulerArg::Gnn => "gnn",
            SchedulerArg::Heuristic => "heuristic",
            SchedulerArg::Optimal => "optimal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    StrictFail,
    GreedyRepair,
    HeuristicFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PeModeArg {
    None,
    Degree,
    LaplacianEigenvalues,
}

#[derive(Debug, Args)]
pub struct PolicyArgs {
    /// Constraint resolution for GNN slots
    #[arg(long, value_enum, default_value = "greedy-repair")]
    pub policy: PolicyArg,
    /// GNN slot budget; defaults to T + 2
    #[arg(long)]
    pub max_slots: Option<usize>,
}

impl PolicyArgs {
    fn policy(&self) -> InferencePolicy {
        let repair = match self.policy {
            PolicyArg::StrictFail => RepairPolicy::StrictFail,
            PolicyArg::GreedyRepair => RepairPolicy::GreedyRepair,
            PolicyArg::HeuristicFallback => RepairPolicy::HeuristicFallback,
        };
        InferencePolicy {
            repair,
            max_slots: self.max_slots,
        }
    }
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Exact solver refuses larger instances
    #[arg(long, default_value_t = 10)]
    pub max_nodes: usize,
    /// Exact solver time limit in seconds; 0 disables it
    #[arg(long, default_value_t = 60.0)]
    pub time_limit: f64,
    #[arg(long)]
    pub node_expansion_limit: Option<u64>,
    /// Disable branch-and-bound pruning (same result, slower)
    #[arg(long)]
    pub no_pruning: bool,
}

impl BudgetArgs {
    fn budget(&self) -> Result<SolverBudget, CliError> {
        if !(self.time_limit >= 0.0 && self.time_limit.is_finite()) {
            return Err(CliError::Usage("--time-limit must be a non-negative number".into()));
        }
        Ok(SolverBudget {
            max_nodes: self.max_nodes,
            time_limit: (self.time_limit > 0.0).then(|| Duration::from_secs_f64(self.time_limit)),
            node_expansion_limit: self.node_expansion_limit,
            pruning: !self.no_pruning,
        })
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance JSON file, `-` for stdin
    #[arg(long, default_value = "-")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "heuristic")]
    pub scheduler: SchedulerArg,
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Weight file for the GNN scheduler
    #[arg(long, env = WEIGHTS_ENV)]
    pub weights: Option<PathBuf>,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub schedule: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RadioArgs {
    #[arg(long, default_value_t = RadioParams::default().p_tx)]
    pub p_tx: f64,
    #[arg(long, default_value_t = RadioParams::default().p_rx)]
    pub p_rx: f64,
    #[arg(long, default_value_t = RadioParams::default().t_tx)]
    pub t_tx: f64,
    #[arg(long, default_value_t = RadioParams::default().t_rx)]
    pub t_rx: f64,
    #[arg(long, default_value_t = RadioParams::default().t_req)]
    pub t_req: f64,
    #[arg(long, default_value_t = RadioParams::default().t_cg)]
    pub t_cg: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// JSONL corpus, one instance per line
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "heuristic,optimal")]
    pub schedulers: Vec<SchedulerArg>,
    /// Scheduler the savings are measured against
    #[arg(long, value_enum, default_value = "heuristic")]
    pub reference: SchedulerArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, env = WEIGHTS_ENV)]
    pub weights: Option<PathBuf>,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(flatten)]
    pub radio: RadioArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Without weights, `scheduler=gnn` requests get 503
    #[arg(long, env = WEIGHTS_ENV)]
    pub weights: Option<PathBuf>,
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct InitWeightsArgs {
    #[arg(long, default_value_t = GnnConfig::default().num_blocks)]
    pub num_blocks: usize,
    #[arg(long, default_value_t = GnnConfig::default().num_heads)]
    pub num_heads: usize,
    #[arg(long, default_value_t = GnnConfig::default().hidden_dim)]
    pub hidden_dim: usize,
    #[arg(long, value_enum, default_value = "degree")]
    pub pe_mode: PeModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAILURE,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Failure(m) | CliError::Internal(m) => m,
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli.command, stdin, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}

fn read_input(path: &Path, stdin: &mut dyn Read) -> Result<String, CliError> {
    let mut text = String::new();
    if path == Path::new("-") {
        stdin
            .read_to_string(&mut text)
            .map_err(|e| CliError::Usage(format!("reading stdin: {e}")))?;
    } else {
        text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))?;
    }
    Ok(text)
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Internal(format!("writing {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(format!("writing stdout: {e}"))),
    }
}

fn load_model(path: Option<&Path>) -> Result<GnnModel, CliError> {
    let path = path.ok_or_else(|| {
        CliError::Usage(format!("the gnn scheduler needs --weights or {WEIGHTS_ENV}"))
    })?;
    GnnModel::load_weights_file(path).map_err(|e| CliError::Usage(e.to_string()))
}

fn with_newline(mut s: String) -> String {
    s.push('\n');
    s
}

fn execute(
    command: Command,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    match command {
        Command::Gen(args) => {
            let graph_model = match args.graph_model {
                GraphModelArg::RandomGeometric => GraphModel::RandomGeometric { radius: args.radius },
                GraphModelArg::ErdosRenyi => GraphModel::ErdosRenyi {
                    edge_prob: args.edge_prob,
                },
            };
            let config = GeneratorConfig {
                node_range: (args.node_range[0], args.node_range[1]),
                tag_range: (args.tag_range[0], args.tag_range[1]),
                graph_model,
                seed: args.seed,
                max_retries: args.max_retries,
            };
            config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            let corpus = generate_corpus(&config, args.count).map_err(|e| CliError::Failure(e.to_string()))?;
            write_output(args.output.as_deref(), &emit_corpus(&corpus), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Solve(args) => {
            let text = read_input(&args.input, stdin)?;
            let instance = parse_instance(&text).map_err(|e| CliError::Usage(e.to_string()))?;
            let budget = args.budget.budget()?;
            let result = match args.scheduler {
                SchedulerArg::Heuristic => solve_heuristic(&instance),
                SchedulerArg::Optimal => solve_optimal(&instance, &budget),
                SchedulerArg::Gnn => {
                    let model = load_model(args.weights.as_deref())?;
                    schedule_with_gnn(&model, &instance, &args.policy.policy())
                }
            };
            let schedule = result.map_err(|e| CliError::Failure(format!("{}: {e}", e.kind())))?;
            let json = with_newline(emit_schedule(&instance, &schedule));
            write_output(args.output.as_deref(), &json, stdout)?;
            Ok(EXIT_OK)
        }
        Command::Validate(args) => {
            let instance = parse_instance(&read_input(&args.instance, stdin)?)
                .map_err(|e| CliError::Usage(format!("instance: {e}")))?;
            let schedule = parse_schedule(&instance, &read_input(&args.schedule, stdin)?)
                .map_err(|e| CliError::Usage(format!("schedule: {e}")))?;
            let report = validate_schedule(&instance, &schedule).map_err(|e| CliError::Usage(e.to_string()))?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
            write_output(None, &with_newline(json), stdout)?;
            Ok(if report.valid { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Bench(args) => {
            let corpus = parse_corpus(&read_input(&args.corpus, stdin)?)
                .map_err(|(line, e)| CliError::Usage(format!("corpus line {line}: {e}")))?;
            let budget = args.budget.budget()?;
            let mut owned: Vec<Box<dyn Scheduler>> = Vec::new();
            for s in &args.schedulers {
                owned.push(match s {
                    SchedulerArg::Heuristic => Box::new(HeuristicScheduler),
                    SchedulerArg::Optimal => Box::new(ExactScheduler { budget: budget.clone() }),
                    SchedulerArg::Gnn => Box::new(GnnScheduler {
                        model: Arc::new(load_model(args.weights.as_deref())?),
                        policy: args.policy.policy(),
                    }),
                });
            }
            let schedulers: Vec<&dyn Scheduler> = owned.iter().map(|b| b.as_ref()).collect();
            let radio = RadioParams {
                p_tx: args.radio.p_tx,
                p_rx: args.radio.p_rx,
                t_tx: args.radio.t_tx,
                t_rx: args.radio.t_rx,
                t_req: args.radio.t_req,
                t_cg: args.radio.t_cg,
            };
            let report = run_benchmark(&corpus, &schedulers, args.reference.name(), &radio).map_err(|e| match e {
                BenchError::InvalidSchedule { .. } => CliError::Internal(e.to_string()),
                _ => CliError::Usage(e.to_string()),
            })?;
            let text = match args.format {
                FormatArg::Csv => report.to_csv(),
                FormatArg::Json => with_newline(
                    serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?,
                ),
            };
            write_output(args.output.as_deref(), &text, stdout)?;
            for s in &report.schedulers {
                let _ = writeln!(
                    stderr,
                    "{}: {}/{} complete ({:.1}%)",
                    s.scheduler, s.successes, s.runs, s.completion_pct
                );
            }
            Ok(EXIT_OK)
        }
        Command::Serve(args) => {
            let model = match args.weights.as_deref() {
                Some(path) => Some(Arc::new(
                    GnnModel::load_weights_file(path).map_err(|e| CliError::Internal(e.to_string()))?,
                )),
                None => {
                    let _ = writeln!(stderr, "no weights given, gnn requests will be refused");
                    None
                }
            };
            let state = Arc::new(ServiceState {
                model,
                policy: args.policy.policy(),
                budget: args.budget.budget()?,
            });
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind(args.bind)
                    .await
                    .map_err(|e| CliError::Internal(format!("binding {}: {e}", args.bind)))?;
                let _ = writeln!(stderr, "listening on {}", args.bind);
                axum::serve(listener, router(state))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await
                    .map_err(|e| CliError::Internal(e.to_string()))
            })?;
            Ok(EXIT_OK)
        }
        Command::InitWeights(args) => {
            let pe_mode = match args.pe_mode {
                PeModeArg::None => PeMode::None,
                PeModeArg::Degree => PeMode::Degree,
                PeModeArg::LaplacianEigenvalues => PeMode::LaplacianEigenvalues,
            };
            let config = GnnConfig {
                num_blocks: args.num_blocks,
                num_heads: args.num_heads,
                hidden_dim: args.hidden_dim,
                pe_mode,
            };
            let model = GnnModel::random(config, args.seed).map_err(|e| CliError::Usage(e.to_string()))?;
            std::fs::write(&args.output, model.to_weight_bytes())
                .map_err(|e| CliError::Internal(format!("writing {}: {e}", args.output.display())))?;
            let _ = writeln!(stderr, "{} parameters written", model.parameter_count());
            Ok(EXIT_OK)
        }
    }
}
