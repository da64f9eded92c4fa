//! `portsched` — schedule construction, exact solving, baselines, sampling
//! distributions, and cross-validation over the documented file formats.
//!
//! Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 capacity
//! error (exact instance too large). Diagnostics go to standard error only;
//! the primary output goes to standard output or, with `--output`, to a file
//! written atomically (temp file + rename).

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use portsched::baselines::{
    bucket_schedule, curve_from_journal, curve_from_schedule, psetheo, vbss_curve,
    write_curve_csv, PSetheoParams,
};
use portsched::dist::{
    conditional_distribution, load_metadata, luby_limits, option_value_distribution,
    update_sampling_frequencies, write_conditional_csv, write_distribution_csv, DistError,
    LubyConfig, StrategyMeta,
};
use portsched::exact::{build_mip, export_lp, min_time_full_cover, solve_exact, ExactError, ExactLimits};
use portsched::greedy::{
    construct_greedy, construct_probabilistic, order_slices, pad_slices, replay_journal, Budget,
    Constructed, ExtensionMode, GreedyError, Journal, RegularizationParams,
};
use portsched::harness::{cross_validate, ConstructorConfig, HarnessError};
use portsched::model::{
    simulate_schedule, EvaluationMatrix, Mi, ModelError, PreSchedule, Schedule,
};

#[derive(Parser)]
#[command(
    name = "portsched",
    version,
    about = "Build, solve, and evaluate time-sliced strategy schedules from evaluation data"
)]
struct Cli {
    /// Write the primary output to FILE (atomically) instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Greedily construct a schedule from an evaluation matrix.
    Construct(ConstructArgs),
    /// Rebuild the schedule prefix of a journal that fits a budget.
    Replay {
        /// Construction journal JSON.
        #[arg(long, value_name = "FILE")]
        journal: PathBuf,
        /// Total budget T in Mi.
        #[arg(long)]
        budget: Mi,
    },
    /// Construct a schedule from nondeterministic success probabilities.
    ProbConstruct {
        /// Evaluation matrix CSV.
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Total budget T in Mi.
        #[arg(long)]
        budget: Mi,
        /// Stop once the expected gain of the best candidate drops below
        /// this value.
        #[arg(long, default_value_t = 1e-9)]
        epsilon: f64,
    },
    /// Export the exact MIP model as an LP file, or solve it directly.
    #[command(group = ArgGroup::new("action").required(true))]
    Exact {
        /// Evaluation matrix CSV.
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Total budget T in Mi.
        #[arg(long)]
        budget: Mi,
        /// Write the model in CPLEX LP text format to this file.
        #[arg(long, value_name = "FILE", group = "action")]
        export_lp: Option<PathBuf>,
        /// Solve by branch-and-bound and print the optimum as JSON.
        #[arg(long, group = "action")]
        solve: bool,
        /// Refuse searches whose candidate-combination count exceeds this.
        #[arg(long, default_value_t = 10_000_000)]
        max_combinations: u64,
    },
    /// Find the shortest schedule covering every solvable problem.
    MinCover {
        /// Evaluation matrix CSV.
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Refuse searches whose candidate-combination count exceeds this.
        #[arg(long, default_value_t = 10_000_000)]
        max_combinations: u64,
    },
    /// Report the problems a schedule solves on a matrix.
    Simulate {
        /// Evaluation matrix CSV.
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Schedule JSON.
        #[arg(long, value_name = "FILE")]
        schedule: PathBuf,
    },
    /// Emit a cumulative time,solved curve as CSV.
    #[command(group = ArgGroup::new("source").required(true))]
    Curve {
        /// Evaluation matrix CSV.
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Curve of a construction journal.
        #[arg(long, value_name = "FILE", group = "source")]
        journal: Option<PathBuf>,
        /// Curve of an ordered schedule, by prefix simulation.
        #[arg(long, value_name = "FILE", group = "source")]
        schedule: Option<PathBuf>,
        /// Curve of the virtual best strategy selector.
        #[arg(long, group = "source")]
        vbss: bool,
    },
    /// Construct a schedule with a reference baseline.
    Baseline {
        /// Evaluation matrix CSV.
        #[arg(long, value_name = "FILE", global = true)]
        matrix: Option<PathBuf>,
        #[command(subcommand)]
        which: BaselineCommand,
    },
    /// Derive an option-value sampling distribution from unique solutions.
    Dist {
        /// Evaluation matrix CSV.
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Strategy metadata JSON.
        #[arg(long, value_name = "FILE")]
        meta: PathBuf,
        /// Option to analyze.
        #[arg(long, value_name = "NAME")]
        option: String,
        /// Condition the analysis on this option's value.
        #[arg(long, value_name = "NAME")]
        given: Option<String>,
    },
    /// Count option-value frequencies among contributing strategies.
    Freq {
        /// Strategy metadata JSON.
        #[arg(long, value_name = "FILE")]
        meta: PathBuf,
        /// Option to count.
        #[arg(long, value_name = "NAME")]
        option: String,
    },
    /// Print a capped Luby limit sequence, one value per line.
    Luby {
        /// Scale factor applied to the Luby sequence.
        #[arg(long, default_value_t = 2000)]
        base: Mi,
        /// Largest limit; must be base times a power of two.
        #[arg(long, default_value_t = 256_000)]
        cap: Mi,
        /// How many values to print.
        #[arg(long, default_value_t = 64)]
        count: usize,
    },
    /// Cross-validate a constructor configuration with witness hygiene.
    Cv(CvArgs),
}

#[derive(Args)]
#[command(group = ArgGroup::new("limit").required(true))]
struct ConstructArgs {
    /// Evaluation matrix CSV.
    #[arg(long, value_name = "FILE")]
    matrix: PathBuf,
    /// Total budget T in Mi.
    #[arg(long, group = "limit")]
    budget: Option<Mi>,
    /// Construct without a budget bound.
    #[arg(long, group = "limit")]
    unbounded: bool,
    /// Temporal reward adjustment α (exponent on the reward).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Diminishing reward decay β for already-covered problems.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Multiplicative slack w on emitted limits.
    #[arg(long, default_value_t = 1.0)]
    slack_mul: f64,
    /// Additive slack b in Mi on emitted limits.
    #[arg(long, default_value_t = 0)]
    slack_add: Mi,
    /// Which slices may grow after being emitted.
    #[arg(long, value_enum, default_value_t = ExtensionArg::Full)]
    extension: ExtensionArg,
    /// Order slices by decreasing coverage ratio instead of by strategy id.
    #[arg(long)]
    order: bool,
    /// Add this many Mi to every emitted slice.
    #[arg(long, default_value_t = 0)]
    pad: Mi,
    /// Also write the construction journal to this file.
    #[arg(long, value_name = "FILE")]
    journal: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BaselineCommand {
    /// Step-growth construction in the style of p-SETHEO.
    Psetheo {
        /// Initial extension step ΔT in Mi.
        #[arg(long, default_value_t = 1)]
        dt: Mi,
        /// Step-growth quantization l (ΔT grows by ⌈T/l⌉).
        #[arg(long, default_value_t = 8)]
        l: Mi,
        /// Total budget T in Mi.
        #[arg(long)]
        budget: Mi,
    },
    /// Equally sized bucket schedule.
    Buckets {
        /// Per-slice limit in Mi.
        #[arg(long)]
        bucket: Mi,
        /// Total budget T in Mi.
        #[arg(long)]
        budget: Mi,
    },
}

#[derive(Args)]
struct CvArgs {
    /// Evaluation matrix CSV.
    #[arg(long, value_name = "FILE")]
    matrix: PathBuf,
    /// Strategy metadata JSON (witnesses drive hygiene).
    #[arg(long, value_name = "FILE")]
    meta: PathBuf,
    /// Number of folds per round.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Number of independent rounds.
    #[arg(long, default_value_t = 1)]
    rounds: usize,
    /// Seed for the split generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Total budget T in Mi per fold.
    #[arg(long)]
    budget: Mi,
    /// Constructor to evaluate.
    #[arg(long, value_enum, default_value_t = ConstructorArg::Greedy)]
    constructor: ConstructorArg,
    /// Temporal reward adjustment α (greedy, probabilistic).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Diminishing reward decay β (greedy, probabilistic).
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Multiplicative slack w (greedy, probabilistic).
    #[arg(long, default_value_t = 1.0)]
    slack_mul: f64,
    /// Additive slack b in Mi (greedy, probabilistic).
    #[arg(long, default_value_t = 0)]
    slack_add: Mi,
    /// Extension mode (greedy).
    #[arg(long, value_enum, default_value_t = ExtensionArg::Full)]
    extension: ExtensionArg,
    /// Termination threshold (probabilistic).
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    /// Candidate-combination cap (exact).
    #[arg(long, default_value_t = 10_000_000)]
    max_combinations: u64,
    /// Initial step ΔT (psetheo).
    #[arg(long, default_value_t = 1)]
    dt: Mi,
    /// Step-growth quantization (psetheo).
    #[arg(long, default_value_t = 8)]
    l: Mi,
    /// Per-slice limit (buckets); required with that constructor.
    #[arg(long)]
    bucket: Option<Mi>,
    /// Admit strategies that have no witness problem into training sets.
    #[arg(long)]
    include_unwitnessed: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ExtensionArg {
    Full,
    Conservative,
    None,
}

impl From<ExtensionArg> for ExtensionMode {
    fn from(arg: ExtensionArg) -> ExtensionMode {
        match arg {
            ExtensionArg::Full => ExtensionMode::Full,
            ExtensionArg::Conservative => ExtensionMode::Conservative,
            ExtensionArg::None => ExtensionMode::None,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ConstructorArg {
    Greedy,
    Probabilistic,
    Exact,
    Psetheo,
    Buckets,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    fn input(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    fn capacity(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<GreedyError> for CliError {
    fn from(e: GreedyError) -> Self {
        match e {
            GreedyError::InvalidParams(_) | GreedyError::UnboundedBudget => {
                CliError::usage(e.to_string())
            }
            GreedyError::Model(m) => m.into(),
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::TooLarge { .. } | ExactError::Timeout(_) => {
                CliError::capacity(e.to_string())
            }
            ExactError::NameCollision { .. } => CliError::input(e.to_string()),
        }
    }
}

impl From<DistError> for CliError {
    fn from(e: DistError) -> Self {
        match e {
            DistError::BadLubyCap { .. } => CliError::usage(e.to_string()),
            DistError::Model(m) => m.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::BadSplit { .. } => CliError::usage(e.to_string()),
            HarnessError::Model(m) => m.into(),
            HarnessError::Greedy(g) => g.into(),
            HarnessError::Exact(x) => x.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version print to stdout and succeed; real parse
            // errors go to stderr with the usage exit code
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code.into());
    }
}

fn open(path: &Path) -> Result<BufReader<fs::File>, CliError> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(text)
}

fn read_matrix(path: &Path) -> Result<EvaluationMatrix, CliError> {
    Ok(EvaluationMatrix::from_csv_reader(open(path)?)?)
}

fn read_meta(path: &Path) -> Result<Vec<StrategyMeta>, CliError> {
    Ok(load_metadata(open(path)?)?)
}

fn read_journal(path: &Path) -> Result<Journal, CliError> {
    Ok(Journal::from_json_str(&read_to_string(path)?)?)
}

fn read_schedule(path: &Path) -> Result<Schedule, CliError> {
    serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Writes `content` to `path` atomically: the data lands in a temporary
/// sibling first and is renamed into place, so readers never observe a
/// partial file.
fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let describe = |e: std::io::Error| CliError::input(format!("{}: {e}", path.display()));
    let name = path.file_name().ok_or_else(|| {
        CliError::usage(format!("{} is not a writable file path", path.display()))
    })?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, content).map_err(describe)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        describe(e)
    })
}

fn emit(output: Option<&Path>, content: &str) -> Result<(), CliError> {
    match output {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(path) => write_atomic(path, content),
    }
}

fn json_line<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::input(format!("cannot serialize output: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn lex_schedule(pre: &PreSchedule) -> Schedule {
    Schedule { slices: pre.to_slices_lex() }
}

#[derive(Serialize)]
struct SolutionReport<'a> {
    schedule: &'a PreSchedule,
    objective: usize,
}

#[derive(Serialize)]
struct CoverReport<'a> {
    schedule: &'a PreSchedule,
    total: Mi,
}

#[derive(Serialize)]
struct SimulationReport {
    count: usize,
    solved: Vec<portsched::model::ProblemId>,
}

#[derive(Serialize)]
struct FreqEntry {
    count: u64,
    frequency: f64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let output = cli.output.as_deref();
    match cli.command {
        Command::Construct(args) => {
            let matrix = read_matrix(&args.matrix)?;
            let params = RegularizationParams {
                slack_mul: args.slack_mul,
                slack_add: args.slack_add,
                alpha: args.alpha,
                beta: args.beta,
            };
            let budget = match (args.budget, args.unbounded) {
                (Some(t), false) => Budget::Bounded(t),
                (None, true) => Budget::Unbounded,
                _ => unreachable!("clap enforces the budget/unbounded group"),
            };
            let (built, journal) =
                construct_greedy(&matrix, budget, &params, args.extension.into())?;
            if let Some(journal_path) = &args.journal {
                write_atomic(journal_path, &(journal.to_json_string()? + "\n"))?;
            }
            let schedule = if args.order {
                order_slices(&built.to_pre_schedule(), &matrix)?
            } else {
                match built {
                    Constructed::Pre(pre) => lex_schedule(&pre),
                    Constructed::Sliced(s) => s,
                }
            };
            let schedule =
                if args.pad > 0 { pad_slices(&schedule, args.pad) } else { schedule };
            emit(output, &json_line(&schedule)?)
        }
        Command::Replay { journal, budget } => {
            let journal = read_journal(&journal)?;
            emit(output, &json_line(&lex_schedule(&replay_journal(&journal, budget)))?)
        }
        Command::ProbConstruct { matrix, budget, epsilon } => {
            let matrix = read_matrix(&matrix)?;
            let (schedule, _) = construct_probabilistic(
                &matrix,
                Budget::Bounded(budget),
                &RegularizationParams::default(),
                epsilon,
            )?;
            emit(output, &json_line(&schedule)?)
        }
        Command::Exact { matrix, budget, export_lp: lp_path, solve, max_combinations } => {
            let matrix = read_matrix(&matrix)?;
            if let Some(lp_path) = lp_path {
                let text = export_lp(&build_mip(&matrix, budget))?;
                return write_atomic(&lp_path, &text);
            }
            debug_assert!(solve);
            let limits = ExactLimits { max_combinations, ..Default::default() };
            let (pre, objective) = solve_exact(&matrix, budget, &limits)?;
            emit(output, &json_line(&SolutionReport { schedule: &pre, objective })?)
        }
        Command::MinCover { matrix, max_combinations } => {
            let matrix = read_matrix(&matrix)?;
            let limits = ExactLimits { max_combinations, ..Default::default() };
            let (pre, total) = min_time_full_cover(&matrix, &limits)?;
            emit(output, &json_line(&CoverReport { schedule: &pre, total })?)
        }
        Command::Simulate { matrix, schedule } => {
            let matrix = read_matrix(&matrix)?;
            let schedule = read_schedule(&schedule)?;
            let solved = simulate_schedule(&matrix, &schedule)?;
            let report = SimulationReport {
                count: solved.len(),
                solved: solved.into_iter().collect(),
            };
            emit(output, &json_line(&report)?)
        }
        Command::Curve { matrix, journal, schedule, vbss } => {
            let matrix = read_matrix(&matrix)?;
            let curve = if let Some(journal) = journal {
                curve_from_journal(&read_journal(&journal)?)
            } else if let Some(schedule) = schedule {
                curve_from_schedule(&read_schedule(&schedule)?, &matrix)?
            } else {
                debug_assert!(vbss);
                vbss_curve(&matrix)
            };
            let mut buf = Vec::new();
            write_curve_csv(&curve, &mut buf)?;
            emit(output, &String::from_utf8(buf).expect("curve CSV is UTF-8"))
        }
        Command::Baseline { matrix, which } => {
            let matrix_path = matrix
                .ok_or_else(|| CliError::usage("--matrix is required for baseline commands"))?;
            let matrix = read_matrix(&matrix_path)?;
            let schedule = match which {
                BaselineCommand::Psetheo { dt, l, budget } => {
                    if dt < 1 || l < 1 {
                        return Err(CliError::usage("--dt and --l must be at least 1"));
                    }
                    let params = PSetheoParams { delta_t: dt, l, budget };
                    lex_schedule(&psetheo(&matrix, &params))
                }
                BaselineCommand::Buckets { bucket, budget } => {
                    if bucket < 1 {
                        return Err(CliError::usage("--bucket must be at least 1"));
                    }
                    bucket_schedule(&matrix, bucket, budget)
                }
            };
            emit(output, &json_line(&schedule)?)
        }
        Command::Dist { matrix, meta, option, given } => {
            let matrix = read_matrix(&matrix)?;
            let metas = read_meta(&meta)?;
            let mut buf = Vec::new();
            match given {
                Some(given) => {
                    let cond = conditional_distribution(&matrix, &metas, &option, &given)?;
                    write_conditional_csv(&cond, &mut buf)?;
                }
                None => {
                    let dist = option_value_distribution(&matrix, &metas, &option)?;
                    if dist.zero_utility_uniform {
                        eprintln!(
                            "warning: every `{option}` bucket has zero utility; \
                             falling back to a uniform distribution"
                        );
                    }
                    write_distribution_csv(&dist, &mut buf)?;
                }
            }
            emit(output, &String::from_utf8(buf).expect("distribution CSV is UTF-8"))
        }
        Command::Freq { meta, option } => {
            let metas = read_meta(&meta)?;
            let freq: BTreeMap<String, FreqEntry> = update_sampling_frequencies(&metas, &option)
                .into_iter()
                .map(|(value, (count, frequency))| (value, FreqEntry { count, frequency }))
                .collect();
            emit(output, &json_line(&freq)?)
        }
        Command::Luby { base, cap, count } => {
            let config = LubyConfig::new(base, cap)?;
            let mut text = String::new();
            for limit in luby_limits(config).take(count) {
                text.push_str(&limit.to_string());
                text.push('\n');
            }
            emit(output, &text)
        }
        Command::Cv(args) => {
            let matrix = read_matrix(&args.matrix)?;
            let metas = read_meta(&args.meta)?;
            let params = RegularizationParams {
                slack_mul: args.slack_mul,
                slack_add: args.slack_add,
                alpha: args.alpha,
                beta: args.beta,
            };
            let config = match args.constructor {
                ConstructorArg::Greedy => ConstructorConfig::Greedy {
                    params,
                    mode: args.extension.into(),
                },
                ConstructorArg::Probabilistic => ConstructorConfig::Probabilistic {
                    params,
                    epsilon: args.epsilon,
                },
                ConstructorArg::Exact => ConstructorConfig::Exact {
                    max_combinations: args.max_combinations,
                },
                ConstructorArg::Psetheo => {
                    if args.dt < 1 || args.l < 1 {
                        return Err(CliError::usage("--dt and --l must be at least 1"));
                    }
                    ConstructorConfig::Psetheo { delta_t: args.dt, l: args.l }
                }
                ConstructorArg::Buckets => {
                    let bucket = args.bucket.ok_or_else(|| {
                        CliError::usage("--bucket is required with --constructor buckets")
                    })?;
                    ConstructorConfig::Buckets { bucket }
                }
            };
            let summary = cross_validate(
                &matrix,
                &metas,
                args.k,
                args.rounds,
                args.seed,
                &config,
                args.budget,
                args.include_unwitnessed,
            )?;
            if summary.skipped > 0 {
                eprintln!(
                    "warning: {} of {} folds skipped (empty training strategy set)",
                    summary.skipped,
                    summary.skipped + summary.folds.len()
                );
            }
            emit(output, &(summary.to_json_string()? + "\n"))
        }
    }
}
