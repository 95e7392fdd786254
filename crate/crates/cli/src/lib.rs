//! `ttcf` command-line front end.
//!
//! Exit codes: 0 on success, 1 on a domain error (invalid input, failed
//! precondition, failed verification), 2 on a usage error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ttc_frontier::bench::{run_benchmark, summarize, BenchConfig, Method};
use ttc_frontier::instances::{
    read_instance, serialize_frontier, serialize_instance, write_instance, InstanceFile,
};
use ttc_frontier::inverse::invttc;
use ttc_frontier::model::{next_permutation, MAX_SCAN_N};
use ttc_frontier::ttc::MAX_BRUTE_PO_N;
use ttc_frontier::{
    brute_force_frontier, forward_ttc, is_po_bruteforce, is_po_fixedpoint, itea, random_profile,
    score, select_best, ttc_outcome, verify_partition, Allocation, Criterion, Error, Format,
    PreferenceProfile,
};

#[derive(Debug, Parser)]
#[command(
    name = "ttcf",
    version,
    about = "Pareto frontier enumeration by inverse Top Trading Cycles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutputFormat {
    Text,
    Structured,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Text => Format::Text,
            OutputFormat::Structured => Format::Structured,
        }
    }
}

#[derive(Debug, Args)]
struct ProfileArgs {
    /// Profile file (.prefs text or .json)
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a uniformly random profile
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
        /// Defaults to structured for .json output paths, text otherwise
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Run TTC from an endowment and print the outcome with its cycle trace
    Ttc {
        #[command(flatten)]
        input: ProfileArgs,
        /// One-based rooms in agent order, e.g. "3 4 2 1 5" or "[3,4,2,1,5]"
        #[arg(long)]
        endowment: String,
    },
    /// Print every endowment TTC maps to a Pareto-optimal allocation
    Invttc {
        #[command(flatten)]
        input: ProfileArgs,
        #[arg(long)]
        allocation: String,
    },
    /// Enumerate the Pareto frontier by inverse TTC
    Itea {
        #[command(flatten)]
        input: ProfileArgs,
        /// Also list every endowment of each class
        #[arg(long)]
        classes: bool,
    },
    /// Enumerate the Pareto frontier by running TTC from every endowment
    Brute {
        #[command(flatten)]
        input: ProfileArgs,
        #[arg(long)]
        classes: bool,
    },
    /// Pick the frontier member that minimizes a criterion
    Select {
        #[command(flatten)]
        input: ProfileArgs,
        /// utilitarian, egalitarian, envy-pairs or envious-agents
        #[arg(long)]
        criterion: Criterion,
    },
    /// Benchmark inverse TTC against brute force on random profiles
    Bench(BenchArgs),
    /// Cross-check both enumerations and the PO oracles on one profile
    Verify {
        #[command(flatten)]
        input: ProfileArgs,
    },
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 3)]
    n_min: usize,
    #[arg(long, default_value_t = 9)]
    n_max: usize,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV file receiving one row per (n, instance, method)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of itea,brute
    #[arg(long, value_delimiter = ',', default_values_t = [Method::Itea, Method::Brute])]
    methods: Vec<Method>,
    /// Worker threads, 0 for all cores
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Seconds after which a run is flagged as timed out
    #[arg(long, default_value_t = 600)]
    time_limit: u64,
    /// Write an SVG chart of mean time against n
    #[arg(long)]
    chart: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
}

/// Runs the CLI on `args` (program name first). Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

#[derive(Debug)]
enum CliError {
    Domain(Error),
    Input(String),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Input(msg) => f.write_str(msg),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn load(path: &Path) -> CliResult<PreferenceProfile> {
    Ok(read_instance(path)?.profile)
}

/// Parses one-based rooms separated by spaces or commas, optionally wrapped
/// in brackets.
pub fn parse_allocation(text: &str, n: usize) -> Result<Allocation, String> {
    let inner = text
        .trim()
        .trim_start_matches(['[', '('])
        .trim_end_matches([']', ')']);
    let rooms = inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<usize>() {
            Ok(r) if r >= 1 => Ok(r - 1),
            _ => Err(format!(
                "invalid room `{t}`: expected a one-based room number"
            )),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if rooms.len() != n {
        return Err(format!(
            "allocation lists {} rooms but the profile has {n} agents",
            rooms.len()
        ));
    }
    Allocation::new(rooms).map_err(|e| format!("invalid allocation: {e}"))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn one_based(a: &Allocation) -> Vec<usize> {
    a.assign().iter().map(|r| r + 1).collect()
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult<i32> {
    match command {
        Command::Gen {
            n,
            seed,
            out: path,
            format,
        } => {
            let instance = InstanceFile {
                profile: random_profile(n, seed)?,
                seed: Some(seed),
            };
            match path {
                Some(path) => {
                    let format = format.map_or_else(|| Format::for_path(&path), Format::from);
                    write_instance(&path, &instance, format)?;
                }
                None => {
                    let format = format.map_or(Format::Text, Format::from);
                    out.write_all(serialize_instance(&instance, format).as_bytes())?;
                }
            }
        }
        Command::Ttc { input, endowment } => {
            let profile = load(&input.profile)?;
            let endowment = parse_allocation(&endowment, profile.n()).map_err(CliError::Input)?;
            let (outcome, trace) = forward_ttc(&profile, &endowment)?;
            match input.format {
                OutputFormat::Text => {
                    writeln!(out, "allocation {outcome}")?;
                    for (k, round) in trace.rounds.iter().enumerate() {
                        for cycle in round {
                            let pairs: Vec<String> = cycle
                                .iter()
                                .map(|(a, r)| format!("{}:{}", a + 1, r + 1))
                                .collect();
                            writeln!(out, "round {} cycle {}", k + 1, pairs.join(" "))?;
                        }
                    }
                }
                OutputFormat::Structured => {
                    let rounds: Vec<Vec<Vec<[usize; 2]>>> = trace
                        .rounds
                        .iter()
                        .map(|round| {
                            round
                                .iter()
                                .map(|c| c.iter().map(|&(a, r)| [a + 1, r + 1]).collect())
                                .collect()
                        })
                        .collect();
                    let doc = serde_json::json!({
                        "allocation": one_based(&outcome),
                        "rounds": rounds,
                    });
                    out.write_all(to_json(&doc).as_bytes())?;
                }
            }
        }
        Command::Invttc { input, allocation } => {
            let profile = load(&input.profile)?;
            let po = parse_allocation(&allocation, profile.n()).map_err(CliError::Input)?;
            let pre = invttc(&profile, &po)?;
            match input.format {
                OutputFormat::Text => {
                    writeln!(out, "source {}", pre.source)?;
                    writeln!(out, "preimage_size {}", pre.members.len())?;
                    writeln!(out, "states_visited {}", pre.states_visited)?;
                    for m in &pre.members {
                        writeln!(out, "endowment {m}")?;
                    }
                }
                OutputFormat::Structured => {
                    let doc = serde_json::json!({
                        "source": one_based(&pre.source),
                        "preimage_size": pre.members.len(),
                        "states_visited": pre.states_visited,
                        "members": pre.members.iter().map(one_based).collect::<Vec<_>>(),
                    });
                    out.write_all(to_json(&doc).as_bytes())?;
                }
            }
        }
        Command::Itea { input, classes } => {
            let frontier = itea(&load(&input.profile)?)?;
            out.write_all(serialize_frontier(&frontier, classes, input.format.into()).as_bytes())?;
        }
        Command::Brute { input, classes } => {
            let frontier = brute_force_frontier(&load(&input.profile)?)?;
            out.write_all(serialize_frontier(&frontier, classes, input.format.into()).as_bytes())?;
        }
        Command::Select { input, criterion } => {
            let profile = load(&input.profile)?;
            let frontier = itea(&profile)?;
            let best = select_best(&profile, &frontier, criterion)?;
            let value = score(&profile, &best, criterion)?;
            match input.format {
                OutputFormat::Text => {
                    writeln!(out, "allocation {best}")?;
                    writeln!(out, "criterion {criterion}")?;
                    writeln!(out, "score {value}")?;
                }
                OutputFormat::Structured => {
                    let doc = serde_json::json!({
                        "allocation": one_based(&best),
                        "criterion": criterion.name(),
                        "score": value,
                    });
                    out.write_all(to_json(&doc).as_bytes())?;
                }
            }
        }
        Command::Bench(args) => return bench(args, out),
        Command::Verify { input } => return verify(&input, out),
    }
    Ok(0)
}

fn bench(args: BenchArgs, out: &mut dyn Write) -> CliResult<i32> {
    let config = BenchConfig {
        n_min: args.n_min,
        n_max: args.n_max,
        instances_per_n: args.instances,
        base_seed: args.seed,
        methods: args.methods,
        output: args.out,
        time_limit: Duration::from_secs(args.time_limit),
        workers: args.workers,
    };
    let records = run_benchmark(&config)?;
    let summary = summarize(&records)?;
    match args.format {
        OutputFormat::Text => {
            writeln!(out, "workers {}", config.effective_workers())?;
            out.write_all(summary.render_text().as_bytes())?;
        }
        OutputFormat::Structured => out.write_all(summary.render_csv()?.as_bytes())?,
    }
    if let Some(path) = args.chart {
        std::fs::write(&path, summary.render_svg()).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(0)
}

struct Check {
    name: &'static str,
    /// `None` when skipped.
    passed: Option<bool>,
}

fn verify(input: &ProfileArgs, out: &mut dyn Write) -> CliResult<i32> {
    let profile = load(&input.profile)?;
    let n = profile.n();
    if n > MAX_SCAN_N {
        return Err(Error::InstanceTooLarge { n, max: MAX_SCAN_N }.into());
    }
    let fast = itea(&profile)?;
    let slow = brute_force_frontier(&profile)?;
    let total = ttc_frontier::model::factorial(n).expect("n <= MAX_SCAN_N");
    let classes = fast.classes.as_deref().unwrap_or_default();

    let mut sound = true;
    for class in classes {
        for e in &class.members {
            sound &= ttc_outcome(&profile, e)? == class.source;
        }
    }
    let mut fixed_points = true;
    for m in &fast.members {
        fixed_points &= is_po_fixedpoint(&profile, m)?;
    }
    let dominance = if n <= MAX_BRUTE_PO_N {
        let mut all = true;
        for m in &fast.members {
            all &= is_po_bruteforce(&profile, m)?;
        }
        Some(all)
    } else {
        None
    };
    // every allocation outside the frontier must fail the fixed-point test
    let mut exact = true;
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let a = Allocation::new(perm.clone())?;
        let member = fast.members.binary_search(&a).is_ok();
        exact &= member == is_po_fixedpoint(&profile, &a)?;
        if !next_permutation(&mut perm) {
            break;
        }
    }

    let checks = [
        Check {
            name: "frontier-equivalence",
            passed: Some(fast.members == slow.members),
        },
        Check {
            name: "class-equivalence",
            passed: Some(fast.class_sizes() == slow.class_sizes()),
        },
        Check {
            name: "partition",
            passed: Some(verify_partition(&fast, n)?),
        },
        Check {
            name: "soundness",
            passed: Some(sound),
        },
        Check {
            name: "ttc-call-economy",
            passed: Some(
                fast.stats.ttc_calls == fast.members.len() as u64 && slow.stats.ttc_calls == total,
            ),
        },
        Check {
            name: "po-fixedpoint",
            passed: Some(fixed_points),
        },
        Check {
            name: "po-bruteforce",
            passed: dominance,
        },
        Check {
            name: "frontier-is-po-set",
            passed: Some(exact),
        },
    ];

    let failed = checks.iter().any(|c| c.passed == Some(false));
    match input.format {
        OutputFormat::Text => {
            for c in &checks {
                let status = match c.passed {
                    Some(true) => "PASS",
                    Some(false) => "FAIL",
                    None => "SKIP",
                };
                writeln!(out, "{status} {}", c.name)?;
            }
            writeln!(out, "frontier_size {}", fast.members.len())?;
        }
        OutputFormat::Structured => {
            let results: serde_json::Map<String, serde_json::Value> = checks
                .iter()
                .map(|c| {
                    let v = match c.passed {
                        Some(true) => "pass",
                        Some(false) => "fail",
                        None => "skip",
                    };
                    (c.name.to_string(), v.into())
                })
                .collect();
            let doc = serde_json::json!({
                "frontier_size": fast.members.len(),
                "checks": results,
            });
            out.write_all(to_json(&doc).as_bytes())?;
        }
    }
    Ok(if failed { 1 } else { 0 })
}
