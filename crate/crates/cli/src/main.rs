//! `clocksync`: recover clock offsets from all-pairs session measurements,
//! compute resilience bounds, and simulate faulty measurements.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 invalid input,
//! 3 unrecoverable measurements, 4 bound computation stopped by its budget.

mod files;
mod report;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use clocksync::model::{FaultAssignment, GroundTruth, Topology};
use clocksync::phase::{sample_fault_multiple, simulate_measurements};
use clocksync::rational::{self, frac, int};
use clocksync::recovery::{recover_with, verify_recovery, RecoveryOptions};
use clocksync::resilience::{
    lower_bound, upper_bound_counterexample, BoundMode, BoundOptions, Completion, RankStrategy,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use files::{MeasurementFile, TruthFile};
use report::{bound_table, BoundReport, CounterexampleReport, RecoverReport};

/// Input rejected before any computation.
#[derive(Debug)]
pub struct Invalid(pub String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

const EXIT_IO: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_UNRECOVERABLE: u8 = 3;
const EXIT_INCOMPLETE: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "clocksync",
    version,
    about = "Exact clock-offset recovery under whole-period faults"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recover offsets and fault positions from a measurement file.
    Recover(RecoverArgs),
    /// Compute the lower bound of tolerable faults for N nodes or a range "A-B".
    Bound(BoundArgs),
    /// Show that K >= N-1 faults around node 1 defeat recovery.
    Counterexample(CounterexampleArgs),
    /// Write a measurement file with injected faults.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Reduced,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RankArg {
    Dense,
    Graphic,
}

#[derive(clap::Args, Debug)]
struct RecoverArgs {
    /// Measurement file (JSON).
    file: PathBuf,
    /// Ground-truth file written by `simulate`; adds a verdict to the report.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Stop at the first acceptable placement instead of listing alternatives.
    #[arg(long)]
    first_only: bool,
    /// Report the data as unrecoverable rather than try more faults.
    #[arg(long)]
    max_faults: Option<usize>,
    /// Allow more than 12 nodes.
    #[arg(long)]
    force: bool,
    /// Include wall-clock runtime in the report.
    #[arg(long)]
    timing: bool,
    /// Write the report here instead of standard output.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct BoundArgs {
    /// Node count, or an inclusive range such as 4-8.
    nodes: String,
    #[arg(long, value_enum, default_value = "reduced")]
    mode: ModeArg,
    /// Highest fault count to examine.
    #[arg(long = "max-K", alias = "max-k")]
    max_k: Option<usize>,
    /// Wall-clock budget per network, in seconds.
    #[arg(long)]
    budget: Option<f64>,
    /// Budget in rank evaluations per network; reproducible across machines.
    #[arg(long)]
    max_checks: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum, default_value = "graphic")]
    rank: RankArg,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Allow more than 12 nodes.
    #[arg(long)]
    force: bool,
    /// Include wall-clock runtime in the report.
    #[arg(long)]
    timing: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct CounterexampleArgs {
    /// Node count.
    n: usize,
    /// Fault count, at least N-1.
    #[arg(value_name = "K")]
    big_k: usize,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
#[command(group(clap::ArgGroup::new("fault_source").required(true).args(["faults", "random_k"])))]
struct SimulateArgs {
    /// Node count.
    n: usize,
    /// Faults as "(i,j):n,...": session (i,j) with i > j is off by n periods.
    #[arg(long)]
    faults: Option<String>,
    /// Inject this many faults at random sessions.
    #[arg(long = "random-K", alias = "random-k")]
    random_k: Option<usize>,
    /// Seed for random faults and random offsets.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random fault multiples are drawn from [-b, b] without 0.
    #[arg(long, default_value_t = 5)]
    fault_bound: i64,
    /// Signal period.
    #[arg(long = "T", alias = "period", default_value = "1")]
    period: String,
    /// True offsets of nodes 1..N-1, comma separated. Defaults to zeros with
    /// --faults and to seeded random values with --random-K.
    #[arg(long, allow_hyphen_values = true)]
    offsets: Option<String>,
    #[arg(long, default_value = "s")]
    unit: String,
    /// Where to write the ground truth.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Measurement file destination (default: standard output).
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_recover(args: &RecoverArgs) -> Result<u8> {
    let started = Instant::now();
    let file: MeasurementFile = files::read_json(&args.file)?;
    let (topo, meas) = file.to_model().context("invalid measurement file")?;
    let truth = match &args.truth {
        Some(path) => {
            let t: TruthFile = files::read_json(path)?;
            Some(t.to_model(&topo).context("invalid truth file")?)
        }
        None => None,
    };
    let options = RecoveryOptions {
        force: args.force,
        first_only: args.first_only,
        max_faults: args.max_faults,
    };
    let result = recover_with(&topo, &meas, &options)?;
    let verdict = truth
        .as_ref()
        .map(|(truth, faults)| verify_recovery(&result, truth, faults));
    let mut report = RecoverReport::new(topo.nodes(), &result, verdict.as_ref());
    if args.timing {
        report.runtime_seconds = Some(started.elapsed().as_secs_f64());
    }
    let text = match args.format {
        Format::Json => files::to_json(&report),
        Format::Table => report.table(),
    };
    emit(&text, args.output.as_deref())?;
    Ok(0)
}

fn parse_nodes(spec: &str) -> Result<Vec<usize>> {
    let bad = || Invalid(format!("invalid node count or range {spec:?}"));
    let (lo, hi) = match spec.split_once('-') {
        Some((a, b)) => (
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        ),
        None => {
            let n = spec.trim().parse().map_err(|_| bad())?;
            (n, n)
        }
    };
    if lo > hi {
        return Err(bad().into());
    }
    Ok((lo..=hi).collect())
}

fn run_bound(args: &BoundArgs) -> Result<u8> {
    let nodes = parse_nodes(&args.nodes)?;
    let deadline = match args.budget {
        Some(secs) if secs.is_finite() && secs >= 0.0 => Some(Duration::from_secs_f64(secs)),
        Some(_) => {
            return Err(Invalid("budget must be a non-negative number of seconds".into()).into())
        }
        None => None,
    };
    let options = BoundOptions {
        mode: match args.mode {
            ModeArg::Reduced => BoundMode::Reduced,
            ModeArg::Exhaustive => BoundMode::Exhaustive,
        },
        strategy: match args.rank {
            RankArg::Dense => RankStrategy::Dense,
            RankArg::Graphic => RankStrategy::Graphic,
        },
        max_k: args.max_k,
        deadline,
        max_rank_checks: args.max_checks,
        force: args.force,
    };
    let topologies = nodes
        .iter()
        .map(|&n| Topology::new(n))
        .collect::<clocksync::Result<Vec<_>>>()?;
    let compute = || -> Result<Vec<(clocksync::resilience::ResilienceReport, f64)>> {
        topologies
            .iter()
            .map(|topo| {
                let started = Instant::now();
                let r = lower_bound(topo, &options)?;
                Ok((r, started.elapsed().as_secs_f64()))
            })
            .collect()
    };
    let computed = match args.jobs {
        Some(0) => return Err(Invalid("--jobs must be at least 1".into()).into()),
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .context("starting worker threads")?
            .install(compute)?,
        None => compute()?,
    };
    let incomplete = computed
        .iter()
        .any(|(r, _)| r.completion == Completion::BudgetExhausted);
    let reports: Vec<BoundReport> = computed
        .iter()
        .map(|(r, secs)| {
            let mut b = BoundReport::new(r);
            if args.timing {
                b.runtime_seconds = Some(*secs);
            }
            b
        })
        .collect();
    let text = match args.format {
        Format::Table => bound_table(&reports),
        Format::Json if reports.len() == 1 => files::to_json(&reports[0]),
        Format::Json => files::to_json(&reports),
    };
    emit(&text, args.output.as_deref())?;
    Ok(if incomplete { EXIT_INCOMPLETE } else { 0 })
}

fn run_counterexample(args: &CounterexampleArgs) -> Result<u8> {
    let topo = Topology::new(args.n)?;
    let c = upper_bound_counterexample(&topo, args.big_k)?;
    let report = CounterexampleReport::new(&c);
    let text = match args.format {
        Format::Json => files::to_json(&report),
        Format::Table => report.table(),
    };
    emit(&text, args.output.as_deref())?;
    Ok(0)
}

fn run_simulate(args: &SimulateArgs) -> Result<u8> {
    let topo = Topology::new(args.n)?;
    let period = rational::parse(&args.period).context("invalid period")?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let offsets = match &args.offsets {
        Some(list) => list
            .split(',')
            .map(|s| rational::parse(s).context("invalid offset"))
            .collect::<Result<Vec<_>>>()?,
        None if args.random_k.is_some() => (1..topo.nodes())
            .map(|_| frac(rng.gen_range(-100_000..=100_000), 1000))
            .collect(),
        None => vec![int(0); topo.nodes() - 1],
    };
    let truth = GroundTruth::new(&topo, offsets)?;
    let multiples = match (&args.faults, args.random_k) {
        (Some(spec), _) => files::parse_fault_spec(spec, &topo)?,
        (None, Some(k)) => {
            if k > topo.sessions() {
                return Err(Invalid(format!(
                    "{k} faults exceed the {} sessions",
                    topo.sessions()
                ))
                .into());
            }
            if args.fault_bound < 1 {
                return Err(Invalid("--fault-bound must be at least 1".into()).into());
            }
            let mut rows = sample(&mut rng, topo.sessions(), k).into_vec();
            rows.sort_unstable();
            rows.into_iter()
                .map(|r| {
                    (
                        topo.pair_at(r),
                        sample_fault_multiple(&mut rng, args.fault_bound),
                    )
                })
                .collect()
        }
        (None, None) => unreachable!("clap requires a fault source"),
    };
    let faults = FaultAssignment::with_magnitudes(
        multiples.into_iter().map(|(p, n)| (p, int(n) * &period)),
    )?;
    let meas = simulate_measurements(&topo, &truth, &faults, &period)?;
    if let Some(path) = &args.truth {
        let seed = args.random_k.map(|_| args.seed);
        let t = TruthFile::from_model(&truth, &faults, &period, seed);
        emit(&files::to_json(&t), Some(path))?;
    }
    let file = MeasurementFile::from_model(&topo, &meas, &args.unit);
    emit(&files::to_json(&file), args.output.as_deref())?;
    Ok(0)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<clocksync::Error>() {
            return if *e == clocksync::Error::Unrecoverable {
                EXIT_UNRECOVERABLE
            } else {
                EXIT_INVALID
            };
        }
        if cause.is::<Invalid>() || cause.is::<serde_json::Error>() {
            return EXIT_INVALID;
        }
    }
    EXIT_IO
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Recover(a) => run_recover(a),
        Command::Bound(a) => run_bound(a),
        Command::Counterexample(a) => run_counterexample(a),
        Command::Simulate(a) => run_simulate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
