use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use chaintrace::bench::{self, QuerySelection, SweepSpec};
use chaintrace::ingest::{self, IndegreeDistribution, PositionWindow, SyntheticDagParams};
use chaintrace::trace::{self, ExecutionMode};
use chaintrace::{AllocationPolicy, ChunkStore, ChunkStoreConfig, Error, Ledger, TxId};

#[derive(Parser, Debug)]
#[command(
    name = "chaintrace",
    version,
    about = "Parallel predecessor tracing over transaction ledgers"
)]
struct Cli {
    /// Ledger file (JSON Lines).
    #[arg(long, global = true)]
    ledger: Option<PathBuf>,
    /// Chunk count: a number, a comma list, or a range like 1-20.
    #[arg(long, global = true, default_value = "1")]
    alpha: String,
    /// Replica count (copies beyond the first), same syntax as --alpha.
    #[arg(long, global = true, default_value = "0")]
    replicas: String,
    #[arg(long, global = true, value_enum, default_value_t = PolicyArg::Mod)]
    policy: PolicyArg,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1)]
    repeats: usize,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Mod,
    Hash,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistributionArg {
    Uniform,
    Geometric,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Simulated,
    Threaded,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic ledger.
    Gen {
        #[arg(long)]
        n: usize,
        /// Start from the wide/shallow preset; explicit flags override it.
        #[arg(long)]
        wide_shallow: bool,
        #[arg(long)]
        max_indegree: Option<usize>,
        #[arg(long, value_enum)]
        distribution: Option<DistributionArg>,
        #[arg(long)]
        root_fraction: Option<f64>,
    },
    /// Convert a UTXO CSV dump into a ledger.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// First position kept (inclusive).
        #[arg(long)]
        from: Option<u64>,
        /// First position dropped (exclusive end).
        #[arg(long)]
        to: Option<u64>,
    },
    /// Trace one transaction and print its predecessors and cost metrics.
    Trace {
        #[arg(long)]
        id: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Simulated)]
        mode: ModeArg,
    },
    /// Benchmark one (alpha, replicas) configuration.
    Bench {
        #[command(flatten)]
        queries: QueryArgs,
        #[arg(long, default_value_t = 0.0)]
        index_overhead: f64,
    },
    /// Sweep an alpha x replicas grid, fit turning points, write CSV.
    Sweep {
        #[command(flatten)]
        queries: QueryArgs,
        #[arg(long, default_value_t = 0.0)]
        index_overhead: f64,
        /// Text summary path.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug)]
struct QueryArgs {
    /// Explicit query ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    query: Vec<u64>,
    /// Otherwise trace the k transactions with the most predecessors.
    #[arg(long, default_value_t = 20)]
    deepest: usize,
}

impl QueryArgs {
    fn selection(&self) -> QuerySelection {
        if self.query.is_empty() {
            QuerySelection::Deepest(self.deepest)
        } else {
            QuerySelection::Explicit(self.query.iter().copied().map(TxId).collect())
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn parse_list(s: &str) -> Result<Vec<usize>, Error> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad number {t:?}")))
        };
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a > b {
                    return Err(usage(format!("empty range {part}")));
                }
                out.extend(a..=b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err(usage("empty list"));
    }
    Ok(out)
}

fn single(s: &str, flag: &str) -> Result<usize, Error> {
    match parse_list(s)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(usage(format!(
            "--{flag} takes a single value for this command"
        ))),
    }
}

impl Cli {
    fn policy(&self) -> AllocationPolicy {
        match self.policy {
            PolicyArg::Mod => AllocationPolicy::Modulo,
            PolicyArg::Hash => AllocationPolicy::Hashed { seed: self.seed },
        }
    }

    fn load_ledger(&self) -> Result<Arc<Ledger>, Error> {
        let path = self
            .ledger
            .as_ref()
            .ok_or_else(|| usage("--ledger is required"))?;
        Ok(Arc::new(Ledger::load(path)?))
    }

    fn output(&self) -> Result<Box<dyn Write>, Error> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn spec(&self, queries: &QueryArgs, index_overhead: f64) -> Result<SweepSpec, Error> {
        let mut spec = SweepSpec::new(
            parse_list(&self.alpha)?,
            parse_list(&self.replicas)?,
            self.policy(),
        );
        spec.queries = queries.selection();
        spec.repeats = self.repeats;
        spec.per_chunk_index_overhead = index_overhead;
        Ok(spec)
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Gen {
            n,
            wide_shallow,
            max_indegree,
            distribution,
            root_fraction,
        } => {
            let mut params = if *wide_shallow {
                SyntheticDagParams::wide_shallow(*n, cli.seed)
            } else {
                SyntheticDagParams {
                    n: *n,
                    max_indegree: 3,
                    indegree_distribution: IndegreeDistribution::Uniform,
                    root_fraction: 0.1,
                    seed: cli.seed,
                }
            };
            if let Some(k) = max_indegree {
                params.max_indegree = *k;
            }
            if let Some(d) = distribution {
                params.indegree_distribution = match d {
                    DistributionArg::Uniform => IndegreeDistribution::Uniform,
                    DistributionArg::Geometric => IndegreeDistribution::Geometric,
                };
            }
            if let Some(rf) = root_fraction {
                params.root_fraction = *rf;
            }
            ingest::gen_synthetic(&params)?.write_jsonl(cli.output()?)?;
        }
        Command::Ingest { input, from, to } => {
            let window = PositionWindow {
                start: *from,
                end: *to,
            };
            let records = ingest::read_utxo_csv(BufReader::new(File::open(input)?));
            ingest::ingest_utxo(records, |r| window.contains(r))?.write_jsonl(cli.output()?)?;
        }
        Command::Trace { id, mode } => {
            let ledger = cli.load_ledger()?;
            let config = ChunkStoreConfig::with_replicas(
                single(&cli.alpha, "alpha")?,
                single(&cli.replicas, "replicas")?,
                cli.policy(),
            );
            let store = ChunkStore::build(ledger.clone(), config)?;
            let mode = match mode {
                ModeArg::Simulated => ExecutionMode::Simulated,
                ModeArg::Threaded => ExecutionMode::Threaded,
            };
            let result = trace::trace_parallel_with(&store, TxId(*id), mode)?;
            let report = trace::compare(&ledger, config, TxId(*id))?;
            let json = serde_json::json!({
                "id": id,
                "alpha": config.alpha,
                "replicas": config.replicas(),
                "policy": config.policy.name(),
                "predecessors": result.predecessors,
                "lookups": result.lookups,
                "rounds": result.rounds,
                "simulated_time": result.simulated_time,
                "parallel_width_avg": result.parallel_width_avg,
                "parallelization_ratio": report.parallelization_ratio,
                "storage_ratio": store.storage_report().storage_ratio,
            });
            let mut out = cli.output()?;
            writeln!(out, "{json}")?;
        }
        Command::Bench {
            queries,
            index_overhead,
        } => {
            single(&cli.alpha, "alpha")?;
            single(&cli.replicas, "replicas")?;
            let ledger = cli.load_ledger()?;
            let records = bench::run_sweep(&ledger, &cli.spec(queries, *index_overhead)?)?;
            let mut out = cli.output()?;
            for r in &records {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string(r).expect("record serializes")
                )?;
            }
            out.flush()?;
        }
        Command::Sweep {
            queries,
            index_overhead,
            summary,
        } => {
            let ledger = cli.load_ledger()?;
            let records = bench::run_sweep(&ledger, &cli.spec(queries, *index_overhead)?)?;
            let fit = bench::find_turning_points(&records).ok();
            bench::write_csv(&records, cli.output()?)?;
            if let Some(p) = summary {
                std::fs::write(p, bench::summary(&records, fit.as_ref()))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {e}", e.class());
            ExitCode::FAILURE
        }
    }
}
