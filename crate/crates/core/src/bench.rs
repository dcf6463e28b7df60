//! Parameter sweeps over chunk count and replica count, turning-point
//! extraction, and CSV / text reporting.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunk_store::{
    AllocationPolicy, ChunkStore, ChunkStoreConfig, LookupCost, ReplicaPlacement, StoreError,
};
use crate::ledger::{Ledger, TxId};
use crate::trace::{ratio_against, trace_bfs, TraceError, TraceResult};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("ledger is empty")]
    EmptyLedger,
    #[error("need at least two distinct replica counts, got {0}")]
    InsufficientData(usize),
    #[error("records mix allocation policies")]
    MixedPolicies,
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("report i/o: {0}")]
    Io(String),
}

impl BenchError {
    pub fn class(&self) -> &'static str {
        match self {
            BenchError::EmptyLedger => "EmptyLedger",
            BenchError::InsufficientData(_) => "InsufficientData",
            BenchError::MixedPolicies => "MixedPolicies",
            BenchError::InvalidSpec(_) => "InvalidSpec",
            BenchError::Trace(e) => e.class(),
            BenchError::Store(e) => e.class(),
            BenchError::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuerySelection {
    Explicit(Vec<TxId>),
    /// The `k` transactions with the most predecessors (ties: lower id).
    Deepest(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub alpha_values: Vec<usize>,
    /// Replica counts, i.e. `beta - 1`.
    pub replica_values: Vec<usize>,
    pub policy: AllocationPolicy,
    pub queries: QuerySelection,
    pub repeats: usize,
    pub lookup_cost: LookupCost,
    pub per_chunk_index_overhead: f64,
    pub placement: ReplicaPlacement,
}

impl SweepSpec {
    pub fn new(
        alpha_values: Vec<usize>,
        replica_values: Vec<usize>,
        policy: AllocationPolicy,
    ) -> Self {
        SweepSpec {
            alpha_values,
            replica_values,
            policy,
            queries: QuerySelection::Deepest(20),
            repeats: 1,
            lookup_cost: LookupCost::default(),
            per_chunk_index_overhead: 0.0,
            placement: ReplicaPlacement::Distinct,
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        if self.alpha_values.is_empty() || self.replica_values.is_empty() {
            return Err(BenchError::InvalidSpec(
                "empty alpha or replica list".into(),
            ));
        }
        if self.alpha_values.contains(&0) {
            return Err(BenchError::InvalidSpec("alpha must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(BenchError::InvalidSpec("repeats must be at least 1".into()));
        }
        if matches!(self.queries, QuerySelection::Deepest(0))
            || matches!(&self.queries, QuerySelection::Explicit(q) if q.is_empty())
        {
            return Err(BenchError::InvalidSpec("no queries".into()));
        }
        Ok(())
    }

    fn cell_config(
        &self,
        alpha: usize,
        replicas: usize,
        policy: AllocationPolicy,
    ) -> ChunkStoreConfig {
        ChunkStoreConfig {
            placement: self.placement,
            lookup_cost: self.lookup_cost,
            per_chunk_index_overhead: self.per_chunk_index_overhead,
            ..ChunkStoreConfig::with_replicas(alpha, replicas, policy)
        }
    }
}

/// Aggregate for one `(alpha, replicas)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub alpha: usize,
    pub replicas: usize,
    pub policy: String,
    pub mean_parallelization_ratio: f64,
    pub mean_storage_ratio: f64,
    pub mean_rounds: f64,
    pub mean_lookups: f64,
    /// Population standard deviation of the per-run ratios. Not part of
    /// the CSV.
    #[serde(skip)]
    pub ratio_std: f64,
}

/// One traced query within one repeat of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRun {
    pub query: TxId,
    pub repeat: usize,
    pub ratio: f64,
    pub rounds: u64,
    pub lookups: u64,
    /// BFS level count of the query's ancestry.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub record: BenchRecord,
    pub runs: Vec<QueryRun>,
}

/// Predecessor-set size for every transaction, by ledger position.
pub fn ancestry_sizes(ledger: &Ledger) -> Vec<usize> {
    (0..ledger.len())
        .into_par_iter()
        .map_init(HashSet::new, |seen, pos| {
            seen.clear();
            let mut stack: Vec<TxId> = ledger.transactions()[pos].predecessors.clone();
            while let Some(v) = stack.pop() {
                if seen.insert(v) {
                    stack.extend_from_slice(ledger.predecessors(v).unwrap());
                }
            }
            seen.len()
        })
        .collect()
}

pub fn select_queries(
    ledger: &Ledger,
    selection: &QuerySelection,
) -> Result<Vec<TxId>, BenchError> {
    match selection {
        QuerySelection::Explicit(ids) => {
            if let Some(&missing) = ids.iter().find(|&&id| !ledger.contains(id)) {
                return Err(TraceError::UnknownId(missing).into());
            }
            Ok(ids.clone())
        }
        QuerySelection::Deepest(k) => {
            let sizes = ancestry_sizes(ledger);
            let mut order: Vec<usize> = (0..ledger.len()).collect();
            let txs = ledger.transactions();
            order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(txs[a].id.cmp(&txs[b].id)));
            Ok(order.into_iter().take(*k).map(|p| txs[p].id).collect())
        }
    }
}

struct Baseline {
    query: TxId,
    trace: TraceResult,
    depth: usize,
}

fn repeat_seed(base: u64, repeat: usize) -> u64 {
    base.wrapping_add(repeat as u64)
}

fn mean(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let xs: Vec<f64> = xs.collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

fn run_cell(
    ledger: &Arc<Ledger>,
    spec: &SweepSpec,
    baselines: &[Baseline],
    alpha: usize,
    replicas: usize,
) -> Result<CellResult, BenchError> {
    let base_seed = match spec.policy {
        AllocationPolicy::Hashed { seed } => seed,
        AllocationPolicy::Modulo => 0,
    };
    // Modulo layouts do not depend on the repeat, so one pass stands for all.
    let distinct_repeats = match spec.policy {
        AllocationPolicy::Modulo => 1,
        AllocationPolicy::Hashed { .. } => spec.repeats,
    };
    let mut runs = Vec::with_capacity(distinct_repeats * baselines.len());
    let mut storage = Vec::with_capacity(distinct_repeats);
    for repeat in 0..distinct_repeats {
        let policy = spec.policy.reseeded(repeat_seed(base_seed, repeat));
        let store = ChunkStore::build(ledger.clone(), spec.cell_config(alpha, replicas, policy))?;
        storage.push(store.storage_report().storage_ratio);
        for b in baselines {
            let report = ratio_against(&b.trace, &store, b.query)?;
            runs.push(QueryRun {
                query: b.query,
                repeat,
                ratio: report.parallelization_ratio,
                rounds: report.parallel.rounds,
                lookups: report.parallel.lookups,
                depth: b.depth,
            });
        }
    }
    let (mean_ratio, ratio_std) = mean(runs.iter().map(|r| r.ratio));
    let record = BenchRecord {
        alpha,
        replicas,
        policy: spec.policy.name().to_owned(),
        mean_parallelization_ratio: mean_ratio,
        mean_storage_ratio: mean(storage.iter().copied()).0,
        mean_rounds: mean(runs.iter().map(|r| r.rounds as f64)).0,
        mean_lookups: mean(runs.iter().map(|r| r.lookups as f64)).0,
        ratio_std,
    };
    Ok(CellResult { record, runs })
}

/// Every cell of the sweep with its per-query runs, sorted by
/// `(alpha, replicas)`. Cells run in parallel.
pub fn run_sweep_detailed(
    ledger: &Arc<Ledger>,
    spec: &SweepSpec,
) -> Result<Vec<CellResult>, BenchError> {
    if ledger.is_empty() {
        return Err(BenchError::EmptyLedger);
    }
    spec.validate()?;
    let queries = select_queries(ledger, &spec.queries)?;
    let baseline_store = ChunkStore::build(
        ledger.clone(),
        ChunkStoreConfig {
            lookup_cost: spec.lookup_cost,
            ..ChunkStoreConfig::baseline()
        },
    )?;
    let baselines = queries
        .iter()
        .map(|&q| {
            Ok(Baseline {
                query: q,
                trace: trace_bfs(&baseline_store, q)?,
                depth: ledger
                    .dependency_depth(q)
                    .map_err(|_| TraceError::UnknownId(q))?,
            })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;

    let mut cells: Vec<(usize, usize)> = spec
        .alpha_values
        .iter()
        .flat_map(|&a| spec.replica_values.iter().map(move |&r| (a, r)))
        .collect();
    cells.sort_unstable();
    cells.dedup();
    let mut results = cells
        .par_iter()
        .map(|&(a, r)| run_cell(ledger, spec, &baselines, a, r))
        .collect::<Result<Vec<_>, _>>()?;
    results.sort_by_key(|c| (c.record.alpha, c.record.replicas));
    Ok(results)
}

pub fn run_sweep(ledger: &Arc<Ledger>, spec: &SweepSpec) -> Result<Vec<BenchRecord>, BenchError> {
    Ok(run_sweep_detailed(ledger, spec)?
        .into_iter()
        .map(|c| c.record)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurningPointFit {
    /// `(beta, alpha with the highest mean ratio)`, ascending in beta.
    pub best_alpha_per_beta: Vec<(usize, usize)>,
    pub slope: f64,
    pub intercept: f64,
}

impl TurningPointFit {
    pub fn predict(&self, beta: f64) -> f64 {
        self.slope * beta + self.intercept
    }
}

/// Per replica count, the chunk count with the highest mean ratio (ties
/// go to the smaller chunk count), plus the least-squares line of best
/// chunk count against `beta`.
pub fn find_turning_points(records: &[BenchRecord]) -> Result<TurningPointFit, BenchError> {
    if let Some(first) = records.first() {
        if records.iter().any(|r| r.policy != first.policy) {
            return Err(BenchError::MixedPolicies);
        }
    }
    let mut by_beta: BTreeMap<usize, Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        by_beta.entry(r.replicas + 1).or_default().push(r);
    }
    if by_beta.len() < 2 {
        return Err(BenchError::InsufficientData(by_beta.len()));
    }
    let best_alpha_per_beta: Vec<(usize, usize)> = by_beta
        .iter()
        .map(|(&beta, rows)| {
            let mut rows = rows.clone();
            rows.sort_by_key(|r| r.alpha);
            let mut best = rows[0];
            for r in &rows[1..] {
                if r.mean_parallelization_ratio > best.mean_parallelization_ratio {
                    best = r;
                }
            }
            (beta, best.alpha)
        })
        .collect();
    let (slope, intercept) = least_squares(
        &best_alpha_per_beta
            .iter()
            .map(|&(b, a)| (b as f64, a as f64))
            .collect::<Vec<_>>(),
    );
    Ok(TurningPointFit {
        best_alpha_per_beta,
        slope,
        intercept,
    })
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}

/// Fraction of sequential time saved at a given parallelization ratio.
pub fn time_saving(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        0.0
    } else {
        1.0 - 1.0 / ratio
    }
}

pub const CSV_HEADER: &str =
    "alpha,replicas,policy,mean_parallelization_ratio,mean_storage_ratio,mean_rounds,mean_lookups";

pub fn write_csv(records: &[BenchRecord], w: impl Write) -> Result<(), BenchError> {
    let mut sorted: Vec<&BenchRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (a.alpha, a.replicas, &a.policy).cmp(&(b.alpha, b.replicas, &b.policy)));
    let mut out = csv::Writer::from_writer(w);
    for r in sorted {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(r: impl Read) -> Result<Vec<BenchRecord>, BenchError> {
    csv::Reader::from_reader(r)
        .into_deserialize()
        .map(|row| row.map_err(BenchError::from))
        .collect()
}

/// Human-readable digest of a sweep.
pub fn summary(records: &[BenchRecord], fit: Option<&TurningPointFit>) -> String {
    let mut s = String::new();
    if let Some(best) = records.iter().max_by(|a, b| {
        a.mean_parallelization_ratio
            .total_cmp(&b.mean_parallelization_ratio)
    }) {
        let _ = writeln!(
            s,
            "max parallelization ratio {:.2} at alpha={} replicas={} ({}), time saving {:.1}%",
            best.mean_parallelization_ratio,
            best.alpha,
            best.replicas,
            best.policy,
            100.0 * time_saving(best.mean_parallelization_ratio)
        );
    }
    if let Some(fit) = fit {
        for (beta, alpha) in &fit.best_alpha_per_beta {
            let _ = writeln!(s, "turning point: beta={beta} best alpha={alpha}");
        }
        let _ = writeln!(
            s,
            "fit: alpha = {:.2} * beta + {:.2}",
            fit.slope, fit.intercept
        );
    }
    let _ = writeln!(s, "alpha replicas ratio std storage rounds lookups");
    for r in records {
        let _ = writeln!(
            s,
            "{} {} {:.4} {:.4} {:.4} {:.2} {:.2}",
            r.alpha,
            r.replicas,
            r.mean_parallelization_ratio,
            r.ratio_std,
            r.mean_storage_ratio,
            r.mean_rounds,
            r.mean_lookups
        );
    }
    s
}

/// Writes the CSV to `csv_path` and, if given, the text summary.
pub fn emit_report(
    records: &[BenchRecord],
    fit: Option<&TurningPointFit>,
    csv_path: &std::path::Path,
    summary_path: Option<&std::path::Path>,
) -> Result<(), BenchError> {
    if records.is_empty() {
        return Err(BenchError::InvalidSpec("no records to report".into()));
    }
    write_csv(
        records,
        std::io::BufWriter::new(std::fs::File::create(csv_path)?),
    )?;
    if let Some(p) = summary_path {
        std::fs::write(p, summary(records, fit))?;
    }
    Ok(())
}
