//! Predecessor tracing: the sequential queue-driven search and the
//! round-based search that batches lookups through the scheduler.
//!
//! Time is accounted, not measured. A sequential lookup costs its chunk's
//! lookup cost; a round costs the largest lookup cost among the lookups it
//! runs, since they proceed side by side on distinct chunks.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunk_store::{ChunkId, ChunkStore, ChunkStoreConfig, LookupMeter, StoreError};
use crate::ledger::{Ledger, TxId};
use crate::scheduler::{schedule, ScheduleError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("transaction {0} is not in the store")]
    UnknownId(TxId),
    #[error("sequential and parallel traces of {0} disagree")]
    ResultMismatch(TxId),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl TraceError {
    pub fn class(&self) -> &'static str {
        match self {
            TraceError::UnknownId(_) => "UnknownId",
            TraceError::ResultMismatch(_) => "ResultMismatch",
            TraceError::Store(e) => e.class(),
        }
    }
}

impl From<ScheduleError> for TraceError {
    fn from(e: ScheduleError) -> Self {
        match e {
            ScheduleError::UnknownId(id) => TraceError::UnknownId(id),
        }
    }
}

/// Whether a round's lookups are merely accounted or actually dispatched to
/// worker threads. Both produce identical results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ExecutionMode {
    #[default]
    Simulated,
    Threaded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub predecessors: BTreeSet<TxId>,
    pub lookups: u64,
    pub rounds: u64,
    pub simulated_time: f64,
    /// Mean lookups per round.
    pub parallel_width_avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub parallelization_ratio: f64,
    pub baseline_time: f64,
    pub parallel_time: f64,
    pub baseline: TraceResult,
    pub parallel: TraceResult,
}

fn primary_chunk(store: &ChunkStore, id: TxId) -> Result<ChunkId, TraceError> {
    store
        .chunks_of(id)
        .map_err(|_| TraceError::UnknownId(id))?
        .first()
        .copied()
        .ok_or(TraceError::UnknownId(id))
}

/// Queue-driven search, one lookup at a time, each against the id's first
/// chunk. On a one-chunk store this is the sequential reference.
pub fn trace_bfs(store: &ChunkStore, id: TxId) -> Result<TraceResult, TraceError> {
    let meter = LookupMeter::new();
    let mut found = HashSet::new();
    let mut queue = VecDeque::from([id]);
    let mut time = 0.0;
    primary_chunk(store, id)?;
    while let Some(u) = queue.pop_front() {
        let chunk = primary_chunk(store, u)?;
        time += store.lookup_cost(chunk);
        for &v in store.get_predecessors(chunk, u, &meter)? {
            if found.insert(v) {
                queue.push_back(v);
            }
        }
    }
    let lookups = meter.calls();
    Ok(TraceResult {
        predecessors: found.into_iter().collect(),
        lookups,
        rounds: lookups,
        simulated_time: time,
        parallel_width_avg: 1.0,
    })
}

pub fn trace_parallel(store: &ChunkStore, id: TxId) -> Result<TraceResult, TraceError> {
    trace_parallel_with(store, id, ExecutionMode::Simulated)
}

/// Round-based search. Each round schedules the pending set, runs the
/// matched lookups, drops them from the pending set, then merges newly
/// seen predecessors into both the pending and the found set.
pub fn trace_parallel_with(
    store: &ChunkStore,
    id: TxId,
    mode: ExecutionMode,
) -> Result<TraceResult, TraceError> {
    if !store.contains(id) {
        return Err(TraceError::UnknownId(id));
    }
    let meter = LookupMeter::new();
    let mut found: HashSet<TxId> = HashSet::new();
    let mut pending: BTreeSet<TxId> = BTreeSet::from([id]);
    let mut rounds = 0u64;
    let mut time = 0.0;

    while !pending.is_empty() {
        let batch = schedule(&pending, store)?;
        debug_assert!(!batch.is_empty());
        rounds += 1;
        time += batch
            .pairs
            .iter()
            .map(|&(_, ck)| store.lookup_cost(ck))
            .fold(0.0, f64::max);

        let results: Vec<&[TxId]> = match mode {
            ExecutionMode::Simulated => batch
                .pairs
                .iter()
                .map(|&(tx, ck)| store.get_predecessors(ck, tx, &meter))
                .collect::<Result<_, _>>()?,
            ExecutionMode::Threaded => batch
                .pairs
                .par_iter()
                .map(|&(tx, ck)| store.get_predecessors(ck, tx, &meter))
                .collect::<Result<_, _>>()?,
        };
        for (tx, _) in &batch.pairs {
            pending.remove(tx);
        }
        // Barrier: merge in ascending id order of the looked-up transaction.
        for preds in results {
            for &v in preds {
                if found.insert(v) {
                    pending.insert(v);
                }
            }
        }
    }

    let lookups = meter.calls();
    Ok(TraceResult {
        predecessors: found.into_iter().collect(),
        lookups,
        rounds,
        simulated_time: time,
        parallel_width_avg: lookups as f64 / rounds as f64,
    })
}

/// Ratio of a baseline trace's time to a parallel trace of the same query.
pub fn ratio_against(
    baseline: &TraceResult,
    store: &ChunkStore,
    id: TxId,
) -> Result<RatioReport, TraceError> {
    let parallel = trace_parallel(store, id)?;
    if parallel.predecessors != baseline.predecessors {
        return Err(TraceError::ResultMismatch(id));
    }
    Ok(RatioReport {
        parallelization_ratio: baseline.simulated_time / parallel.simulated_time,
        baseline_time: baseline.simulated_time,
        parallel_time: parallel.simulated_time,
        baseline: baseline.clone(),
        parallel,
    })
}

/// Sequential trace on a one-chunk, one-copy store against a parallel
/// trace on `config`.
pub fn compare(
    ledger: &Arc<Ledger>,
    config: ChunkStoreConfig,
    id: TxId,
) -> Result<RatioReport, TraceError> {
    let mut baseline_cfg = ChunkStoreConfig::baseline();
    baseline_cfg.lookup_cost = config.lookup_cost;
    let baseline_store = ChunkStore::build(ledger.clone(), baseline_cfg)?;
    let baseline = trace_bfs(&baseline_store, id)?;
    let store = ChunkStore::build(ledger.clone(), config)?;
    ratio_against(&baseline, &store, id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunk_store::AllocationPolicy;
    use crate::ledger::oracle_all_predecessors;
    use crate::testing::{diamond, path};

    fn ids(v: &[u64]) -> BTreeSet<TxId> {
        v.iter().copied().map(TxId).collect()
    }

    fn store(l: Ledger, alpha: usize, beta: usize) -> ChunkStore {
        ChunkStore::build(
            Arc::new(l),
            ChunkStoreConfig::new(alpha, beta, AllocationPolicy::Modulo),
        )
        .unwrap()
    }

    #[test]
    fn bfs_examples() {
        let s = store(diamond(), 1, 1);
        let r = trace_bfs(&s, TxId(5)).unwrap();
        assert_eq!(r.predecessors, ids(&[1, 2, 3, 4]));
        assert_eq!((r.lookups, r.rounds), (5, 5));
        assert_eq!(r.simulated_time, 5.0);

        let r = trace_bfs(&s, TxId(1)).unwrap();
        assert!(r.predecessors.is_empty());
        assert_eq!(r.lookups, 1);

        let r = trace_bfs(&s, TxId(2)).unwrap();
        assert_eq!((r.predecessors, r.lookups), (ids(&[1]), 2));

        assert_eq!(
            trace_bfs(&s, TxId(99)),
            Err(TraceError::UnknownId(TxId(99)))
        );
    }

    #[test]
    fn parallel_matches_hand_simulation() {
        // round 1: 5@ck1; round 2: 1@ck1 + 4@ck0; round 3: 3@ck1 + 2@ck0
        let s = store(diamond(), 2, 1);
        let r = trace_parallel(&s, TxId(5)).unwrap();
        assert_eq!(r.predecessors, ids(&[1, 2, 3, 4]));
        assert_eq!((r.lookups, r.rounds), (5, 3));
        assert_eq!(r.simulated_time, 3.0);
        assert_eq!(r.parallel_width_avg, 5.0 / 3.0);

        let r = trace_parallel(&s, TxId(1)).unwrap();
        assert_eq!((r.rounds, r.lookups), (1, 1));
        assert!(r.predecessors.is_empty());
    }

    #[test]
    fn single_chunk_is_sequential() {
        for beta in 1..=3 {
            let s = store(diamond(), 1, beta);
            for id in 1..=5 {
                let r = trace_parallel(&s, TxId(id)).unwrap();
                assert_eq!(r.rounds, r.lookups);
            }
        }
    }

    #[test]
    fn compare_examples() {
        let l = Arc::new(diamond());
        let r = compare(
            &l,
            ChunkStoreConfig::new(2, 1, AllocationPolicy::Modulo),
            TxId(5),
        )
        .unwrap();
        assert_eq!(r.parallelization_ratio, 5.0 / 3.0);

        let r = compare(&l, ChunkStoreConfig::baseline(), TxId(5)).unwrap();
        assert_eq!(r.parallelization_ratio, 1.0);

        let p = Arc::new(path(30));
        for alpha in [2, 5, 8] {
            let r = compare(
                &p,
                ChunkStoreConfig::new(alpha, 3, AllocationPolicy::Modulo),
                TxId(30),
            )
            .unwrap();
            assert_eq!(r.parallelization_ratio, 1.0);
        }
    }

    #[test]
    fn threaded_mode_agrees() {
        let l = crate::ingest::gen_synthetic(&crate::ingest::SyntheticDagParams {
            n: 400,
            max_indegree: 4,
            indegree_distribution: crate::ingest::IndegreeDistribution::Uniform,
            root_fraction: 0.2,
            seed: 3,
        })
        .unwrap();
        let s = ChunkStore::build(
            Arc::new(l),
            ChunkStoreConfig::new(4, 2, AllocationPolicy::Hashed { seed: 5 }),
        )
        .unwrap();
        for id in [400u64, 399, 250, 17] {
            let a = trace_parallel_with(&s, TxId(id), ExecutionMode::Simulated).unwrap();
            let b = trace_parallel_with(&s, TxId(id), ExecutionMode::Threaded).unwrap();
            assert_eq!(a, b);
            assert_eq!(
                a.predecessors,
                oracle_all_predecessors(s.ledger(), TxId(id)).unwrap()
            );
        }
    }

    #[test]
    fn logarithmic_cost_charges_slowest_lookup_per_round() {
        let mut cfg = ChunkStoreConfig::new(2, 1, AllocationPolicy::Modulo);
        cfg.lookup_cost = crate::chunk_store::LookupCost::Logarithmic { scale: 1.0 };
        let s = ChunkStore::build(Arc::new(diamond()), cfg).unwrap();
        let r = trace_parallel(&s, TxId(5)).unwrap();
        // every round touches ck1 (3 entries, cost 2)
        assert_eq!(r.simulated_time, 6.0);
    }
}
