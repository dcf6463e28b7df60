//! Predecessor tracing over append-only transaction ledgers.
//!
//! Transactions are replicated across independently readable chunks; each
//! tracing round batches pending lookups with a bipartite maximum matching
//! so that no chunk serves more than one lookup at a time. The [`bench`]
//! module sweeps chunk and replica counts and reports how far the
//! round-based search gets ahead of a plain sequential search.

pub mod bench;
pub mod chunk_store;
pub mod ingest;
pub mod ledger;
pub mod scheduler;
pub mod trace;

#[cfg(test)]
mod testing;

pub use bench::{
    emit_report, find_turning_points, run_sweep, run_sweep_detailed, BenchError, BenchRecord,
    QuerySelection, SweepSpec, TurningPointFit,
};
pub use chunk_store::{
    allocate_hashed, allocate_modulo, AllocationPolicy, ChunkId, ChunkStore, ChunkStoreConfig,
    LookupCost, LookupMeter, ReplicaPlacement, StorageStats, StoreError,
};
pub use ingest::{gen_synthetic, ingest_utxo, IngestError, SyntheticDagParams, UtxoRecord};
pub use ledger::{oracle_all_predecessors, DagView, Ledger, LedgerError, Transaction, TxId};
pub use scheduler::{build_request_graph, maximum_matching, schedule, Assignment, RequestGraph};
pub use trace::{
    compare, trace_bfs, trace_parallel, ExecutionMode, RatioReport, TraceError, TraceResult,
};

/// Any error the library can produce, tagged with a stable class name.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Schedule(#[from] scheduler::ScheduleError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> &'static str {
        match self {
            Error::Ledger(e) => e.class(),
            Error::Store(e) => e.class(),
            Error::Schedule(_) => "UnknownId",
            Error::Trace(e) => e.class(),
            Error::Ingest(e) => e.class(),
            Error::Bench(e) => e.class(),
            Error::Usage(_) => "UsageError",
            Error::Io(_) => "IoError",
        }
    }
}
