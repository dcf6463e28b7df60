//! Replicated chunk storage.
//!
//! Every transaction's `(id, predecessors)` pair is copied into up to `beta`
//! of `alpha` independently readable chunks. Which chunks is decided by an
//! [`AllocationPolicy`]. Chunks keep their entries sorted by id and answer
//! lookups by binary search.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{Ledger, Transaction, TxId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChunkId(pub u32);

impl fmt::Display for ChunkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ck{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("transaction {id} is not stored in chunk {chunk}")]
    NotInChunk { id: TxId, chunk: ChunkId },
    #[error("transaction {0} is not in the store")]
    UnknownId(TxId),
    #[error("invalid store configuration: {0}")]
    InvalidConfig(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

impl StoreError {
    pub fn class(&self) -> &'static str {
        match self {
            StoreError::NotInChunk { .. } => "NotInChunk",
            StoreError::UnknownId(_) => "UnknownId",
            StoreError::InvalidConfig(_) => "InvalidConfig",
            StoreError::Snapshot(_) => "SnapshotError",
        }
    }
}

/// Rule mapping a transaction id to the chunks that hold its copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AllocationPolicy {
    /// `id mod alpha`, replicas on the following chunks.
    Modulo,
    /// Independent keyed hash per replica, collisions collapse.
    Hashed { seed: u64 },
}

impl AllocationPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            AllocationPolicy::Modulo => "mod",
            AllocationPolicy::Hashed { .. } => "hash",
        }
    }

    pub fn allocate(&self, id: TxId, alpha: usize, beta: usize) -> Vec<ChunkId> {
        match *self {
            AllocationPolicy::Modulo => allocate_modulo(id, alpha, beta),
            AllocationPolicy::Hashed { seed } => allocate_hashed(id, alpha, beta, seed),
        }
    }

    /// Same policy kind with a different hash seed; Modulo is unchanged.
    pub fn reseeded(&self, seed: u64) -> Self {
        match self {
            AllocationPolicy::Modulo => AllocationPolicy::Modulo,
            AllocationPolicy::Hashed { .. } => AllocationPolicy::Hashed { seed },
        }
    }
}

/// How the `beta` copies of one transaction are laid out.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReplicaPlacement {
    /// Copies go to distinct chunks as chosen by the policy.
    #[default]
    Distinct,
    /// All copies stay in the anchor chunk (`id mod alpha` or the first
    /// hash). Costs storage without adding schedulable chunks.
    SameChunk,
}

/// Time charged for one `get_predecessors` call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LookupCost {
    Constant(f64),
    /// `scale * log2(entries_in_chunk + 1)`, a search-tree shaped cost.
    Logarithmic {
        scale: f64,
    },
}

impl Default for LookupCost {
    fn default() -> Self {
        LookupCost::Constant(1.0)
    }
}

impl LookupCost {
    pub fn for_chunk_len(&self, len: usize) -> f64 {
        match *self {
            LookupCost::Constant(c) => c,
            LookupCost::Logarithmic { scale } => scale * ((len + 1) as f64).log2(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, LookupCost::Constant(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkStoreConfig {
    /// Number of chunks.
    pub alpha: usize,
    /// Total copies per transaction (the original plus `beta - 1` replicas).
    pub beta: usize,
    pub policy: AllocationPolicy,
    pub placement: ReplicaPlacement,
    pub lookup_cost: LookupCost,
    /// Index storage per chunk, in entry-equivalents.
    pub per_chunk_index_overhead: f64,
}

impl ChunkStoreConfig {
    pub fn new(alpha: usize, beta: usize, policy: AllocationPolicy) -> Self {
        ChunkStoreConfig {
            alpha,
            beta,
            policy,
            placement: ReplicaPlacement::Distinct,
            lookup_cost: LookupCost::default(),
            per_chunk_index_overhead: 0.0,
        }
    }

    /// The sequential reference layout: one chunk, one copy.
    pub fn baseline() -> Self {
        Self::new(1, 1, AllocationPolicy::Modulo)
    }

    /// `beta` replicas expressed the way the CLI and reports count them.
    pub fn with_replicas(alpha: usize, replicas: usize, policy: AllocationPolicy) -> Self {
        Self::new(alpha, replicas + 1, policy)
    }

    pub fn replicas(&self) -> usize {
        self.beta.saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if self.alpha == 0 {
            return Err(StoreError::InvalidConfig("alpha must be at least 1".into()));
        }
        if self.alpha > u32::MAX as usize {
            return Err(StoreError::InvalidConfig(
                "alpha does not fit in a chunk id".into(),
            ));
        }
        if self.beta == 0 {
            return Err(StoreError::InvalidConfig("beta must be at least 1".into()));
        }
        if self.per_chunk_index_overhead.is_nan() || self.per_chunk_index_overhead < 0.0 {
            return Err(StoreError::InvalidConfig(
                "per-chunk index overhead must be non-negative".into(),
            ));
        }
        let cost_ok = match self.lookup_cost {
            LookupCost::Constant(c) => c > 0.0,
            LookupCost::Logarithmic { scale } => scale > 0.0,
        };
        if !cost_ok {
            return Err(StoreError::InvalidConfig(
                "lookup cost must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Anchor chunk `id mod alpha`; replica `r` goes to `(anchor + r) mod alpha`.
/// Returns `min(beta, alpha)` distinct chunks.
pub fn allocate_modulo(id: TxId, alpha: usize, beta: usize) -> Vec<ChunkId> {
    let alpha64 = alpha as u64;
    let anchor = id.0 % alpha64;
    (0..beta.min(alpha) as u64)
        .map(|r| ChunkId(((anchor + r) % alpha64) as u32))
        .collect()
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed 64-bit hash of `(seed, replica, id)`.
pub fn replica_hash(seed: u64, replica: u64, id: TxId) -> u64 {
    let mut h = mix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix64(h ^ replica.wrapping_mul(0xd6e8_feb8_6659_fd93));
    mix64(h ^ id.0)
}

/// Replica `r` lands on `replica_hash(seed, r, id) mod alpha`. Repeated
/// chunks are kept once, first occurrence order.
pub fn allocate_hashed(id: TxId, alpha: usize, beta: usize, seed: u64) -> Vec<ChunkId> {
    let mut out: Vec<ChunkId> = Vec::with_capacity(beta.min(alpha));
    for r in 0..beta as u64 {
        let ck = ChunkId((replica_hash(seed, r, id) % alpha as u64) as u32);
        if !out.contains(&ck) {
            out.push(ck);
            if out.len() == alpha {
                break;
            }
        }
    }
    out
}

/// Counts `get_predecessors` calls. Shareable across worker threads.
#[derive(Debug, Default)]
pub struct LookupMeter {
    calls: AtomicU64,
}

impl LookupMeter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn charge(&self) {
        self.calls.fetch_add(1, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageStats {
    pub total_entries: usize,
    pub index_overhead: f64,
    pub per_chunk_entries: Vec<usize>,
    pub storage_ratio: f64,
}

/// Chunked, replicated view of a ledger. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkStore {
    ledger: Arc<Ledger>,
    config: ChunkStoreConfig,
    // Chunks holding each transaction, indexed by ledger position.
    placement_offsets: Vec<u32>,
    placements: Vec<ChunkId>,
    // Per chunk: (id, ledger position), sorted by id.
    chunks: Vec<Vec<(TxId, u32)>>,
}

impl ChunkStore {
    pub fn build(ledger: Arc<Ledger>, config: ChunkStoreConfig) -> Result<Self, StoreError> {
        config.validate()?;
        let alpha = config.alpha;
        let per_chunk_hint = ledger.len() * config.beta.min(alpha) / alpha + 1;
        let mut chunks: Vec<Vec<(TxId, u32)>> = (0..alpha)
            .map(|_| Vec::with_capacity(per_chunk_hint))
            .collect();
        let mut placement_offsets = Vec::with_capacity(ledger.len() + 1);
        let mut placements = Vec::with_capacity(ledger.len() * config.beta.min(alpha));
        placement_offsets.push(0u32);

        for (pos, tx) in ledger.transactions().iter().enumerate() {
            let chunks_for_tx = config.policy.allocate(tx.id, alpha, config.beta);
            match config.placement {
                ReplicaPlacement::Distinct => {
                    for &ck in &chunks_for_tx {
                        chunks[ck.0 as usize].push((tx.id, pos as u32));
                    }
                    placements.extend_from_slice(&chunks_for_tx);
                }
                ReplicaPlacement::SameChunk => {
                    let anchor = chunks_for_tx[0];
                    for _ in 0..config.beta {
                        chunks[anchor.0 as usize].push((tx.id, pos as u32));
                    }
                    placements.push(anchor);
                }
            }
            placement_offsets.push(placements.len() as u32);
        }
        for chunk in &mut chunks {
            // Stable, so same-chunk duplicates stay adjacent in insertion order.
            chunk.sort_by_key(|&(id, _)| id);
        }
        Ok(ChunkStore {
            ledger,
            config,
            placement_offsets,
            placements,
            chunks,
        })
    }

    pub fn config(&self) -> &ChunkStoreConfig {
        &self.config
    }

    pub fn ledger(&self) -> &Arc<Ledger> {
        &self.ledger
    }

    pub fn alpha(&self) -> usize {
        self.config.alpha
    }

    pub fn contains(&self, id: TxId) -> bool {
        self.ledger.contains(id)
    }

    /// Chunks that hold a copy of `id`, in allocation order.
    pub fn chunks_of(&self, id: TxId) -> Result<&[ChunkId], StoreError> {
        let pos = self.ledger.position(id).ok_or(StoreError::UnknownId(id))?;
        let lo = self.placement_offsets[pos] as usize;
        let hi = self.placement_offsets[pos + 1] as usize;
        Ok(&self.placements[lo..hi])
    }

    /// Ids stored in `chunk`, ascending, with duplicates if the placement
    /// keeps several copies there.
    pub fn chunk_ids(&self, chunk: ChunkId) -> impl Iterator<Item = TxId> + '_ {
        self.chunks
            .get(chunk.0 as usize)
            .into_iter()
            .flat_map(|c| c.iter().map(|&(id, _)| id))
    }

    pub fn chunk_len(&self, chunk: ChunkId) -> usize {
        self.chunks.get(chunk.0 as usize).map_or(0, Vec::len)
    }

    /// Reads the direct predecessors of `id` out of `chunk`, charging one
    /// lookup to `meter`.
    pub fn get_predecessors(
        &self,
        chunk: ChunkId,
        id: TxId,
        meter: &LookupMeter,
    ) -> Result<&[TxId], StoreError> {
        let entries = self
            .chunks
            .get(chunk.0 as usize)
            .ok_or(StoreError::NotInChunk { id, chunk })?;
        let idx = entries
            .binary_search_by_key(&id, |&(k, _)| k)
            .map_err(|_| StoreError::NotInChunk { id, chunk })?;
        meter.charge();
        let pos = entries[idx].1 as usize;
        Ok(&self.ledger.transactions()[pos].predecessors)
    }

    /// Time charged for one lookup against `chunk` under the configured
    /// cost model.
    pub fn lookup_cost(&self, chunk: ChunkId) -> f64 {
        self.config.lookup_cost.for_chunk_len(self.chunk_len(chunk))
    }

    pub fn storage_report(&self) -> StorageStats {
        let per_chunk_entries: Vec<usize> = self.chunks.iter().map(Vec::len).collect();
        let total_entries: usize = per_chunk_entries.iter().sum();
        let index_overhead = self.config.alpha as f64 * self.config.per_chunk_index_overhead;
        let n = self.ledger.len();
        let storage_ratio = if n == 0 {
            0.0
        } else {
            (total_entries as f64 + index_overhead) / n as f64
        };
        StorageStats {
            total_entries,
            index_overhead,
            per_chunk_entries,
            storage_ratio,
        }
    }

    /// Writes a versioned binary snapshot of the store, ledger included.
    pub fn write_snapshot(&self, mut w: impl Write) -> Result<(), StoreError> {
        let io = |e: std::io::Error| StoreError::Snapshot(e.to_string());
        let mut buf = Vec::new();
        buf.extend_from_slice(SNAPSHOT_MAGIC);
        buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        let config =
            serde_json::to_vec(&self.config).map_err(|e| StoreError::Snapshot(e.to_string()))?;
        put_u64(&mut buf, config.len() as u64);
        buf.extend_from_slice(&config);
        put_u64(&mut buf, self.ledger.len() as u64);
        for tx in self.ledger.transactions() {
            put_u64(&mut buf, tx.id.0);
            put_u64(&mut buf, tx.predecessors.len() as u64);
            for p in &tx.predecessors {
                put_u64(&mut buf, p.0);
            }
        }
        w.write_all(&buf).map_err(io)?;
        w.flush().map_err(io)
    }

    /// Reads a snapshot written by [`ChunkStore::write_snapshot`]; the chunk
    /// layout is rebuilt from the recorded configuration.
    pub fn read_snapshot(mut r: impl Read) -> Result<Self, StoreError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| StoreError::Snapshot(e.to_string()))?;
        let mut cur = Cursor {
            bytes: &bytes,
            at: 0,
        };
        if cur.take(SNAPSHOT_MAGIC.len())? != SNAPSHOT_MAGIC {
            return Err(StoreError::Snapshot("bad magic".into()));
        }
        let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
        if version != SNAPSHOT_VERSION {
            return Err(StoreError::Snapshot(format!(
                "unsupported version {version}"
            )));
        }
        let config_len = cur.u64()? as usize;
        let config: ChunkStoreConfig = serde_json::from_slice(cur.take(config_len)?)
            .map_err(|e| StoreError::Snapshot(e.to_string()))?;
        let n = cur.u64()? as usize;
        let mut ledger = Ledger::new();
        for _ in 0..n {
            let id = TxId(cur.u64()?);
            let k = cur.u64()? as usize;
            let preds = (0..k)
                .map(|_| cur.u64().map(TxId))
                .collect::<Result<Vec<_>, _>>()?;
            ledger
                .append(Transaction {
                    id,
                    predecessors: preds,
                })
                .map_err(|e| StoreError::Snapshot(e.to_string()))?;
        }
        if cur.at != bytes.len() {
            return Err(StoreError::Snapshot("trailing bytes".into()));
        }
        ChunkStore::build(Arc::new(ledger), config)
    }
}

const SNAPSHOT_MAGIC: &[u8] = b"CHTRSNAP";
const SNAPSHOT_VERSION: u16 = 1;

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| StoreError::Snapshot("truncated".into()))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Distinct-chunk check used by tests and debug assertions.
pub fn is_distinct(chunks: &[ChunkId]) -> bool {
    let mut seen = HashSet::with_capacity(chunks.len());
    chunks.iter().all(|c| seen.insert(*c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::diamond;

    fn cks(v: &[u32]) -> Vec<ChunkId> {
        v.iter().copied().map(ChunkId).collect()
    }

    fn store(alpha: usize, beta: usize, policy: AllocationPolicy) -> ChunkStore {
        ChunkStore::build(
            Arc::new(diamond()),
            ChunkStoreConfig::new(alpha, beta, policy),
        )
        .unwrap()
    }

    #[test]
    fn modulo_allocation_examples() {
        assert_eq!(allocate_modulo(TxId(7), 3, 1), cks(&[1]));
        assert_eq!(allocate_modulo(TxId(7), 3, 3), cks(&[1, 2, 0]));
        assert_eq!(allocate_modulo(TxId(4), 1, 2), cks(&[0]));
    }

    #[test]
    fn modulo_matches_enumerated_successors() {
        // Walk forward from the anchor one chunk at a time, skipping chunks
        // already used, until min(beta, alpha) are collected.
        for alpha in 1..=9usize {
            for beta in 1..=12usize {
                for id in 0..40u64 {
                    let mut expect = Vec::new();
                    let mut c = (id % alpha as u64) as u32;
                    while expect.len() < beta.min(alpha) {
                        if !expect.contains(&ChunkId(c)) {
                            expect.push(ChunkId(c));
                        }
                        c = (c + 1) % alpha as u32;
                    }
                    assert_eq!(allocate_modulo(TxId(id), alpha, beta), expect);
                }
            }
        }
    }

    #[test]
    fn hashed_allocation_examples() {
        for id in 0..50 {
            assert_eq!(allocate_hashed(TxId(id), 1, 4, id * 3), cks(&[0]));
        }
        let golden = allocate_hashed(TxId(42), 8, 3, 0);
        assert_eq!(golden, cks(&[1, 2, 7]));
        assert_eq!(allocate_hashed(TxId(42), 8, 3, 0), golden);
        assert_ne!(allocate_hashed(TxId(42), 8, 3, 1), golden);
    }

    #[test]
    fn hashed_allocation_is_distinct_and_bounded() {
        for id in 0..500 {
            for (alpha, beta) in [(2, 5), (8, 3), (16, 3), (3, 3)] {
                let a = allocate_hashed(TxId(id), alpha, beta, 9);
                assert!(!a.is_empty() && a.len() <= beta.min(alpha));
                assert!(is_distinct(&a));
                assert!(a.iter().all(|c| (c.0 as usize) < alpha));
            }
        }
    }

    #[test]
    fn build_store_diamond_mod2() {
        let s = store(2, 1, AllocationPolicy::Modulo);
        let ids = |c| s.chunk_ids(ChunkId(c)).map(|t| t.0).collect::<Vec<_>>();
        assert_eq!(ids(0), vec![2, 4]);
        assert_eq!(ids(1), vec![1, 3, 5]);
    }

    #[test]
    fn build_store_full_replication() {
        let s = store(3, 3, AllocationPolicy::Modulo);
        for c in 0..3 {
            assert_eq!(s.chunk_len(ChunkId(c)), 5);
        }
        assert_eq!(s.storage_report().total_entries, 15);
    }

    #[test]
    fn get_predecessors_examples() {
        let s = store(2, 1, AllocationPolicy::Modulo);
        let m = LookupMeter::new();
        assert_eq!(
            s.get_predecessors(ChunkId(1), TxId(5), &m).unwrap(),
            &[TxId(1), TxId(4)]
        );
        assert!(s
            .get_predecessors(ChunkId(1), TxId(1), &m)
            .unwrap()
            .is_empty());
        assert_eq!(
            s.get_predecessors(ChunkId(0), TxId(5), &m),
            Err(StoreError::NotInChunk {
                id: TxId(5),
                chunk: ChunkId(0)
            })
        );
        assert_eq!(m.calls(), 2);
        assert!(matches!(
            s.get_predecessors(ChunkId(7), TxId(5), &m),
            Err(StoreError::NotInChunk { .. })
        ));
    }

    #[test]
    fn storage_report_examples() {
        let s = store(1, 1, AllocationPolicy::Modulo);
        assert_eq!(s.storage_report().storage_ratio, 1.0);

        let ledger = Arc::new(crate::testing::roots(1000));
        let s = ChunkStore::build(
            ledger.clone(),
            ChunkStoreConfig::new(4, 3, AllocationPolicy::Modulo),
        )
        .unwrap();
        let r = s.storage_report();
        assert_eq!(r.storage_ratio, 3.0);
        assert_eq!(r.per_chunk_entries.iter().sum::<usize>(), r.total_entries);

        let s = ChunkStore::build(
            ledger.clone(),
            ChunkStoreConfig::new(16, 3, AllocationPolicy::Hashed { seed: 0 }),
        )
        .unwrap();
        assert!(s.storage_report().storage_ratio <= 3.0);

        let mut cfg = ChunkStoreConfig::new(4, 2, AllocationPolicy::Modulo);
        cfg.per_chunk_index_overhead = 5.0;
        let r = ChunkStore::build(ledger, cfg).unwrap().storage_report();
        assert_eq!(r.index_overhead, 20.0);
        assert_eq!(r.storage_ratio, (2000.0 + 20.0) / 1000.0);
    }

    #[test]
    fn same_chunk_placement_keeps_copies_together() {
        let mut cfg = ChunkStoreConfig::new(3, 3, AllocationPolicy::Modulo);
        cfg.placement = ReplicaPlacement::SameChunk;
        let s = ChunkStore::build(Arc::new(diamond()), cfg).unwrap();
        assert_eq!(s.chunks_of(TxId(5)).unwrap(), &[ChunkId(2)]);
        assert_eq!(s.storage_report().total_entries, 15);
        assert_eq!(s.chunk_ids(ChunkId(2)).filter(|&t| t == TxId(5)).count(), 3);
        let m = LookupMeter::new();
        assert!(s.get_predecessors(ChunkId(0), TxId(5), &m).is_err());
        assert_eq!(
            s.get_predecessors(ChunkId(2), TxId(5), &m).unwrap().len(),
            2
        );
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let l = Arc::new(diamond());
        for cfg in [
            ChunkStoreConfig::new(0, 1, AllocationPolicy::Modulo),
            ChunkStoreConfig::new(1, 0, AllocationPolicy::Modulo),
            ChunkStoreConfig {
                lookup_cost: LookupCost::Constant(0.0),
                ..ChunkStoreConfig::baseline()
            },
        ] {
            assert!(matches!(
                ChunkStore::build(l.clone(), cfg),
                Err(StoreError::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn snapshot_roundtrip_and_corruption() {
        let s = store(3, 2, AllocationPolicy::Hashed { seed: 11 });
        let mut buf = Vec::new();
        s.write_snapshot(&mut buf).unwrap();
        let back = ChunkStore::read_snapshot(&buf[..]).unwrap();
        assert_eq!(back, s);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(ChunkStore::read_snapshot(&bad[..]).is_err());
        assert!(ChunkStore::read_snapshot(&buf[..buf.len() - 3]).is_err());
        let mut v2 = buf.clone();
        v2[SNAPSHOT_MAGIC.len()] = 2;
        assert!(ChunkStore::read_snapshot(&v2[..]).is_err());
    }

    #[test]
    fn logarithmic_cost_tracks_chunk_size() {
        let mut cfg = ChunkStoreConfig::new(2, 1, AllocationPolicy::Modulo);
        cfg.lookup_cost = LookupCost::Logarithmic { scale: 1.0 };
        let s = ChunkStore::build(Arc::new(diamond()), cfg).unwrap();
        assert_eq!(s.lookup_cost(ChunkId(1)), 2.0); // 3 entries
        assert!((s.lookup_cost(ChunkId(0)) - 3f64.log2()).abs() < 1e-12);
    }
}
