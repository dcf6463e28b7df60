//! Conflict-free batching of pending lookups.
//!
//! Pending transactions and chunks form a bipartite graph with an edge
//! wherever a chunk holds a copy of the transaction. A maximum-cardinality
//! matching of that graph is the largest set of lookups that can run at
//! once with at most one lookup per chunk.

use thiserror::Error;

use crate::chunk_store::{ChunkId, ChunkStore, StoreError};
use crate::ledger::TxId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("transaction {0} is not in the store")]
    UnknownId(TxId),
}

impl From<StoreError> for ScheduleError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::UnknownId(id) | StoreError::NotInChunk { id, .. } => {
                ScheduleError::UnknownId(id)
            }
            // chunks_of only reports unknown ids
            other => unreachable!("unexpected store error {other}"),
        }
    }
}

/// Pending transactions (left) against chunks (right).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestGraph {
    /// Pending ids, ascending.
    pub left: Vec<TxId>,
    /// Number of chunks; right vertices are `ck0..ck{alpha-1}`.
    pub alpha: usize,
    /// `adjacency[i]` lists the chunks holding `left[i]`, ascending.
    pub adjacency: Vec<Vec<ChunkId>>,
}

impl RequestGraph {
    /// Graph from explicit edges. Edges are deduplicated and sorted; ids
    /// with no edge still become left vertices if listed in `left`.
    pub fn from_edges(
        left: impl IntoIterator<Item = TxId>,
        alpha: usize,
        edges: &[(TxId, ChunkId)],
    ) -> Self {
        let mut left: Vec<TxId> = left.into_iter().collect();
        left.sort_unstable();
        left.dedup();
        let mut adjacency = vec![Vec::new(); left.len()];
        for &(u, v) in edges {
            if let Ok(i) = left.binary_search(&u) {
                adjacency[i].push(v);
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        RequestGraph {
            left,
            alpha,
            adjacency,
        }
    }

    pub fn right(&self) -> impl Iterator<Item = ChunkId> {
        (0..self.alpha as u32).map(ChunkId)
    }

    pub fn edges(&self) -> impl Iterator<Item = (TxId, ChunkId)> + '_ {
        self.left
            .iter()
            .zip(&self.adjacency)
            .flat_map(|(&u, adj)| adj.iter().map(move |&v| (u, v)))
    }

    pub fn has_edge(&self, u: TxId, v: ChunkId) -> bool {
        self.left
            .binary_search(&u)
            .map(|i| self.adjacency[i].binary_search(&v).is_ok())
            .unwrap_or(false)
    }
}

/// A matching: no transaction and no chunk appears twice.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    /// Sorted by transaction id.
    pub pairs: Vec<(TxId, ChunkId)>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Request graph for `pending` built from the store's actual placement.
pub fn build_request_graph<'a>(
    pending: impl IntoIterator<Item = &'a TxId>,
    store: &ChunkStore,
) -> Result<RequestGraph, ScheduleError> {
    let mut left: Vec<TxId> = pending.into_iter().copied().collect();
    left.sort_unstable();
    left.dedup();
    let adjacency = left
        .iter()
        .map(|&id| {
            let mut adj = store.chunks_of(id)?.to_vec();
            adj.sort_unstable();
            Ok(adj)
        })
        .collect::<Result<Vec<_>, ScheduleError>>()?;
    Ok(RequestGraph {
        left,
        alpha: store.alpha(),
        adjacency,
    })
}

/// Maximum-cardinality matching by augmenting paths.
///
/// Left vertices are tried in ascending id order and each one explores its
/// chunks in ascending order, so the result is a pure function of the
/// graph. Stops as soon as every chunk is busy.
pub fn maximum_matching(graph: &RequestGraph) -> Assignment {
    const FREE: usize = usize::MAX;
    let mut owner = vec![FREE; graph.alpha];
    let mut matched = 0usize;
    let mut visited = vec![0u32; graph.alpha];
    let mut stamp = 0u32;

    fn augment(
        u: usize,
        graph: &RequestGraph,
        owner: &mut [usize],
        visited: &mut [u32],
        stamp: u32,
    ) -> bool {
        for &v in &graph.adjacency[u] {
            let v = v.0 as usize;
            if v >= owner.len() || visited[v] == stamp {
                continue;
            }
            visited[v] = stamp;
            if owner[v] == usize::MAX || augment(owner[v], graph, owner, visited, stamp) {
                owner[v] = u;
                return true;
            }
        }
        false
    }

    for u in 0..graph.left.len() {
        if matched == graph.alpha {
            break;
        }
        stamp += 1;
        if augment(u, graph, &mut owner, &mut visited, stamp) {
            matched += 1;
        }
    }

    let mut pairs: Vec<(TxId, ChunkId)> = owner
        .iter()
        .enumerate()
        .filter(|&(_, &u)| u != FREE)
        .map(|(v, &u)| (graph.left[u], ChunkId(v as u32)))
        .collect();
    pairs.sort_unstable();
    Assignment { pairs }
}

/// The batch of lookups to run in one round for `pending`.
pub fn schedule<'a>(
    pending: impl IntoIterator<Item = &'a TxId>,
    store: &ChunkStore,
) -> Result<Assignment, ScheduleError> {
    Ok(maximum_matching(&build_request_graph(pending, store)?))
}
