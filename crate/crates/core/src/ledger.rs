//! Append-only transaction ledger, its DAG view, and a brute-force
//! predecessor oracle.
//!
//! A transaction names the identifiers of its direct predecessors. Every
//! predecessor must already be on the ledger when the transaction is
//! appended, so list position induces a topological order and the
//! predecessor graph is acyclic by construction.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Transaction identifier. Unique within a ledger, not necessarily dense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TxId(pub u64);

impl fmt::Display for TxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for TxId {
    fn from(v: u64) -> Self {
        TxId(v)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("transaction {0} is already on the ledger")]
    DuplicateId(TxId),
    #[error("transaction {id} names predecessor {pred}, which is not on the ledger")]
    UnknownPredecessor { id: TxId, pred: TxId },
    #[error("transaction {0} lists itself as a predecessor")]
    SelfReference(TxId),
    #[error("transaction {id} lists predecessor {pred} more than once")]
    DuplicatePredecessor { id: TxId, pred: TxId },
    #[error("transaction {0} is not on the ledger")]
    UnknownId(TxId),
    #[error("ledger line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("ledger i/o: {0}")]
    Io(String),
}

impl LedgerError {
    pub fn class(&self) -> &'static str {
        match self {
            LedgerError::DuplicateId(_) => "DuplicateId",
            LedgerError::UnknownPredecessor { .. } => "UnknownPredecessor",
            LedgerError::SelfReference(_) => "SelfReference",
            LedgerError::DuplicatePredecessor { .. } => "DuplicatePredecessor",
            LedgerError::UnknownId(_) => "UnknownId",
            LedgerError::Parse { .. } => "ParseError",
            LedgerError::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for LedgerError {
    fn from(e: std::io::Error) -> Self {
        LedgerError::Io(e.to_string())
    }
}

/// A transaction: identifier plus direct predecessors.
///
/// Predecessors are kept in the order given; validation against
/// duplicates and self-reference happens on [`Ledger::append`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: TxId,
    #[serde(rename = "preds")]
    pub predecessors: Vec<TxId>,
}

impl Transaction {
    pub fn new(id: impl Into<TxId>, predecessors: impl IntoIterator<Item = u64>) -> Self {
        Transaction {
            id: id.into(),
            predecessors: predecessors.into_iter().map(TxId).collect(),
        }
    }

    pub fn root(id: impl Into<TxId>) -> Self {
        Transaction {
            id: id.into(),
            predecessors: Vec::new(),
        }
    }
}

/// Totally ordered, append-only list of transactions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    transactions: Vec<Transaction>,
    positions: HashMap<TxId, usize>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a ledger by appending every transaction in order.
    pub fn from_transactions(
        txs: impl IntoIterator<Item = Transaction>,
    ) -> Result<Self, LedgerError> {
        let mut ledger = Ledger::new();
        for tx in txs {
            ledger.append(tx)?;
        }
        Ok(ledger)
    }

    /// Appends `tx`. On error the ledger is left untouched.
    pub fn append(&mut self, tx: Transaction) -> Result<(), LedgerError> {
        if self.positions.contains_key(&tx.id) {
            return Err(LedgerError::DuplicateId(tx.id));
        }
        let mut seen = HashSet::with_capacity(tx.predecessors.len());
        for &pred in &tx.predecessors {
            if pred == tx.id {
                return Err(LedgerError::SelfReference(tx.id));
            }
            if !seen.insert(pred) {
                return Err(LedgerError::DuplicatePredecessor { id: tx.id, pred });
            }
            if !self.positions.contains_key(&pred) {
                return Err(LedgerError::UnknownPredecessor { id: tx.id, pred });
            }
        }
        self.positions.insert(tx.id, self.transactions.len());
        self.transactions.push(tx);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    pub fn contains(&self, id: TxId) -> bool {
        self.positions.contains_key(&id)
    }

    /// Ledger position of `id`.
    pub fn position(&self, id: TxId) -> Option<usize> {
        self.positions.get(&id).copied()
    }

    pub fn get(&self, id: TxId) -> Option<&Transaction> {
        self.position(id).map(|p| &self.transactions[p])
    }

    pub fn predecessors(&self, id: TxId) -> Result<&[TxId], LedgerError> {
        self.get(id)
            .map(|tx| tx.predecessors.as_slice())
            .ok_or(LedgerError::UnknownId(id))
    }

    pub fn ids(&self) -> impl DoubleEndedIterator<Item = TxId> + ExactSizeIterator + '_ {
        self.transactions.iter().map(|t| t.id)
    }

    /// One vertex per transaction, one edge `pred -> tx` per predecessor.
    pub fn build_dag(&self) -> DagView {
        let vertices = self.ids().collect();
        let edges = self
            .transactions
            .iter()
            .flat_map(|tx| tx.predecessors.iter().map(move |&p| (p, tx.id)))
            .collect();
        DagView { vertices, edges }
    }

    /// Number of BFS levels below (and including) `id`: 1 for a root,
    /// otherwise one more than the largest shortest-path hop count to any
    /// predecessor. A round-based tracer needs at least this many rounds.
    pub fn dependency_depth(&self, id: TxId) -> Result<usize, LedgerError> {
        self.predecessors(id)?;
        let mut seen = HashSet::new();
        seen.insert(id);
        let mut frontier = vec![id];
        let mut levels = 0;
        while !frontier.is_empty() {
            levels += 1;
            let mut next = Vec::new();
            for u in frontier {
                for &v in &self.transactions[self.positions[&u]].predecessors {
                    if seen.insert(v) {
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        Ok(levels)
    }

    /// Reads a JSON Lines ledger (`{"id": .., "preds": [..]}` per line).
    pub fn read_jsonl(reader: impl BufRead) -> Result<Self, LedgerError> {
        let mut ledger = Ledger::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let tx: Transaction = serde_json::from_str(&line).map_err(|e| LedgerError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            ledger.append(tx)?;
        }
        Ok(ledger)
    }

    pub fn write_jsonl(&self, mut writer: impl Write) -> Result<(), LedgerError> {
        for tx in &self.transactions {
            serde_json::to_writer(&mut writer, tx).map_err(|e| LedgerError::Io(e.to_string()))?;
            writer.write_all(b"\n")?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, LedgerError> {
        let file = std::fs::File::open(path)?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<(), LedgerError> {
        let file = std::fs::File::create(path)?;
        self.write_jsonl(std::io::BufWriter::new(file))
    }
}

/// Explicit graph form of a ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DagView {
    pub vertices: Vec<TxId>,
    pub edges: Vec<(TxId, TxId)>,
}

impl DagView {
    /// Kahn's algorithm; true iff every vertex gets popped.
    pub fn is_acyclic(&self) -> bool {
        let mut indegree: HashMap<TxId, usize> = self.vertices.iter().map(|&v| (v, 0)).collect();
        let mut out: HashMap<TxId, Vec<TxId>> = HashMap::new();
        for &(from, to) in &self.edges {
            *indegree.entry(to).or_default() += 1;
            indegree.entry(from).or_default();
            out.entry(from).or_default().push(to);
        }
        let mut queue: VecDeque<TxId> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&v, _)| v)
            .collect();
        let mut popped = 0;
        while let Some(v) = queue.pop_front() {
            popped += 1;
            for &w in out.get(&v).map(Vec::as_slice).unwrap_or(&[]) {
                let d = indegree.get_mut(&w).unwrap();
                *d -= 1;
                if *d == 0 {
                    queue.push_back(w);
                }
            }
        }
        popped == indegree.len()
    }
}

/// All direct and indirect predecessors of `id`, by reverse DFS over the
/// ledger. Intended as a reference result, not for speed.
pub fn oracle_all_predecessors(ledger: &Ledger, id: TxId) -> Result<BTreeSet<TxId>, LedgerError> {
    let mut found = BTreeSet::new();
    let mut stack: Vec<TxId> = ledger.predecessors(id)?.to_vec();
    while let Some(v) = stack.pop() {
        if found.insert(v) {
            stack.extend_from_slice(ledger.predecessors(v)?);
        }
    }
    Ok(found)
}
