//! Ledger sources: UTXO-style transaction dumps and a seeded synthetic
//! DAG generator.

use std::collections::HashMap;
use std::io::Read;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{Ledger, LedgerError, Transaction, TxId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("record {key:?} at position {position} follows position {previous}")]
    UnsortedInput {
        key: String,
        position: u64,
        previous: u64,
    },
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

impl IngestError {
    pub fn class(&self) -> &'static str {
        match self {
            IngestError::UnsortedInput { .. } => "UnsortedInput",
            IngestError::MalformedRecord(_) => "MalformedRecord",
            IngestError::InvalidParams(_) => "InvalidParams",
            IngestError::Ledger(e) => e.class(),
        }
    }
}

/// One transaction from a UTXO dump: it spends `inputs` and creates
/// `outputs`, both as opaque outpoint strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtxoRecord {
    pub tx_key: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub position: u64,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    tx_key: String,
    position: u64,
    inputs: String,
    outputs: String,
}

fn split_outpoints(field: &str) -> Vec<String> {
    field
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Streams records from CSV with header `tx_key,position,inputs,outputs`;
/// outpoint lists are `;`-separated.
pub fn read_utxo_csv(reader: impl Read) -> impl Iterator<Item = Result<UtxoRecord, IngestError>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader)
        .into_deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| IngestError::MalformedRecord(e.to_string()))?;
            Ok(UtxoRecord {
                tx_key: row.tx_key,
                inputs: split_outpoints(&row.inputs),
                outputs: split_outpoints(&row.outputs),
                position: row.position,
            })
        })
}

/// Half-open position range `[start, end)`; a missing bound is unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PositionWindow {
    pub start: Option<u64>,
    pub end: Option<u64>,
}

impl PositionWindow {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn contains(&self, r: &UtxoRecord) -> bool {
        self.start.is_none_or(|s| r.position >= s) && self.end.is_none_or(|e| r.position < e)
    }
}

/// Incremental UTXO-to-ledger conversion.
///
/// In-window records get dense ids `1, 2, ...` in position order. A record
/// depends on every earlier in-window record whose output it spends; links
/// to anything outside the window are dropped.
#[derive(Debug, Default)]
pub struct UtxoIngestor {
    ledger: Ledger,
    keys: Vec<String>,
    creators: HashMap<String, TxId>,
    last_position: Option<u64>,
}

impl UtxoIngestor {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an in-window record.
    pub fn push(&mut self, record: UtxoRecord) -> Result<TxId, IngestError> {
        if record.tx_key.is_empty() {
            return Err(IngestError::MalformedRecord("empty tx_key".into()));
        }
        if let Some(prev) = self.last_position {
            if record.position <= prev {
                return Err(IngestError::UnsortedInput {
                    key: record.tx_key,
                    position: record.position,
                    previous: prev,
                });
            }
        }
        let id = TxId(self.ledger.len() as u64 + 1);
        let mut preds: Vec<TxId> = record
            .inputs
            .iter()
            .filter_map(|o| self.creators.get(o).copied())
            .collect();
        preds.sort_unstable();
        preds.dedup();

        let mut own = std::collections::HashSet::new();
        for out in &record.outputs {
            if self.creators.contains_key(out) || !own.insert(out.as_str()) {
                return Err(IngestError::MalformedRecord(format!(
                    "{}: outpoint {out} created twice",
                    record.tx_key
                )));
            }
        }
        if let Some(spent) = record.inputs.iter().find(|i| own.contains(i.as_str())) {
            return Err(IngestError::MalformedRecord(format!(
                "{}: spends its own output {spent}",
                record.tx_key
            )));
        }

        self.ledger.append(Transaction {
            id,
            predecessors: preds,
        })?;
        for out in record.outputs {
            self.creators.insert(out, id);
        }
        self.keys.push(record.tx_key);
        self.last_position = Some(record.position);
        Ok(id)
    }

    /// The ledger plus the source key of each transaction (`keys[i]` is
    /// the key of id `i + 1`).
    pub fn finish(self) -> (Ledger, Vec<String>) {
        (self.ledger, self.keys)
    }
}

/// Converts a position-sorted record stream, keeping records accepted by
/// `window`.
pub fn ingest_utxo<I, F>(records: I, window: F) -> Result<Ledger, IngestError>
where
    I: IntoIterator<Item = Result<UtxoRecord, IngestError>>,
    F: Fn(&UtxoRecord) -> bool,
{
    ingest_utxo_with_keys(records, window).map(|(l, _)| l)
}

pub fn ingest_utxo_with_keys<I, F>(
    records: I,
    window: F,
) -> Result<(Ledger, Vec<String>), IngestError>
where
    I: IntoIterator<Item = Result<UtxoRecord, IngestError>>,
    F: Fn(&UtxoRecord) -> bool,
{
    let mut ing = UtxoIngestor::new();
    for rec in records {
        let rec = rec?;
        if window(&rec) {
            ing.push(rec)?;
        }
    }
    Ok(ing.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IndegreeDistribution {
    /// Uniform over `1..=max_indegree`.
    Uniform,
    /// `P(k)` halves with each step up from 1, truncated at `max_indegree`.
    Geometric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDagParams {
    pub n: usize,
    pub max_indegree: usize,
    pub indegree_distribution: IndegreeDistribution,
    /// Probability that a transaction has no predecessors. The first
    /// transaction is always a root.
    pub root_fraction: f64,
    pub seed: u64,
}

impl SyntheticDagParams {
    /// Many roots and wide fan-in: shallow ancestries with broad frontiers.
    pub fn wide_shallow(n: usize, seed: u64) -> Self {
        SyntheticDagParams {
            n,
            max_indegree: 6,
            indegree_distribution: IndegreeDistribution::Uniform,
            root_fraction: 0.7,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.root_fraction > 0.0 && self.root_fraction <= 1.0) {
            return Err(IngestError::InvalidParams(format!(
                "root_fraction must lie in (0, 1], got {}",
                self.root_fraction
            )));
        }
        Ok(())
    }
}

/// Seeded random ledger with ids `1..=n`. Each non-root draws an in-degree
/// and picks that many distinct earlier transactions uniformly.
pub fn gen_synthetic(params: &SyntheticDagParams) -> Result<Ledger, IngestError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut ledger = Ledger::new();
    for i in 0..params.n {
        let id = TxId(i as u64 + 1);
        let is_root =
            i == 0 || params.max_indegree == 0 || rng.random::<f64>() < params.root_fraction;
        if is_root {
            ledger.append(Transaction::root(id))?;
            continue;
        }
        let k = match params.indegree_distribution {
            IndegreeDistribution::Uniform => rng.random_range(1..=params.max_indegree),
            IndegreeDistribution::Geometric => {
                let mut k = 1;
                while k < params.max_indegree && rng.random_bool(0.5) {
                    k += 1;
                }
                k
            }
        }
        .min(i);
        let mut preds: Vec<TxId> = sample(&mut rng, i, k)
            .into_iter()
            .map(|p| TxId(p as u64 + 1))
            .collect();
        preds.sort_unstable();
        ledger.append(Transaction {
            id,
            predecessors: preds,
        })?;
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(key: &str, pos: u64, ins: &[&str], outs: &[&str]) -> Result<UtxoRecord, IngestError> {
        Ok(UtxoRecord {
            tx_key: key.into(),
            position: pos,
            inputs: ins.iter().map(|s| s.to_string()).collect(),
            outputs: outs.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn bit_example() -> Vec<Result<UtxoRecord, IngestError>> {
        vec![
            rec("Tx1", 10, &["0x00aa"], &["0x0131", "0x0132"]),
            rec("Tx2", 11, &["0x00bb"], &["0x0211"]),
            rec("Tx3", 12, &["0x0132"], &["0x0311"]),
            rec("Tx4", 20, &["0x0311"], &["0x0411"]),
        ]
    }

    #[test]
    fn bit_example_window() {
        let window = PositionWindow {
            start: Some(10),
            end: Some(20),
        };
        let (l, keys) = ingest_utxo_with_keys(bit_example(), |r| window.contains(r)).unwrap();
        assert_eq!(keys, ["Tx1", "Tx2", "Tx3"]);
        assert_eq!(l.len(), 3);
        assert_eq!(l.predecessors(TxId(3)).unwrap(), &[TxId(1)]);
        assert!(l.predecessors(TxId(2)).unwrap().is_empty());
    }

    #[test]
    fn empty_and_unlinked() {
        assert!(ingest_utxo(Vec::new(), |_| true).unwrap().is_empty());
        let l = ingest_utxo(
            vec![rec("a", 1, &[], &["a:0"]), rec("b", 2, &["zz:9"], &["b:0"])],
            |_| true,
        )
        .unwrap();
        assert!(l.predecessors(TxId(2)).unwrap().is_empty());
    }

    #[test]
    fn rejects_unsorted_and_malformed() {
        let r = ingest_utxo(
            vec![rec("a", 5, &[], &["a:0"]), rec("b", 4, &[], &[])],
            |_| true,
        );
        assert!(matches!(r, Err(IngestError::UnsortedInput { .. })));
        let r = ingest_utxo(
            vec![rec("a", 1, &[], &["x"]), rec("b", 2, &[], &["x"])],
            |_| true,
        );
        assert!(matches!(r, Err(IngestError::MalformedRecord(_))));
        let r = ingest_utxo(vec![rec("a", 1, &["x"], &["x"])], |_| true);
        assert!(matches!(r, Err(IngestError::MalformedRecord(_))));
        let r = ingest_utxo(vec![rec("", 1, &[], &[])], |_| true);
        assert!(matches!(r, Err(IngestError::MalformedRecord(_))));
    }

    #[test]
    fn out_of_window_records_are_order_irrelevant() {
        let window = PositionWindow {
            start: Some(10),
            end: Some(20),
        };
        let mut shuffled = bit_example();
        shuffled.insert(0, rec("Tx0", 3, &[], &["0x00aa"]));
        shuffled.swap(0, 4);
        let a = ingest_utxo(bit_example(), |r| window.contains(r)).unwrap();
        let b = ingest_utxo(shuffled, |r| window.contains(r)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_reader_parses_lists() {
        let text = "tx_key,position,inputs,outputs\nt1,1,,t1:0;t1:1\nt2,2,t1:1,t2:0\n";
        let l = ingest_utxo(read_utxo_csv(text.as_bytes()), |_| true).unwrap();
        assert_eq!(l.predecessors(TxId(2)).unwrap(), &[TxId(1)]);
        let bad = "tx_key,position,inputs,outputs\nt1,notanumber,,\n";
        assert!(matches!(
            ingest_utxo(read_utxo_csv(bad.as_bytes()), |_| true),
            Err(IngestError::MalformedRecord(_))
        ));
    }

    #[test]
    fn synthetic_examples() {
        let one = gen_synthetic(&SyntheticDagParams::wide_shallow(1, 99)).unwrap();
        assert_eq!(one.transactions(), &[Transaction::root(1)]);

        let p = SyntheticDagParams {
            n: 1000,
            max_indegree: 3,
            indegree_distribution: IndegreeDistribution::Uniform,
            root_fraction: 0.3,
            seed: 7,
        };
        let (mut a, mut b) = (Vec::new(), Vec::new());
        gen_synthetic(&p).unwrap().write_jsonl(&mut a).unwrap();
        gen_synthetic(&p).unwrap().write_jsonl(&mut b).unwrap();
        assert_eq!(a, b);

        let l = gen_synthetic(&p).unwrap();
        let degrees: Vec<usize> = l
            .transactions()
            .iter()
            .map(|t| t.predecessors.len())
            .filter(|&d| d > 0)
            .collect();
        // Uniform over 1..=3 has expectation exactly 2.0, the edge of the
        // accepted band, so allow three standard errors of sampling noise.
        let n = degrees.len() as f64;
        let mean = degrees.iter().sum::<usize>() as f64 / n;
        let var = degrees
            .iter()
            .map(|&d| (d as f64 - mean).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        let slack = 3.0 * (var / n).sqrt();
        assert!(
            mean >= 1.0 - slack && mean <= 2.0 + slack,
            "mean in-degree {mean} slack {slack}"
        );
        assert!(degrees.iter().all(|&d| d <= 3));
    }

    #[test]
    fn synthetic_geometric_and_params() {
        let p = SyntheticDagParams {
            n: 2000,
            max_indegree: 5,
            indegree_distribution: IndegreeDistribution::Geometric,
            root_fraction: 0.1,
            seed: 1,
        };
        let l = gen_synthetic(&p).unwrap();
        let ones = l
            .transactions()
            .iter()
            .filter(|t| t.predecessors.len() == 1)
            .count();
        let twos = l
            .transactions()
            .iter()
            .filter(|t| t.predecessors.len() == 2)
            .count();
        assert!(ones > twos);

        for rf in [0.0, -1.0, 1.5, f64::NAN] {
            let bad = SyntheticDagParams {
                root_fraction: rf,
                ..p
            };
            assert!(matches!(
                gen_synthetic(&bad),
                Err(IngestError::InvalidParams(_))
            ));
        }
        let all_roots = gen_synthetic(&SyntheticDagParams {
            root_fraction: 1.0,
            ..p
        })
        .unwrap();
        assert!(all_roots
            .transactions()
            .iter()
            .all(|t| t.predecessors.is_empty()));
    }
}
