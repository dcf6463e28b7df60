//! Python bindings: ledgers, chunk stores, traces and sweeps.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use chaintrace::bench::{self, BenchRecord, QuerySelection, SweepSpec};
use chaintrace::ingest::{self, IndegreeDistribution, PositionWindow, SyntheticDagParams};
use chaintrace::trace::{self, ExecutionMode, TraceResult};
use chaintrace::{AllocationPolicy, ChunkStoreConfig, Error, Transaction, TxId};

create_exception!(chaintrace_py, ChaintraceError, PyException);

fn err(e: impl Into<Error>) -> PyErr {
    let e = e.into();
    ChaintraceError::new_err(format!("{}: {e}", e.class()))
}

fn policy(name: &str, seed: u64) -> PyResult<AllocationPolicy> {
    match name {
        "mod" => Ok(AllocationPolicy::Modulo),
        "hash" => Ok(AllocationPolicy::Hashed { seed }),
        other => Err(err(Error::Usage(format!("unknown policy {other:?}")))),
    }
}

fn ids(v: &BTreeSet<TxId>) -> Vec<u64> {
    v.iter().map(|t| t.0).collect()
}

fn trace_dict<'py>(py: Python<'py>, r: &TraceResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("predecessors", ids(&r.predecessors))?;
    d.set_item("lookups", r.lookups)?;
    d.set_item("rounds", r.rounds)?;
    d.set_item("simulated_time", r.simulated_time)?;
    d.set_item("parallel_width_avg", r.parallel_width_avg)?;
    Ok(d)
}

fn record_dict<'py>(py: Python<'py>, r: &BenchRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("alpha", r.alpha)?;
    d.set_item("replicas", r.replicas)?;
    d.set_item("policy", &r.policy)?;
    d.set_item("mean_parallelization_ratio", r.mean_parallelization_ratio)?;
    d.set_item("mean_storage_ratio", r.mean_storage_ratio)?;
    d.set_item("mean_rounds", r.mean_rounds)?;
    d.set_item("mean_lookups", r.mean_lookups)?;
    d.set_item("ratio_std", r.ratio_std)?;
    Ok(d)
}

#[pyclass(name = "Ledger", module = "chaintrace_py", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyLedger {
    inner: Arc<chaintrace::Ledger>,
}

#[pymethods]
impl PyLedger {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyLedger {
            inner: Arc::new(chaintrace::Ledger::load(path).map_err(err)?),
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(err)
    }

    #[pyo3(signature = (id, preds=Vec::new()))]
    fn append(&mut self, id: u64, preds: Vec<u64>) -> PyResult<()> {
        Arc::make_mut(&mut self.inner)
            .append(Transaction::new(id, preds))
            .map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, id: u64) -> bool {
        self.inner.contains(TxId(id))
    }

    fn ids(&self) -> Vec<u64> {
        self.inner.ids().map(|t| t.0).collect()
    }

    fn predecessors(&self, id: u64) -> PyResult<Vec<u64>> {
        Ok(self
            .inner
            .predecessors(TxId(id))
            .map_err(err)?
            .iter()
            .map(|t| t.0)
            .collect())
    }

    /// Every transaction reachable backwards from `id`, excluding itself.
    fn all_predecessors(&self, id: u64) -> PyResult<Vec<u64>> {
        Ok(ids(&chaintrace::oracle_all_predecessors(
            &self.inner,
            TxId(id),
        )
        .map_err(err)?))
    }

    fn dependency_depth(&self, id: u64) -> PyResult<usize> {
        self.inner.dependency_depth(TxId(id)).map_err(err)
    }

    fn is_acyclic(&self) -> bool {
        self.inner.build_dag().is_acyclic()
    }
}

#[pyclass(name = "ChunkStore", module = "chaintrace_py")]
struct PyChunkStore {
    inner: chaintrace::ChunkStore,
}

#[pymethods]
impl PyChunkStore {
    #[new]
    #[pyo3(signature = (ledger, alpha, replicas=0, policy="mod", seed=0, index_overhead=0.0))]
    fn new(
        ledger: &PyLedger,
        alpha: usize,
        replicas: usize,
        policy: &str,
        seed: u64,
        index_overhead: f64,
    ) -> PyResult<Self> {
        let config = ChunkStoreConfig {
            per_chunk_index_overhead: index_overhead,
            ..ChunkStoreConfig::with_replicas(alpha, replicas, self::policy(policy, seed)?)
        };
        Ok(PyChunkStore {
            inner: chaintrace::ChunkStore::build(ledger.inner.clone(), config).map_err(err)?,
        })
    }

    #[getter]
    fn alpha(&self) -> usize {
        self.inner.alpha()
    }

    #[getter]
    fn storage_ratio(&self) -> f64 {
        self.inner.storage_report().storage_ratio
    }

    fn per_chunk_entries(&self) -> Vec<usize> {
        self.inner.storage_report().per_chunk_entries
    }

    fn chunks_of(&self, id: u64) -> PyResult<Vec<u32>> {
        Ok(self
            .inner
            .chunks_of(TxId(id))
            .map_err(err)?
            .iter()
            .map(|c| c.0)
            .collect())
    }

    /// One round's conflict-free lookups as `(id, chunk)` pairs.
    fn schedule(&self, pending: Vec<u64>) -> PyResult<Vec<(u64, u32)>> {
        let pending: BTreeSet<TxId> = pending.into_iter().map(TxId).collect();
        let a = chaintrace::schedule(&pending, &self.inner).map_err(err)?;
        Ok(a.pairs.iter().map(|(t, c)| (t.0, c.0)).collect())
    }

    fn trace_bfs<'py>(&self, py: Python<'py>, id: u64) -> PyResult<Bound<'py, PyDict>> {
        trace_dict(
            py,
            &chaintrace::trace_bfs(&self.inner, TxId(id)).map_err(err)?,
        )
    }

    #[pyo3(signature = (id, threaded=false))]
    fn trace_parallel<'py>(
        &self,
        py: Python<'py>,
        id: u64,
        threaded: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mode = if threaded {
            ExecutionMode::Threaded
        } else {
            ExecutionMode::Simulated
        };
        trace_dict(
            py,
            &trace::trace_parallel_with(&self.inner, TxId(id), mode).map_err(err)?,
        )
    }
}

/// Parallelization ratio of a `(alpha, replicas)` layout against the
/// sequential search.
#[pyfunction]
#[pyo3(signature = (ledger, id, alpha, replicas=0, policy="mod", seed=0))]
fn compare(
    ledger: &PyLedger,
    id: u64,
    alpha: usize,
    replicas: usize,
    policy: &str,
    seed: u64,
) -> PyResult<f64> {
    let config = ChunkStoreConfig::with_replicas(alpha, replicas, self::policy(policy, seed)?);
    Ok(trace::compare(&ledger.inner, config, TxId(id))
        .map_err(err)?
        .parallelization_ratio)
}

#[pyfunction]
#[pyo3(signature = (n, max_indegree=3, distribution="uniform", root_fraction=0.1, seed=0))]
fn gen_synthetic(
    n: usize,
    max_indegree: usize,
    distribution: &str,
    root_fraction: f64,
    seed: u64,
) -> PyResult<PyLedger> {
    let indegree_distribution = match distribution {
        "uniform" => IndegreeDistribution::Uniform,
        "geometric" => IndegreeDistribution::Geometric,
        other => return Err(err(Error::Usage(format!("unknown distribution {other:?}")))),
    };
    let params = SyntheticDagParams {
        n,
        max_indegree,
        indegree_distribution,
        root_fraction,
        seed,
    };
    Ok(PyLedger {
        inner: Arc::new(ingest::gen_synthetic(&params).map_err(err)?),
    })
}

#[pyfunction]
#[pyo3(signature = (n, seed=0))]
fn wide_shallow(n: usize, seed: u64) -> PyResult<PyLedger> {
    Ok(PyLedger {
        inner: Arc::new(
            ingest::gen_synthetic(&SyntheticDagParams::wide_shallow(n, seed)).map_err(err)?,
        ),
    })
}

#[pyfunction]
#[pyo3(signature = (path, start=None, end=None))]
fn ingest_utxo(path: &str, start: Option<u64>, end: Option<u64>) -> PyResult<PyLedger> {
    let window = PositionWindow { start, end };
    let file = File::open(path).map_err(err)?;
    let records = ingest::read_utxo_csv(BufReader::new(file));
    Ok(PyLedger {
        inner: Arc::new(ingest::ingest_utxo(records, |r| window.contains(r)).map_err(err)?),
    })
}

type FitTuple = (Vec<(usize, usize)>, f64, f64);

#[pyclass(name = "Sweep", module = "chaintrace_py")]
struct PySweep {
    records: Vec<BenchRecord>,
}

#[pymethods]
impl PySweep {
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.records.iter().map(|r| record_dict(py, r)).collect()
    }

    fn csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        bench::write_csv(&self.records, &mut buf).map_err(err)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }

    /// `(best alpha per beta, slope, intercept)`.
    fn turning_points(&self) -> PyResult<FitTuple> {
        let fit = bench::find_turning_points(&self.records).map_err(err)?;
        Ok((fit.best_alpha_per_beta, fit.slope, fit.intercept))
    }

    fn summary(&self) -> String {
        bench::summary(
            &self.records,
            bench::find_turning_points(&self.records).ok().as_ref(),
        )
    }
}

#[pyfunction]
#[pyo3(signature = (ledger, alphas, replicas, policy="mod", seed=0, repeats=1, queries=None, deepest=20, index_overhead=0.0))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    ledger: &PyLedger,
    alphas: Vec<usize>,
    replicas: Vec<usize>,
    policy: &str,
    seed: u64,
    repeats: usize,
    queries: Option<Vec<u64>>,
    deepest: usize,
    index_overhead: f64,
) -> PyResult<PySweep> {
    let mut spec = SweepSpec::new(alphas, replicas, self::policy(policy, seed)?);
    spec.repeats = repeats;
    spec.per_chunk_index_overhead = index_overhead;
    spec.queries = match queries {
        Some(q) => QuerySelection::Explicit(q.into_iter().map(TxId).collect()),
        None => QuerySelection::Deepest(deepest),
    };
    Ok(PySweep {
        records: bench::run_sweep(&ledger.inner, &spec).map_err(err)?,
    })
}

#[pymodule]
fn chaintrace_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ChaintraceError", m.py().get_type::<ChaintraceError>())?;
    m.add_class::<PyLedger>()?;
    m.add_class::<PyChunkStore>()?;
    m.add_class::<PySweep>()?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(gen_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(wide_shallow, m)?)?;
    m.add_function(wrap_pyfunction!(ingest_utxo, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
