//! Frozen results on the wide/shallow workload.

use std::sync::{Arc, OnceLock};

use chaintrace::bench::{run_sweep, SweepSpec};
use chaintrace::{gen_synthetic, AllocationPolicy, Ledger, SyntheticDagParams};

fn workload() -> Arc<Ledger> {
    static L: OnceLock<Arc<Ledger>> = OnceLock::new();
    L.get_or_init(|| {
        Arc::new(gen_synthetic(&SyntheticDagParams::wide_shallow(100_000, 1)).unwrap())
    })
    .clone()
}

#[test]
fn wide_workload_golden_cell() {
    let spec = SweepSpec::new(vec![13], vec![8], AllocationPolicy::Modulo);
    let r = &run_sweep(&workload(), &spec).unwrap()[0];
    assert!(r.mean_parallelization_ratio > 3.0);
    assert!((r.mean_parallelization_ratio - 11.280233215211606).abs() < 1e-12);
    assert_eq!(r.mean_rounds, 33.2);
    assert_eq!(r.mean_lookups, 374.85);
    assert_eq!(r.mean_storage_ratio, 9.0);
}

#[test]
fn replicas_do_not_hurt_on_the_wide_workload() {
    let mut spec = SweepSpec::new(
        (2..=20).collect(),
        vec![0, 1, 2],
        AllocationPolicy::Hashed { seed: 1 },
    );
    spec.repeats = 20;
    let records = run_sweep(&workload(), &spec).unwrap();
    for cell in records.chunks(3) {
        let ratios: Vec<f64> = cell.iter().map(|r| r.mean_parallelization_ratio).collect();
        assert!(
            ratios.windows(2).all(|w| w[1] >= w[0]),
            "alpha {}: {ratios:?}",
            cell[0].alpha
        );
    }
}
