//! Run the same read-heavy workload against the learned index and a B+tree
//! and compare throughput, latency, and how many bytes each spends on the
//! structure above the data.

use alex::bench::dataset::gen_uniform64;
use alex::bench::workload::{run_workload, Mix, WorkloadSpec};
use alex::btree::BPlusTree;
use alex::{Alex, AlexConfig};

fn main() {
    let keys = gen_uniform64(1_000_000, 23);
    let spec = WorkloadSpec {
        init_keys: 800_000,
        mix: Mix::ReadHeavy,
        op_budget: Some(400_000),
        seed: 23,
        ..WorkloadSpec::default()
    };

    let alex = run_workload(
        |pairs| Alex::<u64>::bulk_load(pairs, AlexConfig::default()),
        &keys,
        "uniform64",
        &spec,
    )
    .unwrap();

    // pick the page size that reads fastest for this workload
    let btree = [256usize, 1024, 4096, 16384]
        .iter()
        .map(|&page| {
            run_workload(
                |pairs| Ok(BPlusTree::<u64>::bulk_load(page, pairs)),
                &keys,
                "uniform64",
                &spec,
            )
            .unwrap()
        })
        .max_by(|a, b| a.ops_per_second.total_cmp(&b.ops_per_second))
        .unwrap();

    println!(
        "{:<22} {:>14} {:>12} {:>12} {:>14}",
        "index", "ops/sec", "p50 ns", "p99 ns", "index bytes"
    );
    for r in [&alex, &btree] {
        println!(
            "{:<22} {:>14.0} {:>12} {:>12} {:>14}",
            r.index, r.ops_per_second, r.latency_ns.p50, r.latency_ns.p99, r.index_bytes
        );
        assert!(r.oracle_ok && r.audit_clean);
    }
    println!(
        "\nlearned index throughput: {:.2}x the B+tree, structure size: {:.1}% of its inner pages",
        alex.ops_per_second / btree.ops_per_second,
        100.0 * alex.index_bytes as f64 / btree.index_bytes as f64
    );
}
