//! Build an index from sorted keys, then point-query and range-scan it.

use alex::bench::dataset::gen_uniform64;
use alex::{Alex, AlexConfig};

fn main() {
    let keys = gen_uniform64(100_000, 42);
    let pairs: Vec<(f64, u64)> = keys.iter().map(|&k| (k, k.to_bits())).collect();

    let mut index: Alex<u64> = Alex::bulk_load(&pairs, AlexConfig::default()).unwrap();
    println!("loaded {} keys", index.len());

    let stats = index.audit().stats;
    println!(
        "structure: {} data nodes under {} internal nodes, max depth {}",
        stats.num_data_nodes, stats.num_internal_nodes, stats.max_depth
    );
    println!(
        "sizes: index {} bytes, data {} bytes",
        stats.index_bytes, stats.data_bytes
    );

    for &k in keys.iter().step_by(20_000) {
        let v = index.lookup(k).expect("stored key");
        assert_eq!(v, k.to_bits());
        println!("lookup {k:24.0} -> 0x{v:016x}");
    }
    assert_eq!(index.lookup(0.5), None);

    let from = keys[50_000];
    let scan = index.range_from(from, 5);
    println!("five keys from {from:.0}:");
    for (k, _) in &scan {
        println!("  {k:24.0}");
    }
    assert_eq!(scan.len(), 5);
    assert!(scan.windows(2).all(|w| w[0].0 < w[1].0));
}
