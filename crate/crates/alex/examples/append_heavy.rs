//! Time-series style load: bulk-load the smallest keys, then insert the rest
//! in ascending order. Appends land past the trained key range, so the index
//! keeps extending node tails instead of shifting interior elements.

use alex::bench::dataset::gen_lognormal;
use alex::{Alex, AlexConfig};

fn main() {
    let keys = gen_lognormal(400_000, 11);
    let (oldest, newer) = keys.split_at(100_000);

    let pairs: Vec<(f64, u64)> = oldest.iter().map(|&k| (k, k.to_bits())).collect();
    let mut index: Alex<u64> = Alex::bulk_load(&pairs, AlexConfig::default()).unwrap();

    for &k in newer {
        index.insert(k, k.to_bits()).unwrap();
    }
    println!("bulk-loaded {} keys, appended {}", oldest.len(), newer.len());

    let life = index.lifetime();
    let mean_shifts = life.shifts as f64 / life.inserts as f64;
    println!("mean element shifts per insert: {mean_shifts:.3}");

    let actions = index.action_counts();
    println!(
        "full-node resolutions: {} appends extended in place, {} scale expands, \
         {} retrain expands, {} sideways splits, {} downward splits",
        actions.append_expand,
        actions.expand_scale,
        actions.expand_retrain,
        actions.split_sideways,
        actions.split_downwards
    );
    println!("root interval grew {} times", actions.root_expands);
    assert!(actions.append_expand > 0, "ascending load should append-extend");

    let report = index.audit();
    assert!(report.violations.is_empty(), "{:?}", report.violations);
    assert_eq!(index.len(), keys.len());
    println!("audit clean, {} keys live", index.len());
}
