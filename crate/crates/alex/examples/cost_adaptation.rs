//! How the cost model picks different repairs for different workloads.
//!
//! The same bulk-loaded index receives two insert streams: one spread evenly
//! over the key domain, one hammering a narrow hotspot. Evenly spread inserts
//! keep every leaf's model accurate, so full leaves are cheapest to fix by
//! expanding in place. Hotspot inserts pile keys into a region the model never
//! saw; expansion stops paying off and the index retrains and splits instead.

use std::collections::BTreeSet;

use alex::bench::dataset::gen_uniform64;
use alex::index::ActionCounts;
use alex::{Alex, AlexConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn build(base: &[f64]) -> Alex<u64> {
    let pairs: Vec<(f64, u64)> = base.iter().map(|&k| (k, k.to_bits())).collect();
    let config = AlexConfig { max_node_bytes: 256 << 10, ..AlexConfig::default() };
    Alex::bulk_load(&pairs, config).unwrap()
}

fn describe(label: &str, a: &ActionCounts) {
    let total = a.fullness_resolutions().max(1);
    println!("{label}:");
    println!(
        "  expand in place   {:6}  ({:.0}% of full-leaf events)",
        a.expand_scale + a.append_expand,
        100.0 * (a.expand_scale + a.append_expand) as f64 / total as f64
    );
    println!("  expand + retrain  {:6}", a.expand_retrain);
    println!(
        "  split             {:6}  (+{} forced by shift overload)",
        a.split_sideways + a.split_downwards,
        a.forced_split
    );
}

fn main() {
    let keys = gen_uniform64(300_000, 19);
    let (base, rest): (Vec<f64>, Vec<f64>) = {
        let mut base = Vec::new();
        let mut rest = Vec::new();
        for (i, &k) in keys.iter().enumerate() {
            if i % 3 == 0 { base.push(k) } else { rest.push(k) }
        }
        (base, rest)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(19);

    // evenly spread inserts
    let mut spread = build(&base);
    let mut shuffled = rest.clone();
    shuffled.shuffle(&mut rng);
    for k in shuffled {
        spread.insert(k, k.to_bits()).unwrap();
    }

    // the same number of inserts, all inside one narrow key interval
    let mut hotspot = build(&base);
    let (lo, hi) = (keys[150_000], keys[150_001]);
    let mut drawn = BTreeSet::new();
    while drawn.len() < rest.len() {
        let k = lo + (hi - lo) * (rng.gen::<u64>() as f64 / 2f64.powi(64));
        if k > lo && k < hi {
            drawn.insert(k.to_bits());
        }
    }
    for bits in drawn {
        let k = f64::from_bits(bits);
        hotspot.insert(k, k.to_bits()).unwrap();
    }

    describe("evenly spread inserts", &spread.action_counts());
    describe("hotspot inserts", &hotspot.action_counts());

    let s = spread.action_counts();
    let h = hotspot.action_counts();
    assert!(
        (s.expand_scale + s.append_expand) * 2 > s.fullness_resolutions(),
        "spread load should mostly expand in place"
    );
    assert!(
        h.expand_retrain + h.split_sideways + h.split_downwards + h.forced_split
            > s.expand_retrain + s.split_sideways + s.split_downwards + s.forced_split,
        "hotspot load should retrain/split more"
    );
    assert!(spread.audit().violations.is_empty());
    assert!(hotspot.audit().violations.is_empty());
    println!("both indexes audit clean");
}
