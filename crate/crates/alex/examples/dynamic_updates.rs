//! Interleave inserts, updates, deletes, and lookups against a live index,
//! mirroring every operation on a std BTreeMap and checking they agree.

use std::collections::BTreeMap;

use alex::bench::dataset::gen_lognormal;
use alex::{Alex, AlexConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn main() {
    let keys = gen_lognormal(60_000, 7);
    let (initial, stream) = keys.split_at(30_000);

    let pairs: Vec<(f64, u64)> = initial.iter().map(|&k| (k, k.to_bits())).collect();
    let mut index: Alex<u64> = Alex::bulk_load(&pairs, AlexConfig::default()).unwrap();
    let mut oracle: BTreeMap<u64, u64> = pairs.iter().map(|&(k, v)| (k.to_bits(), v)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pending: Vec<f64> = stream.to_vec();
    pending.shuffle(&mut rng);

    let (mut inserts, mut updates, mut deletes, mut hits) = (0u64, 0u64, 0u64, 0u64);
    for round in 0..100_000 {
        match round % 4 {
            0 => {
                if let Some(k) = pending.pop() {
                    index.insert(k, k.to_bits()).unwrap();
                    oracle.insert(k.to_bits(), k.to_bits());
                    inserts += 1;
                }
            }
            1 => {
                let k = initial[rng.gen_range(0..initial.len())];
                let bumped = k.to_bits().wrapping_add(1);
                let in_index = index.update(k, bumped);
                let in_oracle = match oracle.get_mut(&k.to_bits()) {
                    Some(v) => {
                        *v = bumped;
                        true
                    }
                    None => false,
                };
                assert_eq!(in_index, in_oracle);
                updates += 1;
            }
            2 => {
                let k = initial[rng.gen_range(0..initial.len())];
                let in_index = index.delete(k);
                let in_oracle = oracle.remove(&k.to_bits()).is_some();
                assert_eq!(in_index, in_oracle);
                deletes += 1;
            }
            _ => {
                let k = keys[rng.gen_range(0..keys.len())];
                let got = index.lookup(k);
                assert_eq!(got, oracle.get(&k.to_bits()).copied());
                hits += u64::from(got.is_some());
            }
        }
    }

    println!("after 100000 mixed operations:");
    println!("  {inserts} inserts, {updates} updates, {deletes} deletes, {hits} lookup hits");
    println!("  live keys: index {} / oracle {}", index.len(), oracle.len());
    assert_eq!(index.len(), oracle.len());

    let report = index.audit();
    assert!(report.violations.is_empty(), "{:?}", report.violations);
    println!("  invariant audit: clean");
    println!("  adaptation: {:?}", index.action_counts());
}
