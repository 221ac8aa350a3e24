//! Where keys land relative to where the models predict them.
//!
//! Prints the prediction-error histogram of a loaded index (bucket 0 = model
//! points at the exact slot, bucket i covers errors in [2^(i-1), 2^i)), then
//! contrasts it with a dense layout: the same per-leaf models asked to place
//! the same keys into gapless arrays. The gaps absorb small mispredictions,
//! which is what keeps exponential search short.

use alex::bench::errors::{dense_counterpart_errors, exact_hit_fraction, full_error_histogram, histogram_from_errors};
use alex::bench::dataset::gen_lognormal;
use alex::{Alex, AlexConfig};

fn print_hist(label: &str, hist: &[u64]) {
    let total: u64 = hist.iter().sum();
    println!("{label} ({total} keys):");
    for (i, &count) in hist.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let range = match i {
            0 => "exact".to_string(),
            1 => "1".to_string(),
            _ => format!("{}..{}", 1u64 << (i - 1), (1u64 << i) - 1),
        };
        let bar = "#".repeat((60 * count / total.max(1)) as usize);
        println!("  error {range:>12}: {count:9} {bar}");
    }
    println!("  exact-hit fraction: {:.1}%", 100.0 * exact_hit_fraction(hist));
}

fn main() {
    let keys = gen_lognormal(1_000_000, 3);
    let pairs: Vec<(f64, u64)> = keys.iter().map(|&k| (k, k.to_bits())).collect();
    let index: Alex<u64> = Alex::bulk_load(&pairs, AlexConfig::default()).unwrap();

    let gapped = full_error_histogram(&index);
    print_hist("model-based placement into gapped arrays", &gapped);

    let dense = histogram_from_errors(dense_counterpart_errors(&index));
    print_hist("same models, keys packed densely by rank", &dense);

    assert!(exact_hit_fraction(&gapped) > exact_hit_fraction(&dense));
}
