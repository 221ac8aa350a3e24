//! Exponential search pays for what the model gets wrong, and nothing more.
//!
//! Starting a search `d` slots away from the target costs ceil(log2(d+1))
//! doubling steps, so a perfect prediction finds the key in zero iterations.
//! Binary search over an error-bound window costs the same regardless of how
//! good the prediction was. This microbenchmark probes a sorted array of one
//! million keys at controlled prediction errors and times both methods.

use alex::bench::micro::{search_microbenchmark, MICRO_CSV_HEADER};

fn main() {
    let bound = 4096usize;
    let mut magnitudes = Vec::new();
    let mut d = 0usize;
    while d <= bound {
        magnitudes.push(d);
        d = d * 2 + 1;
    }

    let rows = search_microbenchmark(1_000_000, &magnitudes, 200_000, bound, 5);

    println!("{MICRO_CSV_HEADER}");
    for row in &rows {
        println!(
            "{},{},{:.2},{:.3}",
            row.error, row.method, row.mean_latency_ns, row.mean_iterations
        );
    }

    let expo: Vec<_> = rows.iter().filter(|r| r.method == "exponential").collect();
    let threshold = expo
        .windows(2)
        .find(|w| w[1].mean_latency_ns > 2.0 * expo[0].mean_latency_ns)
        .map(|w| w[1].error);
    match threshold {
        Some(d) => println!("\nexponential search doubles its d=0 latency around error {d}"),
        None => println!("\nexponential search stayed within 2x of its d=0 latency"),
    }
}
