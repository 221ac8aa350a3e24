//! Search-method microbenchmark: exponential search from a model guess
//! versus binary search within a fixed bound, over a dense sorted array.
//!
//! Synthetic error magnitudes place the starting guess `d` slots *below* the
//! true position. For that direction the bracketing phase probes offsets
//! 1, 3, 7, ... and lands after exactly `ceil(log2(d + 1))` probes; an
//! overshooting guess costs at most one extra probe for the witness below
//! the key.

use crate::key::Key;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::hint::black_box;
use std::io::{self, Write};
use std::time::Instant;

/// Lower bound of `key` in `keys` starting from a guessed position.
/// Returns the position and the number of bracketing probes.
pub fn exponential_search(keys: &[Key], start: usize, key: Key) -> (usize, u32) {
    let n = keys.len();
    if n == 0 {
        return (0, 0);
    }
    let s = start.min(n - 1);
    if keys[s] >= key {
        if s == 0 || keys[s - 1] < key {
            return (s, 0);
        }
        // the guess overshot: widen left until a key below `key` appears
        let mut iters = 0;
        let mut hi = s;
        let mut off = 1usize;
        loop {
            iters += 1;
            if off > s {
                return if keys[0] >= key {
                    (0, iters)
                } else {
                    (lower_bound(keys, 1, hi, key), iters)
                };
            }
            let probe = s - off;
            if keys[probe] < key {
                return (lower_bound(keys, probe + 1, hi, key), iters);
            }
            hi = probe;
            off *= 2;
        }
    }
    // the guess undershot: offsets 2^k - 1 reach distance d in
    // ceil(log2(d + 1)) probes
    let mut iters = 0;
    let mut lo = s;
    let mut off = 1usize;
    loop {
        iters += 1;
        let probe = (s + off).min(n - 1);
        if keys[probe] >= key {
            return (lower_bound(keys, lo + 1, probe + 1, key), iters);
        }
        if probe == n - 1 {
            return (n, iters);
        }
        lo = probe;
        off = off * 2 + 1;
    }
}

/// Lower bound of `key` via binary search over the window of `bound` slots
/// on each side of `start`. Half-size stepping makes the probe count a
/// function of the window size alone, never of where the key sits inside
/// it. The key must lie within the window.
pub fn bounded_binary_search(keys: &[Key], start: usize, bound: usize, key: Key) -> (usize, u32) {
    let n = keys.len();
    let lo = start.saturating_sub(bound);
    let hi = (start + bound + 1).min(n);
    if lo >= hi {
        return (lo.min(n), 0);
    }
    let mut base = lo;
    let mut size = hi - lo;
    let mut iters = 0;
    while size > 1 {
        iters += 1;
        let half = size / 2;
        if keys[base + half - 1] < key {
            base += half;
        }
        size -= half;
    }
    iters += 1;
    (base + (keys[base] < key) as usize, iters)
}

fn lower_bound(keys: &[Key], mut lo: usize, mut hi: usize, key: Key) -> usize {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if keys[mid] < key {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// One microbenchmark measurement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MicroRow {
    pub error: u64,
    pub method: String,
    pub mean_latency_ns: f64,
    pub mean_iterations: f64,
}

/// Times both methods over uniform keys for each synthetic error magnitude.
/// `bound` sizes the binary-search window and must cover the largest
/// magnitude. Latencies are wall-clock per probe, averaged over the batch.
pub fn search_microbenchmark(
    array_len: usize,
    magnitudes: &[usize],
    probes_per_magnitude: usize,
    bound: usize,
    seed: u64,
) -> Vec<MicroRow> {
    assert!(array_len > 4 * bound, "array too small for the window");
    assert!(probes_per_magnitude >= 1);
    let keys: Vec<Key> = (0..array_len).map(|i| i as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(magnitudes.len() * 2);

    for &d in magnitudes {
        assert!(d <= bound, "magnitude {d} exceeds binary bound {bound}");
        // interior targets keep every search window clear of the edges
        let targets: Vec<usize> = (0..probes_per_magnitude)
            .map(|_| rng.gen_range(2 * bound..array_len - 2 * bound))
            .collect();

        // one untimed pass warms the touched cache lines so the first
        // magnitude is not billed for cold memory
        for &p in &targets {
            black_box(exponential_search(&keys, p - d, keys[p]));
        }
        let mut iters_sum = 0u64;
        let t0 = Instant::now();
        for &p in &targets {
            let (pos, it) = exponential_search(&keys, p - d, keys[p]);
            black_box(pos);
            iters_sum += it as u64;
        }
        let expo_ns = t0.elapsed().as_nanos() as f64 / targets.len() as f64;
        rows.push(MicroRow {
            error: d as u64,
            method: "exponential".into(),
            mean_latency_ns: expo_ns,
            mean_iterations: iters_sum as f64 / targets.len() as f64,
        });

        for &p in &targets {
            black_box(bounded_binary_search(&keys, p - d, bound, keys[p]));
        }
        let mut iters_sum = 0u64;
        let t0 = Instant::now();
        for &p in &targets {
            let (pos, it) = bounded_binary_search(&keys, p - d, bound, keys[p]);
            black_box(pos);
            iters_sum += it as u64;
        }
        let bin_ns = t0.elapsed().as_nanos() as f64 / targets.len() as f64;
        rows.push(MicroRow {
            error: d as u64,
            method: "bounded_binary".into(),
            mean_latency_ns: bin_ns,
            mean_iterations: iters_sum as f64 / targets.len() as f64,
        });
    }
    rows
}

pub const MICRO_CSV_HEADER: &str = "error,method,mean_latency_ns,mean_iterations";

/// Writes the timing table as CSV.
pub fn write_micro_csv(rows: &[MicroRow], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{MICRO_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.2},{:.4}",
            r.error, r.method, r.mean_latency_ns, r.mean_iterations
        )?;
    }
    Ok(())
}
