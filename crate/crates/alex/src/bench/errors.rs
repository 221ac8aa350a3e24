//! Prediction-error histograms.
//!
//! Errors are `|predicted slot - actual slot|`, bucketed by powers of two:
//! bucket 0 holds exact hits, bucket `i >= 1` holds errors in
//! `[2^(i-1), 2^i)`. Counts always sum to the number of keys probed.

use crate::gapped::GappedArray;
use crate::index::Alex;
use crate::key::Key;
use crate::model::LinearModel;

/// Bucket index for one error magnitude.
pub fn pow2_bucket(error: usize) -> usize {
    if error == 0 {
        0
    } else {
        (usize::BITS - error.leading_zeros()) as usize
    }
}

/// Folds error magnitudes into power-of-two buckets.
pub fn histogram_from_errors(errors: impl IntoIterator<Item = usize>) -> Vec<u64> {
    let mut hist: Vec<u64> = Vec::new();
    for e in errors {
        let b = pow2_bucket(e);
        if hist.len() <= b {
            hist.resize(b + 1, 0);
        }
        hist[b] += 1;
    }
    hist
}

/// Histogram of the index's model error over the given present keys.
pub fn error_histogram<P: Clone + Default>(index: &Alex<P>, probe_keys: &[Key]) -> Vec<u64> {
    histogram_from_errors(probe_keys.iter().map(|&k| {
        index
            .prediction_error(k)
            .expect("probe keys must be present")
    }))
}

/// Histogram over every key the index holds.
pub fn full_error_histogram<P: Clone + Default>(index: &Alex<P>) -> Vec<u64> {
    histogram_from_errors(index.prediction_errors())
}

/// Fraction of probes in bucket 0.
pub fn exact_hit_fraction(hist: &[u64]) -> f64 {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return 0.0;
    }
    hist.first().copied().unwrap_or(0) as f64 / total as f64
}

/// Errors of a rank model over a dense array: every key sits exactly at its
/// rank, so the error is the raw misprediction of the model.
pub fn dense_rank_errors(keys: &[Key]) -> Vec<usize> {
    let model = LinearModel::fit_to_ranks(keys);
    let n = keys.len();
    keys.iter()
        .enumerate()
        .map(|(rank, &k)| model.predict(k, n).abs_diff(rank))
        .collect()
}

/// Errors of the same rank model stretched over a gapped array `expansion`
/// times larger, with keys placed where the model sends them (shifted only
/// on collision).
pub fn gapped_rank_errors(keys: &[Key], expansion: f64) -> Vec<usize> {
    assert!(expansion >= 1.0);
    let n = keys.len();
    let capacity = ((n as f64 * expansion).ceil() as usize).max(n.max(1));
    let model = LinearModel::fit_to_ranks(keys).scale(capacity as f64 / n as f64);
    let pairs: Vec<(Key, ())> = keys.iter().map(|&k| (k, ())).collect();
    let ga = GappedArray::build_model_based(&pairs, &model, capacity);
    ga.iter_from(0)
        .map(|(slot, k, _)| model.predict(k, capacity).abs_diff(slot))
        .collect()
}

/// Errors if each data node's keys were packed densely (one slot per key)
/// under that node's own model, rescaled to the packed width. The paired
/// contrast with [`full_error_histogram`] isolates what the gaps buy.
pub fn dense_counterpart_errors<P: Clone + Default>(index: &Alex<P>) -> Vec<usize> {
    let mut out = Vec::new();
    for view in index.data_node_views() {
        let n = view.keys.len();
        if n == 0 {
            continue;
        }
        let model = view.model.scale(n as f64 / view.capacity as f64);
        out.extend(
            view.keys
                .iter()
                .enumerate()
                .map(|(rank, &k)| model.predict(k, n).abs_diff(rank)),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::AlexConfig;

    #[test]
    fn buckets_cover_powers_of_two() {
        assert_eq!(pow2_bucket(0), 0);
        assert_eq!(pow2_bucket(1), 1);
        assert_eq!(pow2_bucket(2), 2);
        assert_eq!(pow2_bucket(3), 2);
        assert_eq!(pow2_bucket(4), 3);
        assert_eq!(pow2_bucket(7), 3);
        assert_eq!(pow2_bucket(8), 4);
    }

    #[test]
    fn histogram_total_matches_probe_count() {
        let keys: Vec<Key> = (0..5_000).map(|i| (i * i) as f64).collect();
        let index: Alex<u64> = Alex::bulk_load(
            &keys.iter().map(|&k| (k, 0u64)).collect::<Vec<_>>(),
            AlexConfig::default(),
        )
        .unwrap();

        let hist = error_histogram(&index, &keys);
        assert_eq!(hist.iter().sum::<u64>(), keys.len() as u64);
        assert_eq!(hist, full_error_histogram(&index));
    }

    #[test]
    fn gaps_absorb_small_mispredictions_of_one_line() {
        // step-8 keys with bounded jitter: the rank line misses by a slot or
        // two, which gaps can absorb but a packed array cannot
        let keys: Vec<Key> = (0..4_000).map(|i| (8 * i + i * i % 5) as f64).collect();
        let dense = histogram_from_errors(dense_rank_errors(&keys));
        let gapped = histogram_from_errors(gapped_rank_errors(&keys, 1.5));
        assert_eq!(dense.iter().sum::<u64>(), keys.len() as u64);
        assert_eq!(gapped.iter().sum::<u64>(), keys.len() as u64);
        assert!(
            exact_hit_fraction(&gapped) > exact_hit_fraction(&dense),
            "gapped {:.3} should beat dense {:.3}",
            exact_hit_fraction(&gapped),
            exact_hit_fraction(&dense)
        );
    }

    #[test]
    fn per_leaf_gapped_placement_beats_dense_on_skewed_keys() {
        // a global line over lognormal keys misses by thousands of slots
        // either way; the index's per-leaf models are where gaps pay off
        let keys = crate::bench::dataset::gen_lognormal(20_000, 9);
        let config = AlexConfig { max_node_bytes: 64 << 10, ..AlexConfig::default() };
        let index: Alex<u64> = Alex::bulk_load(
            &keys.iter().map(|&k| (k, 0u64)).collect::<Vec<_>>(),
            config,
        )
        .unwrap();

        let gapped = full_error_histogram(&index);
        let dense = histogram_from_errors(dense_counterpart_errors(&index));
        assert_eq!(gapped.iter().sum::<u64>(), keys.len() as u64);
        assert_eq!(dense.iter().sum::<u64>(), keys.len() as u64);
        assert!(
            exact_hit_fraction(&gapped) > exact_hit_fraction(&dense),
            "gapped {:.3} should beat dense {:.3}",
            exact_hit_fraction(&gapped),
            exact_hit_fraction(&dense)
        );
    }
}
