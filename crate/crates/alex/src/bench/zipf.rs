//! Zipfian rank selection over a growing key population.
//!
//! Workload reads pick a *rank*; the rank maps to the r-th smallest key
//! currently present. [`PresenceSet`] answers that order statistic over the
//! dataset in O(log n) while inserts keep adding keys.

use rand::Rng;
use rand_distr::{Distribution, Zipf};

/// Draws a rank in `[0, count)` with Zipfian(theta) frequencies; rank 0 is
/// the most popular. `theta = 0` is exactly uniform.
pub fn zipf_pick<R: Rng>(count: usize, theta: f64, rng: &mut R) -> usize {
    ZipfPicker::new(count, theta).pick(rng)
}

/// A [`zipf_pick`] with the distribution tables cached between draws; rebuild
/// only happens when the population size changes.
pub struct ZipfPicker {
    count: usize,
    theta: f64,
    dist: Option<Zipf<f64>>,
}

impl ZipfPicker {
    pub fn new(count: usize, theta: f64) -> Self {
        assert!(count >= 1, "zipf over an empty population");
        assert!(theta >= 0.0 && theta.is_finite());
        let dist = if theta > 0.0 {
            Some(Zipf::new(count as u64, theta).expect("valid zipf parameters"))
        } else {
            None
        };
        ZipfPicker { count, theta, dist }
    }

    pub fn set_count(&mut self, count: usize) {
        if count != self.count {
            *self = ZipfPicker::new(count, self.theta);
        }
    }

    pub fn pick<R: Rng>(&self, rng: &mut R) -> usize {
        match &self.dist {
            Some(dist) => dist.sample(rng) as usize - 1,
            None => rng.gen_range(0..self.count),
        }
    }
}

/// Marks dataset positions as present and answers "index of the r-th present
/// position" via a Fenwick tree with bit-descent selection.
pub struct PresenceSet {
    fen: Vec<u32>,
    bits: Vec<bool>,
    present: usize,
    high_bit: usize,
}

impl PresenceSet {
    /// Universe of `n` positions with the first `prefix` already present.
    pub fn with_prefix(n: usize, prefix: usize) -> Self {
        assert!(prefix <= n);
        let mut bits = vec![false; n];
        bits[..prefix].fill(true);
        let mut fen = vec![0u32; n + 1];
        for i in 1..=n {
            fen[i] += bits[i - 1] as u32;
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                let v = fen[i];
                fen[j] += v;
            }
        }
        let high_bit = if n == 0 { 0 } else { usize::BITS as usize - 1 - n.leading_zeros() as usize };
        PresenceSet { fen, bits, present: prefix, high_bit }
    }

    pub fn len(&self) -> usize {
        self.present
    }

    pub fn is_empty(&self) -> bool {
        self.present == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    /// Marks position `i` present; returns false if it already was.
    pub fn mark(&mut self, i: usize) -> bool {
        if self.bits[i] {
            return false;
        }
        self.bits[i] = true;
        self.present += 1;
        let mut j = i + 1;
        while j < self.fen.len() {
            self.fen[j] += 1;
            j += j & j.wrapping_neg();
        }
        true
    }

    /// Position of the r-th present element (0-based), or `None` when fewer
    /// than `r + 1` are present.
    pub fn select(&self, r: usize) -> Option<usize> {
        if r >= self.present {
            return None;
        }
        let mut remaining = r as u32 + 1;
        let mut pos = 0usize;
        let mut step = 1usize << self.high_bit;
        while step > 0 {
            let next = pos + step;
            if next < self.fen.len() && self.fen[next] < remaining {
                remaining -= self.fen[next];
                pos = next;
            }
            step >>= 1;
        }
        Some(pos)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn theta_zero_is_uniform() {
        // chi-squared against the uniform expectation over 64 ranks
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ranks = 64usize;
        let draws = 1_000_000usize;
        let mut counts = vec![0u64; ranks];
        let picker = ZipfPicker::new(ranks, 0.0);
        for _ in 0..draws {
            counts[picker.pick(&mut rng)] += 1;
        }
        let expect = draws as f64 / ranks as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        // 63 degrees of freedom: far below even the 0.001 quantile (~103)
        assert!(chi2 < 103.0, "chi-squared {chi2} rejects uniformity");
    }

    #[test]
    fn rank_zero_dominates_at_theta_099() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let picker = ZipfPicker::new(100_000, 0.99);
        let mut counts = vec![0u64; 100_000];
        for _ in 0..1_000_000 {
            counts[picker.pick(&mut rng)] += 1;
        }
        let max_rank = counts.iter().enumerate().max_by_key(|(_, c)| **c).unwrap().0;
        assert_eq!(max_rank, 0);

        // P(rank 0) / P(rank 1) = 2^theta
        let ratio = counts[0] as f64 / counts[1] as f64;
        let want = 2f64.powf(0.99);
        assert!(
            (ratio / want - 1.0).abs() < 0.10,
            "rank0/rank1 = {ratio}, want about {want}"
        );
    }

    #[test]
    fn cached_picker_matches_one_shot() {
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let picker = ZipfPicker::new(5_000, 0.99);
        for _ in 0..2_000 {
            assert_eq!(picker.pick(&mut a), zipf_pick(5_000, 0.99, &mut b));
        }
    }

    #[test]
    fn picks_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &theta in &[0.0, 0.5, 0.99, 1.5] {
            for &n in &[1usize, 2, 3, 1000] {
                let picker = ZipfPicker::new(n, theta);
                for _ in 0..500 {
                    assert!(picker.pick(&mut rng) < n);
                }
            }
        }
    }

    #[test]
    fn presence_select_matches_a_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 500usize;
        let mut set = PresenceSet::with_prefix(n, 100);
        let mut oracle: Vec<bool> = (0..n).map(|i| i < 100).collect();

        for _ in 0..400 {
            let i = rng.gen_range(0..n);
            assert_eq!(set.mark(i), !oracle[i]);
            oracle[i] = true;

            let present: Vec<usize> =
                (0..n).filter(|&j| oracle[j]).collect();
            assert_eq!(set.len(), present.len());
            for (r, &idx) in present.iter().enumerate() {
                assert_eq!(set.select(r), Some(idx), "rank {r}");
            }
            assert_eq!(set.select(present.len()), None);
        }
    }

    #[test]
    fn empty_and_full_prefixes() {
        let set = PresenceSet::with_prefix(10, 0);
        assert!(set.is_empty());
        assert_eq!(set.select(0), None);

        let set = PresenceSet::with_prefix(10, 10);
        assert_eq!(set.len(), 10);
        for r in 0..10 {
            assert_eq!(set.select(r), Some(r));
        }
    }
}
