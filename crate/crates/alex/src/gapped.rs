//! Gapped arrays: sorted key/payload storage with deliberate empty slots.
//!
//! Layout
//!
//! ```text
//! slot:    0     1     2     3     4     5     6     7
//! keys:  [ 2 ] [ 7 ] [ 7 ] [ 9 ] [12 ] [MAX] [MAX] [MAX]
//! bits:    1     0     1     1     1     0     0     0
//! ```
//!
//! Occupied slots (bit set) hold real entries in sorted order. A gap mirrors
//! the key of the closest occupied slot to its right; gaps past the last key
//! hold [`KEY_SENTINEL`]. The mirror rule makes the whole `keys` array
//! non-decreasing end to end, so searches can ignore the bitmap entirely and
//! binary/exponential search still works. Payload slots under gaps are
//! unspecified.
//!
//! Inserting into a gap costs nothing; inserting onto an occupied slot shifts
//! the run of elements between the slot and the nearest gap by one. Keys are
//! placed where a linear model points, which is what keeps those runs short.

use crate::key::{Key, KEY_SENTINEL};
use crate::model::LinearModel;

#[derive(Clone, Debug)]
pub struct GappedArray<P> {
    keys: Vec<Key>,
    payloads: Vec<P>,
    bitmap: Vec<u64>,
    num_keys: usize,
}

impl<P: Clone + Default> GappedArray<P> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        GappedArray {
            keys: vec![KEY_SENTINEL; capacity],
            payloads: (0..capacity).map(|_| P::default()).collect(),
            bitmap: vec![0; capacity.div_ceil(64)],
            num_keys: 0,
        }
    }

    /// Build from sorted unique pairs, placing every key at its predicted
    /// position when possible. Collisions move right; a tail that would run
    /// past the end is packed into the final slots.
    pub fn build_model_based(pairs: &[(Key, P)], model: &LinearModel, capacity: usize) -> Self {
        let n = pairs.len();
        assert!(capacity >= n.max(1));
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0));
        let mut ga = Self::new(capacity);
        let mut prev: Option<usize> = None;
        for (i, (k, p)) in pairs.iter().enumerate() {
            let pred = model.predict(*k, capacity);
            let after_prev = prev.map_or(0, |q| q + 1);
            let bound = capacity - (n - i);
            let pos = pred.max(after_prev).min(bound);
            ga.keys[pos] = *k;
            ga.payloads[pos] = p.clone();
            ga.set_bit(pos);
            prev = Some(pos);
        }
        ga.num_keys = n;
        ga.refill_all();
        ga
    }

    pub fn capacity(&self) -> usize {
        self.keys.len()
    }

    pub fn num_keys(&self) -> usize {
        self.num_keys
    }

    pub fn density(&self) -> f64 {
        self.num_keys as f64 / self.capacity() as f64
    }

    #[inline]
    pub fn is_occupied(&self, slot: usize) -> bool {
        self.bitmap[slot / 64] >> (slot % 64) & 1 == 1
    }

    /// Key stored at `slot`, mirror value if the slot is a gap.
    #[inline]
    pub fn key_at(&self, slot: usize) -> Key {
        self.keys[slot]
    }

    pub fn payload_at(&self, slot: usize) -> &P {
        debug_assert!(self.is_occupied(slot));
        &self.payloads[slot]
    }

    pub fn payload_at_mut(&mut self, slot: usize) -> &mut P {
        debug_assert!(self.is_occupied(slot));
        &mut self.payloads[slot]
    }

    /// Smallest slot whose mirror-inclusive key is `>= key`, plus the number
    /// of range-doubling probes spent bracketing it before the final binary
    /// search. Returns `capacity` when every key is smaller.
    ///
    /// For a target `d` slots from `start` the probe count is exactly
    /// `ceil(log2(d + 1))`.
    pub fn search_from(&self, start: usize, key: Key) -> (usize, u32) {
        let cap = self.capacity();
        debug_assert!(start < cap);
        let mut iters = 0u32;
        if self.keys[start] >= key {
            // leftward; the first probe is the baseline neighbor check
            let mut hi = start; // keys[hi] >= key
            let mut w = 1usize;
            let lo = loop {
                if w > start {
                    iters += 1;
                    break None; // ran off the front: everything left is >= key
                }
                let p = start - w;
                iters += 1;
                if self.keys[p] < key {
                    break Some(p);
                }
                hi = p;
                w *= 2;
            };
            iters -= 1;
            (self.binary_lower_bound(lo.map_or(0, |l| l + 1), hi, key), iters)
        } else {
            // rightward; probe windows 1, 3, 7, ... so k probes cover 2^k - 1
            let mut lo = start; // keys[lo] < key
            let mut w = 1usize;
            loop {
                let p = start + w;
                iters += 1;
                if p >= cap {
                    return (self.binary_lower_bound(lo + 1, cap, key), iters);
                }
                if self.keys[p] >= key {
                    return (self.binary_lower_bound(lo + 1, p, key), iters);
                }
                lo = p;
                w = 2 * w + 1;
            }
        }
    }

    /// First slot in `[from, to]` with key >= `key`; all slots before `from`
    /// are known `< key`, slot `to` (or the end) is known `>= key`.
    fn binary_lower_bound(&self, from: usize, to: usize, key: Key) -> usize {
        let mut lo = from;
        let mut hi = to; // invariant: keys[hi] >= key (or hi == cap)
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.keys[mid] < key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Walk from a lower-bound slot to the occupied slot actually holding
    /// `key`, if present. Gap mirrors guarantee every slot in between holds
    /// the same value.
    pub fn resolve_exact(&self, lower_bound: usize, key: Key) -> Option<usize> {
        if lower_bound >= self.capacity() || self.keys[lower_bound] != key {
            return None;
        }
        let slot = self.first_occupied_at_or_after(lower_bound)?;
        debug_assert_eq!(self.keys[slot], key);
        Some(slot)
    }

    /// Insert preserving sorted order. `pos` is the lower-bound slot for
    /// `key` (`capacity` means after every existing key). Returns the number
    /// of elements moved.
    pub fn insert_at(&mut self, pos: usize, key: Key, payload: P) -> usize {
        let cap = self.capacity();
        assert!(self.num_keys < cap, "no free slot");
        debug_assert!(pos <= cap);

        if pos < cap && !self.is_occupied(pos) {
            self.keys[pos] = key;
            self.payloads[pos] = payload;
            self.set_bit(pos);
            self.num_keys += 1;
            self.refill_left_of(pos, key);
            return 0;
        }

        let left = self.nearest_gap_left(pos);
        let right = if pos < cap { self.nearest_gap_right(pos) } else { None };
        let go_right = match (left, right) {
            (Some(l), Some(r)) => r - pos <= pos - l,
            (None, Some(_)) => true,
            (Some(_), None) => false,
            (None, None) => unreachable!("num_keys < capacity"),
        };

        let (slot, shifts) = if go_right {
            let g = right.unwrap();
            self.keys[pos..=g].rotate_right(1);
            self.payloads[pos..=g].rotate_right(1);
            self.set_bit(g);
            (pos, g - pos)
        } else {
            let g = left.unwrap();
            self.keys[g..pos].rotate_left(1);
            self.payloads[g..pos].rotate_left(1);
            self.set_bit(g);
            (pos - 1, pos - 1 - g)
        };
        self.keys[slot] = key;
        self.payloads[slot] = payload;
        self.num_keys += 1;
        self.refill_left_of(slot, key);
        shifts
    }

    /// Remove the entry at an occupied slot, restoring the mirror rule.
    pub fn erase_at(&mut self, pos: usize) {
        debug_assert!(self.is_occupied(pos));
        self.clear_bit(pos);
        self.num_keys -= 1;
        let fill = if pos + 1 < self.capacity() { self.keys[pos + 1] } else { KEY_SENTINEL };
        let mut j = pos;
        loop {
            self.keys[j] = fill;
            if j == 0 || self.is_occupied(j - 1) {
                break;
            }
            j -= 1;
        }
    }

    /// Append empty slots on the right without touching existing entries.
    pub fn grow_right(&mut self, new_capacity: usize) {
        assert!(new_capacity >= self.capacity());
        self.keys.resize(new_capacity, KEY_SENTINEL);
        self.payloads.resize_with(new_capacity, P::default);
        self.bitmap.resize(new_capacity.div_ceil(64), 0);
    }

    pub fn first_occupied_at_or_after(&self, slot: usize) -> Option<usize> {
        let cap = self.capacity();
        if slot >= cap {
            return None;
        }
        let mut w = slot / 64;
        let mut word = self.bitmap[w] & (!0u64 << (slot % 64));
        loop {
            if word != 0 {
                return Some(w * 64 + word.trailing_zeros() as usize);
            }
            w += 1;
            if w == self.bitmap.len() {
                return None;
            }
            word = self.bitmap[w];
        }
    }

    pub fn last_occupied(&self) -> Option<usize> {
        for w in (0..self.bitmap.len()).rev() {
            if self.bitmap[w] != 0 {
                return Some(w * 64 + 63 - self.bitmap[w].leading_zeros() as usize);
            }
        }
        None
    }

    /// Occupied entries from `slot` onward, in key order.
    pub fn iter_from(&self, slot: usize) -> OccupiedIter<'_, P> {
        OccupiedIter { ga: self, next: slot }
    }

    pub fn to_pairs(&self) -> Vec<(Key, P)> {
        self.iter_from(0).map(|(_, k, p)| (k, p.clone())).collect()
    }

    fn nearest_gap_right(&self, pos: usize) -> Option<usize> {
        let cap = self.capacity();
        let mut i = pos + 1;
        while i < cap {
            let w = i / 64;
            let word = !self.bitmap[w] & (!0u64 << (i % 64)) & self.valid_mask(w);
            if word != 0 {
                return Some(w * 64 + word.trailing_zeros() as usize);
            }
            i = (w + 1) * 64;
        }
        None
    }

    fn nearest_gap_left(&self, pos: usize) -> Option<usize> {
        if pos == 0 {
            return None;
        }
        let mut i = pos - 1;
        loop {
            let w = i / 64;
            let below = if i % 64 == 63 { !0u64 } else { (1u64 << (i % 64 + 1)) - 1 };
            let word = !self.bitmap[w] & below & self.valid_mask(w);
            if word != 0 {
                return Some(w * 64 + 63 - word.leading_zeros() as usize);
            }
            if w == 0 {
                return None;
            }
            i = w * 64 - 1;
        }
    }

    /// Mask of bits in word `w` that correspond to real slots.
    fn valid_mask(&self, w: usize) -> u64 {
        let used = self.capacity() - w * 64;
        if used >= 64 {
            !0
        } else {
            (1u64 << used) - 1
        }
    }

    fn set_bit(&mut self, slot: usize) {
        self.bitmap[slot / 64] |= 1 << (slot % 64);
    }

    fn clear_bit(&mut self, slot: usize) {
        self.bitmap[slot / 64] &= !(1 << (slot % 64));
    }

    /// Rewrite the gap slots immediately left of `slot` to mirror `key`.
    fn refill_left_of(&mut self, slot: usize, key: Key) {
        let mut j = slot;
        while j > 0 && !self.is_occupied(j - 1) {
            self.keys[j - 1] = key;
            j -= 1;
        }
    }

    fn refill_all(&mut self) {
        let mut fill = KEY_SENTINEL;
        for s in (0..self.capacity()).rev() {
            if self.is_occupied(s) {
                fill = self.keys[s];
            } else {
                self.keys[s] = fill;
            }
        }
    }

    pub fn bitmap_bytes(&self) -> usize {
        self.bitmap.len() * 8
    }

    /// Violated invariants, empty when healthy.
    pub fn audit_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let pop: usize = self.bitmap.iter().map(|w| w.count_ones() as usize).sum();
        if pop != self.num_keys {
            out.push(format!("bitmap population {pop} != num_keys {}", self.num_keys));
        }
        if self.bitmap.len() != self.capacity().div_ceil(64) {
            out.push("bitmap length mismatch".into());
        }
        for w in 0..self.bitmap.len() {
            if self.bitmap[w] & !self.valid_mask(w) != 0 {
                out.push("bitmap has bits past capacity".into());
            }
        }
        let mut prev: Option<Key> = None;
        for (slot, k, _) in self.iter_from(0) {
            if !crate::key::key_is_storable(k) {
                out.push(format!("unstorable key at slot {slot}"));
            }
            if let Some(p) = prev {
                if p >= k {
                    out.push(format!("keys not strictly increasing at slot {slot}"));
                }
            }
            prev = Some(k);
        }
        let mut fill = KEY_SENTINEL;
        for s in (0..self.capacity()).rev() {
            if self.is_occupied(s) {
                fill = self.keys[s];
            } else if self.keys[s] != fill {
                out.push(format!("gap at slot {s} does not mirror its right neighbor"));
            }
        }
        out
    }
}

pub struct OccupiedIter<'a, P> {
    ga: &'a GappedArray<P>,
    next: usize,
}

impl<'a, P: Clone + Default> Iterator for OccupiedIter<'a, P> {
    type Item = (usize, Key, &'a P);

    fn next(&mut self) -> Option<Self::Item> {
        let slot = self.ga.first_occupied_at_or_after(self.next)?;
        self.next = slot + 1;
        Some((slot, self.ga.keys[slot], &self.ga.payloads[slot]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn ceil_log2(x: usize) -> u32 {
        (usize::BITS - (x - 1).leading_zeros()).min(63)
    }

    #[test]
    fn model_based_build_places_at_predictions() {
        let pairs: Vec<(f64, u64)> = [0.0, 1.0, 2.0, 3.0].iter().map(|&k| (k, k as u64)).collect();
        let ga = GappedArray::build_model_based(&pairs, &LinearModel::new(2.0, 0.0), 8);
        for (slot, want) in [(0, 0.0), (2, 1.0), (4, 2.0), (6, 3.0)] {
            assert!(ga.is_occupied(slot));
            assert_eq!(ga.key_at(slot), want);
        }
        // mirror rule: gaps copy the right neighbor, tail gaps hold the sentinel
        assert_eq!(ga.key_at(1), 1.0);
        assert_eq!(ga.key_at(3), 2.0);
        assert_eq!(ga.key_at(5), 3.0);
        assert_eq!(ga.key_at(7), KEY_SENTINEL);
        assert!(ga.audit_violations().is_empty());
    }

    #[test]
    fn build_displaces_collisions_right() {
        let pairs = vec![(0.0, 0u64), (0.1, 1)];
        let ga = GappedArray::build_model_based(&pairs, &LinearModel::new(1.0, 0.0), 4);
        assert_eq!(ga.key_at(0), 0.0);
        assert!(ga.is_occupied(1));
        assert_eq!(ga.key_at(1), 0.1);
    }

    #[test]
    fn build_packs_overflowing_tail_into_final_slots() {
        let pairs: Vec<(f64, u64)> = (0..4).map(|i| (i as f64, i as u64)).collect();
        let ga = GappedArray::build_model_based(&pairs, &LinearModel::new(0.0, 4.0), 6);
        let slots: Vec<usize> = ga.iter_from(0).map(|(s, _, _)| s).collect();
        assert_eq!(slots, vec![2, 3, 4, 5]);
        assert!(ga.audit_violations().is_empty());
    }

    #[test]
    fn search_matches_linear_scan_oracle_and_iteration_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut instances = 0;
        while instances < 10_000 {
            let n = rng.gen_range(1..120);
            let cap = n + rng.gen_range(0..80);
            let mut keys: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1000.0)).collect();
            keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
            keys.dedup();
            let pairs: Vec<(f64, u64)> = keys.iter().map(|&k| (k, 0u64)).collect();
            let model = LinearModel::fit_to_ranks(&keys).scale(cap as f64 / keys.len() as f64);
            let ga = GappedArray::build_model_based(&pairs, &model, cap);

            for _ in 0..4 {
                let target = if rng.gen_bool(0.5) {
                    keys[rng.gen_range(0..keys.len())]
                } else {
                    rng.gen_range(-10.0..1100.0)
                };
                let start = rng.gen_range(0..cap);
                let (pos, iters) = ga.search_from(start, target);
                let oracle = (0..cap).find(|&s| ga.key_at(s) >= target).unwrap_or(cap);
                assert_eq!(pos, oracle);
                let d = pos.abs_diff(start);
                assert_eq!(iters, ceil_log2(d + 1), "d = {d}");
                instances += 1;
            }
        }
    }

    #[test]
    fn search_at_start_slot_costs_nothing() {
        let pairs: Vec<(f64, u64)> = (0..8).map(|i| (i as f64, i)).collect();
        let ga = GappedArray::build_model_based(&pairs, &LinearModel::new(1.0, 0.0), 8);
        assert_eq!(ga.search_from(5, 5.0), (5, 0));
    }

    #[test]
    fn search_past_all_keys_lands_on_the_first_trailing_gap() {
        let pairs: Vec<(f64, u64)> = (0..50).map(|i| (i as f64, i)).collect();
        let cap = 64;
        let model = LinearModel::new(1.0, 0.0);
        let ga = GappedArray::build_model_based(&pairs, &model, cap);
        // trailing gaps mirror the sentinel, so the lower bound is slot 50
        let (pos, iters) = ga.search_from(10, 1e9);
        assert_eq!(pos, 50);
        assert!(!ga.is_occupied(pos));
        assert!(iters <= ceil_log2(cap) + 1);

        // with the last slot occupied the answer really is `capacity`
        let full: Vec<(f64, u64)> = (0..64).map(|i| (i as f64, i)).collect();
        let ga = GappedArray::build_model_based(&full, &model, cap);
        assert_eq!(ga.search_from(10, 1e9).0, cap);
    }

    #[test]
    fn insert_into_gap_is_free_and_fixes_mirrors() {
        let pairs = vec![(10.0, 0u64), (30.0, 1)];
        let mut ga = GappedArray::build_model_based(&pairs, &LinearModel::new(0.2, -2.0), 8);
        let (lb, _) = ga.search_from(0, 20.0);
        let shifts = ga.insert_at(lb, 20.0, 9);
        assert_eq!(shifts, 0);
        assert!(ga.audit_violations().is_empty());
    }

    #[test]
    fn insert_onto_occupied_run_shifts_to_gap_distance() {
        // occupied run 0..=3, gap at 4: inserting at slot 1 moves 3 elements
        let pairs: Vec<(f64, u64)> = [1.0, 2.0, 3.0, 4.0].iter().map(|&k| (k, 0u64)).collect();
        let mut ga = GappedArray::build_model_based(&pairs, &LinearModel::new(1.0, -1.0), 8);
        let (lb, _) = ga.search_from(0, 1.5);
        assert_eq!(lb, 1);
        let shifts = ga.insert_at(lb, 1.5, 7);
        assert_eq!(shifts, 3);
        assert_eq!(ga.key_at(1), 1.5);
        assert!(ga.audit_violations().is_empty());
    }

    #[test]
    fn erase_restores_mirrors() {
        let pairs: Vec<(f64, u64)> = [1.0, 5.0, 9.0].iter().map(|&k| (k, 0u64)).collect();
        let mut ga = GappedArray::build_model_based(&pairs, &LinearModel::new(0.5, 0.0), 8);
        let slot = ga.resolve_exact(ga.search_from(0, 5.0).0, 5.0).unwrap();
        ga.erase_at(slot);
        // the gaps that mirrored 5.0 now mirror the next key to the right
        for s in 0..slot + 1 {
            if !ga.is_occupied(s) {
                assert_eq!(ga.key_at(s), 9.0);
            }
        }
        assert!(ga.audit_violations().is_empty());
    }

    /// Brute-force shift oracle: distance from the insertion slot to the
    /// nearest free slot, ties broken right, minus one when shifting left.
    fn oracle_shifts<P: Clone + Default>(ga: &GappedArray<P>, pos: usize) -> usize {
        let cap = ga.capacity();
        if pos < cap && !ga.is_occupied(pos) {
            return 0;
        }
        let right = (pos + 1..cap).find(|&s| !ga.is_occupied(s));
        let left = (0..pos).rev().find(|&s| !ga.is_occupied(s));
        match (left, right) {
            (Some(l), Some(r)) if r - pos <= pos - l => r - pos,
            (_, Some(r)) if left.is_none() => r - pos,
            (Some(l), _) => pos - 1 - l,
            _ => unreachable!(),
        }
    }

    #[test]
    fn random_churn_matches_sorted_map_oracle() {
        use std::collections::BTreeMap;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let cap = rng.gen_range(16..200);
            let mut ga: GappedArray<u64> = GappedArray::new(cap);
            let mut oracle: BTreeMap<u64, u64> = BTreeMap::new();
            let model = LinearModel::new(cap as f64 / 1000.0, 0.0);
            for op in 0..400 {
                let key = rng.gen_range(0..1000u64);
                let kf = key as f64;
                if rng.gen_bool(0.7) && oracle.len() < cap * 4 / 5 {
                    let start = model.predict(kf, cap);
                    let (lb, _) = ga.search_from(start, kf);
                    if ga.resolve_exact(lb, kf).is_none() {
                        let want = oracle_shifts(&ga, lb);
                        let got = ga.insert_at(lb, kf, op);
                        assert_eq!(got, want);
                        oracle.insert(key, op);
                    }
                } else if let Some((&k, _)) = oracle.iter().next() {
                    let kf = k as f64;
                    let (lb, _) = ga.search_from(model.predict(kf, cap), kf);
                    let slot = ga.resolve_exact(lb, kf).unwrap();
                    ga.erase_at(slot);
                    oracle.remove(&k);
                }
                let violations = ga.audit_violations();
                assert!(violations.is_empty(), "{violations:?}");
            }
            let got: Vec<(u64, u64)> = ga.iter_from(0).map(|(_, k, p)| (k as u64, *p)).collect();
            let want: Vec<(u64, u64)> = oracle.iter().map(|(&k, &v)| (k, v)).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn grow_right_preserves_layout() {
        let pairs: Vec<(f64, u64)> = (0..10).map(|i| (i as f64, i)).collect();
        let mut ga = GappedArray::build_model_based(&pairs, &LinearModel::new(1.0, 0.0), 12);
        ga.grow_right(40);
        assert_eq!(ga.capacity(), 40);
        assert_eq!(ga.num_keys(), 10);
        assert!(ga.audit_violations().is_empty());
        assert_eq!(ga.key_at(20), KEY_SENTINEL);
    }

    /// Direct-hit bounds for model-based placement, checked exhaustively on
    /// small grids: with the dense-fit model scaled by c, the number of keys
    /// landing exactly on their prediction is at most `2 + |{i : y(x_{i+2}) -
    /// y(x_i) > 1}|` and at least `l + 1`, where l is the longest prefix with
    /// consecutive predictions at least one slot apart.
    #[test]
    fn direct_hit_bounds_hold_exhaustively_on_small_grid() {
        let grid: Vec<f64> = (0..12).map(|v| v as f64).collect();
        let mut checked = 0usize;
        for mask in 1u32..(1 << grid.len()) {
            if mask.count_ones() > 10 {
                continue;
            }
            let keys: Vec<f64> =
                (0..grid.len()).filter(|&i| mask >> i & 1 == 1).map(|i| grid[i]).collect();
            for c in [1.0, 1.5, 2.0] {
                let n = keys.len();
                let dense = LinearModel::fit_to_ranks(&keys);
                let mut model = dense.scale(c);
                // lift so the first output is non-negative; the bounds only
                // constrain the slope, and clamping at zero would collide
                // placements for reasons the bounds do not model
                let y0 = model.raw(keys[0]);
                if y0 < 0.0 {
                    model.intercept += (-y0).ceil();
                }
                let cap = (model.raw(keys[n - 1]).max(0.0) as usize + 2)
                    .max((c * n as f64).ceil() as usize + 1);
                let pairs: Vec<(f64, u64)> = keys.iter().map(|&k| (k, 0)).collect();
                let ga = GappedArray::build_model_based(&pairs, &model, cap);
                let hits = ga
                    .iter_from(0)
                    .filter(|&(slot, k, _)| model.predict(k, cap) == slot)
                    .count();
                let y: Vec<f64> = keys.iter().map(|&k| model.raw(k)).collect();
                let upper = 2 + (0..n.saturating_sub(2)).filter(|&i| y[i + 2] - y[i] > 1.0).count();
                let mut l = 0;
                while l + 1 < n && y[l + 1] - y[l] >= 1.0 {
                    l += 1;
                }
                assert!(hits <= upper.min(n), "keys {keys:?} c {c}: {hits} > {upper}");
                assert!(hits >= l + 1, "keys {keys:?} c {c}: {hits} < {}", l + 1);
                checked += 1;
            }
        }
        assert!(checked > 10_000);
    }

    #[test]
    fn full_expansion_factor_gives_all_direct_hits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let n = rng.gen_range(2..60);
            let mut keys: Vec<f64> = (0..n).map(|_| rng.gen_range(0..5000) as f64).collect();
            keys.sort_by(|a, b| a.partial_cmp(b).unwrap());
            keys.dedup();
            if keys.len() < 2 {
                continue;
            }
            let dense = LinearModel::fit_to_ranks(&keys);
            if dense.slope <= 0.0 {
                continue;
            }
            let min_gap = keys.windows(2).map(|w| w[1] - w[0]).fold(f64::MAX, f64::min);
            let c = (1.0 / (dense.slope * min_gap)).max(1.0) * 1.000001;
            let mut model = dense.scale(c);
            let y0 = model.raw(keys[0]);
            if y0 < 0.0 {
                model.intercept += (-y0).ceil();
            }
            let cap = (model.raw(*keys.last().unwrap()) as usize + 2)
                .max((c * keys.len() as f64).ceil() as usize + 1);
            let pairs: Vec<(f64, u64)> = keys.iter().map(|&k| (k, 0)).collect();
            let ga = GappedArray::build_model_based(&pairs, &model, cap);
            for (slot, k, _) in ga.iter_from(0) {
                assert_eq!(model.predict(k, cap), slot, "key {k} off prediction at c = {c}");
            }
        }
    }
}
