//! Key type and key-space intervals.
//!
//! Keys are plain `f64` values. One value is reserved: [`KEY_SENTINEL`]
//! (`f64::MAX`) marks the empty tail of a gapped array, so real keys must be
//! finite and strictly below it. Integer keys are supported by converting
//! through `f64`; the conversion is exact up to 2^53 and rounds to the nearest
//! representable double above that, which is why dataset generators deduplicate
//! after conversion.

use serde::{Deserialize, Serialize};

pub type Key = f64;

/// Reserved value stored in the empty tail of a gapped array. Rejected as a
/// real key at the index boundary.
pub const KEY_SENTINEL: Key = f64::MAX;

/// True iff `key` may be stored in an index.
pub fn key_is_storable(key: Key) -> bool {
    key.is_finite() && key < KEY_SENTINEL
}

/// Integer-mode conversion. Lossless below 2^53, rounded above.
pub fn key_from_u64(v: u64) -> Key {
    v as f64
}

/// Half-open key interval `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyRange {
    pub lo: Key,
    pub hi: Key,
}

impl KeyRange {
    /// Widest interval an index can cover.
    pub const FULL: KeyRange = KeyRange { lo: -f64::MAX, hi: f64::MAX };

    pub fn new(lo: Key, hi: Key) -> Self {
        debug_assert!(lo < hi, "empty key range [{lo}, {hi})");
        KeyRange { lo, hi }
    }

    pub fn contains(&self, key: Key) -> bool {
        self.lo <= key && key < self.hi
    }

    /// Half the interval width. All interval arithmetic goes through the
    /// halved form so the full finite range does not overflow.
    fn half_span(&self) -> f64 {
        self.hi / 2.0 - self.lo / 2.0
    }

    /// Boundary `i` of `n` equal-width subdivisions. Exact at both ends.
    pub fn boundary(&self, n: usize, i: usize) -> Key {
        debug_assert!(i <= n && n > 0);
        if i == 0 {
            self.lo
        } else if i == n {
            self.hi
        } else {
            let frac = i as f64 / n as f64;
            let b = self.lo + 2.0 * (self.half_span() * frac);
            b.clamp(self.lo, self.hi)
        }
    }

    pub fn midpoint(&self) -> Key {
        self.boundary(2, 1)
    }

    /// Slot guess for routing `key` into `n` equal-width slots. Callers must
    /// correct against the children's stored intervals; rounding may put the
    /// guess one slot off at subdivision boundaries.
    pub fn slot_guess(&self, key: Key, n: usize) -> usize {
        debug_assert!(n > 0);
        let hs = self.half_span();
        if !(hs > 0.0) {
            return 0;
        }
        let ratio = (key / 2.0 - self.lo / 2.0) / hs;
        if !(ratio > 0.0) {
            return 0;
        }
        ((ratio * n as f64) as usize).min(n - 1)
    }

    /// True when the interval is too narrow to subdivide further.
    pub fn is_atomic(&self) -> bool {
        let m = self.midpoint();
        !(m > self.lo) || !(m < self.hi)
    }

    pub fn width_is_finite(&self) -> bool {
        (self.hi - self.lo).is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries_are_exact_at_ends_and_monotone() {
        let r = KeyRange::new(-3.0, 17.0);
        assert_eq!(r.boundary(8, 0), -3.0);
        assert_eq!(r.boundary(8, 8), 17.0);
        for i in 0..8 {
            assert!(r.boundary(8, i) < r.boundary(8, i + 1));
        }
    }

    #[test]
    fn boundary_agrees_across_power_of_two_refinement() {
        // Doubling the slot count must keep existing boundaries bit-identical,
        // otherwise node-array doubling would shift child intervals.
        let r = KeyRange::new(0.1234, 987.654);
        for n in [2usize, 4, 8, 64] {
            for i in 0..=n {
                assert_eq!(r.boundary(n, i).to_bits(), r.boundary(2 * n, 2 * i).to_bits());
            }
        }
    }

    #[test]
    fn full_range_arithmetic_does_not_overflow() {
        let r = KeyRange::FULL;
        let m = r.midpoint();
        assert!(m.is_finite());
        assert!(r.contains(0.0));
        assert!(r.contains(-1e300));
        let s = r.slot_guess(1e308, 1024);
        assert!(s < 1024);
        assert!(r.slot_guess(-1e308, 1024) < 1024);
        for i in 0..=16 {
            assert!(r.boundary(16, i).is_finite());
        }
    }

    #[test]
    fn slot_guess_matches_boundaries_within_one() {
        let r = KeyRange::new(10.0, 74.0);
        let n = 16;
        for k in 0..640 {
            let key = 10.0 + k as f64 * 0.1;
            if !r.contains(key) {
                continue;
            }
            let g = r.slot_guess(key, n);
            // the guess interval, or an adjacent one, contains the key
            let lo = r.boundary(n, g.saturating_sub(1));
            let hi = r.boundary(n, (g + 2).min(n));
            assert!(lo <= key && key < hi, "key {key} guess {g}");
        }
    }

    #[test]
    fn sentinel_is_not_storable() {
        assert!(!key_is_storable(KEY_SENTINEL));
        assert!(!key_is_storable(f64::INFINITY));
        assert!(!key_is_storable(f64::NAN));
        assert!(key_is_storable(0.0));
        assert!(key_is_storable(-f64::MAX));
        assert!(key_is_storable(key_from_u64(u64::MAX)));
    }
}
