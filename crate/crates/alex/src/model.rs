//! Linear models mapping keys to slot positions.
//!
//! A model is two parameters; producing a position is one multiply, one add
//! and one floor. Fitting minimizes squared error against the given target
//! positions. `fit_progressive` fits on a systematic sample that doubles until
//! the coefficients stabilize, reusing the running sums between rounds, so it
//! never costs much more than one pass and usually costs far less.

use crate::key::Key;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearModel {
    pub fn new(slope: f64, intercept: f64) -> Self {
        LinearModel { slope, intercept }
    }

    /// Model output before flooring. `predict` and every placement routine go
    /// through this single expression so they agree bit-for-bit.
    #[inline]
    pub fn raw(&self, key: Key) -> f64 {
        self.slope * key + self.intercept
    }

    /// Predicted slot, floored and clamped into `[0, capacity)`.
    #[inline]
    pub fn predict(&self, key: Key, capacity: usize) -> usize {
        debug_assert!(capacity > 0);
        let y = self.raw(key);
        if y > 0.0 {
            (y as usize).min(capacity - 1)
        } else {
            0
        }
    }

    /// Rescale outputs by `factor`, e.g. after growing an array from `m` to
    /// `f*m` slots.
    pub fn scale(&self, factor: f64) -> LinearModel {
        LinearModel { slope: self.slope * factor, intercept: self.intercept * factor }
    }

    /// Least-squares fit of `targets` against `keys`.
    pub fn fit(keys: &[Key], targets: &[f64]) -> LinearModel {
        assert_eq!(keys.len(), targets.len());
        let mut acc = FitAccumulator::new(keys.first().copied().unwrap_or(0.0));
        for (&x, &y) in keys.iter().zip(targets) {
            acc.add(x, y);
        }
        acc.solve()
    }

    /// Fit against ranks `0..n`, the usual target when building a node.
    pub fn fit_to_ranks(keys: &[Key]) -> LinearModel {
        let mut acc = FitAccumulator::new(keys.first().copied().unwrap_or(0.0));
        for (i, &x) in keys.iter().enumerate() {
            acc.add(x, i as f64);
        }
        acc.solve()
    }

    /// Rank fit on a progressively doubled systematic sample.
    pub fn fit_progressive(keys: &[Key]) -> LinearModel {
        fit_progressive_traced(keys).model
    }
}

/// Outcome of a progressive fit, with the work it consumed.
#[derive(Clone, Copy, Debug)]
pub struct ProgressiveFit {
    pub model: LinearModel,
    /// Distinct keys read. Running sums are reused, so each sampled key is
    /// touched exactly once across all rounds.
    pub points_touched: usize,
    pub rounds: u32,
}

const PROGRESSIVE_INITIAL_SAMPLE: usize = 64;
const PROGRESSIVE_REL_TOL: f64 = 0.01;

pub fn fit_progressive_traced(keys: &[Key]) -> ProgressiveFit {
    let n = keys.len();
    let mut acc = FitAccumulator::new(keys.first().copied().unwrap_or(0.0));
    if n <= PROGRESSIVE_INITIAL_SAMPLE {
        for (i, &x) in keys.iter().enumerate() {
            acc.add(x, i as f64);
        }
        return ProgressiveFit { model: acc.solve(), points_touched: n, rounds: 1 };
    }

    // Sample every `step` keys, with `step` a power of two so each halving
    // adds exactly the odd multiples and keeps earlier sums valid.
    let log = usize::BITS - (n / PROGRESSIVE_INITIAL_SAMPLE).leading_zeros() - 1;
    let mut step = 1usize << log.min(62);
    let mut i = 0;
    while i < n {
        acc.add(keys[i], i as f64);
        i += step;
    }
    let mut touched = acc.count();
    let mut prev = acc.solve();
    let mut rounds = 1;

    while step > 1 {
        step /= 2;
        let mut i = step;
        while i < n {
            acc.add(keys[i], i as f64);
            i += 2 * step;
        }
        touched = acc.count();
        rounds += 1;
        let model = acc.solve();
        if rel_change(prev.slope, model.slope) < PROGRESSIVE_REL_TOL
            && rel_change(prev.intercept, model.intercept) < PROGRESSIVE_REL_TOL
        {
            return ProgressiveFit { model, points_touched: touched, rounds };
        }
        prev = model;
    }
    ProgressiveFit { model: prev, points_touched: touched, rounds }
}

fn rel_change(old: f64, new: f64) -> f64 {
    if old == new {
        0.0
    } else if old == 0.0 {
        f64::INFINITY
    } else {
        ((new - old) / old).abs()
    }
}

/// Running sums for a least-squares line. Keys are shifted by the first key
/// so the squared terms stay small relative to the span rather than the
/// absolute key magnitude.
#[derive(Clone, Copy, Debug)]
pub struct FitAccumulator {
    x0: f64,
    first_target: Option<f64>,
    n: f64,
    su: f64,
    sv: f64,
    suu: f64,
    suv: f64,
}

impl FitAccumulator {
    pub fn new(x0: Key) -> Self {
        FitAccumulator { x0, first_target: None, n: 0.0, su: 0.0, sv: 0.0, suu: 0.0, suv: 0.0 }
    }

    pub fn add(&mut self, x: Key, y: f64) {
        let u = x - self.x0;
        if self.first_target.is_none() {
            self.first_target = Some(y);
        }
        self.n += 1.0;
        self.su += u;
        self.sv += y;
        self.suu += u * u;
        self.suv += u * y;
    }

    pub fn count(&self) -> usize {
        self.n as usize
    }

    pub fn solve(&self) -> LinearModel {
        let denom = self.n * self.suu - self.su * self.su;
        if !(denom > 0.0) {
            // single key, duplicate keys, or no keys at all
            return LinearModel::new(0.0, self.first_target.unwrap_or(0.0));
        }
        let slope = (self.n * self.suv - self.su * self.sv) / denom;
        let intercept = (self.sv - slope * self.su) / self.n - slope * self.x0;
        LinearModel::new(slope, intercept)
    }
}
