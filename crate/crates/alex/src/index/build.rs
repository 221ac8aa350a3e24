//! Bulk loading.
//!
//! The loader decides each node's fanout with a complete binary tree over the
//! node's key interval: level L partitions the interval into 2^L equal parts,
//! and each part is costed as if it became a data node at creation
//! utilization (plus one depth step when L > 0, plus the slot-array bytes the
//! fanout implies). Whole levels are added while the level total keeps
//! falling; then adjacent sibling parts merge where their parent part is
//! cheaper, and parts split where their two halves are cheaper, until neither
//! pass improves anything. The surviving parts fix the fanout at 2^(deepest
//! level present); each part materializes one child, built recursively over
//! its own keys, whose references fill the part's aligned slot run.

use super::node::{
    creation_capacity_capped, data_storage_bytes, scaled_rank_model, InternalNode, Node, NodeId,
    REF_BYTES,
};
use super::{Alex, AlexConfig};
use crate::cost::expected_stats_sampled;
use crate::error::{IndexError, Result};
use crate::key::{key_is_storable, Key, KeyRange};

/// One part of a covering set: keys `[lo, hi)` of the node being built,
/// spanning subdivision `index` of `2^level`.
struct FtNode {
    level: u32,
    index: usize,
    lo: usize,
    hi: usize,
    cost: f64,
}

fn sub_range(range: KeyRange, level: u32, index: usize) -> KeyRange {
    let parts = 1usize << level;
    KeyRange { lo: range.boundary(parts, index), hi: range.boundary(parts, index + 1) }
}

impl<P: Clone + Default> Alex<P> {
    /// Build an index over sorted, strictly increasing, storable keys.
    pub fn bulk_load(pairs: &[(Key, P)], config: AlexConfig) -> Result<Self> {
        for p in pairs {
            if !key_is_storable(p.0) {
                return Err(IndexError::InvalidKey(p.0));
            }
        }
        for w in pairs.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(IndexError::UnsortedBulk);
            }
        }
        let mut alex = Alex::new(config);
        if pairs.is_empty() {
            return Ok(alex);
        }
        let keys: Vec<Key> = pairs.iter().map(|p| p.0).collect();
        // tight root interval around the data; out-of-bounds inserts widen it
        let range = KeyRange::new(keys[0], keys[keys.len() - 1].next_up());
        alex.free_node(alex.root);
        alex.root = alex.build_node(pairs, &keys, range, 0);
        alex.len = pairs.len();
        alex.link_leaf_chain();
        Ok(alex)
    }

    fn build_node(&mut self, pairs: &[(Key, P)], keys: &[Key], range: KeyRange, depth: u32) -> NodeId {
        let set = self.fanout_tree(keys, range);
        let lmax = set.iter().map(|n| n.level).max().unwrap();
        if lmax == 0 {
            return self.alloc_data_from_pairs(
                pairs,
                range,
                depth,
                self.config.default_insert_fraction,
            );
        }
        let fanout = 1usize << lmax;
        let mut bounds: Vec<Key> = (0..=fanout).map(|j| range.boundary(fanout, j)).collect();
        for j in 1..bounds.len() {
            if bounds[j] < bounds[j - 1] {
                bounds[j] = bounds[j - 1];
            }
        }
        let mut children = Vec::with_capacity(fanout);
        let mut cur = 0usize;
        for part in &set {
            let width = 1usize << (lmax - part.level);
            let slot = part.index << (lmax - part.level);
            let child_range = KeyRange { lo: bounds[slot], hi: bounds[slot + width] };
            let end = cur + keys[cur..].partition_point(|&k| k < child_range.hi);
            let child = self.build_node(&pairs[cur..end], &keys[cur..end], child_range, depth + 1);
            cur = end;
            children.extend(std::iter::repeat(child).take(width));
        }
        debug_assert_eq!(children.len(), fanout);
        debug_assert_eq!(cur, keys.len());
        self.alloc(Node::Internal(InternalNode { children, range, depth }))
    }

    /// Covering set with locally minimal cost for a node over `keys`.
    fn fanout_tree(&self, keys: &[Key], range: KeyRange) -> Vec<FtNode> {
        let max_parts = self.max_internal_slots();
        let mut totals = vec![self.level_total(keys, range, 0)];
        let mut level = 0u32;
        while level < 40 && (1usize << (level + 1)) <= max_parts {
            let t = self.level_total(keys, range, level + 1);
            let prev = totals[level as usize];
            totals.push(t);
            level += 1;
            if t > prev {
                break;
            }
        }
        let mut best = 0usize;
        for (i, &t) in totals.iter().enumerate() {
            if t < totals[best] {
                best = i;
            }
        }
        let parts = 1usize << best;
        let mut set = Vec::with_capacity(parts);
        let mut cur = 0usize;
        for i in 0..parts {
            let hi_b = range.boundary(parts, i + 1);
            let end = cur + keys[cur..].partition_point(|&k| k < hi_b);
            let cost = self.ft_node_cost(&keys[cur..end], best as u32);
            set.push(FtNode { level: best as u32, index: i, lo: cur, hi: end, cost });
            cur = end;
        }
        loop {
            let merged = self.merge_pass(keys, &mut set);
            let split = self.split_pass(keys, range, &mut set, max_parts);
            if !merged && !split {
                break;
            }
        }
        set
    }

    /// Cost of one part if it became a data node: expected per-operation
    /// intra-node cost at creation utilization, plus one depth step below
    /// level 0. Parts too big for the node size cap are unusable.
    fn ft_node_cost(&self, keys: &[Key], level: u32) -> f64 {
        let w = self.config.weights;
        let cap = creation_capacity_capped::<P>(
            keys.len(),
            self.config.max_density,
            self.config.max_node_bytes,
        );
        if data_storage_bytes::<P>(cap) > self.config.max_node_bytes {
            return f64::INFINITY;
        }
        let depth_term = if level > 0 { w.w_depth } else { 0.0 };
        if keys.is_empty() {
            return depth_term;
        }
        let model = scaled_rank_model(keys, cap);
        let stats = expected_stats_sampled(keys, &model, cap, self.config.default_insert_fraction);
        stats.intra_cost(&w) + depth_term
    }

    fn level_total(&self, keys: &[Key], range: KeyRange, level: u32) -> f64 {
        if level == 0 {
            return self.ft_node_cost(keys, 0);
        }
        let w = self.config.weights;
        let parts = 1usize << level;
        let mut total = w.w_bytes * (parts * REF_BYTES) as f64;
        let mut cur = 0usize;
        let mut empty = 0usize;
        for i in 0..parts {
            let hi_b = range.boundary(parts, i + 1);
            let end = cur + keys[cur..].partition_point(|&k| k < hi_b);
            if end == cur {
                empty += 1;
            } else {
                total += self.ft_node_cost(&keys[cur..end], level);
            }
            cur = end;
        }
        total + empty as f64 * w.w_depth
    }

    /// Replace sibling pairs by their parent part wherever the parent costs
    /// less; one left-to-right sweep, cascading upward as pairs form.
    fn merge_pass(&self, keys: &[Key], set: &mut Vec<FtNode>) -> bool {
        let mut changed = false;
        let mut out: Vec<FtNode> = Vec::with_capacity(set.len());
        for node in set.drain(..) {
            out.push(node);
            while out.len() >= 2 {
                let b = &out[out.len() - 1];
                let a = &out[out.len() - 2];
                if a.level != b.level || a.level == 0 || a.index % 2 != 0 || b.index != a.index + 1
                {
                    break;
                }
                let cost = self.ft_node_cost(&keys[a.lo..b.hi], a.level - 1);
                if cost < a.cost + b.cost {
                    let parent = FtNode {
                        level: a.level - 1,
                        index: a.index / 2,
                        lo: a.lo,
                        hi: b.hi,
                        cost,
                    };
                    out.pop();
                    out.pop();
                    out.push(parent);
                    changed = true;
                } else {
                    break;
                }
            }
        }
        *set = out;
        changed
    }

    /// Replace parts by their two halves wherever that costs less, deepening
    /// repeatedly while it keeps helping.
    fn split_pass(
        &self,
        keys: &[Key],
        range: KeyRange,
        set: &mut Vec<FtNode>,
        max_parts: usize,
    ) -> bool {
        let mut changed = false;
        let mut out: Vec<FtNode> = Vec::with_capacity(set.len());
        let mut work: Vec<FtNode> = set.drain(..).rev().collect();
        while let Some(node) = work.pop() {
            let child_level = node.level + 1;
            if child_level > 40 || (1usize << child_level) > max_parts {
                out.push(node);
                continue;
            }
            let sub = sub_range(range, node.level, node.index);
            let mid = range.boundary(1usize << child_level, 2 * node.index + 1);
            if !(mid > sub.lo && mid < sub.hi) {
                out.push(node);
                continue;
            }
            let at = node.lo + keys[node.lo..node.hi].partition_point(|&k| k < mid);
            let cl = self.ft_node_cost(&keys[node.lo..at], child_level);
            let cr = self.ft_node_cost(&keys[at..node.hi], child_level);
            // parts priced infinite (over the node byte budget) must keep
            // splitting even though the halves may be infinite too
            if node.cost.is_infinite() || cl + cr < node.cost {
                changed = true;
                work.push(FtNode {
                    level: child_level,
                    index: 2 * node.index + 1,
                    lo: at,
                    hi: node.hi,
                    cost: cr,
                });
                work.push(FtNode {
                    level: child_level,
                    index: 2 * node.index,
                    lo: node.lo,
                    hi: at,
                    cost: cl,
                });
            } else {
                out.push(node);
            }
        }
        *set = out;
        changed
    }

    /// Wire the leaf sibling chain left to right.
    fn link_leaf_chain(&mut self) {
        let mut leaves = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match self.node(id) {
                Node::Data(_) => leaves.push(id),
                Node::Internal(int) => {
                    let mut prev = None;
                    for &c in int.children.iter().rev() {
                        if prev != Some(c) {
                            stack.push(c);
                            prev = Some(c);
                        }
                    }
                }
                Node::Free => unreachable!("freed node reached"),
            }
        }
        for i in 1..leaves.len() {
            self.data_mut(leaves[i - 1]).next = Some(leaves[i]);
            self.data_mut(leaves[i]).prev = Some(leaves[i - 1]);
        }
    }
}
