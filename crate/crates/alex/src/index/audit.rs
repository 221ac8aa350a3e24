//! Structural audit: checks every tree invariant and reports statistics.
//!
//! The walk verifies that the arena and the tree agree (every live node
//! reachable exactly once, the free list holding exactly the rest), that
//! each internal node's children tile its interval exactly in aligned
//! power-of-two slot runs, that leaves respect the density and byte limits
//! and contain only keys inside their interval, that the sibling chain walks
//! the leaves in key order with no gaps, that every stored key routes back
//! to the leaf holding it, and that the incremental byte counters match a
//! recount from scratch.

use super::node::{Node, NodeId};
use super::{ActionCounts, Alex};
use crate::key::Key;
use crate::model::LinearModel;
use serde::{Deserialize, Serialize};

/// One data node's contents as seen by error analysis.
#[derive(Clone, Debug)]
pub struct DataNodeView {
    pub keys: Vec<Key>,
    pub model: LinearModel,
    pub capacity: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureStats {
    pub num_keys: usize,
    pub num_data_nodes: usize,
    pub num_internal_nodes: usize,
    /// Depth of the deepest data node; 0 when the root is a data node.
    pub max_depth: u32,
    /// Mean data-node depth weighted by key count.
    pub avg_depth_per_key: f64,
    pub min_data_node_bytes: usize,
    pub median_data_node_bytes: usize,
    pub max_data_node_bytes: usize,
    pub index_bytes: usize,
    pub data_bytes: usize,
    pub total_structure_bytes: usize,
    pub action_counts: ActionCounts,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditReport {
    pub violations: Vec<String>,
    pub stats: StructureStats,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl<P: Clone + Default> Alex<P> {
    pub fn audit(&self) -> AuditReport {
        let mut v: Vec<String> = Vec::new();
        let mut seen = vec![false; self.nodes.len()];
        let mut leaves: Vec<NodeId> = Vec::new();
        let mut num_internal = 0usize;

        if self.node(self.root).depth() != 0 {
            v.push(format!("root depth is {}", self.node(self.root).depth()));
        }

        // key-order depth-first walk
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if seen[id as usize] {
                v.push(format!("node {id} is reachable through two parents"));
                continue;
            }
            seen[id as usize] = true;
            match &self.nodes[id as usize] {
                Node::Free => v.push(format!("freed node {id} is reachable")),
                Node::Data(d) => {
                    leaves.push(id);
                    for msg in d.ga.audit_violations() {
                        v.push(format!("leaf {id}: {msg}"));
                    }
                    let density = d.ga.num_keys() as f64 / d.ga.capacity() as f64;
                    if density > d.max_density + 1e-12 {
                        v.push(format!(
                            "leaf {id} density {density:.4} above limit {}",
                            d.max_density
                        ));
                    }
                    if d.storage_bytes() > self.config.max_node_bytes {
                        v.push(format!(
                            "leaf {id} occupies {} bytes, over the {}-byte cap",
                            d.storage_bytes(),
                            self.config.max_node_bytes
                        ));
                    }
                    for (_, k, _) in d.ga.iter_from(0) {
                        if !d.range.contains(k) {
                            v.push(format!("leaf {id} holds key {k} outside its interval"));
                            break;
                        }
                    }
                }
                Node::Internal(int) => {
                    num_internal += 1;
                    let n = int.children.len();
                    if !n.is_power_of_two() || n < 2 {
                        v.push(format!("node {id} has {n} slots"));
                    }
                    if int.slot_bytes() > self.config.max_node_bytes {
                        v.push(format!("node {id} slot array over the byte cap"));
                    }
                    let mut cursor = int.range.lo;
                    let mut prior: Vec<NodeId> = Vec::new();
                    let mut s = 0usize;
                    while s < n {
                        let c = int.children[s];
                        let mut e = s + 1;
                        while e < n && int.children[e] == c {
                            e += 1;
                        }
                        let len = e - s;
                        if !len.is_power_of_two() || s % len != 0 {
                            v.push(format!(
                                "node {id}: run {s}..{e} of child {c} is not an aligned power of two"
                            ));
                        }
                        if prior.contains(&c) {
                            v.push(format!("node {id}: child {c} occupies two separate runs"));
                        }
                        prior.push(c);
                        let r = self.node(c).range();
                        if r.lo != cursor {
                            v.push(format!(
                                "node {id}: child {c} starts at {} but the previous child ended at {cursor}",
                                r.lo
                            ));
                        }
                        cursor = r.hi;
                        if self.node(c).depth() != int.depth + 1 {
                            v.push(format!(
                                "child {c} depth {} under node {id} at depth {}",
                                self.node(c).depth(),
                                int.depth
                            ));
                        }
                        s = e;
                    }
                    if cursor != int.range.hi {
                        v.push(format!(
                            "node {id}: children tile up to {cursor}, interval ends at {}",
                            int.range.hi
                        ));
                    }
                    let mut prev = None;
                    for &c in int.children.iter().rev() {
                        if prev != Some(c) {
                            stack.push(c);
                            prev = Some(c);
                        }
                    }
                }
            }
        }

        // arena and free-list consistency
        for (i, node) in self.nodes.iter().enumerate() {
            let is_free = matches!(node, Node::Free);
            if !seen[i] && !is_free {
                v.push(format!("node {i} is allocated but unreachable"));
            }
        }
        let free_count = self.nodes.iter().filter(|n| matches!(n, Node::Free)).count();
        if free_count != self.free.len() {
            v.push(format!(
                "free list holds {} ids but {} arena slots are free",
                self.free.len(),
                free_count
            ));
        }
        for &id in &self.free {
            if !matches!(self.nodes[id as usize], Node::Free) {
                v.push(format!("free list contains live node {id}"));
            }
        }

        // sibling chain: exactly the leaves, in key order, with no gaps
        if let Some(&first) = leaves.first() {
            if self.data(first).prev.is_some() {
                v.push("first leaf has a predecessor".into());
            }
        }
        if let Some(&last) = leaves.last() {
            if self.data(last).next.is_some() {
                v.push("last leaf has a successor".into());
            }
        }
        for w in leaves.windows(2) {
            let (a, b) = (w[0], w[1]);
            if self.data(a).next != Some(b) {
                v.push(format!("leaf {a} next-link does not reach leaf {b}"));
            }
            if self.data(b).prev != Some(a) {
                v.push(format!("leaf {b} prev-link does not reach leaf {a}"));
            }
            if self.data(b).range.lo != self.data(a).range.hi {
                v.push(format!("interval gap between sibling leaves {a} and {b}"));
            }
        }

        // every stored key routes back to the leaf that holds it; the walk
        // is step-bounded so routing over corrupt intervals cannot spin
        let bounded_route = |key: Key| -> Option<NodeId> {
            let mut id = self.root;
            for _ in 0..self.nodes.len() {
                let int = match self.node(id) {
                    Node::Internal(int) => int,
                    _ => return Some(id),
                };
                let n = int.children.len();
                let mut s = int.range.slot_guess(key, n);
                let mut left = n + 2;
                loop {
                    if left == 0 {
                        return None;
                    }
                    left -= 1;
                    let c = int.children[s];
                    let r = self.node(c).range();
                    if key < r.lo && s > 0 {
                        s -= 1;
                    } else if key >= r.hi && s + 1 < n {
                        s += 1;
                    } else {
                        id = c;
                        break;
                    }
                }
            }
            None
        };
        let mut num_keys = 0usize;
        for &leaf in &leaves {
            let d = self.data(leaf);
            num_keys += d.ga.num_keys();
            for (_, k, _) in d.ga.iter_from(0) {
                if bounded_route(k) != Some(leaf) {
                    v.push(format!("key {k} routes away from the leaf holding it"));
                    break;
                }
            }
        }
        if num_keys != self.len {
            v.push(format!("index len {} but leaves hold {num_keys} keys", self.len));
        }

        // byte counters against a recount
        let (mut ib, mut db, mut bb) = (0usize, 0usize, 0usize);
        for (i, node) in self.nodes.iter().enumerate() {
            if matches!(node, Node::Free) {
                continue;
            }
            let (a, b, c) = self.byte_contrib(i as NodeId);
            ib += a;
            db += b;
            bb += c;
        }
        if (ib, db, bb) != (self.index_bytes, self.data_slot_bytes, self.bitmap_bytes) {
            v.push(format!(
                "byte counters ({}, {}, {}) but recount gives ({ib}, {db}, {bb})",
                self.index_bytes, self.data_slot_bytes, self.bitmap_bytes
            ));
        }

        // statistics
        let mut sizes: Vec<usize> = leaves.iter().map(|&l| self.data(l).storage_bytes()).collect();
        sizes.sort_unstable();
        let mut depth_keys = 0u64;
        let mut max_depth = 0u32;
        for &l in &leaves {
            let d = self.data(l);
            max_depth = max_depth.max(d.depth);
            depth_keys += d.depth as u64 * d.ga.num_keys() as u64;
        }
        let stats = StructureStats {
            num_keys,
            num_data_nodes: leaves.len(),
            num_internal_nodes: num_internal,
            max_depth,
            avg_depth_per_key: if num_keys == 0 {
                0.0
            } else {
                depth_keys as f64 / num_keys as f64
            },
            min_data_node_bytes: sizes.first().copied().unwrap_or(0),
            median_data_node_bytes: sizes.get(sizes.len() / 2).copied().unwrap_or(0),
            max_data_node_bytes: sizes.last().copied().unwrap_or(0),
            index_bytes: self.index_bytes,
            data_bytes: self.data_bytes(),
            total_structure_bytes: self.total_structure_bytes(),
            action_counts: self.actions,
        };
        AuditReport { violations: v, stats }
    }

    /// Model error `|predicted slot - actual slot|` for one stored key, or
    /// `None` when the key is absent.
    pub fn prediction_error(&self, key: Key) -> Option<usize> {
        if self.len == 0 {
            return None;
        }
        let dn = self.data(self.leaf_for(key));
        let pred = dn.model.predict(key, dn.ga.capacity());
        let (lb, _) = dn.ga.search_from(pred, key);
        let slot = dn.ga.resolve_exact(lb, key)?;
        Some(pred.abs_diff(slot))
    }

    /// Per-leaf snapshots (keys, model, capacity) for error analysis.
    pub fn data_node_views(&self) -> Vec<DataNodeView> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut at = Some(self.leftmost_leaf());
        while let Some(id) = at {
            let dn = self.data(id);
            out.push(DataNodeView {
                keys: dn.ga.iter_from(0).map(|(_, k, _)| k).collect(),
                model: dn.model,
                capacity: dn.ga.capacity(),
            });
            at = dn.next;
        }
        out
    }

    /// Per-key model errors for every stored key, in key order.
    pub fn prediction_errors(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len);
        if self.len == 0 {
            return out;
        }
        let mut at = Some(self.leftmost_leaf());
        while let Some(id) = at {
            let dn = self.data(id);
            let cap = dn.ga.capacity();
            out.extend(
                dn.ga
                    .iter_from(0)
                    .map(|(slot, k, _)| dn.model.predict(k, cap).abs_diff(slot)),
            );
            at = dn.next;
        }
        out
    }
}
