//! The adaptive tree: model-routed internal nodes over gapped-array leaves.
//!
//! Internal nodes divide their key interval into a power-of-two number of
//! equal-width slots; a child owns an aligned power-of-two run of slots.
//! Routing computes the slot arithmetically and confirms against the child's
//! stored interval, so float rounding in the slot computation can never send
//! a key to the wrong leaf — the stored intervals are the ground truth and
//! always tile the parent exactly.
//!
//! Leaves hold the keys in gapped arrays behind per-node linear models.
//! Operation counters feed the cost model in [`crate::cost`]; when a leaf
//! fills up or its observed cost drifts from the expectation recorded at
//! creation, `adapt` grows or splits it.

mod adapt;
mod audit;
mod build;
mod node;

pub use audit::{AuditReport, DataNodeView, StructureStats};

use crate::cost::{CostWeights, ExpectedStats, NodeStats};
use crate::error::{IndexError, Result};
use crate::gapped::GappedArray;
use crate::key::{key_is_storable, Key, KeyRange};
use node::{empty_range_model, scaled_rank_model, DataNode, InternalNode, Node, NodeId, REF_BYTES};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug)]
pub struct AlexConfig {
    /// Key interval served before any root expansion.
    pub initial_range: KeyRange,
    /// Size cap for one node: key/payload slots plus bitmap for a data node,
    /// slot array for an internal node.
    pub max_node_bytes: usize,
    pub weights: CostWeights,
    /// Density band of data nodes: expansion targets `min_density`, one more
    /// insert past `max_density` triggers resolution, deletes below
    /// `min_density` contract.
    pub min_density: f64,
    pub max_density: f64,
    /// Assumed insert share of operations for nodes with no history.
    pub default_insert_fraction: f64,
}

impl Default for AlexConfig {
    fn default() -> Self {
        AlexConfig {
            initial_range: KeyRange::FULL,
            max_node_bytes: 16 << 20,
            weights: CostWeights::default(),
            min_density: 0.6,
            max_density: 0.8,
            default_insert_fraction: 0.5,
        }
    }
}

/// Structure-modification counters, by kind.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct ActionCounts {
    pub expand_scale: u64,
    pub expand_retrain: u64,
    pub split_sideways: u64,
    pub split_downwards: u64,
    pub append_expand: u64,
    pub forced_split: u64,
    pub root_expands: u64,
}

impl ActionCounts {
    /// Resolutions of full data nodes (root expansion and forced splits are
    /// triggered by other conditions).
    pub fn fullness_resolutions(&self) -> u64 {
        self.expand_scale
            + self.expand_retrain
            + self.split_sideways
            + self.split_downwards
            + self.append_expand
    }
}

/// Whole-life operation totals, never reset by restructuring.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct LifetimeCounters {
    pub inserts: u64,
    pub lookups: u64,
    pub shifts: u64,
    pub search_iters: u64,
}

pub struct Alex<P> {
    nodes: Vec<Node<P>>,
    free: Vec<NodeId>,
    root: NodeId,
    len: usize,
    config: AlexConfig,
    actions: ActionCounts,
    lifetime: LifetimeCounters,
    index_bytes: usize,
    data_slot_bytes: usize,
    bitmap_bytes: usize,
}

impl<P: Clone + Default> Alex<P> {
    pub fn new(config: AlexConfig) -> Self {
        assert!(0.0 < config.min_density && config.min_density < config.max_density);
        assert!(config.max_density <= 1.0);
        let mut alex = Alex {
            nodes: Vec::new(),
            free: Vec::new(),
            root: 0,
            len: 0,
            config,
            actions: ActionCounts::default(),
            lifetime: LifetimeCounters::default(),
            index_bytes: 0,
            data_slot_bytes: 0,
            bitmap_bytes: 0,
        };
        alex.root = alex.alloc_data_from_pairs(
            &[],
            config.initial_range,
            0,
            config.default_insert_fraction,
        );
        alex
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn config(&self) -> &AlexConfig {
        &self.config
    }

    pub fn action_counts(&self) -> ActionCounts {
        self.actions
    }

    pub fn lifetime(&self) -> LifetimeCounters {
        self.lifetime
    }

    /// Bytes of models, slot arrays, and node metadata.
    pub fn index_bytes(&self) -> usize {
        self.index_bytes
    }

    /// Bytes of key/payload slots (including gaps) and bitmaps.
    pub fn data_bytes(&self) -> usize {
        self.data_slot_bytes + self.bitmap_bytes
    }

    /// Everything except keys and payloads: what the traversal cost model
    /// sees as structure size.
    pub fn total_structure_bytes(&self) -> usize {
        self.index_bytes + self.bitmap_bytes
    }

    pub fn insert(&mut self, key: Key, payload: P) -> Result<()> {
        if !key_is_storable(key) {
            return Err(IndexError::InvalidKey(key));
        }
        self.ensure_covered(key);
        loop {
            let leaf = self.leaf_for(key);
            let dn = self.data(leaf);
            let pred = dn.model.predict(key, dn.ga.capacity());
            let (lb, iters) = dn.ga.search_from(pred, key);
            if dn.ga.resolve_exact(lb, key).is_some() {
                return Err(IndexError::DuplicateKey(key));
            }
            if dn.insert_would_overflow() {
                let path = self.path_to(key);
                self.resolve_full(leaf, &path);
                continue;
            }
            let dn = self.data_mut(leaf);
            let shifts = dn.ga.insert_at(lb, key, payload);
            dn.stats.record_insert(lb.abs_diff(pred), shifts);
            dn.inserts_since_creation += 1;
            dn.inserts_since_check += 1;
            dn.shifts_since_check += shifts as u64;
            if dn.max_key_seen.is_none_or(|m| key > m) {
                dn.appends_right += 1;
                dn.max_key_seen = Some(key);
            }
            let check_due = dn.inserts_since_check >= adapt::CHECK_EVERY_INSERTS;
            self.len += 1;
            self.lifetime.inserts += 1;
            self.lifetime.shifts += shifts as u64;
            self.lifetime.search_iters += iters as u64;
            if check_due {
                let path = self.path_to(key);
                self.periodic_check(leaf, &path);
            }
            return Ok(());
        }
    }

    /// Point lookup that feeds the per-node statistics (the statistics drive
    /// adaptation, hence `&mut`). [`Alex::get`] is the passive variant.
    pub fn lookup(&mut self, key: Key) -> Option<P> {
        let leaf = self.leaf_for(key);
        let dn = self.data(leaf);
        let pred = dn.model.predict(key, dn.ga.capacity());
        let (lb, iters) = dn.ga.search_from(pred, key);
        let slot = dn.ga.resolve_exact(lb, key);
        let err = slot.unwrap_or(lb).abs_diff(pred);
        let dn = self.data_mut(leaf);
        dn.stats.record_lookup(err);
        self.lifetime.lookups += 1;
        self.lifetime.search_iters += iters as u64;
        let dn = self.data(leaf);
        slot.map(|s| dn.ga.payload_at(s).clone())
    }

    /// Read-only lookup; does not count toward node statistics.
    pub fn get(&self, key: Key) -> Option<&P> {
        let dn = self.data(self.leaf_for(key));
        let pred = dn.model.predict(key, dn.ga.capacity());
        let (lb, _) = dn.ga.search_from(pred, key);
        dn.ga.resolve_exact(lb, key).map(|s| dn.ga.payload_at(s))
    }

    pub fn update(&mut self, key: Key, payload: P) -> bool {
        if !key_is_storable(key) {
            return false;
        }
        let leaf = self.leaf_for(key);
        let dn = self.data(leaf);
        let pred = dn.model.predict(key, dn.ga.capacity());
        let (lb, iters) = dn.ga.search_from(pred, key);
        let slot = dn.ga.resolve_exact(lb, key);
        let err = slot.unwrap_or(lb).abs_diff(pred);
        self.lifetime.lookups += 1;
        self.lifetime.search_iters += iters as u64;
        let dn = self.data_mut(leaf);
        dn.stats.record_lookup(err);
        match slot {
            Some(slot) => {
                *dn.ga.payload_at_mut(slot) = payload;
                true
            }
            None => false,
        }
    }

    pub fn delete(&mut self, key: Key) -> bool {
        if !key_is_storable(key) {
            return false;
        }
        let leaf = self.leaf_for(key);
        let dn = self.data(leaf);
        let pred = dn.model.predict(key, dn.ga.capacity());
        let (lb, iters) = dn.ga.search_from(pred, key);
        let resolved = dn.ga.resolve_exact(lb, key);
        let err = resolved.unwrap_or(lb).abs_diff(pred);
        self.lifetime.lookups += 1;
        self.lifetime.search_iters += iters as u64;
        let dn = self.data_mut(leaf);
        dn.stats.record_lookup(err);
        let Some(slot) = resolved else { return false };
        dn.ga.erase_at(slot);
        self.len -= 1;
        let dn = self.data(leaf);
        if dn.ga.density() < dn.min_density {
            self.contract_data_node(leaf);
        }
        true
    }

    /// Up to `limit` entries with keys >= `key`, in order, crossing leaf
    /// boundaries through the sibling chain. Does not touch statistics.
    pub fn range_from(&self, key: Key, limit: usize) -> Vec<(Key, P)> {
        let mut out = Vec::new();
        if limit == 0 {
            return out;
        }
        let start = if key.is_nan() { -f64::MAX } else { key };
        let mut leaf = self.leaf_for(start);
        let dn = self.data(leaf);
        let pred = dn.model.predict(start, dn.ga.capacity());
        let (mut lb, _) = dn.ga.search_from(pred, start);
        loop {
            let dn = self.data(leaf);
            for (_, k, p) in dn.ga.iter_from(lb.min(dn.ga.capacity() - 1)) {
                if k >= start {
                    out.push((k, p.clone()));
                    if out.len() == limit {
                        return out;
                    }
                }
            }
            match dn.next {
                Some(next) => {
                    leaf = next;
                    lb = 0;
                }
                None => return out,
            }
        }
    }

    pub fn to_pairs(&self) -> Vec<(Key, P)> {
        let mut out = Vec::with_capacity(self.len);
        let mut at = Some(self.leftmost_leaf());
        while let Some(id) = at {
            let dn = self.data(id);
            out.extend(dn.ga.iter_from(0).map(|(_, k, p)| (k, p.clone())));
            at = dn.next;
        }
        out
    }

    // ---- arena plumbing ----

    fn node(&self, id: NodeId) -> &Node<P> {
        &self.nodes[id as usize]
    }

    fn data(&self, id: NodeId) -> &DataNode<P> {
        match &self.nodes[id as usize] {
            Node::Data(d) => d,
            _ => unreachable!("expected data node"),
        }
    }

    fn data_mut(&mut self, id: NodeId) -> &mut DataNode<P> {
        match &mut self.nodes[id as usize] {
            Node::Data(d) => d,
            _ => unreachable!("expected data node"),
        }
    }

    fn internal(&self, id: NodeId) -> &InternalNode {
        match &self.nodes[id as usize] {
            Node::Internal(i) => i,
            _ => unreachable!("expected internal node"),
        }
    }

    fn internal_mut(&mut self, id: NodeId) -> &mut InternalNode {
        match &mut self.nodes[id as usize] {
            Node::Internal(i) => i,
            _ => unreachable!("expected internal node"),
        }
    }

    /// (index bytes, data slot bytes, bitmap bytes) contributed by one node.
    fn byte_contrib(&self, id: NodeId) -> (usize, usize, usize) {
        match self.node(id) {
            Node::Data(d) => (
                std::mem::size_of::<DataNode<P>>(),
                d.ga.capacity() * (8 + std::mem::size_of::<P>()),
                d.ga.bitmap_bytes(),
            ),
            Node::Internal(i) => (i.slot_bytes() + std::mem::size_of::<InternalNode>(), 0, 0),
            Node::Free => unreachable!("freed node reached"),
        }
    }

    fn credit(&mut self, id: NodeId) {
        let (i, d, b) = self.byte_contrib(id);
        self.index_bytes += i;
        self.data_slot_bytes += d;
        self.bitmap_bytes += b;
    }

    fn debit(&mut self, id: NodeId) {
        let (i, d, b) = self.byte_contrib(id);
        self.index_bytes -= i;
        self.data_slot_bytes -= d;
        self.bitmap_bytes -= b;
    }

    fn alloc(&mut self, node: Node<P>) -> NodeId {
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id as usize] = node;
                id
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as NodeId
            }
        };
        self.credit(id);
        id
    }

    fn free_node(&mut self, id: NodeId) {
        self.debit(id);
        self.nodes[id as usize] = Node::Free;
        self.free.push(id);
    }

    fn max_internal_slots(&self) -> usize {
        self.config.max_node_bytes / REF_BYTES
    }

    /// New data node holding `pairs` at creation utilization, model and
    /// expected statistics fitted, sibling links unset.
    fn alloc_data_from_pairs(
        &mut self,
        pairs: &[(Key, P)],
        range: KeyRange,
        depth: u32,
        insert_fraction: f64,
    ) -> NodeId {
        let n = pairs.len();
        let cap = node::creation_capacity_capped::<P>(
            n,
            self.config.max_density,
            self.config.max_node_bytes,
        );
        let (ga, model, expected) = if n == 0 {
            (
                GappedArray::new(cap),
                empty_range_model(range, cap),
                ExpectedStats::zero(insert_fraction),
            )
        } else {
            let keys: Vec<Key> = pairs.iter().map(|p| p.0).collect();
            let model = scaled_rank_model(&keys, cap);
            let expected =
                crate::cost::expected_stats_sampled(&keys, &model, cap, insert_fraction);
            (GappedArray::build_model_based(pairs, &model, cap), model, expected)
        };
        let dn = DataNode {
            ga,
            model,
            range,
            depth,
            min_density: self.config.min_density,
            max_density: self.config.max_density,
            stats: NodeStats::default(),
            expected,
            prev: None,
            next: None,
            max_key_seen: pairs.last().map(|p| p.0),
            appends_right: 0,
            inserts_since_creation: 0,
            inserts_since_check: 0,
            shifts_since_check: 0,
        };
        self.alloc(Node::Data(dn))
    }

    // ---- routing ----

    /// Child of `int` whose stored interval contains `key`, starting from the
    /// arithmetic slot guess and correcting against stored intervals.
    fn route_step(&self, int: &InternalNode, key: Key) -> NodeId {
        let n = int.children.len();
        let mut s = int.range.slot_guess(key, n);
        loop {
            let c = int.children[s];
            let r = self.node(c).range();
            if key < r.lo && s > 0 {
                s -= 1;
            } else if key >= r.hi && s + 1 < n {
                s += 1;
            } else {
                return c;
            }
        }
    }

    fn leaf_for(&self, key: Key) -> NodeId {
        let mut id = self.root;
        loop {
            match self.node(id) {
                Node::Internal(int) => id = self.route_step(int, key),
                Node::Data(_) => return id,
                Node::Free => unreachable!("freed node reached"),
            }
        }
    }

    /// Internal nodes on the way to the leaf for `key`, root first.
    fn path_to(&self, key: Key) -> Vec<NodeId> {
        let mut path = Vec::new();
        let mut id = self.root;
        loop {
            match self.node(id) {
                Node::Internal(int) => {
                    path.push(id);
                    id = self.route_step(int, key);
                }
                Node::Data(_) => return path,
                Node::Free => unreachable!("freed node reached"),
            }
        }
    }

    fn leftmost_leaf(&self) -> NodeId {
        let mut id = self.root;
        loop {
            match self.node(id) {
                Node::Internal(int) => id = int.children[0],
                Node::Data(_) => return id,
                Node::Free => unreachable!("freed node reached"),
            }
        }
    }

    fn rightmost_leaf(&self) -> NodeId {
        let mut id = self.root;
        loop {
            match self.node(id) {
                Node::Internal(int) => id = *int.children.last().unwrap(),
                Node::Data(_) => return id,
                Node::Free => unreachable!("freed node reached"),
            }
        }
    }
}
