//! Arena node types for the adaptive tree.

use crate::cost::{ExpectedStats, NodeStats};
use crate::gapped::GappedArray;
use crate::key::{Key, KeyRange};
use crate::model::LinearModel;

pub type NodeId = u32;

/// Child references are priced as machine pointers regardless of the
/// arena's actual id width.
pub const REF_BYTES: usize = 8;

/// Space utilization of freshly created data nodes (bulk load and splits).
pub const CREATION_UTILIZATION: f64 = 0.7;

/// Smallest data-node capacity ever allocated at creation.
pub const MIN_CREATION_SLOTS: usize = 64;

/// Capacity for a newly created node holding `n` keys: sized for 70%
/// utilization, rounded up to a power of two so sibling nodes produced by
/// the same load come out uniform.
pub fn creation_capacity(n: usize) -> usize {
    let want = (n as f64 / CREATION_UTILIZATION).ceil() as usize;
    want.next_power_of_two().max(MIN_CREATION_SLOTS)
}

/// Creation capacity, halved while it breaks the node byte budget and the
/// density limit still allows a smaller array. If the result is still over
/// budget, no compliant capacity exists for this key count.
pub fn creation_capacity_capped<P>(n: usize, max_density: f64, max_node_bytes: usize) -> usize {
    let mut cap = creation_capacity(n);
    let floor = ((n as f64 / max_density).ceil() as usize).max(1);
    while data_storage_bytes::<P>(cap) > max_node_bytes && cap / 2 >= floor {
        cap /= 2;
    }
    if data_storage_bytes::<P>(cap) > max_node_bytes {
        // halving stalled on the density floor; between the floor and the
        // stalled power of two an exact-fit capacity may still exist
        let entry = 8 + std::mem::size_of::<P>();
        let mut fit = (max_node_bytes * 8 / (entry * 8 + 1)).max(1);
        while fit > 1 && data_storage_bytes::<P>(fit) > max_node_bytes {
            fit -= 1;
        }
        while data_storage_bytes::<P>(fit + 1) <= max_node_bytes {
            fit += 1;
        }
        if fit >= floor && data_storage_bytes::<P>(fit) <= max_node_bytes {
            cap = fit;
        }
    }
    cap
}

/// Rank model for `keys`, scaled onto `capacity` slots.
pub fn scaled_rank_model(keys: &[Key], capacity: usize) -> LinearModel {
    debug_assert!(!keys.is_empty());
    LinearModel::fit_progressive(keys).scale(capacity as f64 / keys.len() as f64)
}

/// Model for an empty node: spread the key range across the slots. Falls
/// back to a constant model when the span or the resulting intercept is not
/// representable.
pub fn empty_range_model(range: KeyRange, capacity: usize) -> LinearModel {
    let span = range.hi - range.lo;
    if !(span.is_finite() && span > 0.0) {
        return LinearModel::new(0.0, 0.0);
    }
    let slope = capacity as f64 / span;
    let intercept = -slope * range.lo;
    if !intercept.is_finite() {
        return LinearModel::new(0.0, 0.0);
    }
    LinearModel::new(slope, intercept)
}

pub struct DataNode<P> {
    pub ga: GappedArray<P>,
    pub model: LinearModel,
    pub range: KeyRange,
    pub depth: u32,
    pub min_density: f64,
    pub max_density: f64,
    pub stats: NodeStats,
    pub expected: ExpectedStats,
    pub prev: Option<NodeId>,
    pub next: Option<NodeId>,
    // append detection (kept since node creation)
    pub max_key_seen: Option<Key>,
    pub appends_right: u64,
    pub inserts_since_creation: u64,
    // periodic health check window
    pub inserts_since_check: u32,
    pub shifts_since_check: u64,
}

impl<P: Clone + Default> DataNode<P> {
    pub fn keys(&self) -> Vec<Key> {
        self.ga.iter_from(0).map(|(_, k, _)| k).collect()
    }

    /// True when one more insert would push density past the limit.
    pub fn insert_would_overflow(&self) -> bool {
        (self.ga.num_keys() + 1) as f64 / self.ga.capacity() as f64 > self.max_density
    }

    /// Bytes of key/payload slots plus the bitmap; the quantity capped by
    /// `max_node_bytes`.
    pub fn storage_bytes(&self) -> usize {
        data_storage_bytes::<P>(self.ga.capacity())
    }
}

/// Storage bytes of a data node with `capacity` slots.
pub fn data_storage_bytes<P>(capacity: usize) -> usize {
    capacity * (8 + std::mem::size_of::<P>()) + capacity.div_ceil(64) * 8
}

pub struct InternalNode {
    pub children: Vec<NodeId>,
    pub range: KeyRange,
    pub depth: u32,
}

impl InternalNode {
    /// Contiguous run of slots referencing `child`. Runs are always
    /// power-of-two sized and aligned.
    pub fn run_of(&self, child: NodeId) -> std::ops::Range<usize> {
        let start = self.children.iter().position(|&c| c == child).expect("child not in parent");
        let mut end = start + 1;
        while end < self.children.len() && self.children[end] == child {
            end += 1;
        }
        start..end
    }

    pub fn slot_bytes(&self) -> usize {
        self.children.len() * REF_BYTES
    }
}

pub enum Node<P> {
    Data(DataNode<P>),
    Internal(InternalNode),
    Free,
}

impl<P> Node<P> {
    pub fn range(&self) -> KeyRange {
        match self {
            Node::Data(d) => d.range,
            Node::Internal(i) => i.range,
            Node::Free => unreachable!("freed node reached"),
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            Node::Data(d) => d.depth,
            Node::Internal(i) => i.depth,
            Node::Free => unreachable!("freed node reached"),
        }
    }

    pub fn depth_mut(&mut self) -> &mut u32 {
        match self {
            Node::Data(d) => &mut d.depth,
            Node::Internal(i) => &mut i.depth,
            Node::Free => unreachable!("freed node reached"),
        }
    }
}
