//! Baseline: a paged in-memory B+tree.
//!
//! Pages live in an arena and are priced at the configured page size, the way
//! a real paged tree would consume memory. Entries are priced at eight-byte
//! keys and eight-byte pointers regardless of the arena's actual index width,
//! so capacities match what a pointer-based implementation would fit in the
//! same page. Leaves are chained for range scans. The map contract (duplicate
//! rejection, lookup/update/delete/range semantics) mirrors [`crate::Alex`]
//! so the benchmark harness can drive either through one code path.

use crate::error::{IndexError, Result};
use crate::key::Key;

const KEY_BYTES: usize = 8;
const PTR_BYTES: usize = 8;

enum Page<P> {
    Leaf { keys: Vec<Key>, payloads: Vec<P>, next: Option<u32> },
    Inner { keys: Vec<Key>, children: Vec<u32> },
    Free,
}

pub struct BPlusTree<P> {
    pages: Vec<Page<P>>,
    free: Vec<u32>,
    root: Option<u32>,
    len: usize,
    page_bytes: usize,
    leaf_cap: usize,
    inner_cap: usize,
}

impl<P: Clone> BPlusTree<P> {
    pub fn new(page_bytes: usize) -> Self {
        let leaf_cap = (page_bytes / (KEY_BYTES + std::mem::size_of::<P>().max(1))).max(2);
        let inner_cap = (page_bytes / (KEY_BYTES + PTR_BYTES)).max(4);
        BPlusTree { pages: Vec::new(), free: Vec::new(), root: None, len: 0, page_bytes, leaf_cap, inner_cap }
    }

    pub fn bulk_load(page_bytes: usize, pairs: &[(Key, P)]) -> Self {
        let mut t = Self::new(page_bytes);
        if pairs.is_empty() {
            return t;
        }
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0));

        // balanced chunking keeps every page near-full and never below
        // half occupancy
        let mut level: Vec<(Key, u32)> = Vec::new();
        let mut prev_leaf: Option<u32> = None;
        for chunk in balanced_chunks(pairs.len(), t.leaf_cap) {
            let slice = &pairs[chunk.clone()];
            let id = t.alloc(Page::Leaf {
                keys: slice.iter().map(|p| p.0).collect(),
                payloads: slice.iter().map(|p| p.1.clone()).collect(),
                next: None,
            });
            if let Some(prev) = prev_leaf {
                if let Page::Leaf { next, .. } = &mut t.pages[prev as usize] {
                    *next = Some(id);
                }
            }
            prev_leaf = Some(id);
            level.push((slice[0].0, id));
        }
        while level.len() > 1 {
            let mut above = Vec::new();
            for chunk in balanced_chunks(level.len(), t.inner_cap) {
                let slice = &level[chunk.clone()];
                let id = t.alloc(Page::Inner {
                    keys: slice[1..].iter().map(|e| e.0).collect(),
                    children: slice.iter().map(|e| e.1).collect(),
                });
                above.push((slice[0].0, id));
            }
            level = above;
        }
        t.root = Some(level[0].1);
        t.len = pairs.len();
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn page_bytes(&self) -> usize {
        self.page_bytes
    }

    /// Levels on the root-to-leaf path; 0 when empty.
    pub fn height(&self) -> usize {
        let mut h = 0;
        let mut at = self.root;
        while let Some(id) = at {
            h += 1;
            at = match &self.pages[id as usize] {
                Page::Inner { children, .. } => Some(children[0]),
                _ => None,
            };
        }
        h
    }

    pub fn get(&self, key: Key) -> Option<&P> {
        let mut at = self.root?;
        loop {
            match &self.pages[at as usize] {
                Page::Inner { keys, children } => {
                    at = children[keys.partition_point(|&s| s <= key)];
                }
                Page::Leaf { keys, payloads, .. } => {
                    let i = keys.partition_point(|&k| k < key);
                    return (i < keys.len() && keys[i] == key).then(|| &payloads[i]);
                }
                Page::Free => unreachable!(),
            }
        }
    }

    pub fn update(&mut self, key: Key, payload: P) -> bool {
        let Some(mut at) = self.root else { return false };
        loop {
            match &mut self.pages[at as usize] {
                Page::Inner { keys, children } => {
                    at = children[keys.partition_point(|&s| s <= key)];
                }
                Page::Leaf { keys, payloads, .. } => {
                    let i = keys.partition_point(|&k| k < key);
                    if i < keys.len() && keys[i] == key {
                        payloads[i] = payload;
                        return true;
                    }
                    return false;
                }
                Page::Free => unreachable!(),
            }
        }
    }

    pub fn insert(&mut self, key: Key, payload: P) -> Result<()> {
        if !crate::key::key_is_storable(key) {
            return Err(IndexError::InvalidKey(key));
        }
        let Some(root) = self.root else {
            let id = self.alloc(Page::Leaf { keys: vec![key], payloads: vec![payload], next: None });
            self.root = Some(id);
            self.len = 1;
            return Ok(());
        };
        if let Some((sep, right)) = self.insert_rec(root, key, payload)? {
            let id = self.alloc(Page::Inner { keys: vec![sep], children: vec![root, right] });
            self.root = Some(id);
        }
        self.len += 1;
        Ok(())
    }

    fn insert_rec(&mut self, at: u32, key: Key, payload: P) -> Result<Option<(Key, u32)>> {
        match &mut self.pages[at as usize] {
            Page::Leaf { keys, payloads, .. } => {
                let i = keys.partition_point(|&k| k < key);
                if i < keys.len() && keys[i] == key {
                    return Err(IndexError::DuplicateKey(key));
                }
                keys.insert(i, key);
                payloads.insert(i, payload);
                if keys.len() > self.leaf_cap {
                    return Ok(Some(self.split_leaf(at)));
                }
                Ok(None)
            }
            Page::Inner { keys, children } => {
                let pos = keys.partition_point(|&s| s <= key);
                let child = children[pos];
                let Some((sep, right)) = self.insert_rec(child, key, payload)? else {
                    return Ok(None);
                };
                let Page::Inner { keys, children } = &mut self.pages[at as usize] else {
                    unreachable!()
                };
                keys.insert(pos, sep);
                children.insert(pos + 1, right);
                if children.len() > self.inner_cap {
                    return Ok(Some(self.split_inner(at)));
                }
                Ok(None)
            }
            Page::Free => unreachable!(),
        }
    }

    fn split_leaf(&mut self, at: u32) -> (Key, u32) {
        let Page::Leaf { keys, payloads, next } = &mut self.pages[at as usize] else {
            unreachable!()
        };
        let mid = keys.len() / 2;
        let rk: Vec<Key> = keys.split_off(mid);
        let rp: Vec<P> = payloads.split_off(mid);
        let rnext = *next;
        let sep = rk[0];
        let right = self.alloc(Page::Leaf { keys: rk, payloads: rp, next: rnext });
        let Page::Leaf { next, .. } = &mut self.pages[at as usize] else { unreachable!() };
        *next = Some(right);
        (sep, right)
    }

    fn split_inner(&mut self, at: u32) -> (Key, u32) {
        let Page::Inner { keys, children } = &mut self.pages[at as usize] else { unreachable!() };
        let mid = children.len() / 2;
        let rc: Vec<u32> = children.split_off(mid);
        let rk: Vec<Key> = keys.split_off(mid);
        let sep = keys.pop().unwrap();
        let right = self.alloc(Page::Inner { keys: rk, children: rc });
        (sep, right)
    }

    pub fn delete(&mut self, key: Key) -> bool {
        let Some(root) = self.root else { return false };
        if !self.remove_rec(root, key) {
            return false;
        }
        self.len -= 1;
        match &self.pages[root as usize] {
            Page::Inner { children, .. } if children.len() == 1 => {
                let child = children[0];
                self.dealloc(root);
                self.root = Some(child);
            }
            Page::Leaf { keys, .. } if keys.is_empty() => {
                self.dealloc(root);
                self.root = None;
            }
            _ => {}
        }
        true
    }

    fn remove_rec(&mut self, at: u32, key: Key) -> bool {
        match &mut self.pages[at as usize] {
            Page::Leaf { keys, payloads, .. } => {
                let i = keys.partition_point(|&k| k < key);
                if i < keys.len() && keys[i] == key {
                    keys.remove(i);
                    payloads.remove(i);
                    true
                } else {
                    false
                }
            }
            Page::Inner { keys, children } => {
                let pos = keys.partition_point(|&s| s <= key);
                let child = children[pos];
                if !self.remove_rec(child, key) {
                    return false;
                }
                self.fix_child(at, pos);
                true
            }
            Page::Free => unreachable!(),
        }
    }

    fn entries(&self, id: u32) -> usize {
        match &self.pages[id as usize] {
            Page::Leaf { keys, .. } => keys.len(),
            Page::Inner { children, .. } => children.len(),
            Page::Free => unreachable!(),
        }
    }

    fn min_entries(&self, id: u32) -> usize {
        match &self.pages[id as usize] {
            Page::Leaf { .. } => self.leaf_cap.div_ceil(2),
            Page::Inner { .. } => self.inner_cap.div_ceil(2),
            Page::Free => unreachable!(),
        }
    }

    fn fix_child(&mut self, parent: u32, pos: usize) {
        let Page::Inner { children, .. } = &self.pages[parent as usize] else { unreachable!() };
        let child = children[pos];
        if self.entries(child) >= self.min_entries(child) {
            return;
        }
        let n_children = {
            let Page::Inner { children, .. } = &self.pages[parent as usize] else { unreachable!() };
            children.len()
        };
        let sibling = |s: &Self, i: usize| {
            let Page::Inner { children, .. } = &s.pages[parent as usize] else { unreachable!() };
            children[i]
        };
        if pos > 0 {
            let left = sibling(self, pos - 1);
            if self.entries(left) > self.min_entries(left) {
                self.rotate_from_left(parent, pos);
                return;
            }
        }
        if pos + 1 < n_children {
            let right = sibling(self, pos + 1);
            if self.entries(right) > self.min_entries(right) {
                self.rotate_from_right(parent, pos);
                return;
            }
        }
        if pos > 0 {
            self.merge_into_left(parent, pos);
        } else {
            self.merge_into_left(parent, pos + 1);
        }
    }

    fn take_pair(&mut self, a: u32, b: u32) -> (Page<P>, Page<P>) {
        let pa = std::mem::replace(&mut self.pages[a as usize], Page::Free);
        let pb = std::mem::replace(&mut self.pages[b as usize], Page::Free);
        (pa, pb)
    }

    fn put_pair(&mut self, a: u32, pa: Page<P>, b: u32, pb: Page<P>) {
        self.pages[a as usize] = pa;
        self.pages[b as usize] = pb;
    }

    fn rotate_from_left(&mut self, parent: u32, pos: usize) {
        let (left_id, child_id, sep) = {
            let Page::Inner { keys, children } = &self.pages[parent as usize] else {
                unreachable!()
            };
            (children[pos - 1], children[pos], keys[pos - 1])
        };
        let (mut lp, mut cp) = self.take_pair(left_id, child_id);
        let new_sep = match (&mut lp, &mut cp) {
            (
                Page::Leaf { keys: lk, payloads: lpay, .. },
                Page::Leaf { keys: ck, payloads: cpay, .. },
            ) => {
                ck.insert(0, lk.pop().unwrap());
                cpay.insert(0, lpay.pop().unwrap());
                ck[0]
            }
            (
                Page::Inner { keys: lk, children: lc },
                Page::Inner { keys: ck, children: cc },
            ) => {
                ck.insert(0, sep);
                cc.insert(0, lc.pop().unwrap());
                lk.pop().unwrap()
            }
            _ => unreachable!(),
        };
        self.put_pair(left_id, lp, child_id, cp);
        let Page::Inner { keys, .. } = &mut self.pages[parent as usize] else { unreachable!() };
        keys[pos - 1] = new_sep;
    }

    fn rotate_from_right(&mut self, parent: u32, pos: usize) {
        let (child_id, right_id, sep) = {
            let Page::Inner { keys, children } = &self.pages[parent as usize] else {
                unreachable!()
            };
            (children[pos], children[pos + 1], keys[pos])
        };
        let (mut cp, mut rp) = self.take_pair(child_id, right_id);
        let new_sep = match (&mut cp, &mut rp) {
            (
                Page::Leaf { keys: ck, payloads: cpay, .. },
                Page::Leaf { keys: rk, payloads: rpay, .. },
            ) => {
                ck.push(rk.remove(0));
                cpay.push(rpay.remove(0));
                rk[0]
            }
            (
                Page::Inner { keys: ck, children: cc },
                Page::Inner { keys: rk, children: rc },
            ) => {
                ck.push(sep);
                cc.push(rc.remove(0));
                rk.remove(0)
            }
            _ => unreachable!(),
        };
        self.put_pair(child_id, cp, right_id, rp);
        let Page::Inner { keys, .. } = &mut self.pages[parent as usize] else { unreachable!() };
        keys[pos] = new_sep;
    }

    /// Merge child `pos` into its left sibling and drop it from the parent.
    fn merge_into_left(&mut self, parent: u32, pos: usize) {
        let (left_id, child_id, sep) = {
            let Page::Inner { keys, children } = &self.pages[parent as usize] else {
                unreachable!()
            };
            (children[pos - 1], children[pos], keys[pos - 1])
        };
        let (mut lp, cp) = self.take_pair(left_id, child_id);
        match (&mut lp, cp) {
            (
                Page::Leaf { keys: lk, payloads: lpay, next: lnext },
                Page::Leaf { keys: ck, payloads: cpay, next: cnext },
            ) => {
                lk.extend(ck);
                lpay.extend(cpay);
                *lnext = cnext;
            }
            (
                Page::Inner { keys: lk, children: lc },
                Page::Inner { keys: ck, children: cc },
            ) => {
                lk.push(sep);
                lk.extend(ck);
                lc.extend(cc);
            }
            _ => unreachable!(),
        }
        self.pages[left_id as usize] = lp;
        self.dealloc(child_id);
        let Page::Inner { keys, children } = &mut self.pages[parent as usize] else {
            unreachable!()
        };
        keys.remove(pos - 1);
        children.remove(pos);
    }

    /// Up to `limit` entries with keys >= `key`, in order.
    pub fn range_from(&self, key: Key, limit: usize) -> Vec<(Key, P)> {
        let mut out = Vec::new();
        let Some(mut at) = self.root else { return out };
        loop {
            match &self.pages[at as usize] {
                Page::Inner { keys, children } => {
                    at = children[keys.partition_point(|&s| s <= key)];
                }
                Page::Leaf { .. } => break,
                Page::Free => unreachable!(),
            }
        }
        let mut skip_below = true;
        let mut cursor = Some(at);
        while let Some(id) = cursor {
            let Page::Leaf { keys, payloads, next } = &self.pages[id as usize] else {
                unreachable!()
            };
            let start = if skip_below { keys.partition_point(|&k| k < key) } else { 0 };
            skip_below = false;
            for i in start..keys.len() {
                if out.len() == limit {
                    return out;
                }
                out.push((keys[i], payloads[i].clone()));
            }
            cursor = *next;
        }
        out
    }

    pub fn to_pairs(&self) -> Vec<(Key, P)> {
        self.range_from(f64::NEG_INFINITY, usize::MAX)
    }

    fn live_pages(&self) -> (usize, usize) {
        let mut inner = 0;
        let mut leaf = 0;
        for p in &self.pages {
            match p {
                Page::Inner { .. } => inner += 1,
                Page::Leaf { .. } => leaf += 1,
                Page::Free => {}
            }
        }
        (inner, leaf)
    }

    /// Total bytes of inner pages: the tree's index size.
    pub fn inner_bytes(&self) -> usize {
        self.live_pages().0 * self.page_bytes
    }

    /// Total bytes of leaf pages: the tree's data size.
    pub fn leaf_bytes(&self) -> usize {
        self.live_pages().1 * self.page_bytes
    }

    fn alloc(&mut self, page: Page<P>) -> u32 {
        if let Some(id) = self.free.pop() {
            self.pages[id as usize] = page;
            id
        } else {
            self.pages.push(page);
            (self.pages.len() - 1) as u32
        }
    }

    fn dealloc(&mut self, id: u32) {
        self.pages[id as usize] = Page::Free;
        self.free.push(id);
    }

    /// Structural invariant check; returns human-readable violations.
    pub fn audit_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let Some(root) = self.root else {
            if self.len != 0 {
                out.push(format!("empty tree reports len {}", self.len));
            }
            return out;
        };
        let mut leaves = Vec::new();
        let mut count = 0usize;
        let mut visited = 0usize;
        self.audit_rec(root, None, None, true, &mut leaves, &mut count, &mut visited, &mut out);
        if count != self.len {
            out.push(format!("len {} but {} keys reachable", self.len, count));
        }
        // leaf chain must visit exactly the in-order leaves
        let mut at = Some(leaves[0]);
        for &want in &leaves {
            match at {
                Some(id) if id == want => {
                    let Page::Leaf { next, .. } = &self.pages[id as usize] else { unreachable!() };
                    at = *next;
                }
                other => {
                    out.push(format!("leaf chain diverges: expected {want}, found {other:?}"));
                    return out;
                }
            }
        }
        if let Some(id) = at {
            out.push(format!("leaf chain continues past last leaf into {id}"));
        }
        let live = self.live_pages().0 + self.live_pages().1;
        if live != visited {
            out.push(format!("{live} live pages but {visited} reachable"));
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn audit_rec(
        &self,
        at: u32,
        lo: Option<Key>,
        hi: Option<Key>,
        is_root: bool,
        leaves: &mut Vec<u32>,
        count: &mut usize,
        visited: &mut usize,
        out: &mut Vec<String>,
    ) {
        *visited += 1;
        let in_bounds = |k: Key| lo.is_none_or(|l| k >= l) && hi.is_none_or(|h| k < h);
        match &self.pages[at as usize] {
            Page::Leaf { keys, payloads, .. } => {
                leaves.push(at);
                *count += keys.len();
                if keys.len() != payloads.len() {
                    out.push(format!("page {at}: {} keys, {} payloads", keys.len(), payloads.len()));
                }
                if keys.len() > self.leaf_cap
                    || (!is_root && keys.len() < self.leaf_cap.div_ceil(2))
                {
                    out.push(format!("leaf {at} occupancy {} of {}", keys.len(), self.leaf_cap));
                }
                if !keys.windows(2).all(|w| w[0] < w[1]) {
                    out.push(format!("leaf {at} keys unsorted"));
                }
                if !keys.iter().all(|&k| in_bounds(k)) {
                    out.push(format!("leaf {at} key escapes separator bounds"));
                }
            }
            Page::Inner { keys, children } => {
                if children.len() != keys.len() + 1 {
                    out.push(format!(
                        "inner {at}: {} children, {} keys",
                        children.len(),
                        keys.len()
                    ));
                    return;
                }
                if children.len() > self.inner_cap
                    || children.len() < if is_root { 2 } else { self.inner_cap.div_ceil(2) }
                {
                    out.push(format!("inner {at} occupancy {} of {}", children.len(), self.inner_cap));
                }
                if !keys.windows(2).all(|w| w[0] < w[1]) {
                    out.push(format!("inner {at} separators unsorted"));
                }
                if !keys.iter().all(|&k| in_bounds(k)) {
                    out.push(format!("inner {at} separator escapes bounds"));
                }
                for (i, &c) in children.iter().enumerate() {
                    let clo = if i == 0 { lo } else { Some(keys[i - 1]) };
                    let chi = if i == keys.len() { hi } else { Some(keys[i]) };
                    self.audit_rec(c, clo, chi, false, leaves, count, visited, out);
                }
            }
            Page::Free => out.push(format!("reachable page {at} is on the free list")),
        }
    }
}

fn balanced_chunks(n: usize, cap: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    let groups = n.div_ceil(cap).max(1);
    let base = n / groups;
    let extra = n % groups;
    let mut start = 0;
    (0..groups).map(move |g| {
        let size = base + usize::from(g < extra);
        let r = start..start + size;
        start += size;
        r
    })
}
