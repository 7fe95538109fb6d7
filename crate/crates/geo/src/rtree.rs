//! Static R-tree packed with Sort-Tile-Recursive bulk loading.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use crate::error::GeoError;
use crate::geometry::Rect;

pub const DEFAULT_FANOUT: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf { mbr: Rect, entries: Vec<(Rect, u64)> },
    Inner { mbr: Rect, children: Vec<Node> },
}

impl Node {
    fn mbr(&self) -> &Rect {
        match self {
            Node::Leaf { mbr, .. } | Node::Inner { mbr, .. } => mbr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RTree {
    root: Node,
    fanout: usize,
    height: usize,
    len: usize,
}

fn union_all<'a>(mut rects: impl Iterator<Item = &'a Rect>) -> Rect {
    let first = *rects.next().expect("non-empty group");
    rects.fold(first, |acc, r| acc.union(r))
}

/// Splits items into `ceil(n/m)` groups whose sizes differ by at most one,
/// tiling first by x-center slices and then by y-center within each slice.
fn str_groups<T>(mut items: Vec<(Rect, T)>, m: usize) -> Vec<Vec<(Rect, T)>> {
    let n = items.len();
    let g = n.div_ceil(m);
    if g <= 1 {
        return vec![items];
    }
    let sizes: Vec<usize> = (0..g).map(|i| n / g + usize::from(i < n % g)).collect();
    let s = (g as f64).sqrt().ceil() as usize;
    let per_slice: Vec<usize> = (0..s).map(|i| g / s + usize::from(i < g % s)).collect();

    items.sort_by(|a, b| a.0.center().x.total_cmp(&b.0.center().x));
    let mut rest = items.into_iter();
    let mut out = Vec::with_capacity(g);
    let mut next_group = 0;
    for groups_here in per_slice {
        let group_sizes = &sizes[next_group..next_group + groups_here];
        next_group += groups_here;
        let take: usize = group_sizes.iter().sum();
        let mut slice: Vec<(Rect, T)> = rest.by_ref().take(take).collect();
        slice.sort_by(|a, b| a.0.center().y.total_cmp(&b.0.center().y));
        let mut it = slice.into_iter();
        for &sz in group_sizes {
            out.push(it.by_ref().take(sz).collect());
        }
    }
    out
}

impl RTree {
    /// Bulk loads entries; identical input order gives an identical tree.
    pub fn bulk_load(entries: Vec<(Rect, u64)>, fanout: usize) -> Result<Self, GeoError> {
        if fanout < 4 {
            return Err(GeoError::InvalidFanout(fanout));
        }
        if entries.is_empty() {
            return Err(GeoError::EmptyInput);
        }
        let len = entries.len();
        let mut level: Vec<Node> = str_groups(entries, fanout)
            .into_iter()
            .map(|group| Node::Leaf { mbr: union_all(group.iter().map(|(r, _)| r)), entries: group })
            .collect();
        let mut height = 1;
        while level.len() > 1 {
            let keyed: Vec<(Rect, Node)> = level.into_iter().map(|n| (*n.mbr(), n)).collect();
            level = str_groups(keyed, fanout)
                .into_iter()
                .map(|group| Node::Inner {
                    mbr: union_all(group.iter().map(|(r, _)| r)),
                    children: group.into_iter().map(|(_, n)| n).collect(),
                })
                .collect();
            height += 1;
        }
        let root = level.pop().expect("one root");
        Ok(RTree { root, fanout, height, len })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn fanout(&self) -> usize {
        self.fanout
    }

    pub fn bounds(&self) -> Rect {
        *self.root.mbr()
    }

    /// Ids whose stored rectangle intersects `w` (closed boundaries), ascending.
    pub fn window(&self, w: &Rect) -> Vec<u64> {
        let mut out = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            if !node.mbr().intersects(w) {
                continue;
            }
            match node {
                Node::Leaf { entries, .. } => {
                    out.extend(entries.iter().filter(|(r, _)| r.intersects(w)).map(|(_, id)| *id));
                }
                Node::Inner { children, .. } => stack.extend(children.iter()),
            }
        }
        out.sort_unstable();
        out
    }

    /// Root entry list for single-leaf trees, used in tests and diagnostics.
    pub fn root_entries(&self) -> Option<&[(Rect, u64)]> {
        match &self.root {
            Node::Leaf { entries, .. } => Some(entries),
            Node::Inner { .. } => None,
        }
    }

    /// Hash over the full node layout (rectangle bits, ids, nesting).
    pub fn structural_hash(&self) -> u64 {
        fn feed(h: &mut DefaultHasher, r: &Rect) {
            for v in [r.xmin, r.ymin, r.xmax, r.ymax] {
                h.write_u64(v.to_bits());
            }
        }
        fn walk(h: &mut DefaultHasher, n: &Node) {
            match n {
                Node::Leaf { mbr, entries } => {
                    h.write_u8(0);
                    feed(h, mbr);
                    h.write_usize(entries.len());
                    for (r, id) in entries {
                        feed(h, r);
                        h.write_u64(*id);
                    }
                }
                Node::Inner { mbr, children } => {
                    h.write_u8(1);
                    feed(h, mbr);
                    h.write_usize(children.len());
                    for c in children {
                        walk(h, c);
                    }
                }
            }
        }
        let mut h = DefaultHasher::new();
        walk(&mut h, &self.root);
        h.finish()
    }

    /// Checks fill bounds, MBR containment and balance.
    pub fn check_invariants(&self) -> Result<(), String> {
        let min_fill = self.fanout.div_ceil(2);
        let mut leaf_depths = Vec::new();
        let mut count = 0usize;
        fn walk(
            n: &Node,
            depth: usize,
            is_root: bool,
            fanout: usize,
            min_fill: usize,
            leaf_depths: &mut Vec<usize>,
            count: &mut usize,
        ) -> Result<(), String> {
            let (mbr, rects): (&Rect, Vec<&Rect>) = match n {
                Node::Leaf { mbr, entries } => {
                    *count += entries.len();
                    leaf_depths.push(depth);
                    (mbr, entries.iter().map(|(r, _)| r).collect())
                }
                Node::Inner { mbr, children } => {
                    for c in children {
                        walk(c, depth + 1, false, fanout, min_fill, leaf_depths, count)?;
                    }
                    (mbr, children.iter().map(|c| c.mbr()).collect())
                }
            };
            if rects.len() > fanout || (!is_root && rects.len() < min_fill) {
                return Err(format!("node at depth {depth} holds {} children", rects.len()));
            }
            if let Some(r) = rects.iter().find(|r| !mbr.contains_rect(r)) {
                return Err(format!("parent rect does not contain child {r:?}"));
            }
            Ok(())
        }
        walk(&self.root, 1, true, self.fanout, min_fill, &mut leaf_depths, &mut count)?;
        if leaf_depths.iter().any(|&d| d != self.height) {
            return Err("tree is not height-balanced".into());
        }
        if count != self.len {
            return Err(format!("tree stores {count} entries, expected {}", self.len));
        }
        Ok(())
    }
}
