//! STR-packed R-tree over rectangles and best-first retrieval of obstacles
//! in order of distance from the target.
//!
//! Page I/O is simulated: one inspected node is one page access.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{invalid_param, Result, VcmError};
use crate::geometry::{MinDist, Rect, Segment};

/// Bytes per index entry: four coordinates plus a child reference.
pub const ENTRY_SIZE: usize = 40;
pub const DEFAULT_PAGE_SIZE: usize = 1024;

pub fn fanout_for_page(page_size: usize) -> Result<usize> {
    let f = page_size / ENTRY_SIZE;
    if f < 2 {
        return Err(invalid_param(
            "page_size",
            format!("{page_size} bytes holds fewer than 2 entries"),
        ));
    }
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RNode {
    pub mbr: Rect,
    pub leaf: bool,
    /// Item indices for leaves, node indices otherwise.
    pub children: Vec<u32>,
}

/// Static R-tree built by sort-tile-recursive packing.
#[derive(Clone, Debug)]
pub struct RTree<T> {
    nodes: Vec<RNode>,
    items: Vec<T>,
    rects: Vec<Rect>,
    levels: usize,
}

fn str_groups(mut entries: Vec<(Rect, u32)>, fanout: usize) -> Vec<Vec<(Rect, u32)>> {
    let n = entries.len();
    let pages = n.div_ceil(fanout);
    let slabs = (pages as f64).sqrt().ceil() as usize;
    let slab_len = slabs * fanout;
    let key = |r: &Rect, axis: usize| {
        if axis == 0 {
            r.min.x + r.max.x
        } else {
            r.min.y + r.max.y
        }
    };
    entries.sort_by(|a, b| key(&a.0, 0).total_cmp(&key(&b.0, 0)).then(a.1.cmp(&b.1)));
    let mut groups = Vec::with_capacity(pages);
    for slab in entries.chunks_mut(slab_len) {
        slab.sort_by(|a, b| key(&a.0, 1).total_cmp(&key(&b.0, 1)).then(a.1.cmp(&b.1)));
        for g in slab.chunks(fanout) {
            groups.push(g.to_vec());
        }
    }
    groups
}

fn mbr_of(group: &[(Rect, u32)]) -> Rect {
    group[1..]
        .iter()
        .fold(group[0].0, |acc, (r, _)| acc.union(r))
}

impl<T> RTree<T> {
    /// Packs `items`; panics on an empty list (callers validate).
    pub fn bulk_load(items: Vec<T>, rect_of: impl Fn(&T) -> Rect, fanout: usize) -> Self {
        assert!(!items.is_empty() && fanout >= 2);
        let rects: Vec<Rect> = items.iter().map(&rect_of).collect();
        let mut nodes = Vec::new();
        let mut level: Vec<(Rect, u32)> = rects
            .iter()
            .enumerate()
            .map(|(i, r)| (*r, i as u32))
            .collect();
        let mut leaf = true;
        let mut levels = 0;
        loop {
            let groups = str_groups(level, fanout);
            level = Vec::with_capacity(groups.len());
            for g in groups {
                let mbr = mbr_of(&g);
                nodes.push(RNode {
                    mbr,
                    leaf,
                    children: g.iter().map(|e| e.1).collect(),
                });
                level.push((mbr, nodes.len() as u32 - 1));
            }
            levels += 1;
            leaf = false;
            if level.len() == 1 {
                break;
            }
        }
        Self {
            nodes,
            items,
            rects,
            levels,
        }
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn node(&self, i: usize) -> &RNode {
        &self.nodes[i]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn item(&self, i: usize) -> &T {
        &self.items[i]
    }

    pub fn item_rect(&self, i: usize) -> &Rect {
        &self.rects[i]
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Levels including the data level.
    pub fn height(&self) -> usize {
        self.levels + 1
    }

    /// Depth-first search descending into nodes accepted by `accept`;
    /// reports every accepted item and every inspected node.
    pub fn search(
        &self,
        accept: impl Fn(&Rect) -> bool,
        mut on_item: impl FnMut(usize),
        mut on_node: impl FnMut(usize),
    ) {
        let root = self.root();
        if !accept(&self.nodes[root].mbr) {
            return;
        }
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            on_node(n);
            let node = &self.nodes[n];
            for &c in &node.children {
                let c = c as usize;
                if node.leaf {
                    if accept(&self.rects[c]) {
                        on_item(c);
                    }
                } else if accept(&self.nodes[c].mbr) {
                    stack.push(c);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObstacleRect {
    pub id: u64,
    pub rect: Rect,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AccessStats {
    pub node_accesses: u64,
    pub obstacles_emitted: u64,
    pub obstacles_pruned: u64,
    pub nodes_pruned: u64,
}

#[derive(Clone, Debug)]
pub struct ObstacleIndex {
    tree: RTree<ObstacleRect>,
    page_size: usize,
}

impl ObstacleIndex {
    pub fn bulk_load(obstacles: Vec<ObstacleRect>, page_size: usize) -> Result<Self> {
        if obstacles.is_empty() {
            return Err(VcmError::EmptyInput("obstacle list"));
        }
        let fanout = fanout_for_page(page_size)?;
        Ok(Self {
            tree: RTree::bulk_load(obstacles, |o| o.rect, fanout),
            page_size,
        })
    }

    pub fn tree(&self) -> &RTree<ObstacleRect> {
        &self.tree
    }

    pub fn page_size(&self) -> usize {
        self.page_size
    }

    pub fn fanout(&self) -> usize {
        self.page_size / ENTRY_SIZE
    }

    pub fn height(&self) -> usize {
        self.tree.height()
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn obstacles(&self) -> &[ObstacleRect] {
        self.tree.items()
    }

    /// Best-first stream of obstacles by distance to `target`, stopping past `limit`.
    pub fn retrieve(&self, target: Segment, limit: f64) -> IncrementalRetrieval<'_> {
        let root = self.tree.root();
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Entry {
            dist: self.tree.node(root).mbr.mindist(&target),
            kind: Kind::Node,
            id: root as u64,
            index: root as u32,
        }));
        IncrementalRetrieval {
            index: self,
            target,
            limit,
            heap,
            stats: AccessStats::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Kind {
    Obstacle,
    Node,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    dist: f64,
    kind: Kind,
    id: u64,
    index: u32,
}

impl PartialEq for Entry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.dist
            .total_cmp(&o.dist)
            .then(self.kind.cmp(&o.kind))
            .then(self.id.cmp(&o.id))
            .then(self.index.cmp(&o.index))
    }
}

/// Cursor over an [`ObstacleIndex`]. Ties in distance go to the smaller id.
pub struct IncrementalRetrieval<'a> {
    index: &'a ObstacleIndex,
    target: Segment,
    limit: f64,
    heap: BinaryHeap<Reverse<Entry>>,
    stats: AccessStats,
}

impl IncrementalRetrieval<'_> {
    pub fn stats(&self) -> AccessStats {
        self.stats
    }

    /// Next obstacle not rejected by `prune`. Pruned nodes are skipped with
    /// their whole subtree.
    pub fn next_with(
        &mut self,
        mut prune: impl FnMut(&Rect) -> bool,
    ) -> Option<(ObstacleRect, f64)> {
        let tree = &self.index.tree;
        while let Some(Reverse(e)) = self.heap.pop() {
            if e.dist > self.limit {
                self.heap.clear();
                return None;
            }
            match e.kind {
                Kind::Obstacle => {
                    let o = *tree.item(e.index as usize);
                    if prune(&o.rect) {
                        self.stats.obstacles_pruned += 1;
                        continue;
                    }
                    self.stats.obstacles_emitted += 1;
                    return Some((o, e.dist));
                }
                Kind::Node => {
                    let node = tree.node(e.index as usize);
                    if prune(&node.mbr) {
                        self.stats.nodes_pruned += 1;
                        continue;
                    }
                    self.stats.node_accesses += 1;
                    for &c in &node.children {
                        let entry = if node.leaf {
                            let o = tree.item(c as usize);
                            Entry {
                                dist: o.rect.mindist(&self.target),
                                kind: Kind::Obstacle,
                                id: o.id,
                                index: c,
                            }
                        } else {
                            Entry {
                                dist: tree.node(c as usize).mbr.mindist(&self.target),
                                kind: Kind::Node,
                                id: c as u64,
                                index: c,
                            }
                        };
                        self.heap.push(Reverse(entry));
                    }
                }
            }
        }
        None
    }
}

impl Iterator for IncrementalRetrieval<'_> {
    type Item = (ObstacleRect, f64);

    fn next(&mut self) -> Option<Self::Item> {
        self.next_with(|_| false)
    }
}
