//! Region quadtree over MBRs.
//!
//! Entries that straddle a split line stay at the internal node instead of
//! being copied into several children, so every entry lives in exactly one
//! node and queries need no deduplication. A split moves entries down one
//! level only; an overfull child splits on its next insertion.

use crate::geometry::Mbr;

pub const DEFAULT_MAX_DEPTH: usize = 16;

#[derive(Clone, Debug)]
struct QNode {
    bounds: Mbr,
    entries: Vec<(Mbr, u32)>,
    /// Index of the first of four consecutive children (NE, NW, SE, SW).
    children: Option<usize>,
    depth: usize,
}

#[derive(Clone, Debug)]
pub struct Quadtree {
    nodes: Vec<QNode>,
    m: usize,
    max_depth: usize,
    len: usize,
}

impl Quadtree {
    /// `bounds` must cover every MBR inserted later.
    pub fn new(bounds: Mbr, m: usize, max_depth: usize) -> Quadtree {
        Quadtree {
            nodes: vec![QNode {
                bounds,
                entries: Vec::new(),
                children: None,
                depth: 1,
            }],
            m: m.max(1),
            max_depth: max_depth.max(1),
            len: 0,
        }
    }

    /// Two passes over `entries`: one for the bounds, one to insert.
    pub fn build(entries: impl Iterator<Item = (Mbr, u32)> + Clone, m: usize, max_depth: usize) -> Quadtree {
        let bounds = entries
            .clone()
            .map(|e| e.0)
            .reduce(|a, b| a.union(&b))
            .unwrap_or(Mbr::new(0.0, 0.0, 0.0, 0.0));
        let mut q = Quadtree::new(bounds, m, max_depth);
        for (mbr, id) in entries {
            q.insert(mbr, id);
        }
        q
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, mbr: Mbr, id: u32) {
        debug_assert!(self.nodes[0].bounds.contains(&mbr), "entry outside quadtree bounds");
        self.len += 1;
        let mut n = 0;
        loop {
            match self.nodes[n].children {
                Some(first) => match self.child_for(first, &mbr) {
                    Some(c) => n = c,
                    None => {
                        self.nodes[n].entries.push((mbr, id));
                        return;
                    }
                },
                None => {
                    self.nodes[n].entries.push((mbr, id));
                    if self.nodes[n].entries.len() > self.m && self.nodes[n].depth < self.max_depth {
                        self.split(n);
                    }
                    return;
                }
            }
        }
    }

    fn child_for(&self, first: usize, mbr: &Mbr) -> Option<usize> {
        (first..first + 4).find(|&c| self.nodes[c].bounds.contains(mbr))
    }

    fn split(&mut self, n: usize) {
        let b = self.nodes[n].bounds;
        let depth = self.nodes[n].depth + 1;
        let (mx, my) = ((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0);
        let first = self.nodes.len();
        for bounds in [
            Mbr::new(mx, my, b.x_max, b.y_max),
            Mbr::new(b.x_min, my, mx, b.y_max),
            Mbr::new(mx, b.y_min, b.x_max, my),
            Mbr::new(b.x_min, b.y_min, mx, my),
        ] {
            self.nodes.push(QNode {
                bounds,
                entries: Vec::new(),
                children: None,
                depth,
            });
        }
        self.nodes[n].children = Some(first);
        let entries = std::mem::take(&mut self.nodes[n].entries);
        for e in entries {
            match self.child_for(first, &e.0) {
                Some(c) => self.nodes[c].entries.push(e),
                None => self.nodes[n].entries.push(e),
            }
        }
    }

    pub fn query(&self, q: &Mbr, out: &mut Vec<u32>) {
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bounds.intersects(q) {
                continue;
            }
            out.extend(node.entries.iter().filter(|e| e.0.intersects(q)).map(|e| e.1));
            if let Some(first) = node.children {
                stack.extend(first..first + 4);
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn heap_bytes(&self) -> usize {
        self.nodes.capacity() * std::mem::size_of::<QNode>()
            + self
                .nodes
                .iter()
                .map(|n| n.entries.capacity() * std::mem::size_of::<(Mbr, u32)>())
                .sum::<usize>()
    }
}
