//! Dynamic R-tree with one-by-one insertion.
//!
//! Inserts descend into the child whose MBR grows least. An overflowing node
//! splits around its two largest entries (by MBR area); the rest go to the
//! group whose MBR grows least, subject to a minimum fill of `M / 3`.

use crate::geometry::Mbr;

#[derive(Clone, Debug)]
enum Kids {
    Leaf(Vec<(Mbr, u32)>),
    Inner(Vec<usize>),
}

#[derive(Clone, Debug)]
struct Node {
    mbr: Mbr,
    kids: Kids,
}

#[derive(Clone, Debug)]
pub struct RTree {
    nodes: Vec<Node>,
    root: Option<usize>,
    m: usize,
    len: usize,
}

impl RTree {
    pub fn new(m: usize) -> RTree {
        assert!(m >= 4, "node capacity must be at least 4");
        RTree {
            nodes: Vec::new(),
            root: None,
            m,
            len: 0,
        }
    }

    pub fn build(entries: impl IntoIterator<Item = (Mbr, u32)>, m: usize) -> RTree {
        let mut t = RTree::new(m);
        for (mbr, id) in entries {
            t.insert(mbr, id);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, mbr: Mbr, id: u32) {
        self.len += 1;
        let Some(root) = self.root else {
            self.nodes.push(Node {
                mbr,
                kids: Kids::Leaf(vec![(mbr, id)]),
            });
            self.root = Some(self.nodes.len() - 1);
            return;
        };
        if let Some(sibling) = self.insert_at(root, mbr, id) {
            let both = self.nodes[root].mbr.union(&self.nodes[sibling].mbr);
            self.nodes.push(Node {
                mbr: both,
                kids: Kids::Inner(vec![root, sibling]),
            });
            self.root = Some(self.nodes.len() - 1);
        }
    }

    /// Inserts below `node`; returns the new sibling if `node` split.
    fn insert_at(&mut self, node: usize, mbr: Mbr, id: u32) -> Option<usize> {
        self.nodes[node].mbr = self.nodes[node].mbr.union(&mbr);
        let child = match &self.nodes[node].kids {
            Kids::Leaf(_) => None,
            Kids::Inner(c) => Some(self.choose(c, &mbr)),
        };
        match child {
            None => {
                let Kids::Leaf(entries) = &mut self.nodes[node].kids else {
                    unreachable!()
                };
                entries.push((mbr, id));
                if entries.len() > self.m {
                    let all = std::mem::take(entries);
                    let (a, b) = split(all, self.m, |e| e.0);
                    return Some(self.finish_split(node, Kids::Leaf(a), Kids::Leaf(b)));
                }
                None
            }
            Some(c) => {
                let sibling = self.insert_at(c, mbr, id)?;
                let Kids::Inner(children) = &mut self.nodes[node].kids else {
                    unreachable!()
                };
                children.push(sibling);
                if children.len() > self.m {
                    let all: Vec<(Mbr, usize)> = std::mem::take(children)
                        .into_iter()
                        .map(|k| (self.nodes[k].mbr, k))
                        .collect();
                    let (a, b) = split(all, self.m, |e| e.0);
                    let a = a.into_iter().map(|e| e.1).collect();
                    let b = b.into_iter().map(|e| e.1).collect();
                    return Some(self.finish_split(node, Kids::Inner(a), Kids::Inner(b)));
                }
                None
            }
        }
    }

    fn finish_split(&mut self, node: usize, a: Kids, b: Kids) -> usize {
        let mbr_a = self.kids_mbr(&a);
        let mbr_b = self.kids_mbr(&b);
        self.nodes[node] = Node { mbr: mbr_a, kids: a };
        self.nodes.push(Node { mbr: mbr_b, kids: b });
        self.nodes.len() - 1
    }

    fn kids_mbr(&self, k: &Kids) -> Mbr {
        match k {
            Kids::Leaf(e) => e[1..].iter().fold(e[0].0, |acc, x| acc.union(&x.0)),
            Kids::Inner(c) => c[1..]
                .iter()
                .fold(self.nodes[c[0]].mbr, |acc, &x| acc.union(&self.nodes[x].mbr)),
        }
    }

    /// Child needing the least enlargement; ties go to the smaller child.
    fn choose(&self, children: &[usize], mbr: &Mbr) -> usize {
        *children
            .iter()
            .min_by(|&&a, &&b| {
                let (na, nb) = (&self.nodes[a].mbr, &self.nodes[b].mbr);
                na.enlargement(mbr)
                    .total_cmp(&nb.enlargement(mbr))
                    .then(na.area().total_cmp(&nb.area()))
            })
            .expect("inner node has children")
    }

    /// Appends the ids of every entry whose MBR intersects `q`.
    pub fn query(&self, q: &Mbr, out: &mut Vec<u32>) {
        let Some(root) = self.root else { return };
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.mbr.intersects(q) {
                continue;
            }
            match &node.kids {
                Kids::Leaf(e) => out.extend(e.iter().filter(|x| x.0.intersects(q)).map(|x| x.1)),
                Kids::Inner(c) => stack.extend(c.iter().copied()),
            }
        }
    }

    pub fn heap_bytes(&self) -> usize {
        self.nodes.capacity() * std::mem::size_of::<Node>()
            + self
                .nodes
                .iter()
                .map(|n| match &n.kids {
                    Kids::Leaf(e) => e.capacity() * std::mem::size_of::<(Mbr, u32)>(),
                    Kids::Inner(c) => c.capacity() * std::mem::size_of::<usize>(),
                })
                .sum::<usize>()
    }

    /// Checks tight MBRs, capacity bounds and nonempty nodes; returns the
    /// number of entries reachable from the root.
    pub fn audit(&self) -> Result<usize, String> {
        let Some(root) = self.root else {
            return Ok(0);
        };
        let mut count = 0;
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let (len, tight) = match &node.kids {
                Kids::Leaf(e) => {
                    count += e.len();
                    (e.len(), !e.is_empty() && self.kids_mbr(&node.kids) == node.mbr)
                }
                Kids::Inner(c) => {
                    stack.extend(c.iter().copied());
                    (c.len(), !c.is_empty() && self.kids_mbr(&node.kids) == node.mbr)
                }
            };
            if len == 0 || len > self.m {
                return Err(format!("node {n} holds {len} children (capacity {})", self.m));
            }
            if !tight {
                return Err(format!("node {n} has a loose MBR"));
            }
        }
        Ok(count)
    }

    pub fn depth(&self) -> usize {
        let mut d = 0;
        let mut n = self.root;
        while let Some(i) = n {
            d += 1;
            n = match &self.nodes[i].kids {
                Kids::Leaf(_) => None,
                Kids::Inner(c) => c.first().copied(),
            };
        }
        d
    }
}

/// Splits `items` (M + 1 of them) into two groups.
fn split<T>(mut items: Vec<T>, m: usize, mbr: impl Fn(&T) -> Mbr) -> (Vec<T>, Vec<T>) {
    let min_fill = (m / 3).max(1);
    // seeds: the two largest entries
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| mbr(&items[b]).area().total_cmp(&mbr(&items[a]).area()).then(a.cmp(&b)));
    let (sa, sb) = (order[0].max(order[1]), order[0].min(order[1]));
    let seed_a = items.swap_remove(sa);
    let seed_b = items.swap_remove(sb);
    let (mut box_a, mut box_b) = (mbr(&seed_a), mbr(&seed_b));
    let (mut ga, mut gb) = (vec![seed_a], vec![seed_b]);
    let total = items.len();
    for (k, it) in items.into_iter().enumerate() {
        let left = total - k;
        let b = mbr(&it);
        let to_a = if ga.len() + left <= min_fill {
            true
        } else if gb.len() + left <= min_fill {
            false
        } else {
            let (ea, eb) = (box_a.enlargement(&b), box_b.enlargement(&b));
            match ea.total_cmp(&eb) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => match box_a.area().total_cmp(&box_b.area()) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => ga.len() <= gb.len(),
                },
            }
        };
        if to_a {
            box_a = box_a.union(&b);
            ga.push(it);
        } else {
            box_b = box_b.union(&b);
            gb.push(it);
        }
    }
    (ga, gb)
}
