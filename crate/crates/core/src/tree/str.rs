//! Sort-Tile-Recursive bulk loading.

use crate::geometry::Mbr;

/// Node of a packed tree: covers `count` consecutive items of the level below.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Packed {
    pub mbr: Mbr,
    pub first: u32,
    pub count: u32,
}

/// Orders `items` in STR fashion: sorted by `x_min`, cut into vertical slices,
/// each slice sorted by `y_min`. Consecutive runs of `m` then form the nodes.
pub(crate) fn str_order<T>(items: &mut [T], m: usize, mbr: impl Fn(&T) -> Mbr) {
    let n = items.len();
    if n <= m {
        return;
    }
    let leaves = n.div_ceil(m);
    let slices = (leaves as f64).sqrt().ceil() as usize;
    let per_slice = slices * m;
    items.sort_by(|a, b| mbr(a).x_min.total_cmp(&mbr(b).x_min));
    for slice in items.chunks_mut(per_slice) {
        slice.sort_by(|a, b| mbr(a).y_min.total_cmp(&mbr(b).y_min));
    }
}

/// Packs consecutive runs of `m` boxes into parent nodes.
pub(crate) fn pack(boxes: &[Mbr], m: usize) -> Vec<Packed> {
    boxes
        .chunks(m)
        .enumerate()
        .map(|(k, run)| Packed {
            mbr: run[1..].iter().fold(run[0], |acc, b| acc.union(b)),
            first: (k * m) as u32,
            count: run.len() as u32,
        })
        .collect()
}

/// Static tree over `(Mbr, id)` entries bulk-loaded with STR.
#[derive(Clone, Debug)]
pub struct StrTree {
    entries: Vec<(Mbr, u32)>,
    /// `levels[0]` groups entries; the last level holds the single root.
    levels: Vec<Vec<Packed>>,
}

impl StrTree {
    pub fn build(mut entries: Vec<(Mbr, u32)>, m: usize) -> StrTree {
        let m = m.max(2);
        str_order(&mut entries, m, |e| e.0);
        let mut levels = Vec::new();
        if !entries.is_empty() {
            let boxes: Vec<Mbr> = entries.iter().map(|e| e.0).collect();
            levels.push(pack(&boxes, m));
            while levels.last().expect("nonempty").len() > 1 {
                // reorder the top level (its own child ranges stay valid), then pack it
                let mut top = levels.pop().expect("nonempty");
                str_order(&mut top, m, |p| p.mbr);
                let boxes: Vec<Mbr> = top.iter().map(|p| p.mbr).collect();
                levels.push(top);
                levels.push(pack(&boxes, m));
            }
        }
        StrTree { entries, levels }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn height(&self) -> usize {
        self.levels.len()
    }

    pub fn query(&self, q: &Mbr, mut f: impl FnMut(u32)) {
        let Some(top) = self.levels.len().checked_sub(1) else {
            return;
        };
        let mut stack: Vec<(usize, u32)> = vec![(top, 0)];
        while let Some((level, i)) = stack.pop() {
            let node = self.levels[level][i as usize];
            if !node.mbr.intersects(q) {
                continue;
            }
            let range = node.first..node.first + node.count;
            if level == 0 {
                for e in &self.entries[range.start as usize..range.end as usize] {
                    if e.0.intersects(q) {
                        f(e.1);
                    }
                }
            } else {
                stack.extend(range.map(|c| (level - 1, c)));
            }
        }
    }

    pub fn heap_bytes(&self) -> usize {
        self.entries.capacity() * std::mem::size_of::<(Mbr, u32)>()
            + self
                .levels
                .iter()
                .map(|l| l.capacity() * std::mem::size_of::<Packed>())
                .sum::<usize>()
    }
}
