//! CR-tree: an STR-packed R-tree whose child MBRs are stored as small
//! integer offsets relative to the parent's exact MBR.
//!
//! Quantization always rounds outward, so a dequantized box contains the
//! original box and queries can only over-approximate; an exact MBR check on
//! the leaf candidates removes the extra hits.

use super::str::{pack, str_order, Packed};
use crate::geometry::Mbr;

/// Quantized box relative to a reference box: `[x_lo, y_lo, x_hi, y_hi]`.
pub type QMbr = [u16; 4];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Quantizer {
    bits: u32,
}

impl Quantizer {
    pub fn new(bits: u32) -> Result<Quantizer, String> {
        match bits {
            4 | 8 | 16 => Ok(Quantizer { bits }),
            _ => Err(format!("quantization bits must be 4, 8 or 16, got {bits}")),
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn levels(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    fn deq(&self, q: u16, lo: f64, hi: f64) -> f64 {
        let l = self.levels();
        match q as u32 {
            0 => lo,
            x if x >= l => hi,
            x => lo + (hi - lo) * (x as f64 / l as f64),
        }
    }

    fn q_lo(&self, v: f64, lo: f64, hi: f64) -> u16 {
        let l = self.levels();
        if hi <= lo {
            return 0;
        }
        let mut q = (((v - lo) / (hi - lo)) * l as f64).floor().clamp(0.0, l as f64) as u16;
        // step down until the dequantized value no longer exceeds v
        while q > 0 && self.deq(q, lo, hi) > v {
            q -= 1;
        }
        q
    }

    fn q_hi(&self, v: f64, lo: f64, hi: f64) -> u16 {
        let l = self.levels();
        if hi <= lo {
            return l as u16;
        }
        let mut q = (((v - lo) / (hi - lo)) * l as f64).ceil().clamp(0.0, l as f64) as u16;
        while (q as u32) < l && self.deq(q, lo, hi) < v {
            q += 1;
        }
        q
    }

    /// Quantizes `b` relative to `r`; `b` must lie inside `r`.
    pub fn quantize(&self, b: &Mbr, r: &Mbr) -> QMbr {
        [
            self.q_lo(b.x_min, r.x_min, r.x_max),
            self.q_lo(b.y_min, r.y_min, r.y_max),
            self.q_hi(b.x_max, r.x_min, r.x_max),
            self.q_hi(b.y_max, r.y_min, r.y_max),
        ]
    }

    pub fn dequantize(&self, q: &QMbr, r: &Mbr) -> Mbr {
        Mbr {
            x_min: self.deq(q[0], r.x_min, r.x_max),
            y_min: self.deq(q[1], r.y_min, r.y_max),
            x_max: self.deq(q[2], r.x_min, r.x_max),
            y_max: self.deq(q[3], r.y_min, r.y_max),
        }
    }

    /// Bytes one quantized box occupies when bit-packed.
    pub fn packed_bytes(&self) -> usize {
        (4 * self.bits as usize).div_ceil(8)
    }
}

#[derive(Clone, Copy, Debug)]
struct CrNode {
    /// Exact reference box of the node.
    mbr: Mbr,
    first: u32,
    count: u32,
}

#[derive(Clone, Debug)]
pub struct CrTree {
    q: Quantizer,
    ids: Vec<u32>,
    /// Leaf entries quantized relative to their leaf node.
    leaf_boxes: Vec<QMbr>,
    /// `levels[0]` are leaves; every node above stores its children's boxes
    /// quantized relative to itself in `child_boxes[level]`.
    levels: Vec<Vec<CrNode>>,
    child_boxes: Vec<Vec<QMbr>>,
}

impl CrTree {
    pub fn build(mut entries: Vec<(Mbr, u32)>, m: usize, q: Quantizer) -> CrTree {
        let m = m.max(2);
        str_order(&mut entries, m, |e| e.0);
        let mut levels: Vec<Vec<Packed>> = Vec::new();
        if !entries.is_empty() {
            let boxes: Vec<Mbr> = entries.iter().map(|e| e.0).collect();
            levels.push(pack(&boxes, m));
            while levels.last().expect("nonempty").len() > 1 {
                let mut top = levels.pop().expect("nonempty");
                str_order(&mut top, m, |p| p.mbr);
                let boxes: Vec<Mbr> = top.iter().map(|p| p.mbr).collect();
                levels.push(top);
                levels.push(pack(&boxes, m));
            }
        }
        let mut leaf_boxes = vec![[0u16; 4]; entries.len()];
        if let Some(leaves) = levels.first() {
            for node in leaves {
                for i in node.first..node.first + node.count {
                    leaf_boxes[i as usize] = q.quantize(&entries[i as usize].0, &node.mbr);
                }
            }
        }
        let mut child_boxes = vec![Vec::new()];
        for l in 1..levels.len() {
            let mut boxes = vec![[0u16; 4]; levels[l - 1].len()];
            for node in &levels[l] {
                for c in node.first..node.first + node.count {
                    boxes[c as usize] = q.quantize(&levels[l - 1][c as usize].mbr, &node.mbr);
                }
            }
            child_boxes.push(boxes);
        }
        let levels = levels
            .into_iter()
            .map(|l| {
                l.into_iter()
                    .map(|p| CrNode {
                        mbr: p.mbr,
                        first: p.first,
                        count: p.count,
                    })
                    .collect()
            })
            .collect();
        CrTree {
            q,
            ids: entries.into_iter().map(|e| e.1).collect(),
            leaf_boxes,
            levels,
            child_boxes,
        }
    }

    pub fn quantizer(&self) -> Quantizer {
        self.q
    }

    /// Ids whose dequantized leaf box intersects `query` (a superset of the
    /// exact answer).
    pub fn query_approx(&self, query: &Mbr, mut f: impl FnMut(u32)) {
        let Some(top) = self.levels.len().checked_sub(1) else {
            return;
        };
        if !self.levels[top][0].mbr.intersects(query) {
            return;
        }
        let mut stack: Vec<(usize, u32)> = vec![(top, 0)];
        while let Some((level, i)) = stack.pop() {
            let node = self.levels[level][i as usize];
            let range = node.first..node.first + node.count;
            if level == 0 {
                for e in range {
                    let b = self.q.dequantize(&self.leaf_boxes[e as usize], &node.mbr);
                    if b.intersects(query) {
                        f(self.ids[e as usize]);
                    }
                }
            } else {
                for c in range {
                    let b = self.q.dequantize(&self.child_boxes[level][c as usize], &node.mbr);
                    if b.intersects(query) {
                        stack.push((level - 1, c));
                    }
                }
            }
        }
    }

    /// Bytes of the tree with quantized boxes bit-packed.
    pub fn heap_bytes(&self) -> usize {
        let qb = self.q.packed_bytes();
        self.ids.len() * (4 + qb)
            + self.child_boxes.iter().map(|l| l.len() * qb).sum::<usize>()
            + self
                .levels
                .iter()
                .map(|l| l.len() * std::mem::size_of::<CrNode>())
                .sum::<usize>()
    }
}
