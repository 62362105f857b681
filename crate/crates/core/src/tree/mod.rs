//! Tree-based source indexes: R-tree, Quadtree, CR-tree, and a plain STR tree.

pub mod crtree;
pub mod quadtree;
pub mod rtree;
mod str;

pub use crtree::{CrTree, Quantizer};
pub use quadtree::Quadtree;
pub use rtree::RTree;
pub use str::StrTree;

use crate::filter::{Scratch, SourceIndex};
use crate::geometry::{Geometry, Mbr};

pub const DEFAULT_NODE_CAPACITY: usize = 16;
pub const DEFAULT_QUANT_BITS: u32 = 8;

fn entries(source: &[Geometry]) -> impl Iterator<Item = (Mbr, u32)> + Clone + '_ {
    source.iter().map(|g| (*g.mbr(), g.id()))
}

pub fn rtree_build(source: &[Geometry], m: usize) -> RTree {
    RTree::build(entries(source), m)
}

pub fn quadtree_build(source: &[Geometry], m: usize, max_depth: usize) -> Quadtree {
    Quadtree::build(entries(source), m, max_depth)
}

/// CR-tree over the source plus the exact MBRs needed for the final filter.
#[derive(Clone, Debug)]
pub struct CrIndex {
    pub tree: CrTree,
    exact: Vec<Mbr>,
}

pub fn crtree_build(source: &[Geometry], m: usize, q: Quantizer) -> CrIndex {
    CrIndex {
        tree: CrTree::build(entries(source).collect(), m, q),
        exact: source.iter().map(|g| *g.mbr()).collect(),
    }
}

impl SourceIndex for RTree {
    fn candidates(&self, t: &Mbr, _: &mut Scratch, out: &mut Vec<u32>) {
        self.query(t, out);
    }

    fn heap_bytes(&self) -> usize {
        RTree::heap_bytes(self)
    }
}

impl SourceIndex for Quadtree {
    fn candidates(&self, t: &Mbr, _: &mut Scratch, out: &mut Vec<u32>) {
        self.query(t, out);
    }

    fn heap_bytes(&self) -> usize {
        Quadtree::heap_bytes(self)
    }
}

impl SourceIndex for CrIndex {
    fn candidates(&self, t: &Mbr, _: &mut Scratch, out: &mut Vec<u32>) {
        self.tree.query_approx(t, |id| {
            if self.exact[id as usize].intersects(t) {
                out.push(id);
            }
        });
    }

    fn heap_bytes(&self) -> usize {
        self.tree.heap_bytes() + self.exact.capacity() * std::mem::size_of::<Mbr>()
    }
}

/// Candidate ids of `t`, sorted.
pub fn tree_query(index: &dyn SourceIndex, t: &Geometry) -> Vec<u32> {
    let mut out = Vec::new();
    index.candidates(t.mbr(), &mut Scratch::default(), &mut out);
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Coord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_boxes(n: usize, seed: u64) -> Vec<(Mbr, u32)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let x = rng.gen_range(0.0..100.0);
                let y = rng.gen_range(0.0..100.0);
                let w = rng.gen_range(0.0..8.0);
                let h = rng.gen_range(0.0..8.0);
                (Mbr::new(x, y, x + w, y + h), i as u32)
            })
            .collect()
    }

    fn brute(boxes: &[(Mbr, u32)], q: &Mbr) -> Vec<u32> {
        boxes.iter().filter(|b| b.0.intersects(q)).map(|b| b.1).collect()
    }

    #[test]
    fn rtree_small_capacities() {
        let boxes = random_boxes(5, 1);
        let t = RTree::build(boxes[..3].iter().copied(), 4);
        assert_eq!(t.depth(), 1);
        let t = RTree::build(boxes.iter().copied(), 4);
        assert_eq!(t.depth(), 2);
        assert_eq!(t.audit().unwrap(), 5);
    }

    #[test]
    fn rtree_invariants_after_every_insert() {
        let boxes = random_boxes(400, 2);
        let mut t = RTree::new(4);
        for (k, &(m, id)) in boxes.iter().enumerate() {
            t.insert(m, id);
            assert_eq!(t.audit().unwrap(), k + 1);
        }
    }

    #[test]
    fn all_trees_answer_like_brute_force() {
        let boxes = random_boxes(2000, 4);
        let queries = random_boxes(300, 5);
        let r = RTree::build(boxes.iter().copied(), 16);
        let q = Quadtree::build(boxes.iter().copied(), 16, 16);
        let s = StrTree::build(boxes.clone(), 16);
        let c = CrTree::build(boxes.clone(), 16, Quantizer::new(4).unwrap());
        for (qm, _) in &queries {
            let mut want = brute(&boxes, qm);
            want.sort_unstable();
            for mut got in [
                {
                    let mut v = Vec::new();
                    r.query(qm, &mut v);
                    v
                },
                {
                    let mut v = Vec::new();
                    q.query(qm, &mut v);
                    v
                },
                {
                    let mut v = Vec::new();
                    s.query(qm, |i| v.push(i));
                    v
                },
            ] {
                got.sort_unstable();
                assert_eq!(got, want);
            }
            let mut approx = Vec::new();
            c.query_approx(qm, |i| approx.push(i));
            assert!(want.iter().all(|w| approx.contains(w)));
        }
    }

    #[test]
    fn quadtree_split_is_single_level() {
        let tiny = |id, x: f64| (Mbr::new(x, x, x + 0.1, x + 0.1), id);
        let mut q = Quadtree::new(Mbr::new(0., 0., 100., 100.), 2, 16);
        for (i, x) in [1.0, 2.0, 3.0].into_iter().enumerate() {
            let (m, id) = tiny(i as u32, x);
            q.insert(m, id);
        }
        assert_eq!(q.depth(), 2);
        let mut q = Quadtree::new(Mbr::new(0., 0., 100., 100.), 2, 16);
        q.insert(Mbr::new(0., 0., 100., 100.), 0);
        q.insert(Mbr::new(10., 10., 90., 90.), 1);
        q.insert(Mbr::new(1., 1., 2., 2.), 2);
        let mut all = Vec::new();
        q.query(&Mbr::new(0., 0., 100., 100.), &mut all);
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2]);
    }

    #[test]
    fn fixture_query() {
        let c = |x, y| Coord::new(x, y);
        let p1 = Geometry::polygon(0, vec![c(0., 0.), c(10., 0.), c(10., 10.), c(0., 10.), c(0., 0.)], vec![])
            .unwrap();
        let p2 = Geometry::polygon(1, vec![c(2., 2.), c(4., 2.), c(4., 4.), c(2., 4.), c(2., 2.)], vec![]).unwrap();
        let l3 = Geometry::line_string(0, vec![c(10., 5.), c(15., 5.)]).unwrap();
        let far = Geometry::line_string(1, vec![c(50., 50.), c(60., 60.)]).unwrap();
        let src = vec![p1, p2];
        let idx: Vec<Box<dyn SourceIndex>> = vec![
            Box::new(rtree_build(&src, 4)),
            Box::new(quadtree_build(&src, 4, 16)),
            Box::new(crtree_build(&src, 4, Quantizer::new(8).unwrap())),
        ];
        for i in &idx {
            assert_eq!(tree_query(i.as_ref(), &l3), vec![0]);
            assert!(tree_query(i.as_ref(), &far).is_empty());
        }
    }
}
