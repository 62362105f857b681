//! Interface shared by the source-only indexes used with a streamed target.

use crate::geometry::Mbr;

/// Reusable per-probe scratch space (a visited set over source ids).
#[derive(Debug, Default)]
pub struct Scratch {
    stamps: Vec<u32>,
    epoch: u32,
}

impl Scratch {
    pub fn new(sources: usize) -> Self {
        Scratch {
            stamps: vec![0; sources],
            epoch: 0,
        }
    }

    /// Starts a new probe; previously visited ids count as unvisited again.
    pub fn next_probe(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamps.fill(0);
            self.epoch = 1;
        }
    }

    /// Marks `id`; `true` if it was not yet visited in this probe.
    #[inline]
    pub fn first_visit(&mut self, id: u32) -> bool {
        let i = id as usize;
        if i >= self.stamps.len() {
            self.stamps.resize(i + 1, 0);
        }
        if self.stamps[i] == self.epoch {
            false
        } else {
            self.stamps[i] = self.epoch;
            true
        }
    }
}

/// A source-side index probed with one target MBR at a time.
pub trait SourceIndex: Send + Sync {
    /// Appends every source id whose MBR intersects `t`, each exactly once.
    fn candidates(&self, t: &Mbr, scratch: &mut Scratch, out: &mut Vec<u32>);

    /// Approximate heap bytes held by the index structure.
    fn heap_bytes(&self) -> usize;
}
