//! Equigrid: a uniform grid whose tiles index geometries by MBR.
//!
//! Tiles are half-open, `[i·w, (i+1)·w) × [j·h, (j+1)·h)`, with floor
//! semantics so negative coordinates work. Duplicate candidate pairs across
//! tiles are suppressed with the reference point: a pair is reported only in
//! the tile holding the top-left corner of the intersection of the two MBRs.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{Scratch, SourceIndex};
use crate::geometry::{Geometry, Mbr};

pub type Tile = (i64, i64);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub width: f64,
    pub height: f64,
}

impl Grid {
    pub fn new(width: f64, height: f64) -> Result<Grid> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::Config(format!(
                "tile size must be positive, got {width}×{height}"
            )));
        }
        Ok(Grid { width, height })
    }

    /// Grid whose tile size is the mean MBR size of the given geometries.
    pub fn dynamic<'a>(geoms: impl IntoIterator<Item = &'a Geometry>) -> Result<Grid> {
        let (w, h) = dynamic_granularity(geoms.into_iter().map(Geometry::mbr))?;
        Ok(Grid {
            width: w,
            height: h,
        })
    }

    #[inline]
    pub fn tile_of(&self, x: f64, y: f64) -> Tile {
        ((x / self.width).floor() as i64, (y / self.height).floor() as i64)
    }

    #[inline]
    pub fn tiles_for(&self, mbr: &Mbr) -> TileSpan {
        let (x_lo, y_lo) = self.tile_of(mbr.x_min, mbr.y_min);
        let (x_hi, y_hi) = self.tile_of(mbr.x_max, mbr.y_max);
        TileSpan {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }

    /// Tile that verifies the pair `(a, b)`.
    #[inline]
    pub fn reference_point_owner(&self, a: &Mbr, b: &Mbr) -> Tile {
        let (x, y) = reference_point(a, b);
        self.tile_of(x, y)
    }
}

/// Mean width and height of the given MBRs.
///
/// A zero mean on one axis borrows the other axis; when both are zero
/// (all MBRs are points) the grid falls back to unit tiles.
pub fn dynamic_granularity<'a>(mbrs: impl IntoIterator<Item = &'a Mbr>) -> Result<(f64, f64)> {
    let (mut n, mut w, mut h) = (0usize, 0.0f64, 0.0f64);
    for m in mbrs {
        n += 1;
        w += m.width();
        h += m.height();
    }
    if n == 0 {
        return Err(Error::EmptyDataset("source"));
    }
    let (w, h) = (w / n as f64, h / n as f64);
    Ok(match (w > 0.0, h > 0.0) {
        (true, true) => (w, h),
        (true, false) => (w, w),
        (false, true) => (h, h),
        (false, false) => (1.0, 1.0),
    })
}

/// Top-left corner of `a ∩ b`: `(max x_min, min y_max)`.
#[inline]
pub fn reference_point(a: &Mbr, b: &Mbr) -> (f64, f64) {
    (a.x_min.max(b.x_min), a.y_max.min(b.y_max))
}

pub fn reference_point_owner(a: &Mbr, b: &Mbr, grid: &Grid) -> Tile {
    grid.reference_point_owner(a, b)
}

pub fn tiles_for(mbr: &Mbr, grid: &Grid) -> TileSpan {
    grid.tiles_for(mbr)
}

/// Inclusive rectangle of tile indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TileSpan {
    pub x_lo: i64,
    pub x_hi: i64,
    pub y_lo: i64,
    pub y_hi: i64,
}

impl TileSpan {
    pub fn len(&self) -> u64 {
        ((self.x_hi - self.x_lo + 1) as u64) * ((self.y_hi - self.y_lo + 1) as u64)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, (x, y): Tile) -> bool {
        self.x_lo <= x && x <= self.x_hi && self.y_lo <= y && y <= self.y_hi
    }

    pub fn intersection(&self, other: &TileSpan) -> Option<TileSpan> {
        let s = TileSpan {
            x_lo: self.x_lo.max(other.x_lo),
            x_hi: self.x_hi.min(other.x_hi),
            y_lo: self.y_lo.max(other.y_lo),
            y_hi: self.y_hi.min(other.y_hi),
        };
        (s.x_lo <= s.x_hi && s.y_lo <= s.y_hi).then_some(s)
    }

    /// Number of tiles shared with `other`.
    pub fn common(&self, other: &TileSpan) -> u64 {
        self.intersection(other).map_or(0, |s| s.len())
    }

    pub fn iter(&self) -> impl Iterator<Item = Tile> {
        let s = *self;
        (s.x_lo..=s.x_hi).flat_map(move |x| (s.y_lo..=s.y_hi).map(move |y| (x, y)))
    }
}

#[derive(Clone, Debug, Default)]
pub struct Cell {
    /// Ids sorted ascending.
    pub source: Vec<u32>,
    pub target: Vec<u32>,
}

/// Which datasets an [`Equigrid`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexMode {
    /// RADON: both datasets are loaded into the grid.
    BothDatasets,
    /// GIA.nt: only the source is indexed; targets are probed one by one.
    SourceOnly,
}

#[derive(Clone, Debug)]
pub struct Equigrid {
    pub grid: Grid,
    cells: FxHashMap<Tile, Cell>,
}

impl Equigrid {
    pub fn new(grid: Grid) -> Self {
        Equigrid {
            grid,
            cells: FxHashMap::default(),
        }
    }

    pub fn insert_source(&mut self, g: &Geometry) {
        for t in self.grid.tiles_for(g.mbr()).iter() {
            self.cells.entry(t).or_default().source.push(g.id());
        }
    }

    pub fn insert_target(&mut self, g: &Geometry) {
        for t in self.grid.tiles_for(g.mbr()).iter() {
            self.cells.entry(t).or_default().target.push(g.id());
        }
    }

    pub fn cell(&self, t: Tile) -> Option<&Cell> {
        self.cells.get(&t)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&Tile, &Cell)> {
        self.cells.iter()
    }

    /// Tiles in row-major order, for deterministic iteration.
    pub fn sorted_tiles(&self) -> Vec<Tile> {
        let mut t: Vec<Tile> = self.cells.keys().copied().collect();
        t.sort_unstable();
        t
    }

    pub fn nonempty_tiles(&self) -> usize {
        self.cells.len()
    }

    /// Approximate heap footprint of the cell lists.
    pub fn heap_bytes(&self) -> usize {
        self.cells.capacity() * std::mem::size_of::<(Tile, Cell)>()
            + self
                .cells
                .values()
                .map(|c| (c.source.capacity() + c.target.capacity()) * 4)
                .sum::<usize>()
    }

    /// Source candidates of `t`: MBR-intersecting, each reported once.
    ///
    /// Deduplication is stamp-free: a source is reported from the tile that
    /// owns the reference point of the pair, and no other.
    pub fn candidates_for(&self, t: &Mbr, source: &[Geometry], out: &mut Vec<u32>) {
        for tile in self.grid.tiles_for(t).iter() {
            let Some(cell) = self.cells.get(&tile) else {
                continue;
            };
            for &s in &cell.source {
                let sm = source[s as usize].mbr();
                if sm.intersects(t) && self.grid.reference_point_owner(sm, t) == tile {
                    out.push(s);
                }
            }
        }
    }
}

/// Builds an Equigrid over the source and, in [`IndexMode::BothDatasets`], the target.
pub fn build_index(
    source: &[Geometry],
    target: &[Geometry],
    grid: Grid,
    mode: IndexMode,
) -> Result<Equigrid> {
    if source.is_empty() {
        return Err(Error::EmptyDataset("source"));
    }
    let mut index = Equigrid::new(grid);
    for g in source {
        index.insert_source(g);
    }
    if mode == IndexMode::BothDatasets {
        for g in target {
            index.insert_target(g);
        }
    }
    Ok(index)
}

pub fn candidates_for(t: &Geometry, index: &Equigrid, source: &[Geometry]) -> Vec<u32> {
    let mut out = Vec::new();
    index.candidates_for(t.mbr(), source, &mut out);
    out.sort_unstable();
    out
}

/// GIA.nt's index: the source-only Equigrid in row-major sorted form plus
/// the source MBRs.
///
/// Each occupied row holds `(x, id)` entries sorted by x, then id. A probe
/// binary-searches the rows of its span and walks each row between its x
/// bounds, so empty tiles cost nothing.
#[derive(Clone, Debug)]
pub struct SourceGrid {
    pub grid: Grid,
    /// Occupied rows, ascending, with the index of their first entry.
    rows: Vec<(i64, u32)>,
    /// Tile column relative to `extent.x_lo`, and source id.
    entries: Vec<(u32, u32)>,
    mbrs: Vec<Mbr>,
    /// Tiles occupied by the source; probes are clipped to it.
    extent: TileSpan,
    tiles: usize,
}

impl SourceGrid {
    pub fn build(source: &[Geometry], mut grid: Grid) -> Result<SourceGrid> {
        if source.is_empty() {
            return Err(Error::EmptyDataset("source"));
        }
        let mbrs: Vec<Mbr> = source.iter().map(|g| *g.mbr()).collect();
        let all = mbrs[1..].iter().fold(mbrs[0], |a, b| a.union(b));
        let mut extent = grid.tiles_for(&all);
        // columns are stored as u32; widen the tiles of absurdly wide extents
        while extent.x_hi.saturating_sub(extent.x_lo) >= u32::MAX as i64 {
            grid.width *= 2.0;
            extent = grid.tiles_for(&all);
        }
        let total: usize = mbrs.iter().map(|m| grid.tiles_for(m).len() as usize).sum();
        let height = extent.y_hi.saturating_sub(extent.y_lo).saturating_add(1);
        let mut keyed: Vec<(i64, (u32, u32))> = Vec::new();
        let mut entries: Vec<(u32, u32)>;
        let mut rows: Vec<(i64, u32)> = Vec::new();
        if (height as u64) <= total as u64 {
            // counting sort by row; ids arrive ascending
            let mut start = vec![0u32; height as usize + 1];
            for m in &mbrs {
                let s = grid.tiles_for(m);
                for y in s.y_lo..=s.y_hi {
                    start[(y - extent.y_lo) as usize + 1] += (s.x_hi - s.x_lo + 1) as u32;
                }
            }
            for k in 1..start.len() {
                start[k] += start[k - 1];
            }
            entries = vec![(0, 0); total];
            let mut fill = start.clone();
            for (g, m) in source.iter().zip(&mbrs) {
                let s = grid.tiles_for(m);
                for y in s.y_lo..=s.y_hi {
                    let row = &mut fill[(y - extent.y_lo) as usize];
                    for x in s.x_lo..=s.x_hi {
                        entries[*row as usize] = ((x - extent.x_lo) as u32, g.id());
                        *row += 1;
                    }
                }
            }
            for k in 0..height as usize {
                if start[k] < start[k + 1] {
                    rows.push((extent.y_lo + k as i64, start[k]));
                }
            }
        } else {
            keyed.reserve_exact(total);
            for (g, m) in source.iter().zip(&mbrs) {
                let s = grid.tiles_for(m);
                for y in s.y_lo..=s.y_hi {
                    keyed.extend((s.x_lo..=s.x_hi).map(|x| (y, ((x - extent.x_lo) as u32, g.id()))));
                }
            }
            keyed.sort_by_key(|e| e.0);
            entries = Vec::with_capacity(total);
            for (y, e) in keyed.drain(..) {
                if rows.last().map_or(true, |r| r.0 != y) {
                    rows.push((y, entries.len() as u32));
                }
                entries.push(e);
            }
        }
        let mut tiles = 0;
        for k in 0..rows.len() {
            let row = &mut entries[rows[k].1 as usize..rows.get(k + 1).map_or(total, |r| r.1 as usize)];
            // stable, so ids stay ascending inside a tile
            radsort::sort_by_key(row, |e| e.0);
            tiles += 1 + row.windows(2).filter(|w| w[0].0 != w[1].0).count();
        }
        Ok(SourceGrid {
            grid,
            rows,
            entries,
            mbrs,
            extent,
            tiles,
        })
    }

    pub fn nonempty_tiles(&self) -> usize {
        self.tiles
    }

    /// Entries of the occupied rows of `span` between its x bounds, with their row.
    fn occupied(&self, span: TileSpan) -> impl Iterator<Item = (i64, &[(u32, u32)])> + '_ {
        let first = self.rows.partition_point(|r| r.0 < span.y_lo);
        let (x_lo, x_hi) = ((span.x_lo - self.extent.x_lo) as u32, (span.x_hi - self.extent.x_lo) as u32);
        self.rows[first..]
            .iter()
            .enumerate()
            .take_while(move |(_, r)| r.0 <= span.y_hi)
            .map(move |(k, &(y, start))| {
                let end = self.rows.get(first + k + 1).map_or(self.entries.len(), |n| n.1 as usize);
                let row = &self.entries[start as usize..end];
                let from = row.partition_point(|e| e.0 < x_lo);
                let to = row.partition_point(|e| e.0 <= x_hi);
                (y, &row[from..to])
            })
    }

    /// Source ids in `tile`, ascending.
    pub fn tile(&self, tile: Tile) -> Vec<u32> {
        let Some(span) = (TileSpan {
            x_lo: tile.0,
            x_hi: tile.0,
            y_lo: tile.1,
            y_hi: tile.1,
        })
        .intersection(&self.extent) else {
            return Vec::new();
        };
        self.occupied(span).flat_map(|(_, row)| row.iter().map(|e| e.1)).collect()
    }
}

impl SourceIndex for SourceGrid {
    fn candidates(&self, t: &Mbr, _: &mut Scratch, out: &mut Vec<u32>) {
        let grid = &self.grid;
        let Some(span) = grid.tiles_for(t).intersection(&self.extent) else {
            return;
        };
        for (y, row) in self.occupied(span) {
            for &(x, s) in row {
                let sm = &self.mbrs[s as usize];
                if sm.intersects(t) && grid.reference_point_owner(sm, t) == (self.extent.x_lo + x as i64, y) {
                    out.push(s);
                }
            }
        }
    }

    fn heap_bytes(&self) -> usize {
        self.rows.capacity() * std::mem::size_of::<(i64, u32)>()
            + self.entries.capacity() * 8
            + self.mbrs.capacity() * std::mem::size_of::<Mbr>()
    }
}

/// Granularity of a grid-based join.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GridMode {
    /// Mean MBR size of the indexed data.
    Dynamic,
    /// Fixed tile size.
    Static { width: f64, height: f64 },
}

impl GridMode {
    pub fn resolve<'a>(&self, geoms: impl IntoIterator<Item = &'a Geometry>) -> Result<Grid> {
        match *self {
            GridMode::Dynamic => Grid::dynamic(geoms),
            GridMode::Static { width, height } => Grid::new(width, height),
        }
    }
}

/// RADON: indexes both datasets and emits every MBR-intersecting pair once,
/// tile by tile (row-major tiles, source-major inside a tile).
pub fn radon_join(
    source: &[Geometry],
    target: &[Geometry],
    mode: GridMode,
    emit: &mut dyn FnMut(u32, u32),
) -> Result<Equigrid> {
    if source.is_empty() {
        return Err(Error::EmptyDataset("source"));
    }
    let grid = mode.resolve(source.iter().chain(target))?;
    let index = build_index(source, target, grid, IndexMode::BothDatasets)?;
    radon_emit(&index, source, target, emit);
    Ok(index)
}

pub(crate) fn radon_emit(
    index: &Equigrid,
    source: &[Geometry],
    target: &[Geometry],
    emit: &mut dyn FnMut(u32, u32),
) {
    for tile in index.sorted_tiles() {
        let cell = index.cell(tile).expect("listed tile");
        for_tile_pairs(&index.grid, tile, cell, source, target, emit);
    }
}

/// Emits the pairs of one tile that the tile owns.
pub(crate) fn for_tile_pairs(
    grid: &Grid,
    tile: Tile,
    cell: &Cell,
    source: &[Geometry],
    target: &[Geometry],
    emit: &mut dyn FnMut(u32, u32),
) {
    if cell.target.is_empty() {
        return;
    }
    for &s in &cell.source {
        let sm = source[s as usize].mbr();
        for &t in &cell.target {
            let tm = target[t as usize].mbr();
            if sm.intersects(tm) && grid.reference_point_owner(sm, tm) == tile {
                emit(s, t);
            }
        }
    }
}
