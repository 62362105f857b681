//! Weighting schemes for candidate pairs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Mbr};
use crate::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Co-occurrence frequency: tiles shared by both MBRs.
    Cf,
    /// Jaccard similarity of the two tile sets.
    Js,
    /// Pearson's χ² over tile co-occurrence.
    X2,
    /// Normalized MBR overlap.
    Mbro,
    /// Inverse sum of points.
    Isp,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [Scheme::Cf, Scheme::Js, Scheme::X2, Scheme::Mbro, Scheme::Isp];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Cf => "cf",
            Scheme::Js => "js",
            Scheme::X2 => "x2",
            Scheme::Mbro => "mbro",
            Scheme::Isp => "isp",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown weighting scheme `{s}` (cf, js, x2, mbro, isp)")))
    }
}

/// How MBRO normalizes the overlap area.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MbroNorm {
    /// Overlap over the area of the union.
    #[default]
    Jaccard,
    /// Overlap over the smaller MBR.
    MinArea,
}

impl FromStr for MbroNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jaccard" => Ok(MbroNorm::Jaccard),
            "min-area" | "min_area" => Ok(MbroNorm::MinArea),
            _ => Err(Error::Config(format!("unknown MBRO normalization `{s}` (jaccard, min-area)"))),
        }
    }
}

/// An atomic scheme, or a composite where `secondary` only breaks ties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Weighting {
    pub primary: Scheme,
    pub secondary: Option<Scheme>,
    pub mbro: MbroNorm,
}

impl Weighting {
    pub fn atomic(primary: Scheme) -> Self {
        Weighting {
            primary,
            secondary: None,
            mbro: MbroNorm::Jaccard,
        }
    }

    pub fn composite(primary: Scheme, secondary: Scheme) -> Result<Self> {
        if primary == secondary {
            return Err(Error::Config(format!(
                "a composite scheme needs two different schemes, got {primary} twice"
            )));
        }
        Ok(Weighting {
            primary,
            secondary: Some(secondary),
            mbro: MbroNorm::Jaccard,
        })
    }

    /// Whether the weights read the grid.
    pub fn uses_grid(&self) -> bool {
        let g = |s: Scheme| matches!(s, Scheme::Cf | Scheme::Js | Scheme::X2);
        g(self.primary) || self.secondary.is_some_and(g)
    }
}

/// Grid facts the tile-based schemes need.
#[derive(Clone, Copy, Debug)]
pub struct WeightContext {
    pub grid: Grid,
    /// Nonempty tiles of the index; χ²'s table total.
    pub tiles: u64,
}

/// Tile statistics of one pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileCounts {
    pub source: u64,
    pub target: u64,
    pub common: u64,
}

impl TileCounts {
    pub fn of(s: &Mbr, t: &Mbr, grid: &Grid) -> TileCounts {
        let (a, b) = (grid.tiles_for(s), grid.tiles_for(t));
        TileCounts {
            source: a.len(),
            target: b.len(),
            common: a.common(&b),
        }
    }

    pub fn union(&self) -> u64 {
        self.source + self.target - self.common
    }
}

pub fn cf(c: &TileCounts) -> f64 {
    c.common as f64
}

pub fn js(c: &TileCounts) -> f64 {
    c.common as f64 / c.union() as f64
}

/// Pearson's χ² of the 2×2 table (in s, in t) over `n` tiles.
///
/// `n` is raised to the pair's own tile union when smaller, so every cell is
/// nonnegative; a zero expected count gives weight 0.
pub fn chi_square(c: &TileCounts, n: u64) -> f64 {
    let n = n.max(c.union()) as f64;
    let (s, t, both) = (c.source as f64, c.target as f64, c.common as f64);
    let observed = [[both, s - both], [t - both, n - s - t + both]];
    let rows = [s, n - s];
    let cols = [t, n - t];
    let mut x2 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] * cols[j] / n;
            if e <= 0.0 {
                return 0.0;
            }
            x2 += (observed[i][j] - e).powi(2) / e;
        }
    }
    x2
}

pub fn mbro(s: &Mbr, t: &Mbr, norm: MbroNorm) -> f64 {
    let overlap = s.intersection(t).map_or(0.0, |m| m.area());
    let denom = match norm {
        MbroNorm::Jaccard => s.area() + t.area() - overlap,
        MbroNorm::MinArea => s.area().min(t.area()),
    };
    if denom > 0.0 {
        overlap / denom
    } else if s == t {
        1.0
    } else {
        0.0
    }
}

pub fn isp(s: &Geometry, t: &Geometry) -> f64 {
    1.0 / (s.num_points() + t.num_points()) as f64
}

fn atomic(scheme: Scheme, s: &Geometry, t: &Geometry, ctx: &WeightContext, norm: MbroNorm) -> f64 {
    let tiles = || TileCounts::of(s.mbr(), t.mbr(), &ctx.grid);
    match scheme {
        Scheme::Cf => cf(&tiles()),
        Scheme::Js => js(&tiles()),
        Scheme::X2 => chi_square(&tiles(), ctx.tiles),
        Scheme::Mbro => mbro(s.mbr(), t.mbr(), norm),
        Scheme::Isp => isp(s, t),
    }
}

/// `(weight, tie-break weight)` of a pair; the tie-break is 0 for atomic schemes.
pub fn weigh(w: &Weighting, s: &Geometry, t: &Geometry, ctx: &WeightContext) -> (f64, f64) {
    (
        atomic(w.primary, s, t, ctx, w.mbro),
        w.secondary.map_or(0.0, |k| atomic(k, s, t, ctx, w.mbro)),
    )
}
