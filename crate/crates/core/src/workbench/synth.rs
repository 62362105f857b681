//! Seeded synthetic datasets standing in for real-world geometry corpora.

use std::f64::consts::{PI, TAU};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Coord, Geometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Geometries scattered uniformly over the extent.
    Uniform,
    /// Geometries drawn around a handful of shared cluster centres.
    Clustered,
    /// Positions and sizes follow heavy-tailed distributions.
    Skewed,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Profile::Uniform),
            "clustered" => Ok(Profile::Clustered),
            "skewed" => Ok(Profile::Skewed),
            other => Err(format!("unknown profile `{other}`")),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthConfig {
    pub profile: Profile,
    pub source_count: usize,
    pub target_count: usize,
    pub seed: u64,
    /// Side length of the square data extent.
    pub extent: f64,
    /// Typical geometry radius; raising it raises the related-pair density.
    pub mean_size: f64,
    /// Share of LineStrings (the rest are Polygons).
    pub line_fraction: f64,
    /// Share of Polygons that receive a hole.
    pub hole_fraction: f64,
    pub clusters: usize,
    /// Cluster spread as a fraction of the extent.
    pub cluster_spread: f64,
    /// Snap coordinates to this grid step (provokes shared edges and collinear pieces).
    pub snap: Option<f64>,
    /// Stretch factor along a random axis per geometry (and 1/e across it).
    /// Thin shapes have sparse MBRs, which lowers the related-pair rate.
    #[serde(default = "unit")]
    pub elongation: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            profile: Profile::Uniform,
            source_count: 1000,
            target_count: 1000,
            seed: 42,
            extent: 1000.0,
            mean_size: 5.0,
            line_fraction: 0.5,
            hole_fraction: 0.1,
            clusters: 8,
            cluster_spread: 0.02,
            snap: None,
            elongation: 1.0,
        }
    }
}

/// Generates the source and target datasets described by `cfg`.
pub fn generate(cfg: &SynthConfig) -> (Vec<Geometry>, Vec<Geometry>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let centres: Vec<Coord> = (0..cfg.clusters.max(1))
        .map(|_| {
            Coord::new(
                rng.gen_range(0.1..0.9) * cfg.extent,
                rng.gen_range(0.1..0.9) * cfg.extent,
            )
        })
        .collect();
    let source = (0..cfg.source_count)
        .map(|i| random_geometry(&mut rng, cfg, &centres, i as u32))
        .collect();
    let target = (0..cfg.target_count)
        .map(|i| random_geometry(&mut rng, cfg, &centres, i as u32))
        .collect();
    (source, target)
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (TAU * v).cos()
}

fn position(rng: &mut impl Rng, cfg: &SynthConfig, centres: &[Coord]) -> Coord {
    let e = cfg.extent;
    match cfg.profile {
        Profile::Uniform => Coord::new(rng.gen_range(0.0..e), rng.gen_range(0.0..e)),
        Profile::Clustered => {
            let c = centres[rng.gen_range(0..centres.len())];
            let s = cfg.cluster_spread * e;
            Coord::new(
                (c.x + gaussian(rng) * s).clamp(0.0, e),
                (c.y + gaussian(rng) * s).clamp(0.0, e),
            )
        }
        Profile::Skewed => {
            // density piles up towards the origin corner
            let u: f64 = rng.gen();
            let v: f64 = rng.gen();
            Coord::new(u.powi(3) * e, v.powi(3) * e)
        }
    }
}

fn size(rng: &mut impl Rng, cfg: &SynthConfig) -> f64 {
    match cfg.profile {
        Profile::Skewed => {
            // Pareto(alpha = 2.5), capped to keep single geometries from covering everything
            let u: f64 = rng.gen_range(f64::EPSILON..1.0);
            (cfg.mean_size * 0.6 * u.powf(-1.0 / 2.5)).min(cfg.extent * 0.05)
        }
        _ => cfg.mean_size * rng.gen_range(0.5..1.5),
    }
}

fn random_geometry(rng: &mut impl Rng, cfg: &SynthConfig, centres: &[Coord], id: u32) -> Geometry {
    let stretched = cfg.elongation != 1.0;
    let snap = if stretched { None } else { cfg.snap };
    loop {
        let centre = position(rng, cfg, centres);
        let r = size(rng, cfg);
        let g = if rng.gen_bool(cfg.line_fraction.clamp(0.0, 1.0)) {
            let n = rng.gen_range(2..=6);
            random_line(rng, centre, r, n, snap, id)
        } else {
            let n = rng.gen_range(3..=10);
            let hole = rng.gen_bool(cfg.hole_fraction.clamp(0.0, 1.0));
            random_polygon(rng, centre, r, n, hole, snap, id)
        };
        let g = match g {
            Some(g) if stretched => stretch(&g, centre, rng.gen_range(0.0..PI), cfg.elongation, cfg.snap),
            g => g,
        };
        if let Some(g) = g {
            return g;
        }
    }
}

/// Scales `g` by `e` along the axis at angle `theta` through `centre` and by
/// `1/e` across it, then snaps; `None` if the result is not valid.
fn stretch(g: &Geometry, centre: Coord, theta: f64, e: f64, snap: Option<f64>) -> Option<Geometry> {
    let (sin, cos) = theta.sin_cos();
    let map = |p: &Coord| {
        let (dx, dy) = (p.x - centre.x, p.y - centre.y);
        let (u, v) = ((dx * cos + dy * sin) * e, (dy * cos - dx * sin) / e);
        Coord::new(
            snap_to(centre.x + u * cos - v * sin, snap),
            snap_to(centre.y + u * sin + v * cos, snap),
        )
    };
    let out = match (g.path(), g.rings()) {
        (Some(p), _) => Geometry::line_string(g.id(), p.iter().map(map).collect()),
        (_, Some(r)) => Geometry::polygon(
            g.id(),
            r[0].iter().map(map).collect(),
            r[1..].iter().map(|h| h.iter().map(map).collect()).collect(),
        ),
        _ => return None,
    };
    out.ok().filter(Geometry::is_valid)
}

fn snap_to(v: f64, step: Option<f64>) -> f64 {
    match step {
        Some(s) => (v / s).round() * s,
        None => v,
    }
}

/// Star-shaped polygon around `centre`; `None` if snapping broke validity.
pub fn random_polygon(
    rng: &mut impl Rng,
    centre: Coord,
    radius: f64,
    vertices: usize,
    hole: bool,
    snap: Option<f64>,
    id: u32,
) -> Option<Geometry> {
    let mut angles: Vec<f64> = (0..vertices.max(3)).map(|_| rng.gen_range(0.0..TAU)).collect();
    angles.sort_by(f64::total_cmp);
    let ring = |scale_lo: f64, scale_hi: f64, rng: &mut dyn rand::RngCore| -> Vec<Coord> {
        let mut pts: Vec<Coord> = angles
            .iter()
            .map(|a| {
                let r = radius * rng.gen_range(scale_lo..scale_hi);
                Coord::new(
                    snap_to(centre.x + r * a.cos(), snap),
                    snap_to(centre.y + r * a.sin(), snap),
                )
            })
            .collect();
        pts.push(pts[0]);
        pts
    };
    let exterior = ring(0.6, 1.0, rng);
    let holes = if hole {
        vec![ring(0.1, 0.4, rng)]
    } else {
        vec![]
    };
    Geometry::polygon(id, exterior, holes)
        .ok()
        .filter(Geometry::is_valid)
}

/// Random walk of `vertices` points starting near `centre`.
pub fn random_line(
    rng: &mut impl Rng,
    centre: Coord,
    length: f64,
    vertices: usize,
    snap: Option<f64>,
    id: u32,
) -> Option<Geometry> {
    let step = length / (vertices.max(2) - 1) as f64 * 2.0;
    let mut heading = rng.gen_range(0.0..TAU);
    let mut p = centre;
    let mut pts = vec![Coord::new(snap_to(p.x, snap), snap_to(p.y, snap))];
    for _ in 1..vertices.max(2) {
        heading += rng.gen_range(-1.2..1.2);
        let d = step * rng.gen_range(0.5..1.5);
        p = Coord::new(p.x + d * heading.cos(), p.y + d * heading.sin());
        pts.push(Coord::new(snap_to(p.x, snap), snap_to(p.y, snap)));
    }
    Geometry::line_string(id, pts).ok()
}

/// Writes a dataset as `id<TAB>WKT` lines.
pub fn write_tsv(path: &Path, geometries: &[Geometry]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for g in geometries {
        writeln!(out, "{}\t{}", g.id(), g.to_wkt()).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Generates a dataset pair and writes `source.tsv` / `target.tsv` into `dir`.
pub fn synth_generate(cfg: &SynthConfig, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (source, target) = generate(cfg);
    let sp = dir.join("source.tsv");
    let tp = dir.join("target.tsv");
    write_tsv(&sp, &source)?;
    write_tsv(&tp, &target)?;
    Ok((sp, tp))
}

/// Scalability ladder: for each fraction the counts shrink and the extent
/// shrinks with the square root, keeping density (and hence the related-pair
/// proportion) constant.
pub fn ladder(cfg: &SynthConfig, fractions: &[f64]) -> Vec<SynthConfig> {
    fractions
        .iter()
        .enumerate()
        .map(|(k, &f)| SynthConfig {
            source_count: ((cfg.source_count as f64) * f).round().max(1.0) as usize,
            target_count: ((cfg.target_count as f64) * f).round().max(1.0) as usize,
            extent: cfg.extent * f.sqrt(),
            seed: cfg.seed.wrapping_add(k as u64),
            ..cfg.clone()
        })
        .collect()
}
