//! Every filtering algorithm and variant yields exactly the MBR-intersecting pairs.

use geolink::batch::{candidate_pairs, Algorithm, Params};
use geolink::geometry::Geometry;
use geolink::sweep::{self, StripeStorage, SweepStructure};
use geolink::workbench::synth::{generate, Profile, SynthConfig};

fn nested_loop(s: &[Geometry], t: &[Geometry]) -> Vec<(u32, u32)> {
    let mut v = Vec::new();
    for a in s {
        for b in t {
            if a.mbr().intersects(b.mbr()) {
                v.push((a.id(), b.id()));
            }
        }
    }
    v
}

fn variants() -> Vec<(Algorithm, Params)> {
    let mut out = Vec::new();
    for a in Algorithm::ALL {
        out.push((a, Params::default()));
    }
    out.push((
        Algorithm::PlaneSweep,
        Params {
            sweep_structure: SweepStructure::Striped,
            ..Params::default()
        },
    ));
    out.push((
        Algorithm::StripeSweep,
        Params {
            stripe_storage: StripeStorage::Str,
            ..Params::default()
        },
    ));
    for p in [(1, 1), (3, 7), (200, 200)] {
        out.push((
            Algorithm::Pbsm,
            Params {
                pbsm_partitions: p,
                ..Params::default()
            },
        ));
    }
    for bits in [4, 16] {
        out.push((
            Algorithm::CrTree,
            Params {
                quant_bits: bits,
                node_capacity: 4,
                ..Params::default()
            },
        ));
    }
    out.push((
        Algorithm::StaticGiant,
        Params {
            static_tile: (7.5, 3.0),
            ..Params::default()
        },
    ));
    out
}

#[test]
fn all_filters_match_nested_loop() {
    for seed in 0..12u64 {
        let profile = [Profile::Uniform, Profile::Clustered, Profile::Skewed][seed as usize % 3];
        let cfg = SynthConfig {
            profile,
            source_count: 150 + seed as usize * 7,
            target_count: 220 - seed as usize * 5,
            seed,
            extent: 200.0,
            mean_size: 6.0,
            snap: (seed % 2 == 0).then_some(1.0),
            ..SynthConfig::default()
        };
        let (s, t) = generate(&cfg);
        let mut want = nested_loop(&s, &t);
        want.sort_unstable();
        for (a, p) in variants() {
            let mut got = Vec::new();
            candidate_pairs(&s, &t, a, &p, &mut |x, y| got.push((x, y))).unwrap();
            let n = got.len();
            got.sort_unstable();
            got.dedup();
            assert_eq!(n, got.len(), "{a} {p:?} emitted duplicates (seed {seed})");
            assert_eq!(got, want, "{a} {p:?} (seed {seed})");
        }
    }
}

#[test]
fn plane_sweep_releases_finished_geometries() {
    let cfg = SynthConfig {
        source_count: 400,
        target_count: 400,
        extent: 300.0,
        ..SynthConfig::default()
    };
    let (s, t) = generate(&cfg);
    let stats = sweep::plane_sweep(&s, &t, SweepStructure::List, &mut |_, _| {}).unwrap();
    // the busiest vertical line crossed by MBRs of either dataset
    let mut xs: Vec<f64> = s.iter().chain(&t).map(|g| g.mbr().x_min).collect();
    xs.sort_by(f64::total_cmp);
    let busiest = xs
        .iter()
        .map(|&x| {
            s.iter()
                .chain(&t)
                .filter(|g| g.mbr().x_min <= x && x <= g.mbr().x_max)
                .count()
        })
        .max()
        .unwrap();
    assert!(stats.peak_active <= busiest, "{} > {busiest}", stats.peak_active);
}

#[test]
fn stripe_probe_equals_grid_candidates() {
    use geolink::filter::{Scratch, SourceIndex};
    use geolink::grid::{build_index, candidates_for, Grid, IndexMode};
    let (s, t) = generate(&SynthConfig {
        source_count: 300,
        target_count: 300,
        extent: 150.0,
        ..SynthConfig::default()
    });
    let grid = build_index(&s, &[], Grid::dynamic(&s).unwrap(), IndexMode::SourceOnly).unwrap();
    for storage in [StripeStorage::Map, StripeStorage::Str] {
        let stripes = sweep::stripe_sweep_build(&s, storage).unwrap();
        let mut scratch = Scratch::default();
        for g in &t {
            let mut got = Vec::new();
            stripes.candidates(g.mbr(), &mut scratch, &mut got);
            got.sort_unstable();
            assert_eq!(got, candidates_for(g, &grid, &s));
        }
    }
}
