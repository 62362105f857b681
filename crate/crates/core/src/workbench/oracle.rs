//! Nested-loop ground truth.

use crate::batch::LinkSet;
use crate::error::{Error, Result};
use crate::geometry::{verify_pair, Geometry};

pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;

/// Every pair with intersecting MBRs, verified; refuses more than
/// [`DEFAULT_ORACLE_CAP`] pairs.
pub fn brute_force_oracle(source: &[Geometry], target: &[Geometry]) -> Result<LinkSet> {
    brute_force_oracle_capped(source, target, DEFAULT_ORACLE_CAP)
}

pub fn brute_force_oracle_capped(source: &[Geometry], target: &[Geometry], cap: u64) -> Result<LinkSet> {
    let pairs = source.len() as u64 * target.len() as u64;
    if pairs > cap {
        return Err(Error::CapExceeded { pairs, cap });
    }
    let mut links = LinkSet::new();
    for s in source {
        for t in target {
            if s.mbr().intersects(t.mbr()) {
                links.record(s.id(), t.id(), verify_pair(s, t))?;
            }
        }
    }
    Ok(links)
}

/// Number of MBR-intersecting pairs.
pub fn mbr_pair_count(source: &[Geometry], target: &[Geometry]) -> u64 {
    source
        .iter()
        .map(|s| target.iter().filter(|t| s.mbr().intersects(t.mbr())).count() as u64)
        .sum()
}
