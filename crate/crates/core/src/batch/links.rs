use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Relation, RelationSet};

/// A related pair, ids in source/target orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Link {
    pub source: u32,
    pub target: u32,
    pub relations: RelationSet,
}

/// Links found by a run plus its verification counters.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinkSet {
    links: Vec<Link>,
    verified: u64,
    degenerate: u64,
    per_relation: [u64; 9],
}

impl LinkSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the outcome of verifying one candidate pair.
    ///
    /// Degenerate geometries are counted and otherwise ignored; any other
    /// error is passed through.
    pub fn record(&mut self, source: u32, target: u32, outcome: Result<RelationSet>) -> Result<()> {
        self.verified += 1;
        match outcome {
            Ok(rel) => {
                self.add(source, target, rel);
                Ok(())
            }
            Err(Error::DegenerateGeometry { .. }) => {
                self.degenerate += 1;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn add(&mut self, source: u32, target: u32, relations: RelationSet) {
        if relations.is_empty() {
            return;
        }
        for r in relations.iter() {
            self.per_relation[r as usize] += 1;
        }
        self.links.push(Link {
            source,
            target,
            relations,
        });
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Candidate pairs that went through verification.
    pub fn verified(&self) -> u64 {
        self.verified
    }

    /// Pairs with at least one relation.
    pub fn related(&self) -> u64 {
        self.links.len() as u64
    }

    /// Pairs that could not be verified because a geometry is invalid.
    pub fn degenerate(&self) -> u64 {
        self.degenerate
    }

    pub fn count(&self, r: Relation) -> u64 {
        self.per_relation[r as usize]
    }

    pub fn per_relation_counts(&self) -> BTreeMap<&'static str, u64> {
        Relation::ALL.iter().map(|&r| (r.name(), self.count(r))).collect()
    }

    /// Number of triples, one per relation of every related pair.
    pub fn triple_count(&self) -> u64 {
        self.per_relation.iter().sum()
    }

    /// All `(source, relation, target)` triples, sorted.
    pub fn id_triples(&self) -> Vec<(u32, Relation, u32)> {
        let mut v: Vec<_> = self
            .links
            .iter()
            .flat_map(|l| l.relations.iter().map(move |r| (l.source, r, l.target)))
            .collect();
        v.sort_unstable();
        v
    }

    /// Sorts links by `(source, target)` so equal sets compare equal.
    pub fn normalize(&mut self) {
        self.links.sort_unstable_by_key(|l| (l.source, l.target));
    }

    /// Whether some pair occurs twice.
    pub fn has_duplicates(&self) -> bool {
        let mut keys: Vec<(u32, u32)> = self.links.iter().map(|l| (l.source, l.target)).collect();
        keys.sort_unstable();
        keys.windows(2).any(|w| w[0] == w[1])
    }

    /// Appends another set's links and counters.
    pub fn merge(&mut self, other: LinkSet) {
        self.links.extend(other.links);
        self.verified += other.verified;
        self.degenerate += other.degenerate;
        for (a, b) in self.per_relation.iter_mut().zip(other.per_relation) {
            *a += b;
        }
    }

    /// Swaps the roles of source and target, transposing every relation.
    pub fn transpose(self) -> LinkSet {
        let mut out = LinkSet {
            verified: self.verified,
            degenerate: self.degenerate,
            ..LinkSet::default()
        };
        for l in self.links {
            out.add(l.target, l.source, l.relations.transpose());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunTimings {
    pub filtering: Duration,
    pub verification: Duration,
}

impl RunTimings {
    pub fn t_f_ms(&self) -> f64 {
        self.filtering.as_secs_f64() * 1e3
    }

    pub fn t_v_ms(&self) -> f64 {
        self.verification.as_secs_f64() * 1e3
    }

    pub fn total(&self) -> Duration {
        self.filtering + self.verification
    }
}

/// Machine-readable summary of one run.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub algorithm: String,
    pub params: serde_json::Value,
    pub t_f_ms: f64,
    pub t_v_ms: f64,
    pub verified: u64,
    pub related: u64,
    pub per_relation_counts: BTreeMap<&'static str, u64>,
    pub triples: u64,
    pub degenerate_pairs: u64,
    pub swapped: bool,
    pub skipped_records: u64,
}
