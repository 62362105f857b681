use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IntersectionMatrix;

/// The nine positive topological relations; `disjoint` is never materialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "equals")]
    Equals,
    #[serde(rename = "intersects")]
    Intersects,
    #[serde(rename = "touches")]
    Touches,
    #[serde(rename = "within")]
    Within,
    #[serde(rename = "contains")]
    Contains,
    #[serde(rename = "covers")]
    Covers,
    #[serde(rename = "coveredBy")]
    CoveredBy,
    #[serde(rename = "crosses")]
    Crosses,
    #[serde(rename = "overlaps")]
    Overlaps,
}

impl Relation {
    pub const ALL: [Relation; 9] = [
        Relation::Equals,
        Relation::Intersects,
        Relation::Touches,
        Relation::Within,
        Relation::Contains,
        Relation::Covers,
        Relation::CoveredBy,
        Relation::Crosses,
        Relation::Overlaps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Relation::Equals => "equals",
            Relation::Intersects => "intersects",
            Relation::Touches => "touches",
            Relation::Within => "within",
            Relation::Contains => "contains",
            Relation::Covers => "covers",
            Relation::CoveredBy => "coveredBy",
            Relation::Crosses => "crosses",
            Relation::Overlaps => "overlaps",
        }
    }

    /// The relation seen from the other geometry.
    pub fn transpose(self) -> Relation {
        match self {
            Relation::Within => Relation::Contains,
            Relation::Contains => Relation::Within,
            Relation::Covers => Relation::CoveredBy,
            Relation::CoveredBy => Relation::Covers,
            other => other,
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown relation `{s}`"))
    }
}

#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct RelationSet(u16);

impl RelationSet {
    pub fn empty() -> Self {
        RelationSet(0)
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(&self, r: Relation) -> bool {
        self.0 & r.bit() != 0
    }

    pub fn insert(&mut self, r: Relation) {
        self.0 |= r.bit();
    }

    pub fn iter(&self) -> impl Iterator<Item = Relation> + '_ {
        Relation::ALL.into_iter().filter(|r| self.contains(*r))
    }

    pub fn transpose(&self) -> RelationSet {
        self.iter().map(Relation::transpose).collect()
    }

    pub fn bits(&self) -> u16 {
        self.0
    }
}

impl FromIterator<Relation> for RelationSet {
    fn from_iter<I: IntoIterator<Item = Relation>>(iter: I) -> Self {
        let mut s = RelationSet::empty();
        for r in iter {
            s.insert(r);
        }
        s
    }
}

impl fmt::Debug for RelationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Reads the positive relations off a matrix using the OGC masks.
///
/// `dim_a`/`dim_b` are the topological dimensions of the two geometries and
/// select the crosses/overlaps variants.
pub fn extract_relations(m: &IntersectionMatrix, dim_a: u8, dim_b: u8) -> RelationSet {
    let mut out = RelationSet::empty();
    if m.matches("FF*FF****") {
        return out;
    }
    out.insert(Relation::Intersects);
    if m.matches_any(&["FT*******", "F**T*****", "F***T****"]) {
        out.insert(Relation::Touches);
    }
    if m.matches("T*F**F***") {
        out.insert(Relation::Within);
    }
    if m.matches("T*****FF*") {
        out.insert(Relation::Contains);
    }
    if m.matches_any(&["T*****FF*", "*T****FF*", "***T**FF*", "****T*FF*"]) {
        out.insert(Relation::Covers);
    }
    if m.matches_any(&["T*F**F***", "*TF**F***", "**FT*F***", "**F*TF***"]) {
        out.insert(Relation::CoveredBy);
    }
    let crosses = match dim_a.cmp(&dim_b) {
        std::cmp::Ordering::Less => m.matches("T*T******"),
        std::cmp::Ordering::Greater => m.matches("T*****T**"),
        std::cmp::Ordering::Equal => dim_a == 1 && m.matches("0********"),
    };
    if crosses {
        out.insert(Relation::Crosses);
    }
    let overlaps = dim_a == dim_b
        && match dim_a {
            1 => m.matches("1*T***T**"),
            _ => m.matches("T*T***T**"),
        };
    if overlaps {
        out.insert(Relation::Overlaps);
    }
    if m.matches("T*F**FFF*") {
        out.insert(Relation::Equals);
    }
    out
}
