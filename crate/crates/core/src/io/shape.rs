use std::str::FromStr;

use wkt::Wkt;

use super::SkipCause;
use crate::geometry::{Coord, Geometry, ShapeError};

/// A parsed but not yet validated LineString or Polygon.
#[derive(Clone, Debug, PartialEq)]
pub enum RawShape {
    Line(Vec<Coord>),
    /// Exterior ring first.
    Polygon(Vec<Vec<Coord>>),
}

impl RawShape {
    pub fn build(self, id: u32) -> Result<Geometry, ShapeError> {
        match self {
            RawShape::Line(c) => Geometry::line_string(id, c),
            RawShape::Polygon(mut rings) => {
                if rings.is_empty() {
                    return Err(ShapeError::Empty);
                }
                let exterior = rings.remove(0);
                Geometry::polygon(id, exterior, rings)
            }
        }
    }
}

type Parsed = Result<Vec<RawShape>, (SkipCause, String)>;

fn coords(ls: &wkt::types::LineString<f64>) -> Vec<Coord> {
    ls.coords().iter().map(|c| Coord::new(c.x, c.y)).collect()
}

fn polygon(p: &wkt::types::Polygon<f64>) -> RawShape {
    RawShape::Polygon(p.rings().iter().map(coords).collect())
}

/// Parses one WKT value; multi-geometries are exploded into their parts.
pub fn parse_wkt(text: &str) -> Parsed {
    let text = text.trim();
    let w = Wkt::<f64>::from_str(text).map_err(|e| (SkipCause::Parse, format!("bad WKT: {e}")))?;
    let unsupported = |kind: &str| Err((SkipCause::Unsupported, format!("unsupported geometry type {kind}")));
    let shapes = match w {
        Wkt::LineString(l) if l.coords().is_empty() => vec![],
        Wkt::LineString(l) => vec![RawShape::Line(coords(&l))],
        Wkt::Polygon(p) if p.rings().is_empty() => vec![],
        Wkt::Polygon(p) => vec![polygon(&p)],
        Wkt::MultiLineString(m) => m
            .line_strings()
            .iter()
            .filter(|l| !l.coords().is_empty())
            .map(|l| RawShape::Line(coords(l)))
            .collect(),
        Wkt::MultiPolygon(m) => m
            .polygons()
            .iter()
            .filter(|p| !p.rings().is_empty())
            .map(polygon)
            .collect(),
        Wkt::Point(_) => return unsupported("POINT"),
        Wkt::MultiPoint(_) => return unsupported("MULTIPOINT"),
        Wkt::GeometryCollection(_) => return unsupported("GEOMETRYCOLLECTION"),
    };
    Ok(shapes)
}

/// Converts a GeoJSON geometry; same explosion rules as WKT.
pub(super) fn from_geojson(v: &geojson::GeometryValue) -> Parsed {
    use geojson::GeometryValue as G;
    let line = |ps: &Vec<geojson::Position>| -> Result<Vec<Coord>, (SkipCause, String)> {
        ps.iter()
            .map(|p| match p.as_slice() {
                [x, y, ..] => Ok(Coord::new(*x, *y)),
                _ => Err((SkipCause::Parse, "position needs two coordinates".to_string())),
            })
            .collect()
    };
    let poly = |rings: &Vec<Vec<geojson::Position>>| -> Result<RawShape, (SkipCause, String)> {
        Ok(RawShape::Polygon(rings.iter().map(line).collect::<Result<_, _>>()?))
    };
    let unsupported = |kind: &str| Err((SkipCause::Unsupported, format!("unsupported geometry type {kind}")));
    Ok(match v {
        G::LineString { coordinates } if coordinates.is_empty() => vec![],
        G::LineString { coordinates } => vec![RawShape::Line(line(coordinates)?)],
        G::Polygon { coordinates } if coordinates.is_empty() => vec![],
        G::Polygon { coordinates } => vec![poly(coordinates)?],
        G::MultiLineString { coordinates } => coordinates
            .iter()
            .filter(|l| !l.is_empty())
            .map(|l| line(l).map(RawShape::Line))
            .collect::<Result<_, _>>()?,
        G::MultiPolygon { coordinates } => coordinates
            .iter()
            .filter(|p| !p.is_empty())
            .map(poly)
            .collect::<Result<_, _>>()?,
        G::Point { .. } => return unsupported("Point"),
        G::MultiPoint { .. } => return unsupported("MultiPoint"),
        G::GeometryCollection { .. } => return unsupported("GeometryCollection"),
    })
}

const KEYWORDS: [&str; 7] = [
    "POINT",
    "LINESTRING",
    "POLYGON",
    "MULTIPOINT",
    "MULTILINESTRING",
    "MULTIPOLYGON",
    "GEOMETRYCOLLECTION",
];

/// `true` if the field starts with a WKT geometry keyword.
pub(super) fn looks_like_wkt(field: &str) -> bool {
    let f = field.trim_start();
    KEYWORDS.iter().any(|k| {
        f.len() >= k.len()
            && f[..k.len()].eq_ignore_ascii_case(k)
            && f[k.len()..]
                .chars()
                .next()
                .map_or(true, |c| c == '(' || c.is_whitespace())
    })
}
