//! Dataset readers (delimited WKT and GeoJSON) and the link writer.
//!
//! Every reader yields [`GeometryProfile`]s with dense ids in record order and
//! counts the records it had to drop in a [`SkipReport`]. Readers are plain
//! iterators, so a dataset can be loaded eagerly ([`read_dataset`]) or consumed
//! one geometry at a time ([`stream_target`]).

mod delimited;
mod geojson;
mod shape;

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Relation};

pub use shape::{parse_wkt, RawShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Format {
    CsvWkt,
    TsvWkt,
    GeoJson,
}

impl Format {
    /// Guesses the format from a file extension; unknown extensions read as TSV.
    pub fn from_path(path: &Path) -> Format {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("csv") => Format::CsvWkt,
            Some("geojson") | Some("json") => Format::GeoJson,
            _ => Format::TsvWkt,
        }
    }

    pub fn default_delimiter(self) -> u8 {
        match self {
            Format::CsvWkt => b',',
            _ => b'\t',
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::CsvWkt),
            "tsv" | "wkt" => Ok(Format::TsvWkt),
            "geojson" | "json" => Ok(Format::GeoJson),
            other => Err(format!("unknown format `{other}` (expected csv, tsv or geojson)")),
        }
    }
}

/// Column selection for delimited files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Column {
    /// Geometry: the first field that looks like WKT. Identifier: column 0,
    /// unless that is the geometry column.
    Auto,
    Index(usize),
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetDescriptor {
    pub path: PathBuf,
    pub format: Format,
    pub geometry_column: Column,
    pub id_column: Column,
    pub delimiter: u8,
    pub has_header: bool,
    pub keep_attributes: bool,
}

impl DatasetDescriptor {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let format = Format::from_path(&path);
        DatasetDescriptor {
            path,
            format,
            geometry_column: Column::Auto,
            id_column: Column::Auto,
            delimiter: format.default_delimiter(),
            has_header: false,
            keep_attributes: true,
        }
    }

    pub fn with_format(mut self, format: Format) -> Self {
        self.format = format;
        self.delimiter = format.default_delimiter();
        self
    }

    pub fn file_size(&self) -> Result<u64> {
        std::fs::metadata(&self.path)
            .map(|m| m.len())
            .map_err(|e| Error::io(&self.path, e))
    }

    /// Cheap record count used to pick the smaller dataset before loading.
    /// Multi-geometries count once, so this can undercount exploded parts.
    pub fn count_records(&self) -> Result<u64> {
        match self.format {
            Format::GeoJson => geojson::count_features(&self.path),
            _ => delimited::count_rows(self),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryProfile {
    pub geometry: Geometry,
    pub uri: Option<String>,
    pub attributes: Vec<(String, String)>,
}

impl GeometryProfile {
    /// Name used in output triples: the uri when present, the id otherwise.
    pub fn label(&self) -> String {
        self.uri
            .clone()
            .unwrap_or_else(|| self.geometry.id().to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkipCause {
    Parse,
    Unsupported,
    Empty,
    Invalid,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SkipReport {
    pub parse_error: u64,
    pub unsupported_type: u64,
    pub empty_geometry: u64,
    pub invalid_structure: u64,
    /// Geometries that were kept but cannot be verified (e.g. self-intersecting rings).
    pub degenerate: u64,
    /// First few problems, for diagnostics.
    pub samples: Vec<String>,
}

const MAX_SAMPLES: usize = 10;

impl SkipReport {
    pub fn total(&self) -> u64 {
        self.parse_error + self.unsupported_type + self.empty_geometry + self.invalid_structure
    }

    fn record(&mut self, cause: SkipCause, record: u64, detail: &str) {
        match cause {
            SkipCause::Parse => self.parse_error += 1,
            SkipCause::Unsupported => self.unsupported_type += 1,
            SkipCause::Empty => self.empty_geometry += 1,
            SkipCause::Invalid => self.invalid_structure += 1,
        }
        if self.samples.len() < MAX_SAMPLES {
            self.samples.push(format!("record {record}: {detail}"));
        }
    }
}

/// One input record before geometry construction.
pub(crate) struct RawRecord {
    /// 1-based position in the file (line or feature number).
    pub number: u64,
    pub uri: Option<String>,
    pub attributes: Vec<(String, String)>,
    pub shapes: std::result::Result<Vec<RawShape>, (SkipCause, String)>,
}

type RawSource = Box<dyn Iterator<Item = Result<RawRecord>> + Send>;

/// Iterator over the profiles of one dataset.
pub struct DatasetReader {
    raw: RawSource,
    pending: VecDeque<GeometryProfile>,
    next_id: u32,
    skips: SkipReport,
    failed: bool,
}

impl DatasetReader {
    pub fn open(d: &DatasetDescriptor) -> Result<Self> {
        let raw: RawSource = match d.format {
            Format::GeoJson => Box::new(geojson::records(d)?),
            _ => Box::new(delimited::records(d)?),
        };
        Ok(DatasetReader {
            raw,
            pending: VecDeque::new(),
            next_id: 0,
            skips: SkipReport::default(),
            failed: false,
        })
    }

    /// Skips counted so far; complete once the iterator is exhausted.
    pub fn skips(&self) -> &SkipReport {
        &self.skips
    }

    fn expand(&mut self, rec: RawRecord) {
        let shapes = match rec.shapes {
            Ok(s) => s,
            Err((cause, detail)) => {
                self.skips.record(cause, rec.number, &detail);
                return;
            }
        };
        if shapes.is_empty() {
            self.skips.record(SkipCause::Empty, rec.number, "empty geometry");
            return;
        }
        let mut built = Vec::with_capacity(shapes.len());
        for (k, s) in shapes.into_iter().enumerate() {
            match s.build(self.next_id + k as u32) {
                Ok(g) => built.push(g),
                Err(e) => {
                    let cause = match e {
                        crate::geometry::ShapeError::Empty => SkipCause::Empty,
                        _ => SkipCause::Invalid,
                    };
                    self.skips.record(cause, rec.number, &e.to_string());
                    return;
                }
            }
        }
        // parts of a multi-geometry share one uri so output names the original record
        let uri = match (&rec.uri, built.len()) {
            (Some(u), _) => Some(u.clone()),
            (None, 1) => None,
            (None, _) => Some(self.next_id.to_string()),
        };
        for g in built {
            if !g.is_valid() {
                self.skips.degenerate += 1;
                if self.skips.samples.len() < MAX_SAMPLES {
                    self.skips.samples.push(format!(
                        "record {}: kept but unverifiable ({})",
                        rec.number,
                        g.defect().unwrap_or("invalid")
                    ));
                }
            }
            self.next_id += 1;
            self.pending.push_back(GeometryProfile {
                geometry: g,
                uri: uri.clone(),
                attributes: rec.attributes.clone(),
            });
        }
    }
}

impl Iterator for DatasetReader {
    type Item = Result<GeometryProfile>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(p) = self.pending.pop_front() {
                return Some(Ok(p));
            }
            if self.failed {
                return None;
            }
            match self.raw.next()? {
                Ok(rec) => self.expand(rec),
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Loads a whole dataset into memory.
pub fn read_dataset(d: &DatasetDescriptor) -> Result<(Vec<GeometryProfile>, SkipReport)> {
    let mut reader = DatasetReader::open(d)?;
    let profiles = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((profiles, reader.skips))
}

/// Reads a dataset one geometry at a time; same records and ids as [`read_dataset`].
pub fn stream_target(d: &DatasetDescriptor) -> Result<DatasetReader> {
    DatasetReader::open(d)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkTriple {
    pub source: String,
    pub relation: Relation,
    pub target: String,
}

/// Writes `source<TAB>relation<TAB>target` lines and returns how many were written.
pub fn write_links(links: impl IntoIterator<Item = LinkTriple>, path: &Path) -> Result<u64> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let n = write_links_to(links, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(n)
}

pub fn write_links_to(
    links: impl IntoIterator<Item = LinkTriple>,
    out: &mut impl Write,
) -> std::io::Result<u64> {
    let mut n = 0;
    for l in links {
        writeln!(out, "{}\t{}\t{}", l.source, l.relation, l.target)?;
        n += 1;
    }
    Ok(n)
}
