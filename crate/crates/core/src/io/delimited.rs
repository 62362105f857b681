use std::fs::File;
use std::io::{BufRead, BufReader};

use csv::StringRecord;

use super::shape::{looks_like_wkt, parse_wkt};
use super::{Column, DatasetDescriptor, Format, RawRecord, SkipCause};
use crate::error::{Error, Result};

pub(super) struct DelimitedRecords {
    reader: csv::Reader<BufReader<File>>,
    path: std::path::PathBuf,
    header: Option<Vec<String>>,
    geometry_column: Column,
    id_column: Column,
    keep_attributes: bool,
    row: StringRecord,
}

pub(super) fn records(d: &DatasetDescriptor) -> Result<DelimitedRecords> {
    let file = File::open(&d.path).map_err(|e| Error::io(&d.path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(d.delimiter)
        .has_headers(d.has_header)
        .flexible(true)
        // WKT never needs quoting in TSV, and stray quotes in names should stay literal
        .quoting(d.format == Format::CsvWkt)
        .from_reader(BufReader::new(file));
    let header = if d.has_header {
        let h = reader
            .headers()
            .map_err(|e| Error::format(&d.path, e.to_string()))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };
    if d.geometry_column == Column::None {
        return Err(Error::Config("a geometry column is required".into()));
    }
    Ok(DelimitedRecords {
        reader,
        path: d.path.clone(),
        header,
        geometry_column: d.geometry_column,
        id_column: d.id_column,
        keep_attributes: d.keep_attributes,
        row: StringRecord::new(),
    })
}

impl DelimitedRecords {
    fn convert(&mut self, number: u64) -> RawRecord {
        let row = &self.row;
        let geom_col = match self.geometry_column {
            Column::Index(i) => Some(i),
            _ => row.iter().position(looks_like_wkt),
        };
        let Some(geom_col) = geom_col.filter(|&i| i < row.len()) else {
            return RawRecord {
                number,
                uri: None,
                attributes: vec![],
                shapes: Err((SkipCause::Parse, "no geometry column".to_string())),
            };
        };
        let id_col = match self.id_column {
            Column::Index(i) => Some(i),
            Column::Auto if geom_col != 0 => Some(0),
            _ => None,
        };
        let uri = id_col
            .and_then(|i| row.get(i))
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty());
        let attributes = if self.keep_attributes {
            row.iter()
                .enumerate()
                .filter(|(i, _)| *i != geom_col && Some(*i) != id_col)
                .map(|(i, v)| {
                    let name = self
                        .header
                        .as_ref()
                        .and_then(|h| h.get(i).cloned())
                        .unwrap_or_else(|| format!("c{i}"));
                    (name, v.to_string())
                })
                .collect()
        } else {
            Vec::new()
        };
        RawRecord {
            number,
            uri,
            attributes,
            shapes: parse_wkt(&row[geom_col]),
        }
    }
}

impl Iterator for DelimitedRecords {
    type Item = Result<RawRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.reader.read_record(&mut self.row) {
                Ok(false) => return None,
                Ok(true) => {
                    // blank lines carry no record
                    if self.row.len() == 1 && self.row[0].trim().is_empty() {
                        continue;
                    }
                    let line = self.row.position().map_or(0, |p| p.line());
                    return Some(Ok(self.convert(line)));
                }
                Err(e) => {
                    return Some(Err(match e.into_kind() {
                        csv::ErrorKind::Io(io) => Error::io(&self.path, io),
                        other => Error::format(&self.path, format!("{other:?}")),
                    }))
                }
            }
        }
    }
}

/// Number of non-blank lines, minus the header.
pub(super) fn count_rows(d: &DatasetDescriptor) -> Result<u64> {
    let file = File::open(&d.path).map_err(|e| Error::io(&d.path, e))?;
    let mut reader = BufReader::with_capacity(1 << 16, file);
    let mut n = 0u64;
    let mut line = Vec::new();
    loop {
        line.clear();
        let read = reader
            .read_until(b'\n', &mut line)
            .map_err(|e| Error::io(&d.path, e))?;
        if read == 0 {
            break;
        }
        if line.iter().any(|b| !b.is_ascii_whitespace()) {
            n += 1;
        }
    }
    Ok(n.saturating_sub(d.has_header as u64))
}
