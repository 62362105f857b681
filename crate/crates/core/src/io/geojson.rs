//! Streaming FeatureCollection reader.
//!
//! The root is validated in a first pass that skips over feature bodies. A
//! second pass runs on a helper thread and hands features over a bounded
//! channel, so only a handful of features are in memory at once.

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;

use serde::de::{self, DeserializeSeed, IgnoredAny, MapAccess, SeqAccess, Visitor};
use serde::Deserializer;

use super::shape::from_geojson;
use super::{DatasetDescriptor, RawRecord, SkipCause};
use crate::error::{Error, Result};

const CHANNEL_DEPTH: usize = 64;

/// What to do with each element of `features`.
trait Sink {
    fn feature(&mut self, raw: &serde_json::value::RawValue) -> bool;
}

struct Counter(u64);

impl Sink for Counter {
    fn feature(&mut self, _: &serde_json::value::RawValue) -> bool {
        self.0 += 1;
        true
    }
}

struct Forward {
    tx: SyncSender<Result<RawRecord>>,
    number: u64,
}

impl Sink for Forward {
    fn feature(&mut self, raw: &serde_json::value::RawValue) -> bool {
        self.number += 1;
        self.tx.send(Ok(convert(raw, self.number))).is_ok()
    }
}

struct Root<'s, S>(&'s mut S);

impl<'de, S: Sink> DeserializeSeed<'de> for Root<'_, S> {
    type Value = ();

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> std::result::Result<(), D::Error> {
        d.deserialize_map(self)
    }
}

impl<'de, S: Sink> Visitor<'de> for Root<'_, S> {
    type Value = ();

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a GeoJSON FeatureCollection object")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<(), A::Error> {
        let mut kind: Option<String> = None;
        let mut saw_features = false;
        while let Some(key) = map.next_key::<String>()? {
            match key.as_str() {
                "type" => kind = Some(map.next_value()?),
                "features" => {
                    map.next_value_seed(Features(&mut *self.0))?;
                    saw_features = true;
                }
                _ => {
                    map.next_value::<IgnoredAny>()?;
                }
            }
        }
        match kind.as_deref() {
            Some("FeatureCollection") if saw_features => Ok(()),
            Some("FeatureCollection") => Err(de::Error::missing_field("features")),
            Some(other) => Err(de::Error::custom(format!(
                "root type is {other}, expected FeatureCollection"
            ))),
            None => Err(de::Error::missing_field("type")),
        }
    }
}

struct Features<'s, S>(&'s mut S);

impl<'de, S: Sink> DeserializeSeed<'de> for Features<'_, S> {
    type Value = ();

    fn deserialize<D: Deserializer<'de>>(self, d: D) -> std::result::Result<(), D::Error> {
        d.deserialize_seq(self)
    }
}

impl<'de, S: Sink> Visitor<'de> for Features<'_, S> {
    type Value = ();

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("an array of features")
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<(), A::Error> {
        while let Some(raw) = seq.next_element::<Box<serde_json::value::RawValue>>()? {
            if !self.0.feature(&raw) {
                return Err(de::Error::custom(STOPPED));
            }
        }
        Ok(())
    }
}

const STOPPED: &str = "reader dropped";

fn scan(path: &Path, sink: &mut impl Sink) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut de = serde_json::Deserializer::from_reader(BufReader::with_capacity(1 << 16, file));
    Root(sink)
        .deserialize(&mut de)
        .and_then(|()| de.end())
        .map_err(|e| {
            if e.is_io() {
                Error::io(path, std::io::Error::other(e.to_string()))
            } else {
                Error::format(path, e.to_string())
            }
        })
}

pub(super) fn count_features(path: &Path) -> Result<u64> {
    let mut c = Counter(0);
    scan(path, &mut c)?;
    Ok(c.0)
}

fn convert(raw: &serde_json::value::RawValue, number: u64) -> RawRecord {
    let bad = |reason: String| RawRecord {
        number,
        uri: None,
        attributes: vec![],
        shapes: Err((SkipCause::Parse, reason)),
    };
    let feature: geojson::Feature = match serde_json::from_str(raw.get()) {
        Ok(f) => f,
        Err(e) => return bad(format!("bad feature: {e}")),
    };
    let id_prop = feature.properties.as_ref().and_then(|p| p.get("id"));
    let uri = match (&feature.id, id_prop) {
        (Some(geojson::feature::Id::String(s)), _) => Some(s.clone()),
        (Some(geojson::feature::Id::Number(n)), _) => Some(n.to_string()),
        (None, Some(serde_json::Value::String(s))) => Some(s.clone()),
        (None, Some(v)) if !v.is_null() => Some(v.to_string()),
        _ => None,
    };
    let attributes = feature
        .properties
        .iter()
        .flatten()
        .map(|(k, v)| {
            let v = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            (k.clone(), v)
        })
        .collect();
    let shapes = match &feature.geometry {
        None => Ok(vec![]),
        Some(g) => from_geojson(&g.value),
    };
    RawRecord {
        number,
        uri,
        attributes,
        shapes,
    }
}

pub(super) struct GeoJsonRecords {
    rx: Receiver<Result<RawRecord>>,
    keep_attributes: bool,
}

pub(super) fn records(d: &DatasetDescriptor) -> Result<GeoJsonRecords> {
    // fail before streaming if the container itself is malformed
    count_features(&d.path)?;
    let (tx, rx) = sync_channel(CHANNEL_DEPTH);
    let path: PathBuf = d.path.clone();
    thread::Builder::new()
        .name("geojson-reader".into())
        .spawn(move || {
            let mut sink = Forward {
                tx: tx.clone(),
                number: 0,
            };
            if let Err(e) = scan(&path, &mut sink) {
                let stopped = matches!(&e, Error::Format { reason, .. } if reason.contains(STOPPED));
                if !stopped {
                    let _ = tx.send(Err(e));
                }
            }
        })
        .map_err(|e| Error::io(&d.path, e))?;
    Ok(GeoJsonRecords {
        rx,
        keep_attributes: d.keep_attributes,
    })
}

impl Iterator for GeoJsonRecords {
    type Item = Result<RawRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut rec = self.rx.recv().ok()?;
        if let Ok(r) = &mut rec {
            if !self.keep_attributes {
                r.attributes.clear();
            }
        }
        Some(rec)
    }
}
