use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// A geo-referenced document. Either coordinates or a precomputed area label
/// is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
    pub area_label: Option<String>,
}

impl Document {
    pub fn coordinates(&self) -> Option<(f64, f64)> {
        Some((self.latitude?, self.longitude?))
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<serde_json::Value>,
    text: Option<String>,
    lat: Option<f64>,
    lon: Option<f64>,
    area: Option<String>,
}

/// Why records were skipped during ingestion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounts {
    pub malformed: usize,
    pub missing_id: usize,
    pub missing_text: usize,
    pub invalid_coordinates: usize,
    pub missing_location: usize,
}

impl SkipCounts {
    pub fn total(&self) -> usize {
        self.malformed + self.missing_id + self.missing_text + self.invalid_coordinates + self.missing_location
    }
}

/// Streaming reader over a newline-delimited corpus. Bad records are counted
/// in [`DocumentStream::skipped`] and never yielded; only I/O failures surface
/// as errors.
pub struct DocumentStream<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    skipped: SkipCounts,
}

impl<R: BufRead> DocumentStream<R> {
    pub fn skipped(&self) -> SkipCounts {
        self.skipped
    }

    fn parse(&mut self, line: &str) -> Option<Document> {
        let record: RawRecord = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("line {}: malformed record: {e}", self.line_no);
                self.skipped.malformed += 1;
                return None;
            }
        };
        let id = match record.id {
            Some(serde_json::Value::String(s)) if !s.is_empty() => s,
            Some(serde_json::Value::Number(n)) => n.to_string(),
            _ => {
                self.skipped.missing_id += 1;
                return None;
            }
        };
        let text = match record.text {
            Some(t) if !t.trim().is_empty() => t,
            _ => {
                log::warn!("line {}: record {id} has no text", self.line_no);
                self.skipped.missing_text += 1;
                return None;
            }
        };
        let area_label = record.area.filter(|a| !a.trim().is_empty());
        match (record.lat, record.lon) {
            (Some(lat), Some(lon)) => {
                if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
                    self.skipped.invalid_coordinates += 1;
                    return None;
                }
                Some(Document {
                    id,
                    text,
                    latitude: Some(lat),
                    longitude: Some(lon),
                    area_label,
                })
            }
            (None, None) if area_label.is_some() => Some(Document {
                id,
                text,
                latitude: None,
                longitude: None,
                area_label,
            }),
            (None, None) => {
                self.skipped.missing_location += 1;
                None
            }
            _ => {
                self.skipped.invalid_coordinates += 1;
                None
            }
        }
    }
}

impl<R: BufRead> Iterator for DocumentStream<R> {
    type Item = std::io::Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e)),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(doc) = self.parse(&line) {
                return Some(Ok(doc));
            }
        }
    }
}

/// Open a JSONL corpus (`id`, `text`, `lat`, `lon`, optional `area`).
pub fn ingest(path: impl AsRef<Path>) -> Result<DocumentStream<BufReader<File>>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(ingest_reader(BufReader::new(file)))
}

pub fn ingest_reader<R: BufRead>(reader: R) -> DocumentStream<R> {
    DocumentStream {
        lines: reader.lines(),
        line_no: 0,
        skipped: SkipCounts::default(),
    }
}
