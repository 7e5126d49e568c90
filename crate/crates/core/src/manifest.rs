//! Dataset manifest: one row per image with label, projection, age and a
//! quality flag, plus the age/quality inclusion filter.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dicom::CLASS_LABELS;

pub const MANIFEST_HEADER: [&str; 5] = ["path", "label", "projection", "age", "quality_ok"];
pub const DEFAULT_MIN_AGE: u32 = 15;

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: unknown label {value:?}")]
    UnknownLabel { row: usize, value: String },
    #[error("row {row}: unknown projection {value:?}")]
    UnknownProjection { row: usize, value: String },
    #[error("row {row}: invalid age {value:?}")]
    InvalidAge { row: usize, value: String },
    #[error("row {row}: invalid quality flag {value:?}")]
    InvalidQuality { row: usize, value: String },
    #[error("missing column {0:?}")]
    MissingColumn(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "COVID-19")]
    Covid19,
    #[serde(rename = "Non-COVID-19")]
    NonCovid19,
    #[serde(rename = "No Finding")]
    NoFinding,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Covid19, Label::NonCovid19, Label::NoFinding];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        CLASS_LABELS[self.index()]
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Label::ALL.get(i).copied()
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Label::ALL.into_iter().find(|l| l.as_str() == s.trim()).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    PA,
    AP,
}

impl Projection {
    pub fn as_str(self) -> &'static str {
        match self {
            Projection::PA => "PA",
            Projection::AP => "AP",
        }
    }
}

impl FromStr for Projection {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim() {
            "PA" => Ok(Projection::PA),
            "AP" => Ok(Projection::AP),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    pub projection: Projection,
    pub age: u32,
    pub quality_ok: bool,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

pub fn read_manifest<R: Read>(reader: R) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(ManifestError::MissingColumn(name))
    };
    let idx = [col("path")?, col("label")?, col("projection")?, col("age")?, col("quality_ok")?];
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |k: usize| record.get(idx[k]).unwrap_or("").to_string();
        let label = field(1);
        let projection = field(2);
        let age = field(3);
        let quality = field(4);
        out.push(ManifestEntry {
            path: field(0),
            label: label.parse().map_err(|_| ManifestError::UnknownLabel { row, value: label.clone() })?,
            projection: projection
                .parse()
                .map_err(|_| ManifestError::UnknownProjection { row, value: projection.clone() })?,
            age: age.parse().map_err(|_| ManifestError::InvalidAge { row, value: age.clone() })?,
            quality_ok: parse_bool(&quality).ok_or(ManifestError::InvalidQuality { row, value: quality.clone() })?,
        });
    }
    Ok(out)
}

pub fn read_manifest_file(path: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    read_manifest(std::fs::File::open(path)?)
}

pub fn write_manifest<W: Write>(writer: W, entries: &[ManifestEntry]) -> Result<(), ManifestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MANIFEST_HEADER)?;
    for e in entries {
        w.write_record([
            e.path.as_str(),
            e.label.as_str(),
            e.projection.as_str(),
            &e.age.to_string(),
            if e.quality_ok { "true" } else { "false" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Filter {
    pub min_age: u32,
    pub require_quality: bool,
}

impl Default for Filter {
    fn default() -> Self {
        Filter {
            min_age: DEFAULT_MIN_AGE,
            require_quality: true,
        }
    }
}

impl Filter {
    pub fn keeps(&self, e: &ManifestEntry) -> bool {
        e.age >= self.min_age && (!self.require_quality || e.quality_ok)
    }

    pub fn apply(&self, entries: &[ManifestEntry]) -> Vec<ManifestEntry> {
        entries.iter().filter(|e| self.keeps(e)).cloned().collect()
    }
}

/// Images per class, in label order.
pub fn class_counts(entries: &[ManifestEntry]) -> [usize; 3] {
    let mut counts = [0; 3];
    for e in entries {
        counts[e.label.index()] += 1;
    }
    counts
}
