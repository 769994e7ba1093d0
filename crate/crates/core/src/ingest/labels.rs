//! URL label records and cross-source consistency merging.
//!
//! Label files are delimiter-separated `url,label,source` rows (CSV quoting
//! applies, so URLs containing the delimiter survive).

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelClass {
    Fake,
    NonFake,
    Unknown,
}

impl std::str::FromStr for LabelClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fake" => Ok(LabelClass::Fake),
            "non_fake" | "non-fake" | "nonfake" | "real" => Ok(LabelClass::NonFake),
            "unknown" => Ok(LabelClass::Unknown),
            other => Err(Error::Unknown {
                what: "label",
                value: other.to_string(),
            }),
        }
    }
}

/// One labeled URL from one source. The URL is the expanded form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub url: String,
    pub label: LabelClass,
    pub source: String,
}

/// Merged verdict for one URL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlLabel {
    pub label: LabelClass,
    pub conflicted: bool,
}

/// Per-URL merged labels plus per-class counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelStore {
    labels: HashMap<String, UrlLabel>,
    pub fake_count: usize,
    pub non_fake_count: usize,
    pub unknown_count: usize,
    pub conflict_count: usize,
}

impl LabelStore {
    pub fn get(&self, url: &str) -> Option<UrlLabel> {
        self.labels.get(url).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &UrlLabel)> {
        self.labels.iter()
    }
}

/// Merge label records from all sources into one verdict per URL.
///
/// All definitive labels (fake / non-fake) agree -> that label. A fake vs
/// non-fake conflict -> unknown, flagged conflicted. Unknown records never
/// contradict a definitive one. Order-independent by construction.
pub fn merge_label_sources(records: &[LabelRecord]) -> LabelStore {
    let mut per_url: HashMap<&str, (bool, bool)> = HashMap::new();
    for record in records {
        let entry = per_url.entry(&record.url).or_insert((false, false));
        match record.label {
            LabelClass::Fake => entry.0 = true,
            LabelClass::NonFake => entry.1 = true,
            LabelClass::Unknown => {}
        }
    }
    let mut store = LabelStore::default();
    for (url, (saw_fake, saw_non_fake)) in per_url {
        let merged = match (saw_fake, saw_non_fake) {
            (true, true) => UrlLabel {
                label: LabelClass::Unknown,
                conflicted: true,
            },
            (true, false) => UrlLabel {
                label: LabelClass::Fake,
                conflicted: false,
            },
            (false, true) => UrlLabel {
                label: LabelClass::NonFake,
                conflicted: false,
            },
            (false, false) => UrlLabel {
                label: LabelClass::Unknown,
                conflicted: false,
            },
        };
        match merged.label {
            LabelClass::Fake => store.fake_count += 1,
            LabelClass::NonFake => store.non_fake_count += 1,
            LabelClass::Unknown => store.unknown_count += 1,
        }
        if merged.conflicted {
            store.conflict_count += 1;
        }
        store.labels.insert(url.to_string(), merged);
    }
    store
}

/// Read `url,label,source` rows. `delimiter` defaults to a comma.
pub fn read_label_records<R: Read>(reader: R, delimiter: u8) -> Result<Vec<LabelRecord>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(false)
        .from_reader(reader);
    let mut records = Vec::new();
    for row in csv_reader.records() {
        let row = row.map_err(|e| Error::Other(format!("label file: {e}")))?;
        if row.len() != 3 {
            return Err(Error::Other(format!(
                "label row needs 3 fields, got {}",
                row.len()
            )));
        }
        records.push(LabelRecord {
            url: row[0].to_string(),
            label: row[1].parse()?,
            source: row[2].to_string(),
        });
    }
    Ok(records)
}

pub fn read_label_records_from_path(path: &Path, delimiter: u8) -> Result<Vec<LabelRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_label_records(std::io::BufReader::new(file), delimiter)
}
