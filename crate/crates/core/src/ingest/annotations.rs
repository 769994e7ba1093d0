//! Precomputed semantic annotations (topic ids, sentiment, optional text
//! embedding), ingested as line-delimited JSON keyed by tweet id:
//!
//! ```json
//! {"tweet_id":"t1","topic_ew":3,"topic_pmi":7,"topic_idf":1,
//!  "sentiment_label":2,"sentiment_score":0.98,"text_embedding":[0.1,0.2]}
//! ```

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentiment label codes: 2 = positive, 1 = negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum SentimentLabel {
    Negative,
    Positive,
}

impl SentimentLabel {
    pub fn code(self) -> u8 {
        match self {
            SentimentLabel::Negative => 1,
            SentimentLabel::Positive => 2,
        }
    }
}

impl TryFrom<u8> for SentimentLabel {
    type Error = String;
    fn try_from(code: u8) -> std::result::Result<Self, String> {
        match code {
            1 => Ok(SentimentLabel::Negative),
            2 => Ok(SentimentLabel::Positive),
            other => Err(format!("sentiment label code must be 1 or 2, got {other}")),
        }
    }
}

impl From<SentimentLabel> for u8 {
    fn from(label: SentimentLabel) -> u8 {
        label.code()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub tweet_id: String,
    pub topic_ew: i64,
    pub topic_pmi: i64,
    pub topic_idf: i64,
    pub sentiment_label: SentimentLabel,
    pub sentiment_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_embedding: Option<Vec<f64>>,
}

impl AnnotationRecord {
    fn validate(&self) -> bool {
        self.sentiment_score.is_finite()
            && (0.0..=1.0).contains(&self.sentiment_score)
            && self.topic_ew >= 0
            && self.topic_pmi >= 0
            && self.topic_idf >= 0
            && self
                .text_embedding
                .as_ref()
                .map(|v| v.iter().all(|x| x.is_finite()))
                .unwrap_or(true)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationStats {
    pub total_lines: usize,
    pub rejected: usize,
    pub overwrites: usize,
}

/// Annotations keyed by tweet id. When any record carries a text embedding,
/// its length is fixed store-wide; records with a different length are
/// rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnotationStore {
    records: HashMap<String, AnnotationRecord>,
    pub embedding_dim: Option<usize>,
    pub stats: AnnotationStats,
}

impl AnnotationStore {
    pub fn get(&self, tweet_id: &str) -> Option<&AnnotationRecord> {
        self.records.get(tweet_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn insert(&mut self, record: AnnotationRecord) -> bool {
        if !record.validate() {
            self.stats.rejected += 1;
            return false;
        }
        if let Some(embedding) = &record.text_embedding {
            match self.embedding_dim {
                None => self.embedding_dim = Some(embedding.len()),
                Some(dim) if dim != embedding.len() => {
                    self.stats.rejected += 1;
                    return false;
                }
                Some(_) => {}
            }
        }
        // Documented tie rule: the last record for a tweet id wins.
        if self
            .records
            .insert(record.tweet_id.clone(), record)
            .is_some()
        {
            self.stats.overwrites += 1;
        }
        true
    }
}

/// Parse line-delimited annotation records. Invalid records are rejected and
/// counted, never fatal; unreadable input is.
pub fn load_annotations<R: BufRead>(reader: R) -> Result<AnnotationStore> {
    let mut store = AnnotationStore::default();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io("<annotation stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        store.stats.total_lines += 1;
        match serde_json::from_str::<AnnotationRecord>(&line) {
            Ok(record) => {
                store.insert(record);
            }
            Err(_) => store.stats.rejected += 1,
        }
    }
    Ok(store)
}

pub fn load_annotations_from_path(path: &Path) -> Result<AnnotationStore> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_annotations(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(tweet_id: &str, score: f64) -> AnnotationRecord {
        AnnotationRecord {
            tweet_id: tweet_id.into(),
            topic_ew: 3,
            topic_pmi: 7,
            topic_idf: 1,
            sentiment_label: SentimentLabel::Positive,
            sentiment_score: score,
            text_embedding: None,
        }
    }

    #[test]
    fn retrievable_by_tweet_id() {
        let line = serde_json::to_string(&record("t1", 0.98)).unwrap();
        let store = load_annotations(line.as_bytes()).unwrap();
        let r = store.get("t1").unwrap();
        assert_eq!(r.topic_ew, 3);
        assert_eq!(r.sentiment_label.code(), 2);
    }

    #[test]
    fn out_of_range_score_rejected() {
        let mut store = AnnotationStore::default();
        assert!(!store.insert(record("t1", 1.7)));
        assert_eq!(store.stats.rejected, 1);
        assert!(store.is_empty());
    }

    #[test]
    fn last_record_wins_with_overwrite_counter() {
        let mut store = AnnotationStore::default();
        store.insert(record("t1", 0.2));
        let mut second = record("t1", 0.9);
        second.topic_ew = 5;
        store.insert(second);
        assert_eq!(store.stats.overwrites, 1);
        assert_eq!(store.get("t1").unwrap().topic_ew, 5);
    }

    #[test]
    fn embedding_length_fixed_store_wide() {
        let mut store = AnnotationStore::default();
        let mut a = record("t1", 0.5);
        a.text_embedding = Some(vec![0.1, 0.2]);
        let mut b = record("t2", 0.5);
        b.text_embedding = Some(vec![0.1, 0.2, 0.3]);
        assert!(store.insert(a));
        assert!(!store.insert(b));
        assert_eq!(store.embedding_dim, Some(2));
    }

    #[test]
    fn negative_topic_id_rejected() {
        let mut store = AnnotationStore::default();
        let mut bad = record("t1", 0.5);
        bad.topic_pmi = -2;
        assert!(!store.insert(bad));
    }

    #[test]
    fn sentiment_label_wire_codes() {
        let json = r#"{"tweet_id":"t1","topic_ew":0,"topic_pmi":0,"topic_idf":0,
                       "sentiment_label":1,"sentiment_score":0.4}"#;
        let rec: AnnotationRecord = serde_json::from_str(json).unwrap();
        assert_eq!(rec.sentiment_label, SentimentLabel::Negative);
        let back = serde_json::to_value(&rec).unwrap();
        assert_eq!(back["sentiment_label"], 1);
    }
}
