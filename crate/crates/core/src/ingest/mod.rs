//! Event-stream ingestion.
//!
//! Input files are line-delimited UTF-8. Each event line is one flat JSON
//! object carrying the event fields plus a snapshot of the author profile:
//!
//! ```json
//! {"tweet_id":"t1","user_id":"u1","created_at":1474416000,"text":"...",
//!  "kind":"retweet","ref_tweet_id":"t0","ref_user_id":"u0",
//!  "urls":["https://example.com/a"],"mentions":["u9"],
//!  "account_created_at":1300000000,"followers_count":10,"friends_count":5,
//!  "statuses_count":100,"favourites_count":3,"verified":false,"lang":"en"}
//! ```
//!
//! `created_at` / `account_created_at` accept integer epoch seconds, RFC 3339
//! strings, or the classic `"Wed Sep 21 03:27:00 +0000 2016"` form. External
//! dumps with different field names are ingested by remapping through a
//! [`SchemaConfig`]. Malformed lines are counted and skipped; parsing fails
//! only when the malformed fraction exceeds the configured tolerance.

pub mod annotations;
pub mod labels;
pub mod resolver;

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What kind of platform event a line describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Original,
    Retweet,
    Reply,
    Quote,
}

impl std::str::FromStr for EventKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" | "tweet" => Ok(EventKind::Original),
            "retweet" => Ok(EventKind::Retweet),
            "reply" => Ok(EventKind::Reply),
            "quote" => Ok(EventKind::Quote),
            other => Err(Error::Unknown {
                what: "event kind",
                value: other.to_string(),
            }),
        }
    }
}

/// One platform event with the author profile snapshot folded in at parse
/// time (the snapshot itself is merged into the profile store, not kept here).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetEvent {
    pub tweet_id: String,
    pub user_id: String,
    /// Epoch seconds, UTC.
    pub created_at: i64,
    pub text: String,
    pub kind: EventKind,
    pub ref_tweet_id: Option<String>,
    pub ref_user_id: Option<String>,
    pub urls: Vec<String>,
    pub mentions: Vec<String>,
}

/// Merged per-user profile. Multiple snapshots collapse to per-field maxima
/// and the earliest account creation date.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub account_created_at: i64,
    pub followers_count: u64,
    pub friends_count: u64,
    pub statuses_count: u64,
    pub favourites_count: u64,
    pub verified: bool,
    pub lang: String,
}

impl UserProfile {
    fn merge_snapshot(&mut self, other: &UserProfile) {
        self.account_created_at = self.account_created_at.min(other.account_created_at);
        self.followers_count = self.followers_count.max(other.followers_count);
        self.friends_count = self.friends_count.max(other.friends_count);
        self.statuses_count = self.statuses_count.max(other.statuses_count);
        self.favourites_count = self.favourites_count.max(other.favourites_count);
        self.verified = self.verified || other.verified;
        // First non-empty language wins.
        if self.lang.is_empty() && !other.lang.is_empty() {
            self.lang = other.lang.clone();
        }
    }
}

/// Maps external field names onto the internal ones, so differently shaped
/// dumps can be ingested without rewriting them.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct SchemaConfig {
    /// internal field name -> external field name; unmapped fields use the
    /// internal name as-is.
    #[serde(default)]
    pub field_map: HashMap<String, String>,
}

impl SchemaConfig {
    fn external<'a>(&'a self, internal: &'a str) -> &'a str {
        self.field_map
            .get(internal)
            .map(String::as_str)
            .unwrap_or(internal)
    }
}

/// Parse-time options.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ParseOptions {
    /// Fatal when malformed/total exceeds this fraction.
    pub max_malformed_fraction: f64,
    /// Events outside `[start, end]` (epoch seconds, inclusive) are rejected.
    pub time_window: Option<(i64, i64)>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            max_malformed_fraction: 0.01,
            time_window: None,
        }
    }
}

/// Counters accumulated while parsing an event stream.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub total_lines: usize,
    pub malformed_lines: usize,
    pub duplicate_events: usize,
    pub window_rejects: usize,
}

/// Deduplicated events plus merged user profiles. Built single-writer, then
/// treated as immutable by every later stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventStore {
    events: Vec<TweetEvent>,
    by_id: HashMap<String, usize>,
    profiles: HashMap<String, UserProfile>,
    pub stats: ParseStats,
}

impl EventStore {
    pub fn events(&self) -> &[TweetEvent] {
        &self.events
    }

    pub fn get(&self, tweet_id: &str) -> Option<&TweetEvent> {
        self.by_id.get(tweet_id).map(|&i| &self.events[i])
    }

    pub fn profiles(&self) -> &HashMap<String, UserProfile> {
        &self.profiles
    }

    pub fn profile(&self, user_id: &str) -> Option<&UserProfile> {
        self.profiles.get(user_id)
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    fn insert(&mut self, event: TweetEvent, profile: Option<UserProfile>) {
        if let Some(p) = profile {
            self.profiles
                .entry(p.user_id.clone())
                .and_modify(|existing| existing.merge_snapshot(&p))
                .or_insert(p);
        }
        if self.by_id.contains_key(&event.tweet_id) {
            self.stats.duplicate_events += 1;
            return;
        }
        self.by_id.insert(event.tweet_id.clone(), self.events.len());
        self.events.push(event);
    }

    /// Rewrite every event URL through the expander. Used before cascades are
    /// grouped so that labels (keyed by expanded URLs) match.
    pub fn expand_urls(&mut self, expander: &mut resolver::UrlExpander) {
        for event in &mut self.events {
            for url in &mut event.urls {
                let expanded = expander.expand(url);
                *url = expanded.url;
            }
        }
    }
}

fn parse_timestamp(value: &serde_json::Value) -> Option<i64> {
    match value {
        serde_json::Value::Number(n) => n.as_i64(),
        serde_json::Value::String(s) => {
            if let Ok(secs) = s.parse::<i64>() {
                return Some(secs);
            }
            if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(s) {
                return Some(dt.timestamp());
            }
            // Twitter's legacy format: "Wed Sep 21 03:27:00 +0000 2016"
            chrono::DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y")
                .ok()
                .map(|dt| dt.timestamp())
        }
        _ => None,
    }
}

fn string_list(value: Option<&serde_json::Value>) -> Vec<String> {
    match value {
        Some(serde_json::Value::Array(items)) => items
            .iter()
            .filter_map(|v| v.as_str().map(str::to_string))
            .collect(),
        _ => Vec::new(),
    }
}

fn parse_line(
    line: &str,
    schema: &SchemaConfig,
) -> Option<(TweetEvent, Option<UserProfile>)> {
    let obj: serde_json::Map<String, serde_json::Value> = serde_json::from_str(line).ok()?;
    let field = |name: &str| obj.get(schema.external(name));

    let tweet_id = field("tweet_id")?.as_str()?.to_string();
    let user_id = field("user_id")?.as_str()?.to_string();
    let created_at = parse_timestamp(field("created_at")?)?;
    let kind: EventKind = field("kind")?.as_str()?.parse().ok()?;
    let ref_tweet_id = field("ref_tweet_id")
        .and_then(|v| v.as_str())
        .map(str::to_string);
    let ref_user_id = field("ref_user_id")
        .and_then(|v| v.as_str())
        .map(str::to_string);

    // Referencing kinds must carry both reference fields.
    if kind != EventKind::Original && (ref_tweet_id.is_none() || ref_user_id.is_none()) {
        return None;
    }

    let event = TweetEvent {
        tweet_id,
        user_id: user_id.clone(),
        created_at,
        text: field("text")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string(),
        kind,
        ref_tweet_id,
        ref_user_id,
        urls: string_list(field("urls")),
        mentions: string_list(field("mentions")),
    };

    // The profile snapshot is optional; events without one still count.
    let profile = field("account_created_at")
        .and_then(parse_timestamp)
        .map(|account_created_at| UserProfile {
            user_id,
            account_created_at,
            followers_count: field("followers_count").and_then(|v| v.as_u64()).unwrap_or(0),
            friends_count: field("friends_count").and_then(|v| v.as_u64()).unwrap_or(0),
            statuses_count: field("statuses_count").and_then(|v| v.as_u64()).unwrap_or(0),
            favourites_count: field("favourites_count")
                .and_then(|v| v.as_u64())
                .unwrap_or(0),
            verified: field("verified").and_then(|v| v.as_bool()).unwrap_or(false),
            lang: field("lang")
                .and_then(|v| v.as_str())
                .unwrap_or_default()
                .to_string(),
        });

    Some((event, profile))
}

/// Parse a line-delimited event stream into an [`EventStore`].
///
/// Malformed lines are skipped and counted; duplicates keep the first
/// occurrence. Fails if the stream is unreadable or the malformed fraction
/// exceeds `options.max_malformed_fraction`.
pub fn parse_events<R: BufRead>(
    reader: R,
    schema: &SchemaConfig,
    options: &ParseOptions,
) -> Result<EventStore> {
    let mut store = EventStore::default();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io("<event stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        store.stats.total_lines += 1;
        match parse_line(&line, schema) {
            Some((event, profile)) => {
                if let Some((start, end)) = options.time_window {
                    if event.created_at < start || event.created_at > end {
                        store.stats.window_rejects += 1;
                        store.stats.malformed_lines += 1;
                        continue;
                    }
                }
                store.insert(event, profile);
            }
            None => store.stats.malformed_lines += 1,
        }
    }
    let total = store.stats.total_lines;
    if total > 0 {
        let fraction = store.stats.malformed_lines as f64 / total as f64;
        if fraction > options.max_malformed_fraction {
            return Err(Error::TooManyMalformed {
                malformed: store.stats.malformed_lines,
                total,
                fraction,
                limit: options.max_malformed_fraction,
            });
        }
    }
    Ok(store)
}

pub fn parse_events_from_path(
    path: &Path,
    schema: &SchemaConfig,
    options: &ParseOptions,
) -> Result<EventStore> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_events(std::io::BufReader::new(file), schema, options)
}
