//! Synthetic corpus generator: two user communities, cascades drawing
//! retweeters mostly from their own community, and URL labels aligned with
//! the community at a configurable rate. Emits files in the exact ingest
//! formats, so the full pipeline runs on them unchanged.
//!
//! `label_alignment` 1.0 makes community predict the label perfectly; 0.5
//! removes every learnable signal. `annotation_alignment` plays the same
//! role for topic ids relative to the label (0.5 = uninformative).

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::labels::LabelClass;
use crate::seeding::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_cascades: usize,
    pub n_users: usize,
    /// Probability that a cascade's label matches its community.
    pub label_alignment: f64,
    /// Probability that a topic id is drawn from the label's topic pool.
    pub annotation_alignment: f64,
    pub cascade_size_min: usize,
    pub cascade_size_max: usize,
    /// Probability that each retweeter comes from the cascade's community.
    pub intra_community_rate: f64,
    /// Expected prior-interaction (mention) events per user.
    pub chatter_per_user: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_cascades: 500,
            n_users: 1200,
            label_alignment: 0.9,
            annotation_alignment: 0.5,
            cascade_size_min: 10,
            cascade_size_max: 18,
            intra_community_rate: 0.9,
            chatter_per_user: 3.0,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.label_alignment) {
            return Err(Error::param("label_alignment", "must be in [0.5, 1]"));
        }
        if !(0.0..=1.0).contains(&self.annotation_alignment) {
            return Err(Error::param("annotation_alignment", "must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.intra_community_rate) {
            return Err(Error::param("intra_community_rate", "must be in [0, 1]"));
        }
        if self.cascade_size_min == 0 || self.cascade_size_min > self.cascade_size_max {
            return Err(Error::param("cascade_size_min", "need 0 < min <= max"));
        }
        if self.n_users < 2 * (self.cascade_size_max + 1) {
            return Err(Error::param(
                "n_users",
                "need at least 2 * (cascade_size_max + 1) users",
            ));
        }
        if self.n_cascades == 0 {
            return Err(Error::param("n_cascades", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCascadeInfo {
    pub cascade_id: String,
    pub url: String,
    pub community: usize,
    pub label: LabelClass,
    pub retweeter_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub events_path: PathBuf,
    pub labels_path: PathBuf,
    pub annotations_path: PathBuf,
    pub cascades: Vec<SynthCascadeInfo>,
    pub event_count: usize,
}

const T0: i64 = 1_470_000_000;
const DAY: i64 = 86_400;

struct SynthUser {
    id: String,
    community: usize,
    account_created_at: i64,
    followers: u64,
    friends: u64,
    statuses: u64,
    favourites: u64,
    verified: bool,
    lang: &'static str,
}

fn make_users(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<SynthUser> {
    let half = config.n_users / 2;
    (0..config.n_users)
        .map(|i| {
            let community = usize::from(i >= half);
            let r: f64 = rng.random();
            let lang = if r < 0.7 {
                "en"
            } else if r < 0.85 {
                "es"
            } else if r < 0.95 {
                "de"
            } else {
                "fr"
            };
            let scale: f64 = rng.random::<f64>().powi(3);
            // Mildly community-shifted count distributions: a weak per-user
            // signal both tasks can use, overlapping enough that structure
            // stays the stronger cue.
            let follower_scale = if community == 0 { 50_000.0 } else { 25_000.0 };
            let status_range = if community == 0 { 50..20_000 } else { 50..12_000 };
            SynthUser {
                id: format!("user{i:05}"),
                community,
                account_created_at: T0 - rng.random_range(30 * DAY..8 * 365 * DAY),
                followers: (scale * follower_scale) as u64,
                friends: rng.random_range(10..2_000),
                statuses: rng.random_range(status_range),
                favourites: rng.random_range(0..5_000),
                verified: rng.random::<f64>() < 0.05,
                lang,
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn event_json(
    tweet_id: &str,
    user: &SynthUser,
    created_at: i64,
    kind: &str,
    text: &str,
    reference: Option<(&str, &str)>,
    urls: &[String],
    mentions: &[String],
) -> String {
    let mut obj = serde_json::json!({
        "tweet_id": tweet_id,
        "user_id": user.id,
        "created_at": created_at,
        "text": text,
        "kind": kind,
        "urls": urls,
        "mentions": mentions,
        "account_created_at": user.account_created_at,
        "followers_count": user.followers,
        "friends_count": user.friends,
        "statuses_count": user.statuses,
        "favourites_count": user.favourites,
        "verified": user.verified,
        "lang": user.lang,
    });
    if let Some((ref_tweet, ref_user)) = reference {
        obj["ref_tweet_id"] = ref_tweet.into();
        obj["ref_user_id"] = ref_user.into();
    }
    obj.to_string()
}

/// Community-flavored word soup; the pools overlap so content similarity is
/// informative but not trivially separating.
fn community_text(community: usize, rng: &mut ChaCha8Rng) -> String {
    let base = if community == 0 { 0 } else { 30 };
    (0..6)
        .map(|_| format!("w{}", base + rng.random_range(0..40)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn draw_member(
    users: &[SynthUser],
    community: usize,
    intra_rate: f64,
    rng: &mut ChaCha8Rng,
) -> usize {
    let half = users.len() / 2;
    let own = rng.random::<f64>() < intra_rate;
    let target = if own { community } else { 1 - community };
    if target == 0 {
        rng.random_range(0..half)
    } else {
        rng.random_range(half..users.len())
    }
}

/// Generate the three input files under `out_dir`.
pub fn generate_synthetic(config: &SynthConfig, out_dir: &Path) -> Result<SynthSummary> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0x517f, 0));
    let users = make_users(config, &mut rng);

    // (created_at, tweet_id, line); sorted before writing.
    let mut events: Vec<(i64, String, String)> = Vec::new();
    let mut label_rows: Vec<(String, LabelClass)> = Vec::new();
    let mut annotation_lines: Vec<String> = Vec::new();
    let mut infos: Vec<SynthCascadeInfo> = Vec::new();

    // Prior-interaction chatter; builds the social graph edges that enrich
    // cascade sub-graphs beyond stars.
    let chatter_count = (config.n_users as f64 * config.chatter_per_user) as usize;
    for i in 0..chatter_count {
        let actor = rng.random_range(0..users.len());
        let partner = loop {
            let p = draw_member(&users, users[actor].community, config.intra_community_rate, &mut rng);
            if p != actor {
                break p;
            }
        };
        let ts = T0 + rng.random_range(0..7 * DAY);
        let id = format!("chat{i:06}");
        events.push((
            ts,
            id.clone(),
            event_json(
                &id,
                &users[actor],
                ts,
                "original",
                "",
                None,
                &[],
                &[users[partner].id.clone()],
            ),
        ));
    }

    for c in 0..config.n_cascades {
        let community = c % 2;
        let root = draw_member(&users, community, 1.0, &mut rng);
        let root_time = T0 + 7 * DAY + rng.random_range(0..30 * DAY);
        let cascade_id = format!("root{c:05}");
        let url = format!("https://news.example/story{c:05}");
        let text = community_text(community, &mut rng);
        events.push((
            root_time,
            cascade_id.clone(),
            event_json(
                &cascade_id,
                &users[root],
                root_time,
                "original",
                &text,
                None,
                std::slice::from_ref(&url),
                &[],
            ),
        ));

        let size = rng.random_range(config.cascade_size_min..=config.cascade_size_max);
        let mut retweeters: Vec<usize> = Vec::with_capacity(size);
        while retweeters.len() < size {
            let user = draw_member(&users, community, config.intra_community_rate, &mut rng);
            if user != root && !retweeters.contains(&user) {
                retweeters.push(user);
            }
        }
        for (k, &user) in retweeters.iter().enumerate() {
            let ts = root_time + rng.random_range(60..DAY);
            let id = format!("rt{c:05}_{k:03}");
            events.push((
                ts,
                id.clone(),
                event_json(
                    &id,
                    &users[user],
                    ts,
                    "retweet",
                    "",
                    Some((&cascade_id, &users[root].id)),
                    &[],
                    &[],
                ),
            ));
        }

        let aligned = rng.random::<f64>() < config.label_alignment;
        let label = match (community, aligned) {
            (0, true) | (1, false) => LabelClass::Fake,
            _ => LabelClass::NonFake,
        };
        label_rows.push((url.clone(), label));

        // Topic pools keyed by the label (fake: 0..5, non-fake: 5..10).
        let topic = |rng: &mut ChaCha8Rng| -> i64 {
            let use_label_pool = rng.random::<f64>() < config.annotation_alignment;
            let own_pool_base = if label == LabelClass::Fake { 0 } else { 5 };
            let base = if use_label_pool { own_pool_base } else { 5 - own_pool_base };
            base + rng.random_range(0..5)
        };
        let sentiment_label = if rng.random::<f64>() < 0.5 { 1 } else { 2 };
        annotation_lines.push(
            serde_json::json!({
                "tweet_id": cascade_id,
                "topic_ew": topic(&mut rng),
                "topic_pmi": topic(&mut rng),
                "topic_idf": topic(&mut rng),
                "sentiment_label": sentiment_label,
                "sentiment_score": rng.random_range(0.5..1.0),
            })
            .to_string(),
        );

        infos.push(SynthCascadeInfo {
            cascade_id,
            url,
            community,
            label,
            retweeter_count: size,
        });
    }

    events.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

    let events_path = out_dir.join("events.jsonl");
    let mut f = std::fs::File::create(&events_path).map_err(|e| Error::io(&events_path, e))?;
    for (_, _, line) in &events {
        writeln!(f, "{line}").map_err(|e| Error::io(&events_path, e))?;
    }

    let labels_path = out_dir.join("labels.csv");
    let mut f = std::fs::File::create(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    for (url, label) in &label_rows {
        let label_str = match label {
            LabelClass::Fake => "fake",
            LabelClass::NonFake => "non_fake",
            LabelClass::Unknown => "unknown",
        };
        writeln!(f, "{url},{label_str},synth").map_err(|e| Error::io(&labels_path, e))?;
    }

    let annotations_path = out_dir.join("annotations.jsonl");
    let mut f =
        std::fs::File::create(&annotations_path).map_err(|e| Error::io(&annotations_path, e))?;
    for line in &annotation_lines {
        writeln!(f, "{line}").map_err(|e| Error::io(&annotations_path, e))?;
    }

    Ok(SynthSummary {
        events_path,
        labels_path,
        annotations_path,
        cascades: infos,
        event_count: events.len(),
    })
}
