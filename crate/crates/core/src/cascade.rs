//! Retweet cascade grouping and diffusion-subgraph reconstruction.
//!
//! The platform reports every cascade as a star: all retweeters attached to
//! the root user. Reconstruction enriches the star with edges between
//! retweeters who interacted before retweeting, read off the frozen social
//! graph. Quotes never join cascades; replies never join cascades.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::ingest::{EventKind, EventStore, TweetEvent};
use crate::socialnet::SocialGraph;

/// A root tweet plus its retweets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cascade {
    pub root_tweet: TweetEvent,
    pub root_user: String,
    /// Every retained retweet, in event-store order: (user, timestamp).
    pub retweets: Vec<(String, i64)>,
    /// Expanded URLs of the root tweet.
    pub urls: Vec<String>,
    /// Distinct retweeting users (root excluded).
    pub unique_retweeters: HashSet<String>,
}

impl Cascade {
    pub fn id(&self) -> &str {
        &self.root_tweet.tweet_id
    }

    /// Earliest retweet time per user; the uniqueness and timestamp rules
    /// both use this.
    pub fn earliest_retweet_times(&self) -> HashMap<&str, i64> {
        let mut times: HashMap<&str, i64> = HashMap::new();
        for (user, ts) in &self.retweets {
            times
                .entry(user.as_str())
                .and_modify(|t| *t = (*t).min(*ts))
                .or_insert(*ts);
        }
        times
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStats {
    /// Retweets whose root tweet is absent from the store.
    pub orphan_retweets: usize,
    /// Retweets timestamped before their root; dropped.
    pub time_violations: usize,
    /// Retweets by the root user on their own tweet; dropped.
    pub self_retweets: usize,
    /// Roots filtered out by the retweeter/url thresholds.
    pub filtered_roots: usize,
}

/// Group events into cascades.
///
/// One cascade per original tweet with at least `min_retweeters` distinct
/// retweeters and, when `require_url` is set, at least one URL in the root.
/// Repeat retweets by one user are all retained but count once toward
/// uniqueness. Cascades are returned in root-tweet store order.
pub fn group_cascades(
    events: &EventStore,
    min_retweeters: usize,
    require_url: bool,
) -> (Vec<Cascade>, GroupStats) {
    let mut stats = GroupStats::default();
    let mut retweets_by_root: HashMap<&str, Vec<&TweetEvent>> = HashMap::new();
    for event in events.events() {
        if event.kind != EventKind::Retweet {
            continue;
        }
        let root_id = event.ref_tweet_id.as_deref().expect("validated at parse");
        match events.get(root_id) {
            Some(root) if root.kind == EventKind::Original => {
                retweets_by_root.entry(&root.tweet_id).or_default().push(event);
            }
            _ => stats.orphan_retweets += 1,
        }
    }

    let mut cascades = Vec::new();
    for root in events.events() {
        if root.kind != EventKind::Original {
            continue;
        }
        let mut retweets: Vec<(String, i64)> = Vec::new();
        let mut unique: HashSet<String> = HashSet::new();
        for rt in retweets_by_root.get(root.tweet_id.as_str()).into_iter().flatten() {
            if rt.user_id == root.user_id {
                stats.self_retweets += 1;
                continue;
            }
            if rt.created_at < root.created_at {
                stats.time_violations += 1;
                continue;
            }
            unique.insert(rt.user_id.clone());
            retweets.push((rt.user_id.clone(), rt.created_at));
        }
        if unique.len() < min_retweeters || (require_url && root.urls.is_empty()) {
            if !retweets.is_empty() {
                stats.filtered_roots += 1;
            }
            continue;
        }
        cascades.push(Cascade {
            root_user: root.user_id.clone(),
            urls: root.urls.clone(),
            root_tweet: root.clone(),
            retweets,
            unique_retweeters: unique,
        });
    }
    (cascades, stats)
}

/// How prior interactions qualify as cascade edges.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRule {
    /// A directed edge (a -> b) qualifies when its timestamp precedes the
    /// retweet time of a, the follower-side endpoint. Both orientations are
    /// checked independently.
    #[default]
    FollowerBefore,
    /// Looser reading: an edge in either direction qualifies when it precedes
    /// the retweet time of either endpoint.
    EitherBefore,
}

/// Connected undirected diffusion subgraph of one cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeGraph {
    /// Root tweet id.
    pub cascade_id: String,
    /// Canonical node order: root user first, then retweeters sorted by
    /// (earliest retweet time, user id).
    pub users: Vec<String>,
    /// Undirected deduplicated edges as (low, high) canonical-index pairs.
    pub edges: Vec<(u32, u32)>,
    /// Neighbor lists under canonical indices, each sorted ascending.
    pub adjacency: Vec<Vec<u32>>,
}

impl CascadeGraph {
    pub fn node_count(&self) -> usize {
        self.users.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, node: u32) -> usize {
        self.adjacency[node as usize].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn from_edges(cascade_id: &str, users: Vec<String>, mut edges: Vec<(u32, u32)>) -> Self {
        edges.iter_mut().for_each(|e| {
            if e.0 > e.1 {
                *e = (e.1, e.0);
            }
        });
        edges.sort_unstable();
        edges.dedup();
        edges.retain(|&(a, b)| a != b);
        let mut adjacency = vec![Vec::new(); users.len()];
        for &(a, b) in &edges {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        CascadeGraph {
            cascade_id: cascade_id.to_string(),
            users,
            edges,
            adjacency,
        }
    }

    /// BFS reachability from the root; true when every node is reached.
    pub fn is_connected(&self) -> bool {
        if self.users.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.users.len()];
        let mut queue = std::collections::VecDeque::from([0u32]);
        seen[0] = true;
        let mut count = 1;
        while let Some(node) = queue.pop_front() {
            for &next in &self.adjacency[node as usize] {
                if !seen[next as usize] {
                    seen[next as usize] = true;
                    count += 1;
                    queue.push_back(next);
                }
            }
        }
        count == self.users.len()
    }
}

/// Reconstruct the diffusion subgraph: star edges from the root to every
/// retweeter, plus retweeter pairs whose prior interaction passes the
/// timestamp rule. Deterministic and independent of retweet-list order.
pub fn reconstruct_cascade_graph(
    cascade: &Cascade,
    social: &SocialGraph,
    rule: EdgeRule,
) -> CascadeGraph {
    let times = cascade.earliest_retweet_times();
    let mut retweeters: Vec<(&str, i64)> = times.iter().map(|(&u, &t)| (u, t)).collect();
    retweeters.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));

    let mut users: Vec<String> = Vec::with_capacity(retweeters.len() + 1);
    users.push(cascade.root_user.clone());
    users.extend(retweeters.iter().map(|&(u, _)| u.to_string()));

    let canon: HashMap<&str, u32> = users
        .iter()
        .enumerate()
        .map(|(i, u)| (u.as_str(), i as u32))
        .collect();

    let mut edges: Vec<(u32, u32)> = (1..users.len() as u32).map(|r| (0, r)).collect();

    // Social-relation edges among retweeters: scan each retweeter's outgoing
    // interactions once; the follower side of (a -> b) is a.
    for &(user, user_rt_time) in &retweeters {
        let Some(social_idx) = social.node_index(user) else {
            continue;
        };
        let a = canon[user];
        for &(target_idx, edge_ts) in social.following(social_idx) {
            let target = social.user(target_idx);
            let Some(&b) = canon.get(target) else {
                continue;
            };
            if b == 0 {
                continue; // root edges already present
            }
            let qualifies = match rule {
                EdgeRule::FollowerBefore => edge_ts < user_rt_time,
                EdgeRule::EitherBefore => {
                    let other_rt_time = times[target];
                    edge_ts < user_rt_time.max(other_rt_time)
                }
            };
            if qualifies {
                edges.push((a.min(b), a.max(b)));
            }
        }
    }

    CascadeGraph::from_edges(cascade.id(), users, edges)
}

/// Write one cascade graph as a commented edge list:
/// `# cascade <id> root <root_tweet_id> nodes <n>` then one
/// `user_a<TAB>user_b` line per undirected edge.
pub fn write_cascade_edge_list<W: std::io::Write>(
    graph: &CascadeGraph,
    root_tweet_id: &str,
    mut w: W,
) -> crate::error::Result<()> {
    let io_err = |e| crate::error::Error::io("<cascade edge list>", e);
    writeln!(
        w,
        "# cascade {} root {} nodes {}",
        graph.cascade_id,
        root_tweet_id,
        graph.node_count()
    )
    .map_err(io_err)?;
    for &(a, b) in &graph.edges {
        writeln!(w, "{}\t{}", graph.users[a as usize], graph.users[b as usize]).map_err(io_err)?;
    }
    Ok(())
}
