//! Directed interaction graph approximating the (unavailable) follower graph.
//!
//! Replies, retweets, quotes, and mentions each add a directed edge from the
//! acting user to the target user, stamped with the interaction time. The
//! multi-graph collapses to simple edges keeping the earliest timestamp.
//! Edge direction (i, j) reads "i follows j"; information flows j -> i.
//!
//! Building is single-writer through [`SocialGraphBuilder`]; the frozen
//! [`SocialGraph`] is immutable, with forward and reverse adjacency for
//! O(deg) neighborhood queries during cascade reconstruction.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{EventKind, EventStore};

#[derive(Debug, Default)]
pub struct SocialGraphBuilder {
    users: Vec<String>,
    index: HashMap<String, u32>,
    edges: HashMap<(u32, u32), i64>,
}

impl SocialGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, user: &str) -> u32 {
        if let Some(&idx) = self.index.get(user) {
            return idx;
        }
        let idx = self.users.len() as u32;
        self.users.push(user.to_string());
        self.index.insert(user.to_string(), idx);
        idx
    }

    pub fn add_node(&mut self, user: &str) {
        self.intern(user);
    }

    /// Record one interaction `actor -> target` at `timestamp`. Self-loops
    /// are dropped; duplicates keep the earliest timestamp.
    pub fn add_interaction(&mut self, actor: &str, target: &str, timestamp: i64) {
        if actor == target {
            return;
        }
        let src = self.intern(actor);
        let dst = self.intern(target);
        self.edges
            .entry((src, dst))
            .and_modify(|t| *t = (*t).min(timestamp))
            .or_insert(timestamp);
    }

    pub fn freeze(self) -> SocialGraph {
        let n = self.users.len();
        let mut forward: Vec<Vec<(u32, i64)>> = vec![Vec::new(); n];
        let mut reverse: Vec<Vec<(u32, i64)>> = vec![Vec::new(); n];
        for (&(src, dst), &ts) in &self.edges {
            forward[src as usize].push((dst, ts));
            reverse[dst as usize].push((src, ts));
        }
        for list in forward.iter_mut().chain(reverse.iter_mut()) {
            list.sort_unstable();
        }
        SocialGraph {
            users: self.users,
            index: self.index,
            forward,
            reverse,
        }
    }
}

/// Frozen directed interaction graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialGraph {
    users: Vec<String>,
    index: HashMap<String, u32>,
    forward: Vec<Vec<(u32, i64)>>,
    reverse: Vec<Vec<(u32, i64)>>,
}

impl SocialGraph {
    pub fn node_count(&self) -> usize {
        self.users.len()
    }

    pub fn edge_count(&self) -> usize {
        self.forward.iter().map(Vec::len).sum()
    }

    pub fn user(&self, idx: u32) -> &str {
        &self.users[idx as usize]
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn node_index(&self, user: &str) -> Option<u32> {
        self.index.get(user).copied()
    }

    /// Outgoing edges of `user` (people they follow), with timestamps.
    pub fn following(&self, idx: u32) -> &[(u32, i64)] {
        &self.forward[idx as usize]
    }

    /// Incoming edges of `user` (their followers), with timestamps.
    pub fn followers(&self, idx: u32) -> &[(u32, i64)] {
        &self.reverse[idx as usize]
    }

    /// Earliest timestamp of the directed edge `src -> dst`, if present.
    pub fn edge_timestamp(&self, src: u32, dst: u32) -> Option<i64> {
        let list = &self.forward[src as usize];
        list.binary_search_by_key(&dst, |&(d, _)| d)
            .ok()
            .map(|pos| list[pos].1)
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, i64)> + '_ {
        self.forward
            .iter()
            .enumerate()
            .flat_map(|(src, list)| list.iter().map(move |&(dst, ts)| (src as u32, dst, ts)))
    }
}

/// Build the interaction graph from a parsed event store.
///
/// Every reply/retweet/quote adds `actor -> referenced user`; every mention
/// (in any event kind, retweets included) adds `actor -> mentioned user`.
pub fn build_interaction_graph(events: &EventStore) -> SocialGraph {
    let mut builder = SocialGraphBuilder::new();
    for event in events.events() {
        if event.kind != EventKind::Original {
            if let Some(target) = &event.ref_user_id {
                builder.add_interaction(&event.user_id, target, event.created_at);
            }
        }
        for mentioned in &event.mentions {
            builder.add_interaction(&event.user_id, mentioned, event.created_at);
        }
    }
    builder.freeze()
}

/// Subgraph induced by `users`: exactly those nodes (isolated allowed) and
/// the edges with both endpoints among them, timestamps preserved.
pub fn induced_subgraph<'a, I>(graph: &SocialGraph, users: I) -> SocialGraph
where
    I: IntoIterator<Item = &'a str>,
{
    let mut builder = SocialGraphBuilder::new();
    let mut wanted: Vec<u32> = Vec::new();
    for user in users {
        builder.add_node(user);
        if let Some(idx) = graph.node_index(user) {
            wanted.push(idx);
        }
    }
    wanted.sort_unstable();
    wanted.dedup();
    let in_set = |idx: u32| wanted.binary_search(&idx).is_ok();
    for &src in &wanted {
        for &(dst, ts) in graph.following(src) {
            if in_set(dst) {
                builder.add_interaction(graph.user(src), graph.user(dst), ts);
            }
        }
    }
    builder.freeze()
}

/// Direction-sensitive edge overlap between an empirical graph and a
/// ground-truth graph over comparable id spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub empirical_edges: usize,
    pub truth_edges: usize,
    pub shared_edges: usize,
    /// None when the empirical graph has no edges (fraction undefined).
    pub fraction: Option<f64>,
}

pub fn compare_to_ground_truth(empirical: &SocialGraph, truth: &SocialGraph) -> OverlapReport {
    let mut shared = 0usize;
    let mut total = 0usize;
    for (src, dst, _) in empirical.edges() {
        total += 1;
        let (src_user, dst_user) = (empirical.user(src), empirical.user(dst));
        if let (Some(ts), Some(td)) = (truth.node_index(src_user), truth.node_index(dst_user)) {
            if truth.edge_timestamp(ts, td).is_some() {
                shared += 1;
            }
        }
    }
    OverlapReport {
        empirical_edges: total,
        truth_edges: truth.edge_count(),
        shared_edges: shared,
        fraction: if total == 0 {
            None
        } else {
            Some(shared as f64 / total as f64)
        },
    }
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"MGSG";
const SNAPSHOT_VERSION: u32 = 1;

/// Write the binary adjacency snapshot.
///
/// Layout (all integers little-endian):
/// `"MGSG"` magic, `u32` version, `u64` node count, per node `u64` name
/// length + UTF-8 bytes, `u64` edge count, per edge `u64` src, `u64` dst,
/// `i64` timestamp. Edges are sorted by (src, dst).
pub fn write_snapshot<W: Write>(graph: &SocialGraph, mut w: W) -> Result<()> {
    let io_err = |e| Error::io("<social snapshot>", e);
    w.write_all(SNAPSHOT_MAGIC).map_err(io_err)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(graph.node_count() as u64).to_le_bytes())
        .map_err(io_err)?;
    for user in &graph.users {
        w.write_all(&(user.len() as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(user.as_bytes()).map_err(io_err)?;
    }
    w.write_all(&(graph.edge_count() as u64).to_le_bytes())
        .map_err(io_err)?;
    for (src, dst, ts) in graph.edges() {
        w.write_all(&(src as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(&(dst as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(&ts.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<SocialGraph> {
    let corrupt = |reason: &str| Error::CorruptArtifact {
        path: "<social snapshot>".into(),
        reason: reason.to_string(),
    };
    let mut read_exact = |buf: &mut [u8]| -> Result<()> {
        r.read_exact(buf)
            .map_err(|e| Error::io("<social snapshot>", e))
    };
    let mut magic = [0u8; 4];
    read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut u32buf = [0u8; 4];
    read_exact(&mut u32buf)?;
    if u32::from_le_bytes(u32buf) != SNAPSHOT_VERSION {
        return Err(corrupt("unsupported version"));
    }
    let mut u64buf = [0u8; 8];
    read_exact(&mut u64buf)?;
    let node_count = u64::from_le_bytes(u64buf) as usize;
    let mut builder = SocialGraphBuilder::new();
    let mut names = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        read_exact(&mut u64buf)?;
        let len = u64::from_le_bytes(u64buf) as usize;
        let mut bytes = vec![0u8; len];
        read_exact(&mut bytes)?;
        let name = String::from_utf8(bytes).map_err(|_| corrupt("node name not UTF-8"))?;
        builder.add_node(&name);
        names.push(name);
    }
    read_exact(&mut u64buf)?;
    let edge_count = u64::from_le_bytes(u64buf) as usize;
    for _ in 0..edge_count {
        read_exact(&mut u64buf)?;
        let src = u64::from_le_bytes(u64buf) as usize;
        read_exact(&mut u64buf)?;
        let dst = u64::from_le_bytes(u64buf) as usize;
        let mut i64buf = [0u8; 8];
        read_exact(&mut i64buf)?;
        let ts = i64::from_le_bytes(i64buf);
        if src >= names.len() || dst >= names.len() {
            return Err(corrupt("edge endpoint out of range"));
        }
        builder.add_interaction(&names[src], &names[dst], ts);
    }
    Ok(builder.freeze())
}

/// Write the documented edge-list text format:
/// comment header, `n <user>` node lines, `e <src> <dst> <timestamp>` edge
/// lines, whitespace-separated, one record per line.
pub fn write_edge_list<W: Write>(graph: &SocialGraph, mut w: W) -> Result<()> {
    let io_err = |e| Error::io("<edge list>", e);
    writeln!(w, "# social interaction graph v1").map_err(io_err)?;
    writeln!(w, "# nodes={} edges={}", graph.node_count(), graph.edge_count()).map_err(io_err)?;
    for user in &graph.users {
        writeln!(w, "n {user}").map_err(io_err)?;
    }
    for (src, dst, ts) in graph.edges() {
        writeln!(w, "e {} {} {}", graph.user(src), graph.user(dst), ts).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_edge_list<R: BufRead>(r: R) -> Result<SocialGraph> {
    let mut builder = SocialGraphBuilder::new();
    for line in r.lines() {
        let line = line.map_err(|e| Error::io("<edge list>", e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("n") => {
                let user = parts.next().ok_or_else(|| Error::Other("node line missing id".into()))?;
                builder.add_node(user);
            }
            Some("e") => {
                let src = parts.next();
                let dst = parts.next();
                let ts = parts.next().and_then(|t| t.parse::<i64>().ok());
                match (src, dst, ts) {
                    (Some(src), Some(dst), Some(ts)) => builder.add_interaction(src, dst, ts),
                    _ => return Err(Error::Other(format!("bad edge line: {line}"))),
                }
            }
            _ => return Err(Error::Other(format!("bad edge-list line: {line}"))),
        }
    }
    Ok(builder.freeze())
}

pub fn read_edge_list_from_path(path: &Path) -> Result<SocialGraph> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_edge_list(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_events, ParseOptions, SchemaConfig};
    use proptest::prelude::*;

    fn event_line(id: &str, user: &str, ts: i64, kind: &str, refs: Option<(&str, &str)>, mentions: &[&str]) -> String {
        let mut obj = serde_json::json!({
            "tweet_id": id, "user_id": user, "created_at": ts, "kind": kind,
            "mentions": mentions, "urls": [],
        });
        if let Some((rt, ru)) = refs {
            obj["ref_tweet_id"] = rt.into();
            obj["ref_user_id"] = ru.into();
        }
        obj.to_string()
    }

    fn store_from(lines: &[String]) -> EventStore {
        parse_events(
            lines.join("\n").as_bytes(),
            &SchemaConfig::default(),
            &ParseOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn reply_adds_follower_edge() {
        let store = store_from(&[event_line("t1", "i", 100, "reply", Some(("t0", "j")), &[])]);
        let g = build_interaction_graph(&store);
        let (i, j) = (g.node_index("i").unwrap(), g.node_index("j").unwrap());
        assert_eq!(g.edge_timestamp(i, j), Some(100));
        assert_eq!(g.edge_timestamp(j, i), None);
    }

    #[test]
    fn earliest_timestamp_wins_across_interaction_kinds() {
        let store = store_from(&[
            event_line("t1", "i", 100, "retweet", Some(("t0", "j")), &[]),
            event_line("t2", "i", 200, "original", None, &["j"]),
        ]);
        let g = build_interaction_graph(&store);
        let (i, j) = (g.node_index("i").unwrap(), g.node_index("j").unwrap());
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_timestamp(i, j), Some(100));
    }

    #[test]
    fn self_mention_adds_no_edge() {
        let store = store_from(&[event_line("t1", "i", 100, "original", None, &["i"])]);
        let g = build_interaction_graph(&store);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn induced_identity_and_empty() {
        let store = store_from(&[
            event_line("t1", "a", 1, "reply", Some(("t0", "b")), &[]),
            event_line("t2", "b", 2, "reply", Some(("t0", "c")), &[]),
        ]);
        let g = build_interaction_graph(&store);
        let all: Vec<&str> = g.users().iter().map(String::as_str).collect();
        let identity = induced_subgraph(&g, all);
        assert_eq!(identity.edge_count(), g.edge_count());
        assert_eq!(identity.node_count(), g.node_count());
        let empty = induced_subgraph(&g, std::iter::empty());
        assert_eq!(empty.node_count(), 0);
        assert_eq!(empty.edge_count(), 0);
    }

    #[test]
    fn induced_triangle_keeps_single_edge() {
        // a -> b -> c -> a; restricting to {a, b} leaves exactly a -> b.
        let store = store_from(&[
            event_line("t1", "a", 1, "reply", Some(("t0", "b")), &[]),
            event_line("t2", "b", 2, "reply", Some(("t0", "c")), &[]),
            event_line("t3", "c", 3, "reply", Some(("t0", "a")), &[]),
        ]);
        let g = build_interaction_graph(&store);
        let sub = induced_subgraph(&g, ["a", "b"]);
        assert_eq!(sub.node_count(), 2);
        assert_eq!(sub.edge_count(), 1);
        let (a, b) = (sub.node_index("a").unwrap(), sub.node_index("b").unwrap());
        assert_eq!(sub.edge_timestamp(a, b), Some(1));
    }

    #[test]
    fn overlap_identical_and_disjoint() {
        let store = store_from(&[event_line("t1", "a", 1, "reply", Some(("t0", "b")), &[])]);
        let g = build_interaction_graph(&store);
        let report = compare_to_ground_truth(&g, &g);
        assert_eq!(report.fraction, Some(1.0));

        let other = store_from(&[event_line("t1", "x", 1, "reply", Some(("t0", "y")), &[])]);
        let h = build_interaction_graph(&other);
        assert_eq!(compare_to_ground_truth(&g, &h).fraction, Some(0.0));

        let empty = SocialGraphBuilder::new().freeze();
        assert_eq!(compare_to_ground_truth(&empty, &g).fraction, None);
    }

    #[test]
    fn snapshot_round_trip() {
        let store = store_from(&[
            event_line("t1", "a", 1, "reply", Some(("t0", "b")), &[]),
            event_line("t2", "b", 2, "retweet", Some(("t0", "c")), &["a"]),
        ]);
        let g = build_interaction_graph(&store);
        let mut buf = Vec::new();
        write_snapshot(&g, &mut buf).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn edge_list_round_trip() {
        let store = store_from(&[event_line("t1", "a", 5, "reply", Some(("t0", "b")), &[])]);
        let g = build_interaction_graph(&store);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    proptest! {
        // Earliest-wins collapsing makes event order irrelevant and caps the
        // edge count by the interaction count.
        #[test]
        fn build_is_permutation_invariant(
            interactions in proptest::collection::vec((0u8..6, 0u8..6, 0i64..50), 1..40),
            order in Just((0usize..40).collect::<Vec<_>>()).prop_shuffle(),
        ) {
            let lines: Vec<String> = interactions
                .iter()
                .enumerate()
                .map(|(k, &(a, b, ts))| {
                    event_line(&format!("t{k}"), &format!("u{a}"), ts, "reply",
                               Some(("root", &format!("u{b}"))), &[])
                })
                .collect();
            let permuted: Vec<String> = order
                .iter()
                .filter(|&&i| i < lines.len())
                .map(|&i| lines[i].clone())
                .collect();
            let g1 = build_interaction_graph(&store_from(&lines));
            let g2 = build_interaction_graph(&store_from(&permuted));
            let mut e1: Vec<(String, String, i64)> = g1.edges()
                .map(|(s, d, t)| (g1.user(s).to_string(), g1.user(d).to_string(), t)).collect();
            let mut e2: Vec<(String, String, i64)> = g2.edges()
                .map(|(s, d, t)| (g2.user(s).to_string(), g2.user(d).to_string(), t)).collect();
            e1.sort();
            e2.sort();
            prop_assert_eq!(e1, e2);
            // "ref_user_id != user" isn't guaranteed by generation; self loops drop.
            prop_assert!(g1.edge_count() <= interactions.len());
        }

        // users1 ⊆ users2 implies the induced edge set is a subset.
        #[test]
        fn induced_subgraph_is_monotone(
            edges in proptest::collection::vec((0u8..8, 0u8..8), 1..30),
            split in 0usize..8,
        ) {
            let mut builder = SocialGraphBuilder::new();
            for i in 0..8u8 {
                builder.add_node(&format!("u{i}"));
            }
            for (k, &(a, b)) in edges.iter().enumerate() {
                builder.add_interaction(&format!("u{a}"), &format!("u{b}"), k as i64);
            }
            let g = builder.freeze();
            let small: Vec<String> = (0..split).map(|i| format!("u{i}")).collect();
            let large: Vec<String> = (0..8).map(|i| format!("u{i}")).collect();
            let gs = induced_subgraph(&g, small.iter().map(String::as_str));
            let gl = induced_subgraph(&g, large.iter().map(String::as_str));
            for (s, d, t) in gs.edges() {
                let (su, du) = (gs.user(s), gs.user(d));
                let (ls, ld) = (gl.node_index(su).unwrap(), gl.node_index(du).unwrap());
                prop_assert_eq!(gl.edge_timestamp(ls, ld), Some(t));
            }
        }
    }
}
