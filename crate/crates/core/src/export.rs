//! Meta-graph exports: GraphML, DOT (fake nodes red, non-fake green), a
//! plain edge list, and a compact binary snapshot.
//!
//! All writers emit nodes and edges in index order, so identical graphs
//! produce byte-identical files.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::metagraph::{MetaEdge, MetaGraph, MetaNode, NodeLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    GraphMl,
    Dot,
    EdgeList,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "graphml" => Ok(ExportFormat::GraphMl),
            "dot" => Ok(ExportFormat::Dot),
            "edgelist" | "edge-list" => Ok(ExportFormat::EdgeList),
            other => Err(Error::Unknown {
                what: "export format",
                value: other.to_string(),
            }),
        }
    }
}

pub fn export_graph<W: Write>(graph: &MetaGraph, format: ExportFormat, w: W) -> Result<()> {
    match format {
        ExportFormat::GraphMl => write_graphml(graph, w),
        ExportFormat::Dot => write_dot(graph, w),
        ExportFormat::EdgeList => write_edge_list(graph, w),
    }
}

fn label_str(label: NodeLabel) -> &'static str {
    match label {
        NodeLabel::Fake => "fake",
        NodeLabel::NonFake => "non_fake",
        NodeLabel::Unlabeled => "unlabeled",
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn write_graphml<W: Write>(graph: &MetaGraph, mut w: W) -> Result<()> {
    let io_err = |e| Error::io("<graphml>", e);
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#).map_err(io_err)?;
    writeln!(
        w,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#
    )
    .map_err(io_err)?;
    writeln!(w, r#"  <key id="label" for="node" attr.name="label" attr.type="string"/>"#)
        .map_err(io_err)?;
    writeln!(
        w,
        r#"  <key id="feature_len" for="node" attr.name="feature_len" attr.type="int"/>"#
    )
    .map_err(io_err)?;
    writeln!(
        w,
        r#"  <key id="weight" for="edge" attr.name="weight" attr.type="int"/>"#
    )
    .map_err(io_err)?;
    writeln!(
        w,
        r#"  <key id="graph_sim" for="edge" attr.name="graph_sim" attr.type="double"/>"#
    )
    .map_err(io_err)?;
    writeln!(
        w,
        r#"  <key id="content_sim" for="edge" attr.name="content_sim" attr.type="double"/>"#
    )
    .map_err(io_err)?;
    writeln!(w, r#"  <graph id="metagraph" edgedefault="undirected">"#).map_err(io_err)?;
    for node in &graph.nodes {
        writeln!(w, r#"    <node id="{}">"#, xml_escape(&node.cascade_id)).map_err(io_err)?;
        writeln!(
            w,
            r#"      <data key="label">{}</data>"#,
            label_str(node.label)
        )
        .map_err(io_err)?;
        writeln!(
            w,
            r#"      <data key="feature_len">{}</data>"#,
            node.features.len()
        )
        .map_err(io_err)?;
        writeln!(w, r#"    </node>"#).map_err(io_err)?;
    }
    for edge in &graph.edges {
        writeln!(
            w,
            r#"    <edge source="{}" target="{}">"#,
            xml_escape(&graph.nodes[edge.a as usize].cascade_id),
            xml_escape(&graph.nodes[edge.b as usize].cascade_id)
        )
        .map_err(io_err)?;
        writeln!(w, r#"      <data key="weight">{}</data>"#, edge.shared_users).map_err(io_err)?;
        writeln!(
            w,
            r#"      <data key="graph_sim">{}</data>"#,
            edge.graph_sim
        )
        .map_err(io_err)?;
        writeln!(
            w,
            r#"      <data key="content_sim">{}</data>"#,
            edge.content_sim
        )
        .map_err(io_err)?;
        writeln!(w, r#"    </edge>"#).map_err(io_err)?;
    }
    writeln!(w, r#"  </graph>"#).map_err(io_err)?;
    writeln!(w, r#"</graphml>"#).map_err(io_err)?;
    Ok(())
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT output; fake nodes are colored red, non-fake green, unlabeled gray.
pub fn write_dot<W: Write>(graph: &MetaGraph, mut w: W) -> Result<()> {
    let io_err = |e| Error::io("<dot>", e);
    writeln!(w, "graph metagraph {{").map_err(io_err)?;
    for node in &graph.nodes {
        let color = match node.label {
            NodeLabel::Fake => "red",
            NodeLabel::NonFake => "green",
            NodeLabel::Unlabeled => "gray",
        };
        writeln!(
            w,
            "  {} [color={color}, style=filled];",
            dot_quote(&node.cascade_id)
        )
        .map_err(io_err)?;
    }
    for edge in &graph.edges {
        writeln!(
            w,
            "  {} -- {} [weight={}, label={}];",
            dot_quote(&graph.nodes[edge.a as usize].cascade_id),
            dot_quote(&graph.nodes[edge.b as usize].cascade_id),
            edge.shared_users,
            edge.shared_users
        )
        .map_err(io_err)?;
    }
    writeln!(w, "}}").map_err(io_err)?;
    Ok(())
}

/// Plain text: `# ...` header, then `cascade_a<TAB>cascade_b<TAB>weight`.
pub fn write_edge_list<W: Write>(graph: &MetaGraph, mut w: W) -> Result<()> {
    let io_err = |e| Error::io("<edge list>", e);
    writeln!(
        w,
        "# metagraph edge list v1: nodes={} edges={}",
        graph.node_count(),
        graph.edge_count()
    )
    .map_err(io_err)?;
    for edge in &graph.edges {
        writeln!(
            w,
            "{}\t{}\t{}",
            graph.nodes[edge.a as usize].cascade_id,
            graph.nodes[edge.b as usize].cascade_id,
            edge.shared_users
        )
        .map_err(io_err)?;
    }
    Ok(())
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"MGMG";
const SNAPSHOT_VERSION: u32 = 1;

/// Compact binary snapshot (little-endian): magic `"MGMG"`, `u32` version,
/// `u64` node count, per node: `u64` id length + UTF-8 id, `u8` label
/// (0 fake, 1 non-fake, 2 unlabeled), `u64` feature length + f64 features;
/// `u64` edge count, per edge: `u64` a, `u64` b, `u32` weight,
/// `f64` graph_sim, `f64` content_sim.
pub fn write_snapshot<W: Write>(graph: &MetaGraph, mut w: W) -> Result<()> {
    let io_err = |e| Error::io("<metagraph snapshot>", e);
    w.write_all(SNAPSHOT_MAGIC).map_err(io_err)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(graph.nodes.len() as u64).to_le_bytes()).map_err(io_err)?;
    for node in &graph.nodes {
        w.write_all(&(node.cascade_id.len() as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(node.cascade_id.as_bytes()).map_err(io_err)?;
        let label = match node.label {
            NodeLabel::Fake => 0u8,
            NodeLabel::NonFake => 1,
            NodeLabel::Unlabeled => 2,
        };
        w.write_all(&[label]).map_err(io_err)?;
        w.write_all(&(node.features.len() as u64).to_le_bytes()).map_err(io_err)?;
        for value in &node.features {
            w.write_all(&value.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.write_all(&(graph.edges.len() as u64).to_le_bytes()).map_err(io_err)?;
    for edge in &graph.edges {
        w.write_all(&(edge.a as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(&(edge.b as u64).to_le_bytes()).map_err(io_err)?;
        w.write_all(&edge.shared_users.to_le_bytes()).map_err(io_err)?;
        w.write_all(&edge.graph_sim.to_le_bytes()).map_err(io_err)?;
        w.write_all(&edge.content_sim.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<MetaGraph> {
    let corrupt = |reason: &str| Error::CorruptArtifact {
        path: "<metagraph snapshot>".into(),
        reason: reason.to_string(),
    };
    let io_err = |e| Error::io("<metagraph snapshot>", e);
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(io_err)?;
    if &b4 != SNAPSHOT_MAGIC {
        return Err(corrupt("bad magic"));
    }
    r.read_exact(&mut b4).map_err(io_err)?;
    if u32::from_le_bytes(b4) != SNAPSHOT_VERSION {
        return Err(corrupt("unsupported version"));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8).map_err(io_err)?;
    let node_count = u64::from_le_bytes(b8) as usize;
    let mut nodes = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        r.read_exact(&mut b8).map_err(io_err)?;
        let len = u64::from_le_bytes(b8) as usize;
        let mut id = vec![0u8; len];
        r.read_exact(&mut id).map_err(io_err)?;
        let cascade_id = String::from_utf8(id).map_err(|_| corrupt("node id not UTF-8"))?;
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b1).map_err(io_err)?;
        let label = match b1[0] {
            0 => NodeLabel::Fake,
            1 => NodeLabel::NonFake,
            2 => NodeLabel::Unlabeled,
            _ => return Err(corrupt("unknown label code")),
        };
        r.read_exact(&mut b8).map_err(io_err)?;
        let feature_len = u64::from_le_bytes(b8) as usize;
        let mut features = vec![0.0f64; feature_len];
        for value in &mut features {
            r.read_exact(&mut b8).map_err(io_err)?;
            *value = f64::from_le_bytes(b8);
        }
        nodes.push(MetaNode {
            cascade_id,
            features,
            label,
        });
    }
    r.read_exact(&mut b8).map_err(io_err)?;
    let edge_count = u64::from_le_bytes(b8) as usize;
    let mut edges = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        r.read_exact(&mut b8).map_err(io_err)?;
        let a = u64::from_le_bytes(b8) as u32;
        r.read_exact(&mut b8).map_err(io_err)?;
        let b = u64::from_le_bytes(b8) as u32;
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(io_err)?;
        let shared_users = u32::from_le_bytes(b4);
        r.read_exact(&mut b8).map_err(io_err)?;
        let graph_sim = f64::from_le_bytes(b8);
        r.read_exact(&mut b8).map_err(io_err)?;
        let content_sim = f64::from_le_bytes(b8);
        edges.push(MetaEdge {
            a,
            b,
            shared_users,
            graph_sim,
            content_sim,
        });
    }
    Ok(MetaGraph { nodes, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metagraph::test_support::graph_with_edges;

    fn sample_graph() -> MetaGraph {
        let mut g = graph_with_edges(2, &[(0, 1, 3)]);
        g.nodes[0].label = NodeLabel::Fake;
        g.nodes[1].label = NodeLabel::NonFake;
        g
    }

    #[test]
    fn graphml_has_expected_element_counts() {
        let mut buf = Vec::new();
        write_graphml(&sample_graph(), &mut buf).unwrap();
        let xml = String::from_utf8(buf).unwrap();
        assert_eq!(xml.matches("<node ").count(), 2);
        assert_eq!(xml.matches("<edge ").count(), 1);
        assert!(xml.contains(r#"<data key="weight">3</data>"#));
    }

    #[test]
    fn empty_graph_exports_are_valid_documents() {
        let empty = MetaGraph::default();
        let mut buf = Vec::new();
        write_graphml(&empty, &mut buf).unwrap();
        let xml = String::from_utf8(buf).unwrap();
        assert!(xml.contains("</graphml>"));
        let mut buf = Vec::new();
        write_dot(&empty, &mut buf).unwrap();
        let dot = String::from_utf8(buf).unwrap();
        assert!(dot.starts_with("graph metagraph {"));
        assert!(dot.trim_end().ends_with('}'));
    }

    #[test]
    fn dot_colors_labels() {
        let mut buf = Vec::new();
        write_dot(&sample_graph(), &mut buf).unwrap();
        let dot = String::from_utf8(buf).unwrap();
        assert!(dot.contains("color=red"));
        assert!(dot.contains("color=green"));
        assert!(dot.contains("\"c0\" -- \"c1\""));
    }

    /// Minimal DOT grammar checker for the emitted subset:
    /// `graph NAME {` then node statements `"id" [k=v, ...];`, edge
    /// statements `"a" -- "b" [k=v, ...];`, and a closing `}`.
    fn check_dot_grammar(text: &str) -> std::result::Result<(), String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| "empty document".to_string())?;
        if !(header.starts_with("graph ") && header.trim_end().ends_with('{')) {
            return Err(format!("bad header: {header}"));
        }
        let mut closed = false;
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "}" {
                closed = true;
                continue;
            }
            if closed {
                return Err(format!("statement after closing brace: {line}"));
            }
            if !line.ends_with(';') {
                return Err(format!("statement missing semicolon: {line}"));
            }
            let statement = &line[..line.len() - 1];
            let (ids_part, attrs) = match statement.find('[') {
                Some(pos) => {
                    if !statement.ends_with(']') {
                        return Err(format!("unterminated attribute list: {line}"));
                    }
                    (&statement[..pos], &statement[pos + 1..statement.len() - 1])
                }
                None => (statement, ""),
            };
            for attr in attrs.split(',').filter(|a| !a.trim().is_empty()) {
                if !attr.contains('=') {
                    return Err(format!("attribute without '=': {attr}"));
                }
            }
            // Tokenize: quoted strings (with backslash escapes) and `--`.
            let mut tokens: Vec<String> = Vec::new();
            let mut chars = ids_part.chars().peekable();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    chars.next();
                } else if c == '"' {
                    chars.next();
                    let mut value = String::new();
                    let mut terminated = false;
                    while let Some(inner) = chars.next() {
                        match inner {
                            '\\' => {
                                chars.next().ok_or_else(|| "dangling escape".to_string())?;
                            }
                            '"' => {
                                terminated = true;
                                break;
                            }
                            other => value.push(other),
                        }
                    }
                    if !terminated {
                        return Err(format!("unterminated quote in: {line}"));
                    }
                    tokens.push(format!("<id:{value}>"));
                } else if c == '-' {
                    chars.next();
                    if chars.next() != Some('-') {
                        return Err(format!("stray dash in: {line}"));
                    }
                    tokens.push("--".into());
                } else {
                    return Err(format!("unexpected character {c:?} in: {line}"));
                }
            }
            let is_id = |t: &String| t.starts_with("<id:");
            match tokens.as_slice() {
                [node] if is_id(node) => {}
                [a, op, b] if is_id(a) && op == "--" && is_id(b) => {}
                other => return Err(format!("unparsable statement: {other:?}")),
            }
        }
        if !closed {
            return Err("missing closing brace".into());
        }
        Ok(())
    }

    #[test]
    fn dot_export_reparses_under_grammar_checker() {
        let mut graph = graph_with_edges(4, &[(0, 1, 2), (1, 2, 5), (0, 3, 1)]);
        graph.nodes[0].label = NodeLabel::Fake;
        graph.nodes[2].label = NodeLabel::NonFake;
        graph.nodes[1].cascade_id = "odd \"quoted\" id".into();
        let mut buf = Vec::new();
        write_dot(&graph, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        check_dot_grammar(&text).unwrap();

        let mut empty_buf = Vec::new();
        write_dot(&MetaGraph::default(), &mut empty_buf).unwrap();
        check_dot_grammar(&String::from_utf8(empty_buf).unwrap()).unwrap();
    }

    #[test]
    fn snapshot_round_trip() {
        let mut g = sample_graph();
        g.nodes[0].features = vec![1.5, -2.25, 0.0];
        g.edges[0].graph_sim = 0.75;
        let mut buf = Vec::new();
        write_snapshot(&g, &mut buf).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn exports_are_deterministic() {
        let g = sample_graph();
        for format in [ExportFormat::GraphMl, ExportFormat::Dot, ExportFormat::EdgeList] {
            let mut a = Vec::new();
            let mut b = Vec::new();
            export_graph(&g, format, &mut a).unwrap();
            export_graph(&g, format, &mut b).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unknown_format_is_an_error() {
        assert!("svg".parse::<ExportFormat>().is_err());
    }
}
