//! Line-based archive of a crawled graph.
//!
//! ```text
//! H   v1  <query as JSON string>  <config hash>
//! N   <kind>  <id>  <state>  <text>  <estimate>  <feedback>  <final>  <occurrence>  <payload JSON>
//! E   <kind>  <src>  <dst>
//! V   <seq>  <id>
//! END
//! ```
//!
//! Fields are tab separated. Nodes come in id order, edges in
//! `(src, dst, kind)` order and visits in crawl order, so equal graphs give
//! identical bytes. Scores use the shortest decimal that reads back to the
//! same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::crawl::CrawlConfig;
use crate::graph::{CrawlGraph, CrawlState, Edge, EdgeKind, GraphError, Node, NodeId, NodeKind, Payload, ScoreSet};

pub const ARCHIVE_VERSION: &str = "v1";

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("corrupt archive at line {line}: {msg}")]
    CorruptArchive { line: usize, msg: String },
    #[error("unsupported archive version {0:?} (expected {ARCHIVE_VERSION})")]
    VersionMismatch(String),
    #[error("archive breaks a graph invariant: {0}")]
    InvariantViolation(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A graph with the query and configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphArchive {
    pub query: String,
    pub config_hash: String,
    pub graph: CrawlGraph,
}

/// First 16 hex digits of the SHA-256 of the config's TOML form.
pub fn config_hash(config: &CrawlConfig) -> String {
    let digest = Sha256::digest(config.to_toml().as_bytes());
    digest.iter().take(8).fold(String::with_capacity(16), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl GraphArchive {
    pub fn new(query: impl Into<String>, config_hash: impl Into<String>, graph: CrawlGraph) -> Self {
        GraphArchive { query: query.into(), config_hash: config_hash.into(), graph }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let query = serde_json::to_string(&self.query).expect("string serializes");
        let _ = writeln!(out, "H\t{ARCHIVE_VERSION}\t{query}\t{}", self.config_hash);
        for node in self.graph.nodes() {
            let s = node.scores();
            let payload = serde_json::to_string(node.payload()).expect("payload serializes");
            let _ = writeln!(
                out,
                "N\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{payload}",
                node.kind().name(),
                node.id(),
                node.state().name(),
                s.text_score,
                s.estimate_score,
                s.feedback_score,
                s.final_score,
                node.occurrence_count(),
            );
        }
        let mut edges: Vec<&Edge> = self.graph.edges().collect();
        edges.sort();
        for e in edges {
            let _ = writeln!(out, "E\t{}\t{}\t{}", e.kind, e.src, e.dst);
        }
        for (seq, id) in self.graph.visited().iter().enumerate() {
            let _ = writeln!(out, "V\t{seq}\t{id}");
        }
        out.push_str("END\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self, ArchiveError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (query, config_hash) = match lines.next() {
            Some((n, line)) => parse_header(n, line)?,
            None => return Err(corrupt(1, "empty archive")),
        };
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        let mut visited = Vec::new();
        let mut ended = false;
        for (n, line) in lines {
            if ended {
                return Err(corrupt(n, "content after END"));
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields[0] {
                "N" => nodes.push(parse_node(n, &fields)?),
                "E" => edges.push(parse_edge(n, &fields)?),
                "V" => {
                    let [_, seq, id] = fields[..] else {
                        return Err(corrupt(n, "V needs 3 fields"));
                    };
                    if seq.parse::<usize>().ok() != Some(visited.len()) {
                        return Err(corrupt(n, format!("visit sequence {seq:?} out of order")));
                    }
                    visited.push(parse_id(n, id)?);
                }
                "END" if fields.len() == 1 => ended = true,
                other => return Err(corrupt(n, format!("unknown record tag {other:?}"))),
            }
        }
        if !ended {
            return Err(corrupt(text.lines().count(), "missing END (truncated file?)"));
        }
        let graph = CrawlGraph::from_parts(nodes, edges, visited)?;
        Ok(GraphArchive { query, config_hash, graph })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ArchiveError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ArchiveError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn corrupt(line: usize, msg: impl Into<String>) -> ArchiveError {
    ArchiveError::CorruptArchive { line, msg: msg.into() }
}

fn parse_header(n: usize, line: &str) -> Result<(String, String), ArchiveError> {
    let fields: Vec<&str> = line.split('\t').collect();
    match fields[..] {
        ["H", version, query, hash] => {
            if version != ARCHIVE_VERSION {
                return Err(ArchiveError::VersionMismatch(version.to_string()));
            }
            let query: String =
                serde_json::from_str(query).map_err(|e| corrupt(n, format!("query: {e}")))?;
            Ok((query, hash.to_string()))
        }
        ["H", version, ..] if version != ARCHIVE_VERSION => {
            Err(ArchiveError::VersionMismatch(version.to_string()))
        }
        _ => Err(corrupt(n, "bad header")),
    }
}

fn parse_id(n: usize, s: &str) -> Result<NodeId, ArchiveError> {
    s.parse().map_err(|e: GraphError| corrupt(n, e.to_string()))
}

fn parse_f64(n: usize, what: &str, s: &str) -> Result<f64, ArchiveError> {
    let v: f64 = s.parse().map_err(|_| corrupt(n, format!("{what} {s:?} is not a number")))?;
    if !v.is_finite() {
        return Err(corrupt(n, format!("{what} is not finite")));
    }
    Ok(v)
}

fn parse_node(n: usize, fields: &[&str]) -> Result<Node, ArchiveError> {
    let [_, kind, id, state, text, estimate, feedback, final_score, occurrence, payload] = fields[..]
    else {
        return Err(corrupt(n, format!("N needs 10 fields, got {}", fields.len())));
    };
    let kind: NodeKind = kind.parse().map_err(|e: GraphError| corrupt(n, e.to_string()))?;
    let id = parse_id(n, id)?;
    if id.kind() != kind {
        return Err(corrupt(n, format!("kind {kind} does not match id {id}")));
    }
    let state = match state {
        "frontier" => CrawlState::Frontier,
        "visited" => CrawlState::Visited,
        other => return Err(corrupt(n, format!("unknown state {other:?}"))),
    };
    let scores = ScoreSet {
        text_score: parse_f64(n, "text score", text)?,
        estimate_score: parse_f64(n, "estimate", estimate)?,
        feedback_score: parse_f64(n, "feedback", feedback)?,
        final_score: parse_f64(n, "final score", final_score)?,
    };
    let occurrence: u32 =
        occurrence.parse().map_err(|_| corrupt(n, format!("occurrence {occurrence:?}")))?;
    let payload: Payload =
        serde_json::from_str(payload).map_err(|e| corrupt(n, format!("payload: {e}")))?;
    Ok(Node::restore(id, payload, scores, state, occurrence)?)
}

fn parse_edge(n: usize, fields: &[&str]) -> Result<Edge, ArchiveError> {
    let [_, kind, src, dst] = fields[..] else {
        return Err(corrupt(n, format!("E needs 4 fields, got {}", fields.len())));
    };
    let kind: EdgeKind = kind.parse().map_err(|e: GraphError| corrupt(n, e.to_string()))?;
    Ok(Edge::new(kind, parse_id(n, src)?, parse_id(n, dst)?))
}
