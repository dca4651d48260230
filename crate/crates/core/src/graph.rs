//! Heterogeneous social graph: tweets, users and hashtags linked by eight
//! typed relations, plus the frontier/visited bookkeeping of a crawl.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum tweet length in characters.
pub const MAX_TWEET_CHARS: usize = 280;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node {0} already present")]
    DuplicateNode(NodeId),
    #[error("invalid payload: {0}")]
    InvalidPayload(String),
    #[error("edge endpoint {0} is not in the graph")]
    MissingEndpoint(NodeId),
    #[error("edge kind mismatch: {0}")]
    KindMismatch(String),
    #[error("node {0} is not in the frontier")]
    NotInFrontier(NodeId),
    #[error("node {0} was already visited")]
    AlreadyVisited(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("invalid node id: {0}")]
    InvalidId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Tweet,
    User,
    Hashtag,
}

impl NodeKind {
    pub const ALL: [NodeKind; 3] = [NodeKind::Tweet, NodeKind::User, NodeKind::Hashtag];

    /// Single-letter tag used in textual node ids (`t`, `u`, `h`).
    pub fn tag(self) -> char {
        match self {
            NodeKind::Tweet => 't',
            NodeKind::User => 'u',
            NodeKind::Hashtag => 'h',
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "t" => Some(NodeKind::Tweet),
            "u" => Some(NodeKind::User),
            "h" => Some(NodeKind::Hashtag),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Tweet => "tweet",
            NodeKind::User => "user",
            NodeKind::Hashtag => "hashtag",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tweet" => Ok(NodeKind::Tweet),
            "user" => Ok(NodeKind::User),
            "hashtag" => Ok(NodeKind::Hashtag),
            other => Err(GraphError::InvalidId(format!("unknown node kind {other:?}"))),
        }
    }
}

/// Identity of a node: its kind plus the data source's opaque identifier.
///
/// Ordering is by kind first, then by external id. The textual form is
/// `<tag>:<external_id>`, e.g. `t:1042`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId {
    kind: NodeKind,
    external_id: String,
}

impl NodeId {
    /// External ids must be non-empty and free of control characters, so
    /// they survive the tab-separated file formats unescaped.
    pub fn new(kind: NodeKind, external_id: impl Into<String>) -> Result<Self, GraphError> {
        let external_id = external_id.into();
        if external_id.is_empty() {
            return Err(GraphError::InvalidId("empty external id".into()));
        }
        if external_id.chars().any(char::is_control) {
            return Err(GraphError::InvalidId(format!(
                "control character in external id {external_id:?}"
            )));
        }
        Ok(NodeId { kind, external_id })
    }

    pub fn tweet(external_id: impl Into<String>) -> Result<Self, GraphError> {
        Self::new(NodeKind::Tweet, external_id)
    }

    pub fn user(external_id: impl Into<String>) -> Result<Self, GraphError> {
        Self::new(NodeKind::User, external_id)
    }

    pub fn hashtag(external_id: impl Into<String>) -> Result<Self, GraphError> {
        Self::new(NodeKind::Hashtag, external_id)
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn external_id(&self) -> &str {
        &self.external_id
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.tag(), self.external_id)
    }
}

impl FromStr for NodeId {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (tag, ext) = s
            .split_once(':')
            .ok_or_else(|| GraphError::InvalidId(format!("missing kind tag in {s:?}")))?;
        let kind = NodeKind::from_tag(tag)
            .ok_or_else(|| GraphError::InvalidId(format!("unknown kind tag in {s:?}")))?;
        NodeId::new(kind, ext)
    }
}

impl TryFrom<String> for NodeId {
    type Error = GraphError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> String {
        id.to_string()
    }
}

/// Kind-specific node content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Tweet {
        text: String,
        /// External id of the posting user, when known.
        author: Option<String>,
    },
    User {
        screen_name: String,
    },
    Hashtag {
        tag: String,
    },
}

impl Payload {
    pub fn kind(&self) -> NodeKind {
        match self {
            Payload::Tweet { .. } => NodeKind::Tweet,
            Payload::User { .. } => NodeKind::User,
            Payload::Hashtag { .. } => NodeKind::Hashtag,
        }
    }

    pub fn tweet_text(&self) -> Option<&str> {
        match self {
            Payload::Tweet { text, .. } => Some(text),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if let Payload::Tweet { text, .. } = self {
            let n = text.chars().count();
            if n > MAX_TWEET_CHARS {
                return Err(GraphError::InvalidPayload(format!(
                    "tweet text has {n} characters (limit {MAX_TWEET_CHARS})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CrawlState {
    Frontier,
    Visited,
}

impl CrawlState {
    pub fn name(self) -> &'static str {
        match self {
            CrawlState::Frontier => "frontier",
            CrawlState::Visited => "visited",
        }
    }
}

/// Score attributes carried by every node.
///
/// `final_score` is always recomputed from the components, never adjusted
/// incrementally, so it cannot drift.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreSet {
    pub text_score: f64,
    pub estimate_score: f64,
    pub feedback_score: f64,
    pub final_score: f64,
}

impl ScoreSet {
    pub fn final_for(&self, kind: NodeKind, occurrence_count: u32) -> f64 {
        match kind {
            NodeKind::Tweet => self.text_score + self.feedback_score,
            NodeKind::User => self.estimate_score + self.feedback_score,
            NodeKind::Hashtag => {
                self.estimate_score + self.feedback_score + f64::from(occurrence_count)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    id: NodeId,
    payload: Payload,
    scores: ScoreSet,
    state: CrawlState,
    occurrence_count: u32,
}

impl Node {
    /// A fresh frontier node with zeroed scores.
    pub fn new(id: NodeId, payload: Payload) -> Result<Self, GraphError> {
        if id.kind() != payload.kind() {
            return Err(GraphError::InvalidPayload(format!(
                "{} payload for {} id {id}",
                payload.kind(),
                id.kind()
            )));
        }
        payload.validate()?;
        Ok(Node {
            id,
            payload,
            scores: ScoreSet::default(),
            state: CrawlState::Frontier,
            occurrence_count: 0,
        })
    }

    /// Rebuilds a node from stored parts, checking the score invariants.
    pub fn restore(
        id: NodeId,
        payload: Payload,
        scores: ScoreSet,
        state: CrawlState,
        occurrence_count: u32,
    ) -> Result<Self, GraphError> {
        let mut node = Node::new(id, payload)?;
        if node.id.kind() != NodeKind::Hashtag && occurrence_count != 0 {
            return Err(GraphError::InvalidPayload(format!(
                "occurrence count on non-hashtag {}",
                node.id
            )));
        }
        if node.id.kind() != NodeKind::Tweet && scores.text_score != 0.0 {
            return Err(GraphError::InvalidPayload(format!("text score on {}", node.id)));
        }
        if scores.text_score < 0.0 || scores.estimate_score < 0.0 {
            return Err(GraphError::InvalidPayload(format!("negative score on {}", node.id)));
        }
        let expected = scores.final_for(node.id.kind(), occurrence_count);
        if expected.to_bits() != scores.final_score.to_bits() {
            return Err(GraphError::InvalidPayload(format!(
                "final score {} of {} does not match its components ({expected})",
                scores.final_score, node.id
            )));
        }
        node.scores = scores;
        node.state = state;
        node.occurrence_count = occurrence_count;
        Ok(node)
    }

    pub fn id(&self) -> &NodeId {
        &self.id
    }

    pub fn kind(&self) -> NodeKind {
        self.id.kind()
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn scores(&self) -> &ScoreSet {
        &self.scores
    }

    pub fn state(&self) -> CrawlState {
        self.state
    }

    pub fn occurrence_count(&self) -> u32 {
        self.occurrence_count
    }

    fn recompute(&mut self) {
        self.scores.final_score = self.scores.final_for(self.kind(), self.occurrence_count);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    HasHashtag,
    Quotes,
    RepliesTo,
    ReTweets,
    Mentions,
    Favorites,
    Posts,
    Follows,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 8] = [
        EdgeKind::HasHashtag,
        EdgeKind::Quotes,
        EdgeKind::RepliesTo,
        EdgeKind::ReTweets,
        EdgeKind::Mentions,
        EdgeKind::Favorites,
        EdgeKind::Posts,
        EdgeKind::Follows,
    ];

    /// Required (source, destination) kinds.
    pub fn endpoint_kinds(self) -> (NodeKind, NodeKind) {
        use NodeKind::*;
        match self {
            EdgeKind::HasHashtag => (Tweet, Hashtag),
            EdgeKind::Quotes | EdgeKind::RepliesTo | EdgeKind::ReTweets => (Tweet, Tweet),
            EdgeKind::Mentions => (Tweet, User),
            EdgeKind::Favorites | EdgeKind::Posts => (User, Tweet),
            EdgeKind::Follows => (User, User),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::HasHashtag => "has_hashtag",
            EdgeKind::Quotes => "quotes",
            EdgeKind::RepliesTo => "replies_to",
            EdgeKind::ReTweets => "retweets",
            EdgeKind::Mentions => "mentions",
            EdgeKind::Favorites => "favorites",
            EdgeKind::Posts => "posts",
            EdgeKind::Follows => "follows",
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EdgeKind {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EdgeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GraphError::KindMismatch(format!("unknown edge kind {s:?}")))
    }
}

/// A directed typed relation. Field order gives the canonical
/// `(src, dst, kind)` ordering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn new(kind: EdgeKind, src: NodeId, dst: NodeId) -> Self {
        Edge { src, dst, kind }
    }

    /// The endpoint opposite to `id`, if `id` is an endpoint.
    pub fn other(&self, id: &NodeId) -> Option<&NodeId> {
        if &self.src == id {
            Some(&self.dst)
        } else if &self.dst == id {
            Some(&self.src)
        } else {
            None
        }
    }

    /// Endpoint-kind typing only; text invariants need the payloads.
    pub fn check_kinds(&self) -> Result<(), GraphError> {
        let (src_kind, dst_kind) = self.kind.endpoint_kinds();
        if self.src.kind() != src_kind || self.dst.kind() != dst_kind {
            return Err(GraphError::KindMismatch(format!(
                "{} requires {src_kind} -> {dst_kind}, got {} -> {}",
                self.kind, self.src, self.dst
            )));
        }
        if self.src == self.dst {
            return Err(GraphError::KindMismatch(format!("self-loop on {}", self.src)));
        }
        Ok(())
    }
}

/// Checks the text invariants that retweet and quote edges impose.
pub fn check_edge_texts(kind: EdgeKind, src: &Payload, dst: &Payload) -> Result<(), GraphError> {
    let (Some(src_text), Some(dst_text)) = (src.tweet_text(), dst.tweet_text()) else {
        return Ok(());
    };
    match kind {
        EdgeKind::ReTweets if src_text != dst_text => Err(GraphError::KindMismatch(
            "retweet text differs from the origin tweet".into(),
        )),
        EdgeKind::Quotes if !src_text.contains(dst_text) => Err(GraphError::KindMismatch(
            "quoting tweet does not contain the quoted text".into(),
        )),
        _ => Ok(()),
    }
}

/// The crawled subgraph together with its frontier and visit order.
#[derive(Debug, Clone, Default)]
pub struct CrawlGraph {
    nodes: BTreeMap<NodeId, Node>,
    edges: BTreeSet<Edge>,
    frontier: BTreeSet<NodeId>,
    visited: Vec<NodeId>,
    // Incident edges per node, ordered by (kind, opposite endpoint).
    incidence: BTreeMap<NodeId, BTreeSet<(EdgeKind, NodeId, Edge)>>,
}

impl PartialEq for CrawlGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges && self.visited == other.visited
    }
}

impl CrawlGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: Node) -> Result<(), GraphError> {
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateNode(node.id.clone()));
        }
        node.payload.validate()?;
        let id = node.id.clone();
        match node.state {
            CrawlState::Frontier => {
                self.frontier.insert(id.clone());
            }
            CrawlState::Visited => self.visited.push(id.clone()),
        }
        self.nodes.insert(id, node);
        Ok(())
    }

    /// Inserts an edge; returns `false` when it was already present.
    pub fn add_edge(&mut self, edge: Edge) -> Result<bool, GraphError> {
        edge.check_kinds()?;
        let src = self
            .nodes
            .get(&edge.src)
            .ok_or_else(|| GraphError::MissingEndpoint(edge.src.clone()))?;
        let dst = self
            .nodes
            .get(&edge.dst)
            .ok_or_else(|| GraphError::MissingEndpoint(edge.dst.clone()))?;
        check_edge_texts(edge.kind, &src.payload, &dst.payload)?;
        if !self.edges.insert(edge.clone()) {
            return Ok(false);
        }
        self.incidence
            .entry(edge.src.clone())
            .or_default()
            .insert((edge.kind, edge.dst.clone(), edge.clone()));
        self.incidence
            .entry(edge.dst.clone())
            .or_default()
            .insert((edge.kind, edge.src.clone(), edge));
        Ok(true)
    }

    pub fn mark_visited(&mut self, id: &NodeId) -> Result<(), GraphError> {
        let node = self
            .nodes
            .get_mut(id)
            .ok_or_else(|| GraphError::UnknownNode(id.clone()))?;
        if node.state == CrawlState::Visited {
            return Err(GraphError::AlreadyVisited(id.clone()));
        }
        if !self.frontier.remove(id) {
            return Err(GraphError::NotInFrontier(id.clone()));
        }
        node.state = CrawlState::Visited;
        self.visited.push(id.clone());
        Ok(())
    }

    /// All edges incident to `id` with the opposite endpoint, sorted by edge
    /// kind then by the opposite endpoint's id.
    pub fn neighbors(&self, id: &NodeId) -> Result<Vec<(Edge, NodeId)>, GraphError> {
        if !self.nodes.contains_key(id) {
            return Err(GraphError::UnknownNode(id.clone()));
        }
        Ok(self
            .incidence
            .get(id)
            .map(|set| {
                set.iter()
                    .map(|(_, other, edge)| (edge.clone(), other.clone()))
                    .collect()
            })
            .unwrap_or_default())
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn frontier(&self) -> &BTreeSet<NodeId> {
        &self.frontier
    }

    pub fn visited(&self) -> &[NodeId] {
        &self.visited
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_visited(&self, id: &NodeId) -> bool {
        self.nodes
            .get(id)
            .is_some_and(|n| n.state == CrawlState::Visited)
    }

    fn node_mut(&mut self, id: &NodeId) -> Result<&mut Node, GraphError> {
        self.nodes
            .get_mut(id)
            .ok_or_else(|| GraphError::UnknownNode(id.clone()))
    }

    /// Sets a tweet's measured text score.
    pub fn set_text_score(&mut self, id: &NodeId, score: f64) -> Result<(), GraphError> {
        let node = self.node_mut(id)?;
        if node.kind() != NodeKind::Tweet {
            return Err(GraphError::InvalidPayload(format!("text score on {id}")));
        }
        node.scores.text_score = score.max(0.0);
        node.recompute();
        Ok(())
    }

    pub fn set_estimate(&mut self, id: &NodeId, estimate: f64) -> Result<(), GraphError> {
        let node = self.node_mut(id)?;
        node.scores.estimate_score = estimate.max(0.0);
        node.recompute();
        Ok(())
    }

    pub fn add_feedback(&mut self, id: &NodeId, delta: f64) -> Result<(), GraphError> {
        let node = self.node_mut(id)?;
        node.scores.feedback_score += delta;
        node.recompute();
        Ok(())
    }

    pub fn increment_occurrence(&mut self, id: &NodeId) -> Result<(), GraphError> {
        let node = self.node_mut(id)?;
        if node.kind() != NodeKind::Hashtag {
            return Err(GraphError::InvalidPayload(format!("occurrence count on {id}")));
        }
        node.occurrence_count += 1;
        node.recompute();
        Ok(())
    }

    /// Rebuilds a graph from stored nodes, edges and visit order, then checks
    /// every invariant.
    pub fn from_parts(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        visited: Vec<NodeId>,
    ) -> Result<Self, GraphError> {
        let mut g = CrawlGraph::new();
        for node in nodes {
            g.add_node(node)?;
        }
        g.visited = visited;
        for edge in edges {
            g.add_edge(edge)?;
        }
        g.check_invariants()?;
        Ok(g)
    }

    /// Verifies every structural invariant; used after loading from disk.
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        for edge in &self.edges {
            edge.check_kinds()?;
            let src = self
                .nodes
                .get(&edge.src)
                .ok_or_else(|| GraphError::MissingEndpoint(edge.src.clone()))?;
            let dst = self
                .nodes
                .get(&edge.dst)
                .ok_or_else(|| GraphError::MissingEndpoint(edge.dst.clone()))?;
            check_edge_texts(edge.kind, &src.payload, &dst.payload)?;
        }
        let mut seen = BTreeSet::new();
        for id in &self.visited {
            if !seen.insert(id) {
                return Err(GraphError::AlreadyVisited(id.clone()));
            }
            if !self.is_visited(id) {
                return Err(GraphError::NotInFrontier(id.clone()));
            }
        }
        for node in self.nodes.values() {
            let in_frontier = self.frontier.contains(&node.id);
            match node.state {
                CrawlState::Frontier if !in_frontier => {
                    return Err(GraphError::NotInFrontier(node.id.clone()))
                }
                CrawlState::Visited if in_frontier || !seen.contains(&node.id) => {
                    return Err(GraphError::AlreadyVisited(node.id.clone()))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(id: &str, text: &str) -> Node {
        Node::new(
            NodeId::tweet(id).unwrap(),
            Payload::Tweet { text: text.into(), author: None },
        )
        .unwrap()
    }

    fn user(id: &str) -> Node {
        Node::new(
            NodeId::user(id).unwrap(),
            Payload::User { screen_name: format!("@{id}") },
        )
        .unwrap()
    }

    fn hashtag(tag: &str) -> Node {
        Node::new(NodeId::hashtag(tag).unwrap(), Payload::Hashtag { tag: tag.into() }).unwrap()
    }

    #[test]
    fn add_node_to_empty_graph() {
        let mut g = CrawlGraph::new();
        g.add_node(tweet("1", "solar power")).unwrap();
        assert_eq!(g.frontier().len(), 1);
        assert!(g.visited().is_empty());
    }

    #[test]
    fn duplicate_node_rejected() {
        let mut g = CrawlGraph::new();
        g.add_node(user("a")).unwrap();
        assert!(matches!(g.add_node(user("a")), Err(GraphError::DuplicateNode(_))));
        assert_eq!(g.node_count(), 1);
    }

    #[test]
    fn long_tweet_rejected() {
        let text = "x".repeat(281);
        let err = Node::new(NodeId::tweet("1").unwrap(), Payload::Tweet { text, author: None });
        assert!(matches!(err, Err(GraphError::InvalidPayload(_))));
        // 280 multi-byte characters are fine
        let text = "é".repeat(280);
        assert!(Node::new(NodeId::tweet("1").unwrap(), Payload::Tweet { text, author: None }).is_ok());
    }

    #[test]
    fn empty_external_id_rejected() {
        assert!(NodeId::tweet("").is_err());
        assert!(NodeId::user("a\tb").is_err());
    }

    #[test]
    fn edge_to_absent_hashtag_rejected_until_added() {
        let mut g = CrawlGraph::new();
        g.add_node(tweet("1", "solar power #solar")).unwrap();
        let e = Edge::new(
            EdgeKind::HasHashtag,
            NodeId::tweet("1").unwrap(),
            NodeId::hashtag("solar").unwrap(),
        );
        assert!(matches!(g.add_edge(e.clone()), Err(GraphError::MissingEndpoint(_))));
        g.add_node(hashtag("solar")).unwrap();
        assert!(g.add_edge(e).unwrap());
    }

    #[test]
    fn posts_typing() {
        let mut g = CrawlGraph::new();
        g.add_node(user("u")).unwrap();
        g.add_node(tweet("t", "hello")).unwrap();
        let ok = Edge::new(EdgeKind::Posts, NodeId::user("u").unwrap(), NodeId::tweet("t").unwrap());
        assert!(g.add_edge(ok.clone()).unwrap());
        // set semantics
        assert!(!g.add_edge(ok).unwrap());
        assert_eq!(g.edge_count(), 1);
        let bad = Edge::new(EdgeKind::Posts, NodeId::tweet("t").unwrap(), NodeId::user("u").unwrap());
        assert!(matches!(g.add_edge(bad), Err(GraphError::KindMismatch(_))));
        let follows = Edge::new(EdgeKind::Follows, NodeId::tweet("t").unwrap(), NodeId::user("u").unwrap());
        assert!(matches!(g.add_edge(follows), Err(GraphError::KindMismatch(_))));
    }

    #[test]
    fn retweet_and_quote_text_rules() {
        let mut g = CrawlGraph::new();
        g.add_node(tweet("a", "the grid is down")).unwrap();
        g.add_node(tweet("b", "something else")).unwrap();
        g.add_node(tweet("c", "the grid is down")).unwrap();
        g.add_node(tweet("d", "wow: the grid is down")).unwrap();
        let id = |s: &str| NodeId::tweet(s).unwrap();
        let rt_bad = Edge::new(EdgeKind::ReTweets, id("b"), id("a"));
        assert!(matches!(g.add_edge(rt_bad), Err(GraphError::KindMismatch(_))));
        assert!(g.add_edge(Edge::new(EdgeKind::ReTweets, id("c"), id("a"))).unwrap());
        assert!(g.add_edge(Edge::new(EdgeKind::Quotes, id("d"), id("a"))).unwrap());
        let q_bad = Edge::new(EdgeKind::Quotes, id("b"), id("a"));
        assert!(matches!(g.add_edge(q_bad), Err(GraphError::KindMismatch(_))));
    }

    #[test]
    fn mark_visited_cases() {
        let mut g = CrawlGraph::new();
        g.add_node(user("a")).unwrap();
        g.add_node(user("b")).unwrap();
        let a = NodeId::user("a").unwrap();
        let b = NodeId::user("b").unwrap();
        g.mark_visited(&b).unwrap();
        assert_eq!(g.visited(), std::slice::from_ref(&b));
        assert_eq!(g.frontier().iter().collect::<Vec<_>>(), vec![&a]);
        g.mark_visited(&a).unwrap();
        assert!(g.frontier().is_empty());
        assert!(matches!(g.mark_visited(&a), Err(GraphError::AlreadyVisited(_))));
        let z = NodeId::user("z").unwrap();
        assert!(matches!(g.mark_visited(&z), Err(GraphError::UnknownNode(_))));
    }

    #[test]
    fn neighbors_of_isolated_node_is_empty() {
        let mut g = CrawlGraph::new();
        g.add_node(user("a")).unwrap();
        assert!(g.neighbors(&NodeId::user("a").unwrap()).unwrap().is_empty());
        assert!(matches!(
            g.neighbors(&NodeId::user("x").unwrap()),
            Err(GraphError::UnknownNode(_))
        ));
    }

    #[test]
    fn neighbors_count_both_directions() {
        let mut g = CrawlGraph::new();
        g.add_node(tweet("t", "#solar")).unwrap();
        g.add_node(hashtag("solar")).unwrap();
        g.add_node(user("u")).unwrap();
        let t = NodeId::tweet("t").unwrap();
        g.add_edge(Edge::new(EdgeKind::HasHashtag, t.clone(), NodeId::hashtag("solar").unwrap()))
            .unwrap();
        g.add_edge(Edge::new(EdgeKind::Posts, NodeId::user("u").unwrap(), t.clone())).unwrap();
        assert_eq!(g.neighbors(&t).unwrap().len(), 2);
    }

    #[test]
    fn mention_star_sorted_by_external_id() {
        let mut g = CrawlGraph::new();
        g.add_node(tweet("t", "@carol @alice @bob")).unwrap();
        for name in ["carol", "alice", "bob"] {
            g.add_node(user(name)).unwrap();
            g.add_edge(Edge::new(
                EdgeKind::Mentions,
                NodeId::tweet("t").unwrap(),
                NodeId::user(name).unwrap(),
            ))
            .unwrap();
        }
        let got: Vec<String> = g
            .neighbors(&NodeId::tweet("t").unwrap())
            .unwrap()
            .into_iter()
            .map(|(_, n)| n.external_id().to_string())
            .collect();
        assert_eq!(got, vec!["alice", "bob", "carol"]);
    }

    #[test]
    fn final_score_follows_kind_formula() {
        let mut g = CrawlGraph::new();
        g.add_node(tweet("t", "x")).unwrap();
        g.add_node(user("u")).unwrap();
        g.add_node(hashtag("h")).unwrap();
        let (t, u, h) = (
            NodeId::tweet("t").unwrap(),
            NodeId::user("u").unwrap(),
            NodeId::hashtag("h").unwrap(),
        );
        g.set_text_score(&t, 2.5).unwrap();
        g.set_estimate(&t, 9.0).unwrap();
        g.add_feedback(&t, -0.5).unwrap();
        assert_eq!(g.node(&t).unwrap().scores().final_score, 2.0);
        g.set_estimate(&u, 0.8).unwrap();
        g.add_feedback(&u, 0.2).unwrap();
        assert_eq!(g.node(&u).unwrap().scores().final_score, 0.8 + 0.2);
        g.set_estimate(&h, 1.5).unwrap();
        g.increment_occurrence(&h).unwrap();
        g.increment_occurrence(&h).unwrap();
        assert_eq!(g.node(&h).unwrap().scores().final_score, 3.5);
        assert!(g.increment_occurrence(&u).is_err());
        assert!(g.set_text_score(&u, 1.0).is_err());
    }

    #[test]
    fn node_id_text_form() {
        let id: NodeId = "h:energy".parse().unwrap();
        assert_eq!(id, NodeId::hashtag("energy").unwrap());
        assert_eq!(id.to_string(), "h:energy");
        assert!("x:1".parse::<NodeId>().is_err());
        assert!("t".parse::<NodeId>().is_err());
        // external ids may themselves contain ':'
        let id: NodeId = "t:a:b".parse().unwrap();
        assert_eq!(id.external_id(), "a:b");
    }
}
