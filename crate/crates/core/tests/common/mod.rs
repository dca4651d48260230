//! Oracles and generators shared by the property and acceptance suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;

use smartcrawl::enrich::{builtin_sources, enrich, EnrichedQuery, KeywordSource, DEFAULT_ALPHA};
use smartcrawl::graph::{CrawlGraph, Edge, EdgeKind, Node, NodeId, NodeKind, Payload};
use smartcrawl::text::{normalize, Lexicon, DEFAULT_LEXICON};

pub fn builtin_query(query: &str) -> EnrichedQuery {
    let sources = builtin_sources(query).expect("bundled query");
    let refs: Vec<&dyn KeywordSource> = sources.iter().map(|s| s as &dyn KeywordSource).collect();
    enrich(&refs, query, DEFAULT_ALPHA).expect("enrichment succeeds")
}

/// Word similarities read straight from the `R` lines of the bundled
/// lexicon file, stored in both directions.
pub fn raw_similarities() -> HashMap<(String, String), f64> {
    let mut out = HashMap::new();
    for line in DEFAULT_LEXICON.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() == 4 && f[0] == "R" {
            let s: f64 = f[3].parse().unwrap();
            out.insert((f[1].to_string(), f[2].to_string()), s);
            out.insert((f[2].to_string(), f[1].to_string()), s);
        }
    }
    out
}

/// Words that survive normalization unchanged: all related words of the
/// lexicon plus some filler.
pub fn stable_words(lexicon: &Lexicon) -> Vec<String> {
    let mut words: Vec<String> = raw_similarities().keys().map(|(a, _)| a.clone()).collect();
    words.extend(["speech", "pizza", "meets", "green", "today", "city"].map(String::from));
    words.sort();
    words.dedup();
    words.retain(|w| normalize(w, lexicon).tokens() == [w.clone()]);
    words
}

/// Brute-force keyword scoring: a keyword counts once if its tokens occur
/// contiguously in the tweet, or if any tweet token equals or is similar
/// enough to any keyword token.
pub fn oracle_text_score(
    tweet: &[String],
    keywords: &[(Vec<String>, f64)],
    sims: &HashMap<(String, String), f64>,
    theta: f64,
) -> f64 {
    let mut total = 0.0;
    for (kw, w) in keywords {
        let mut lexical = false;
        if !kw.is_empty() && kw.len() <= tweet.len() {
            for start in 0..=tweet.len() - kw.len() {
                if (0..kw.len()).all(|i| tweet[start + i] == kw[i]) {
                    lexical = true;
                }
            }
        }
        let mut semantic = false;
        for t in tweet {
            for k in kw {
                let s = if t == k { 1.0 } else { sims.get(&(t.clone(), k.clone())).copied().unwrap_or(0.0) };
                if s >= theta {
                    semantic = true;
                }
            }
        }
        if lexical || semantic {
            total += w;
        }
    }
    total
}

/// Selection probabilities recomputed directly from the definition.
pub fn oracle_probabilities(x: &[f64], p: f64) -> Vec<f64> {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|xi| ((xi / lo) * p + (hi / xi) * (1.0 - p)).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

/// A frontier of distinct tweet ids with scores on a 0.01 grid in [0.1, 10].
pub fn arb_frontier(max_len: usize) -> impl Strategy<Value = Vec<(NodeId, f64)>> {
    prop::collection::btree_map(0u32..10_000, 10u32..=1000, 1..=max_len).prop_map(|m| {
        m.into_iter()
            .map(|(id, s)| (NodeId::tweet(format!("{id}")).unwrap(), f64::from(s) / 100.0))
            .collect()
    })
}

/// Highest score, smallest id among ties.
pub fn oracle_argmax(frontier: &[(NodeId, f64)]) -> NodeId {
    let best = frontier.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    frontier.iter().filter(|(_, s)| *s == best).map(|(id, _)| id.clone()).min().unwrap()
}

/// Lowest score, smallest id among ties.
pub fn oracle_argmin(frontier: &[(NodeId, f64)]) -> NodeId {
    let worst = frontier.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
    frontier.iter().filter(|(_, s)| *s == worst).map(|(id, _)| id.clone()).min().unwrap()
}

/// Operations that build a random graph through its public API.
#[derive(Debug, Clone)]
pub struct GraphRecipe {
    nodes: Vec<(u8, u8, String)>,
    edges: Vec<(u8, usize, usize)>,
    scores: Vec<(u8, usize, f64)>,
    visits: Vec<usize>,
}

const TEXTS: [&str; 6] = ["solar power", "solar", "wind\tfarm \"quoted\"", "énergie ☀", "rt solar power now", ""];

pub fn arb_recipe() -> impl Strategy<Value = GraphRecipe> {
    let node = (0u8..3, 0u8..6, "[a-z0-9_]{1,6}");
    (
        prop::collection::vec(node, 0..25),
        prop::collection::vec((0u8..8, 0usize..25, 0usize..25), 0..40),
        prop::collection::vec((0u8..4, 0usize..25, -5.0f64..5.0), 0..30),
        prop::collection::vec(0usize..25, 0..25),
    )
        .prop_map(|(nodes, edges, scores, visits)| GraphRecipe { nodes, edges, scores, visits })
}

/// Applies a recipe, skipping operations the graph rejects.
pub fn build_graph(r: &GraphRecipe) -> CrawlGraph {
    let mut g = CrawlGraph::new();
    let mut ids = Vec::new();
    for (kind, text, name) in &r.nodes {
        let kind = NodeKind::ALL[*kind as usize];
        let id = NodeId::new(kind, name.clone()).unwrap();
        let payload = match kind {
            NodeKind::Tweet => Payload::Tweet {
                text: TEXTS[*text as usize].to_string(),
                author: (*text % 2 == 0).then(|| name.clone()),
            },
            NodeKind::User => Payload::User { screen_name: format!("@{name}") },
            NodeKind::Hashtag => Payload::Hashtag { tag: name.clone() },
        };
        if g.add_node(Node::new(id.clone(), payload).unwrap()).is_ok() {
            ids.push(id);
        }
    }
    if ids.is_empty() {
        return g;
    }
    let pick = |i: usize| ids[i % ids.len()].clone();
    for (kind, a, b) in &r.edges {
        let _ = g.add_edge(Edge::new(EdgeKind::ALL[*kind as usize], pick(*a), pick(*b)));
    }
    for (op, i, v) in &r.scores {
        let id = pick(*i);
        let _ = match op {
            0 => g.set_text_score(&id, *v),
            1 => g.set_estimate(&id, *v),
            2 => g.add_feedback(&id, *v),
            _ => g.increment_occurrence(&id),
        };
    }
    for i in &r.visits {
        let _ = g.mark_visited(&pick(*i));
    }
    g
}

/// Node-kind histogram.
pub fn kind_counts(g: &CrawlGraph) -> BTreeMap<NodeKind, usize> {
    let mut out = BTreeMap::new();
    for n in g.nodes() {
        *out.entry(n.kind()).or_default() += 1;
    }
    out
}
