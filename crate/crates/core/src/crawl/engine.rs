use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    call, seed_hits, select_node, Call, CrawlConfig, CrawlError, CrawlOutcome, EstimateCoefficients,
    LogEntry, StopReason,
};
use crate::api::{NodeRecord, SocialApi};
use crate::enrich::EnrichedQuery;
use crate::graph::{CrawlGraph, Edge, EdgeKind, GraphError, Node, NodeId, NodeKind};
use crate::text::{KeywordMatcher, Lexicon};

/// Coefficient for the neighbor on the other side of `edge` when `visited`
/// is fetched, or `None` when that role is not expanded.
pub fn role_coefficient(
    visited: &NodeId,
    edge: &Edge,
    coefs: &EstimateCoefficients,
    expand_follows: bool,
) -> Option<f64> {
    let outbound = &edge.src == visited;
    let [posting_user, mentioned, replied, quoted, retweeted, retweets, favoriting] = coefs.tweet;
    let [posted, favorite, friends, followers] = coefs.user;
    match (visited.kind(), edge.kind, outbound) {
        (NodeKind::Tweet, EdgeKind::Posts, false) => Some(posting_user),
        (NodeKind::Tweet, EdgeKind::Mentions, true) => Some(mentioned),
        (NodeKind::Tweet, EdgeKind::RepliesTo, true) => Some(replied),
        (NodeKind::Tweet, EdgeKind::Quotes, true) => Some(quoted),
        (NodeKind::Tweet, EdgeKind::ReTweets, true) => Some(retweeted),
        (NodeKind::Tweet, EdgeKind::ReTweets, false) => Some(retweets),
        (NodeKind::Tweet, EdgeKind::Favorites, false) => Some(favoriting),
        (NodeKind::Tweet, EdgeKind::HasHashtag, true) => Some(coefs.hashtag),
        (NodeKind::User, EdgeKind::Posts, true) => Some(posted),
        (NodeKind::User, EdgeKind::Favorites, true) => Some(favorite),
        (NodeKind::User, EdgeKind::Follows, true) if expand_follows => Some(friends),
        (NodeKind::User, EdgeKind::Follows, false) if expand_follows => Some(followers),
        (NodeKind::Hashtag, EdgeKind::HasHashtag, false) => Some(coefs.hashtag_tweets),
        _ => None,
    }
}

/// Raises the estimate of every frontier neighbor of `visited` to at least
/// `visited.final * coefficient` and, when `visited` is a tweet, counts one
/// occurrence for each of its hashtags. Returns the neighbors whose
/// estimates were considered, with their coefficients.
pub fn propagate_estimate(
    graph: &mut CrawlGraph,
    visited: &NodeId,
    coefs: &EstimateCoefficients,
    expand_follows: bool,
) -> Result<Vec<(NodeId, f64)>, GraphError> {
    let source = graph.node(visited).ok_or_else(|| GraphError::UnknownNode(visited.clone()))?;
    let base = source.scores().final_score;
    let mut touched: Vec<(NodeId, f64)> = Vec::new();
    for (edge, neighbor) in graph.neighbors(visited)? {
        let Some(coef) = role_coefficient(visited, &edge, coefs, expand_follows) else {
            continue;
        };
        if visited.kind() == NodeKind::Tweet && edge.kind == EdgeKind::HasHashtag {
            graph.increment_occurrence(&neighbor)?;
        }
        if graph.is_visited(&neighbor) {
            continue;
        }
        let current = graph.node(&neighbor).expect("neighbor exists").scores().estimate_score;
        graph.set_estimate(&neighbor, current.max(base * coef))?;
        match touched.iter_mut().find(|(id, _)| *id == neighbor) {
            Some((_, c)) => *c = c.max(coef),
            None => touched.push((neighbor, coef)),
        }
    }
    Ok(touched)
}

/// Adds `text_score - estimate(tweet)` to the feedback of `parent`.
/// Seeds have no parent, which leaves the graph unchanged.
pub fn apply_feedback(
    graph: &mut CrawlGraph,
    tweet: &NodeId,
    text_score: f64,
    parent: Option<&NodeId>,
) -> Result<f64, GraphError> {
    let node = graph.node(tweet).ok_or_else(|| GraphError::UnknownNode(tweet.clone()))?;
    let Some(parent) = parent else {
        return Ok(0.0);
    };
    let delta = text_score - node.scores().estimate_score;
    graph.add_feedback(parent, delta)?;
    Ok(delta)
}

/// What one iteration did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub selected: NodeId,
    /// False when the API no longer knew the node.
    pub found: bool,
    pub text_score: Option<f64>,
    pub estimate_before: f64,
    pub parent: Option<NodeId>,
    pub feedback_delta: f64,
}

/// A focused crawl in progress.
///
/// Frontier priority is the node's final score, except that a tweet's text
/// is only scored once it is fetched: until then its priority is its
/// estimate plus feedback.
pub struct Crawler<'a, A: SocialApi> {
    api: A,
    config: CrawlConfig,
    lexicon: &'a Lexicon,
    matcher: KeywordMatcher,
    graph: CrawlGraph,
    parents: HashMap<NodeId, NodeId>,
    seed_base: HashMap<NodeId, f64>,
    // frontier node -> visited predecessor -> role coefficient
    contributions: HashMap<NodeId, BTreeMap<NodeId, f64>>,
    rng: ChaCha8Rng,
    started: u64,
    calls_before: u64,
    iterations: usize,
    log: Vec<LogEntry>,
    stop: Option<StopReason>,
}

impl<'a, A: SocialApi> Crawler<'a, A> {
    /// Validates the config and seeds the frontier from one keyword search.
    pub fn new(
        mut api: A,
        enriched: &EnrichedQuery,
        lexicon: &'a Lexicon,
        config: CrawlConfig,
    ) -> Result<Self, CrawlError> {
        config.validate()?;
        let started = api.budget().now();
        let calls_before = api.budget().calls_used();
        let hits = seed_hits(&mut api, enriched, &config, started)?;
        let matcher = KeywordMatcher::new(enriched, lexicon, config.theta);
        let mut graph = CrawlGraph::new();
        let mut seed_base = HashMap::new();
        for hit in hits {
            if graph.contains(&hit.id) {
                continue;
            }
            let text = hit.payload.tweet_text().unwrap_or_default().to_string();
            graph.add_node(Node::new(hit.id.clone(), hit.payload)?)?;
            let score = matcher.score(&text, lexicon);
            graph.set_text_score(&hit.id, score)?;
            graph.set_estimate(&hit.id, score)?;
            seed_base.insert(hit.id, score);
        }
        Ok(Crawler {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            api,
            config,
            lexicon,
            matcher,
            graph,
            parents: HashMap::new(),
            seed_base,
            contributions: HashMap::new(),
            started,
            calls_before,
            iterations: 0,
            log: Vec::new(),
            stop: None,
        })
    }

    pub fn graph(&self) -> &CrawlGraph {
        &self.graph
    }

    pub fn api(&self) -> &A {
        &self.api
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        self.stop
    }

    /// The node through which `id` entered the frontier.
    pub fn parent(&self, id: &NodeId) -> Option<&NodeId> {
        self.parents.get(id)
    }

    /// The score a frontier node competes with.
    pub fn priority(&self, id: &NodeId) -> Option<f64> {
        let node = self.graph.node(id)?;
        let s = node.scores();
        Some(match node.kind() {
            NodeKind::Tweet => s.estimate_score + s.feedback_score,
            _ => s.final_score,
        })
    }

    /// Runs one iteration, or returns `None` once the crawl has stopped.
    pub fn step(&mut self) -> Result<Option<StepReport>, CrawlError> {
        if self.stop.is_some() {
            return Ok(None);
        }
        if self.iterations >= self.config.max_iterations {
            self.stop = Some(StopReason::MaxIterations);
            return Ok(None);
        }
        if self.graph.frontier().is_empty() {
            self.stop = Some(StopReason::EmptyFrontier);
            return Ok(None);
        }
        let candidates: Vec<(NodeId, f64)> = self
            .graph
            .frontier()
            .iter()
            .map(|id| (id.clone(), self.priority(id).expect("frontier node exists")))
            .collect();
        let selected = select_node(&candidates, &self.config, &mut self.rng)?;
        let fetched = call(&mut self.api, self.started, self.config.tick_timeout, |a| a.fetch(&selected))?;
        let estimate_before = self.graph.node(&selected).expect("selected").scores().estimate_score;
        let parent = self.parents.get(&selected).cloned();
        let mut report = StepReport {
            selected: selected.clone(),
            found: false,
            text_score: None,
            estimate_before,
            parent: parent.clone(),
            feedback_delta: 0.0,
        };
        match fetched {
            Call::Stop(reason) => {
                self.stop = Some(reason);
                return Ok(None);
            }
            Call::NotFound => {
                self.graph.mark_visited(&selected)?;
                self.contributions.remove(&selected);
            }
            Call::Done(record) => {
                report.found = true;
                self.visit(&selected, record, &mut report)?;
            }
        }
        self.iterations += 1;
        self.log.push(LogEntry {
            iteration: self.iterations,
            selected: selected.clone(),
            final_score: self.graph.node(&selected).expect("selected").scores().final_score,
            frontier_size: self.graph.frontier().len(),
            budget_left: self.api.budget().remaining(),
        });
        Ok(Some(report))
    }

    fn visit(&mut self, id: &NodeId, record: NodeRecord, report: &mut StepReport) -> Result<(), CrawlError> {
        if record.id != *id {
            return Err(CrawlError::Graph(GraphError::KindMismatch(format!(
                "asked for {id}, got {}",
                record.id
            ))));
        }
        if id.kind() == NodeKind::Tweet {
            let text = self.graph.node(id).and_then(|n| n.payload().tweet_text()).unwrap_or_default();
            let score = self.matcher.score(text, self.lexicon);
            report.text_score = Some(score);
            report.feedback_delta = apply_feedback(&mut self.graph, id, score, report.parent.as_ref())?;
            self.graph.set_text_score(id, score)?;
            if let Some(parent) = &report.parent {
                self.refresh_from(parent)?;
            }
        }
        self.graph.mark_visited(id)?;
        self.contributions.remove(id);

        let coefs = self.config.coefficients;
        let follows = self.config.expand_follows;
        for inc in record.incident {
            let expanded = role_coefficient(id, &inc.edge, &coefs, follows).is_some();
            if !self.graph.contains(&inc.neighbor) {
                if !expanded {
                    continue;
                }
                self.graph.add_node(Node::new(inc.neighbor.clone(), inc.payload)?)?;
                self.parents.insert(inc.neighbor.clone(), id.clone());
            }
            self.graph.add_edge(inc.edge)?;
        }

        let touched = propagate_estimate(&mut self.graph, id, &coefs, follows)?;
        for (neighbor, coef) in touched {
            let c = self.contributions.entry(neighbor).or_default();
            let slot = c.entry(id.clone()).or_insert(coef);
            *slot = slot.max(coef);
        }
        if id.kind() == NodeKind::Tweet {
            let tags: Vec<NodeId> = self
                .graph
                .neighbors(id)?
                .into_iter()
                .filter(|(e, n)| e.kind == EdgeKind::HasHashtag && self.graph.is_visited(n))
                .map(|(_, n)| n)
                .collect();
            for tag in tags {
                self.refresh_from(&tag)?;
            }
        }
        Ok(())
    }

    /// Recomputes the estimates that depend on `pred` after its final score
    /// changed.
    fn refresh_from(&mut self, pred: &NodeId) -> Result<(), CrawlError> {
        for (_, neighbor) in self.graph.neighbors(pred)? {
            let depends = self.contributions.get(&neighbor).is_some_and(|c| c.contains_key(pred));
            if depends {
                self.recompute_estimate(&neighbor)?;
            }
        }
        Ok(())
    }

    fn recompute_estimate(&mut self, id: &NodeId) -> Result<(), CrawlError> {
        let mut estimate = self.seed_base.get(id).copied().unwrap_or(0.0);
        if let Some(contribs) = self.contributions.get(id) {
            for (pred, coef) in contribs {
                let f = self.graph.node(pred).expect("predecessor exists").scores().final_score;
                estimate = estimate.max(f * coef);
            }
        }
        self.graph.set_estimate(id, estimate)?;
        Ok(())
    }

    /// Steps until a stop condition holds.
    pub fn run(mut self) -> Result<CrawlOutcome, CrawlError> {
        while self.step()?.is_some() {}
        Ok(self.finish())
    }

    pub fn finish(self) -> CrawlOutcome {
        let b = self.api.budget();
        CrawlOutcome {
            stop: self.stop.unwrap_or(StopReason::MaxIterations),
            iterations: self.iterations,
            api_calls: b.calls_used() - self.calls_before,
            elapsed_ticks: b.now() - self.started,
            graph: self.graph,
            log: self.log,
        }
    }
}

/// Runs a focused crawl to completion.
pub fn crawl<A: SocialApi>(
    api: A,
    enriched: &EnrichedQuery,
    lexicon: &Lexicon,
    config: &CrawlConfig,
) -> Result<CrawlOutcome, CrawlError> {
    Crawler::new(api, enriched, lexicon, config.clone())?.run()
}
