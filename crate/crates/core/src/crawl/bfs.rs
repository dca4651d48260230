use std::collections::VecDeque;

use super::engine::role_coefficient;
use super::{call, seed_hits, Call, CrawlConfig, CrawlError, CrawlOutcome, LogEntry, StopReason};
use crate::api::SocialApi;
use crate::enrich::EnrichedQuery;
use crate::graph::{CrawlGraph, Node, NodeId};

/// Breadth-first baseline: same seeding, neighbor roles and caps as the
/// focused crawl, but a FIFO frontier and no scoring.
pub struct BfsCrawler<A: SocialApi> {
    api: A,
    config: CrawlConfig,
    graph: CrawlGraph,
    queue: VecDeque<NodeId>,
    started: u64,
    calls_before: u64,
    iterations: usize,
    log: Vec<LogEntry>,
    stop: Option<StopReason>,
}

impl<A: SocialApi> BfsCrawler<A> {
    pub fn new(mut api: A, enriched: &EnrichedQuery, config: CrawlConfig) -> Result<Self, CrawlError> {
        config.validate()?;
        let started = api.budget().now();
        let calls_before = api.budget().calls_used();
        let hits = seed_hits(&mut api, enriched, &config, started)?;
        let mut graph = CrawlGraph::new();
        let mut queue = VecDeque::new();
        for hit in hits {
            if graph.contains(&hit.id) {
                continue;
            }
            graph.add_node(Node::new(hit.id.clone(), hit.payload)?)?;
            queue.push_back(hit.id);
        }
        Ok(BfsCrawler { api, config, graph, queue, started, calls_before, iterations: 0, log: Vec::new(), stop: None })
    }

    pub fn graph(&self) -> &CrawlGraph {
        &self.graph
    }

    /// Visits the head of the queue; `None` once stopped.
    pub fn step(&mut self) -> Result<Option<NodeId>, CrawlError> {
        if self.stop.is_some() {
            return Ok(None);
        }
        if self.iterations >= self.config.max_iterations {
            self.stop = Some(StopReason::MaxIterations);
            return Ok(None);
        }
        let Some(id) = self.queue.front().cloned() else {
            self.stop = Some(StopReason::EmptyFrontier);
            return Ok(None);
        };
        match call(&mut self.api, self.started, self.config.tick_timeout, |a| a.fetch(&id))? {
            Call::Stop(reason) => {
                self.stop = Some(reason);
                return Ok(None);
            }
            Call::NotFound => {
                self.queue.pop_front();
                self.graph.mark_visited(&id)?;
            }
            Call::Done(record) => {
                self.queue.pop_front();
                self.graph.mark_visited(&id)?;
                let coefs = self.config.coefficients;
                for inc in record.incident {
                    if !self.graph.contains(&inc.neighbor) {
                        if role_coefficient(&id, &inc.edge, &coefs, self.config.expand_follows).is_none() {
                            continue;
                        }
                        self.graph.add_node(Node::new(inc.neighbor.clone(), inc.payload)?)?;
                        self.queue.push_back(inc.neighbor);
                    }
                    self.graph.add_edge(inc.edge)?;
                }
            }
        }
        self.iterations += 1;
        self.log.push(LogEntry {
            iteration: self.iterations,
            selected: id.clone(),
            final_score: 0.0,
            frontier_size: self.queue.len(),
            budget_left: self.api.budget().remaining(),
        });
        Ok(Some(id))
    }

    pub fn run(mut self) -> Result<CrawlOutcome, CrawlError> {
        while self.step()?.is_some() {}
        let b = self.api.budget();
        Ok(CrawlOutcome {
            stop: self.stop.unwrap_or(StopReason::MaxIterations),
            iterations: self.iterations,
            api_calls: b.calls_used() - self.calls_before,
            elapsed_ticks: b.now() - self.started,
            graph: self.graph,
            log: self.log,
        })
    }
}

pub fn crawl_bfs<A: SocialApi>(
    api: A,
    enriched: &EnrichedQuery,
    config: &CrawlConfig,
) -> Result<CrawlOutcome, CrawlError> {
    BfsCrawler::new(api, enriched, config.clone())?.run()
}
