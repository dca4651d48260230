//! The focused crawl loop, its node selection rule and the BFS baseline.

mod bfs;
mod engine;
mod select;

pub use bfs::{crawl_bfs, BfsCrawler};
pub use engine::{apply_feedback, crawl, propagate_estimate, role_coefficient, Crawler, StepReport};
pub use select::{select_node, selection_scores};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::api::ApiError;
use crate::enrich::DEFAULT_ALPHA;
use crate::graph::{CrawlGraph, GraphError, NodeId};
use crate::text::DEFAULT_THETA;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrawlError {
    #[error("frontier is empty")]
    EmptyFrontier,
    #[error("keyword search returned no seed tweets")]
    NoSeeds,
    #[error("enriched query has no keywords")]
    EmptyQuery,
    #[error("invalid crawl config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Api(#[from] ApiError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SelectionMode {
    /// Always take the most probable node.
    #[default]
    ArgmaxP,
    /// Draw from the selection distribution.
    Sample,
}

/// Per-role multipliers applied to a visited node's final score to estimate
/// the score of a neighbor it reveals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateCoefficients {
    /// Roles seen from a visited tweet: posting user, mentioned users,
    /// replied-to origin, quoted origin, retweet origin, retweets of this
    /// tweet, favoriting users.
    pub tweet: [f64; 7],
    /// Roles seen from a visited user: posted tweets, favorite tweets,
    /// friends, followers.
    pub user: [f64; 4],
    /// From a visited tweet to its hashtags.
    pub hashtag: f64,
    /// From a visited hashtag to the tweets carrying it.
    pub hashtag_tweets: f64,
}

impl Default for EstimateCoefficients {
    fn default() -> Self {
        EstimateCoefficients {
            tweet: [0.4, 0.6, 1.0, 1.0, 1.0, 0.5, 0.5],
            user: [1.0, 0.6, 0.5, 0.3],
            hashtag: 1.0,
            hashtag_tweets: 1.0,
        }
    }
}

impl EstimateCoefficients {
    pub fn validate(&self) -> Result<(), CrawlError> {
        let all = self.tweet.iter().chain(&self.user).chain([&self.hashtag, &self.hashtag_tweets]);
        for c in all {
            if !(0.0..=1.0).contains(c) {
                return Err(CrawlError::InvalidConfig(format!("coefficient {c} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrawlConfig {
    pub max_iterations: usize,
    /// Simulated ticks a crawl may run for, counted from its first call.
    pub tick_timeout: u64,
    pub p: f64,
    pub theta: f64,
    pub alpha: f64,
    pub selection_mode: SelectionMode,
    pub epsilon: f64,
    pub seed: u64,
    /// Tweets requested by the seeding search.
    pub seed_limit: usize,
    /// Total API calls granted to a crawl, seeding included.
    pub api_budget: u64,
    pub expand_follows: bool,
    pub coefficients: EstimateCoefficients,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig {
            max_iterations: 100,
            tick_timeout: 720,
            p: 0.7,
            theta: DEFAULT_THETA,
            alpha: DEFAULT_ALPHA,
            selection_mode: SelectionMode::ArgmaxP,
            epsilon: 1e-6,
            seed: 0,
            seed_limit: 5,
            api_budget: 1000,
            expand_follows: true,
            coefficients: EstimateCoefficients::default(),
        }
    }
}

impl CrawlConfig {
    pub fn validate(&self) -> Result<(), CrawlError> {
        let bad = |m: &str| Err(CrawlError::InvalidConfig(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if self.tick_timeout == 0 {
            return bad("tick_timeout must be positive");
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad("p must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad("theta must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if self.seed_limit == 0 {
            return bad("seed_limit must be positive");
        }
        self.coefficients.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self, CrawlError> {
        let cfg: CrawlConfig =
            toml::from_str(text).map_err(|e| CrawlError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    TickTimeout,
    BudgetExhausted,
    EmptyFrontier,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::MaxIterations => "max_iterations",
            StopReason::TickTimeout => "tick_timeout",
            StopReason::BudgetExhausted => "budget_exhausted",
            StopReason::EmptyFrontier => "empty_frontier",
        }
    }
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub iteration: usize,
    pub selected: NodeId,
    pub final_score: f64,
    pub frontier_size: usize,
    pub budget_left: u64,
}

impl std::fmt::Display for LogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.iteration, self.selected, self.final_score, self.frontier_size, self.budget_left
        )
    }
}

#[derive(Debug, Clone)]
pub struct CrawlOutcome {
    pub graph: CrawlGraph,
    pub stop: StopReason,
    pub iterations: usize,
    /// Calls charged to the budget, seeding included.
    pub api_calls: u64,
    /// Simulated ticks from the first call to the stop.
    pub elapsed_ticks: u64,
    pub log: Vec<LogEntry>,
}

impl CrawlOutcome {
    pub fn log_text(&self) -> String {
        self.log.iter().map(|e| format!("{e}\n")).collect()
    }
}

/// Result of one budgeted call.
enum Call<T> {
    Done(T),
    NotFound,
    Stop(StopReason),
}

/// Issues a call, waiting out rate limits, unless the next call could not
/// finish inside the tick timeout.
fn call<A: crate::api::SocialApi + ?Sized, T>(
    api: &mut A,
    started: u64,
    tick_timeout: u64,
    mut f: impl FnMut(&mut A) -> Result<T, ApiError>,
) -> Result<Call<T>, CrawlError> {
    loop {
        let b = api.budget();
        if b.now() - started + b.ticks_per_call() > tick_timeout {
            return Ok(Call::Stop(StopReason::TickTimeout));
        }
        match f(api) {
            Ok(v) => return Ok(Call::Done(v)),
            Err(ApiError::RateLimited) => api.wait_tick(),
            Err(ApiError::BudgetExhausted) => return Ok(Call::Stop(StopReason::BudgetExhausted)),
            Err(ApiError::NotFound(_)) => return Ok(Call::NotFound),
            Err(e) => return Err(e.into()),
        }
    }
}

/// Shared seeding step: one keyword search with every enriched term.
fn seed_hits<A: crate::api::SocialApi + ?Sized>(
    api: &mut A,
    enriched: &crate::enrich::EnrichedQuery,
    config: &CrawlConfig,
    started: u64,
) -> Result<Vec<crate::api::SearchHit>, CrawlError> {
    let terms: Vec<String> = enriched.terms().map(str::to_string).collect();
    if terms.is_empty() {
        return Err(CrawlError::EmptyQuery);
    }
    match call(api, started, config.tick_timeout, |a| a.keyword_search(&terms, config.seed_limit))? {
        Call::Done(hits) if hits.is_empty() => Err(CrawlError::NoSeeds),
        Call::Done(hits) => {
            for h in &hits {
                if h.id.kind() != crate::graph::NodeKind::Tweet || h.payload.kind() != h.id.kind() {
                    return Err(ApiError::InvalidRecord(GraphError::KindMismatch(format!(
                        "search hit {} is not a tweet",
                        h.id
                    )))
                    .into());
                }
            }
            Ok(hits)
        }
        Call::NotFound => Err(CrawlError::NoSeeds),
        Call::Stop(StopReason::BudgetExhausted) => Err(ApiError::BudgetExhausted.into()),
        Call::Stop(_) => Err(CrawlError::NoSeeds),
    }
}
