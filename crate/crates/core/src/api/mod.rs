//! The rate-limited data source a crawl talks to.
//!
//! Every backend charges one call per `fetch` or `keyword_search` against an
//! [`ApiBudget`] and advances a virtual clock measured in ticks. Ground-truth
//! labels of the synthetic backend are deliberately absent from everything
//! in this trait.

mod synthetic;
mod trace;

pub use synthetic::{NetShape, SyntheticApi, SyntheticNet, SyntheticNetConfig, Vocabulary};
pub use trace::{Recorder, ReplayApi, Trace, TraceEntry, TraceRequest, TraceResponse, TRACE_HEADER};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, GraphError, NodeId, Payload};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApiError {
    #[error("API call budget exhausted")]
    BudgetExhausted,
    #[error("rate limited; wait for the next window")]
    RateLimited,
    #[error("node {0} not found")]
    NotFound(NodeId),
    #[error("no keywords given")]
    EmptyKeywords,
    #[error("request not present in trace: {0}")]
    TraceMiss(String),
    #[error("corrupt trace: {0}")]
    CorruptTrace(String),
    #[error("invalid synthetic network config: {0}")]
    InvalidConfig(String),
    #[error("invalid record: {0}")]
    InvalidRecord(#[from] GraphError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Io(e.to_string())
    }
}

/// Rate window: at most `calls_per_window` calls per `window_ticks` ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateWindow {
    pub calls_per_window: u32,
    pub window_ticks: u64,
}

impl Default for RateWindow {
    /// 180 calls per 900-tick window, the shape of a typical search quota.
    fn default() -> Self {
        RateWindow { calls_per_window: 180, window_ticks: 900 }
    }
}

/// Call accounting plus the simulated clock.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiBudget {
    max_calls: u64,
    calls_used: u64,
    window: RateWindow,
    ticks_per_call: u64,
    now: u64,
    window_index: u64,
    calls_in_window: u32,
}

impl ApiBudget {
    pub fn new(max_calls: u64) -> Self {
        Self::with_window(max_calls, RateWindow::default())
    }

    pub fn with_window(max_calls: u64, window: RateWindow) -> Self {
        ApiBudget {
            max_calls,
            calls_used: 0,
            window: RateWindow {
                calls_per_window: window.calls_per_window.max(1),
                window_ticks: window.window_ticks.max(1),
            },
            ticks_per_call: 1,
            now: 0,
            window_index: 0,
            calls_in_window: 0,
        }
    }

    /// Ticks each accepted call advances the clock by (default 1).
    pub fn with_ticks_per_call(mut self, ticks: u64) -> Self {
        self.ticks_per_call = ticks;
        self
    }

    pub fn ticks_per_call(&self) -> u64 {
        self.ticks_per_call
    }

    pub fn max_calls(&self) -> u64 {
        self.max_calls
    }

    pub fn calls_used(&self) -> u64 {
        self.calls_used
    }

    pub fn remaining(&self) -> u64 {
        self.max_calls - self.calls_used
    }

    pub fn is_exhausted(&self) -> bool {
        self.calls_used >= self.max_calls
    }

    pub fn window(&self) -> RateWindow {
        self.window
    }

    /// Current simulated time in ticks.
    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn wait_tick(&mut self) {
        self.now += 1;
    }

    /// Charges one call, or explains why it cannot be made right now.
    pub fn try_spend(&mut self) -> Result<(), ApiError> {
        if self.is_exhausted() {
            return Err(ApiError::BudgetExhausted);
        }
        let index = self.now / self.window.window_ticks;
        if index != self.window_index {
            self.window_index = index;
            self.calls_in_window = 0;
        }
        if self.calls_in_window >= self.window.calls_per_window {
            return Err(ApiError::RateLimited);
        }
        self.calls_used += 1;
        self.calls_in_window += 1;
        self.now += self.ticks_per_call;
        Ok(())
    }
}

/// One incident edge of a fetched node together with the neighbor's payload,
/// as an API response embeds related objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incident {
    pub edge: Edge,
    pub neighbor: NodeId,
    pub payload: Payload,
}

/// Everything the API reveals about one node.
///
/// ```compile_fail
/// # use smartcrawl::api::NodeRecord;
/// fn leak(r: &NodeRecord) -> bool { r.truth_relevant }
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub payload: Payload,
    pub incident: Vec<Incident>,
}

/// A tweet returned by keyword search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub id: NodeId,
    pub payload: Payload,
}

/// The crawler-facing data source contract.
pub trait SocialApi {
    /// Node payload plus incident edges. Costs one call, even on `NotFound`.
    fn fetch(&mut self, id: &NodeId) -> Result<NodeRecord, ApiError>;

    /// Up to `limit` tweets whose lowercased text contains any keyword.
    /// Costs one call, even when `limit` is 0.
    fn keyword_search(&mut self, keywords: &[String], limit: usize) -> Result<Vec<SearchHit>, ApiError>;

    fn budget(&self) -> &ApiBudget;

    /// Lets one simulated tick pass (used to ride out `RateLimited`).
    fn wait_tick(&mut self);
}

impl<A: SocialApi + ?Sized> SocialApi for &mut A {
    fn fetch(&mut self, id: &NodeId) -> Result<NodeRecord, ApiError> {
        (**self).fetch(id)
    }

    fn keyword_search(&mut self, keywords: &[String], limit: usize) -> Result<Vec<SearchHit>, ApiError> {
        (**self).keyword_search(keywords, limit)
    }

    fn budget(&self) -> &ApiBudget {
        (**self).budget()
    }

    fn wait_tick(&mut self) {
        (**self).wait_tick()
    }
}
