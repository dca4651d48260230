//! Record/replay of API sessions.
//!
//! A trace file starts with [`TRACE_HEADER`] and then alternates
//! `REQ<TAB>op<TAB>args` and `RSP<TAB>response` lines, both JSON encoded
//! with a fixed field order.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ApiBudget, ApiError, NodeRecord, SearchHit, SocialApi};
use crate::graph::NodeId;

pub const TRACE_HEADER: &str = "SMARTCRAWL-TRACE\tv1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceRequest {
    Fetch { id: NodeId },
    Search { keywords: Vec<String>, limit: usize },
}

impl TraceRequest {
    fn op(&self) -> &'static str {
        match self {
            TraceRequest::Fetch { .. } => "fetch",
            TraceRequest::Search { .. } => "search",
        }
    }

    fn args_json(&self) -> String {
        match self {
            TraceRequest::Fetch { id } => serde_json::json!({ "id": id }).to_string(),
            TraceRequest::Search { keywords, limit } => {
                serde_json::json!({ "keywords": keywords, "limit": limit }).to_string()
            }
        }
    }

    /// The `op<TAB>args` part of a `REQ` line; also the replay lookup key.
    pub fn key(&self) -> String {
        format!("{}\t{}", self.op(), self.args_json())
    }

    fn parse(op: &str, args: &str) -> Result<Self, ApiError> {
        #[derive(Deserialize)]
        struct FetchArgs {
            id: NodeId,
        }
        #[derive(Deserialize)]
        struct SearchArgs {
            keywords: Vec<String>,
            limit: usize,
        }
        let bad = |e: serde_json::Error| ApiError::CorruptTrace(format!("{op} args: {e}"));
        match op {
            "fetch" => {
                let a: FetchArgs = serde_json::from_str(args).map_err(bad)?;
                Ok(TraceRequest::Fetch { id: a.id })
            }
            "search" => {
                let a: SearchArgs = serde_json::from_str(args).map_err(bad)?;
                Ok(TraceRequest::Search { keywords: a.keywords, limit: a.limit })
            }
            other => Err(ApiError::CorruptTrace(format!("unknown op {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceResponse {
    Record(NodeRecord),
    Hits(Vec<SearchHit>),
    NotFound(NodeId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub request: TraceRequest,
    pub response: TraceResponse,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for e in &self.entries {
            let rsp = serde_json::to_string(&e.response).expect("response serializes");
            let _ = writeln!(out, "REQ\t{}", e.request.key());
            let _ = writeln!(out, "RSP\t{rsp}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ApiError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == TRACE_HEADER => {}
            Some((_, h)) => return Err(ApiError::CorruptTrace(format!("bad header {h:?}"))),
            None => return Err(ApiError::CorruptTrace("empty file".into())),
        }
        let mut entries = Vec::new();
        let mut pending: Option<TraceRequest> = None;
        for (n, line) in lines {
            let lineno = n + 1;
            if line.is_empty() {
                continue;
            }
            let corrupt = |m: String| ApiError::CorruptTrace(format!("line {lineno}: {m}"));
            let mut parts = line.splitn(3, '\t');
            match (parts.next(), pending.take()) {
                (Some("REQ"), None) => {
                    let op = parts.next().ok_or_else(|| corrupt("missing op".into()))?;
                    let args = parts.next().ok_or_else(|| corrupt("missing args".into()))?;
                    pending = Some(TraceRequest::parse(op, args).map_err(|e| corrupt(e.to_string()))?);
                }
                (Some("RSP"), Some(request)) => {
                    let rest = line["RSP\t".len().min(line.len())..].to_string();
                    let response: TraceResponse =
                        serde_json::from_str(&rest).map_err(|e| corrupt(e.to_string()))?;
                    entries.push(TraceEntry { request, response });
                }
                (Some("REQ"), Some(_)) => return Err(corrupt("REQ without a response".into())),
                (Some("RSP"), None) => return Err(corrupt("RSP without a request".into())),
                (tag, _) => return Err(corrupt(format!("unknown record tag {tag:?}"))),
            }
        }
        if pending.is_some() {
            return Err(ApiError::CorruptTrace("trailing request without a response".into()));
        }
        Ok(Trace { entries })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ApiError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ApiError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Wraps a backend and logs every answered request.
///
/// Budget and rate-limit refusals are not logged: they carry no data, and
/// the replaying side enforces its own budget.
#[derive(Debug)]
pub struct Recorder<A> {
    inner: A,
    trace: Trace,
}

impl<A: SocialApi> Recorder<A> {
    pub fn new(inner: A) -> Self {
        Recorder { inner, trace: Trace::default() }
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_parts(self) -> (A, Trace) {
        (self.inner, self.trace)
    }
}

impl<A: SocialApi> SocialApi for Recorder<A> {
    fn fetch(&mut self, id: &NodeId) -> Result<NodeRecord, ApiError> {
        let result = self.inner.fetch(id);
        let response = match &result {
            Ok(rec) => TraceResponse::Record(rec.clone()),
            Err(ApiError::NotFound(missing)) => TraceResponse::NotFound(missing.clone()),
            Err(_) => return result,
        };
        self.trace.entries.push(TraceEntry { request: TraceRequest::Fetch { id: id.clone() }, response });
        result
    }

    fn keyword_search(&mut self, keywords: &[String], limit: usize) -> Result<Vec<SearchHit>, ApiError> {
        let result = self.inner.keyword_search(keywords, limit);
        if let Ok(hits) = &result {
            self.trace.entries.push(TraceEntry {
                request: TraceRequest::Search { keywords: keywords.to_vec(), limit },
                response: TraceResponse::Hits(hits.clone()),
            });
        }
        result
    }

    fn budget(&self) -> &ApiBudget {
        self.inner.budget()
    }

    fn wait_tick(&mut self) {
        self.inner.wait_tick()
    }
}

/// Serves answers from a trace only.
///
/// Repeated identical requests get their recorded answers in order; once
/// those run out the last one is repeated.
#[derive(Debug, Clone)]
pub struct ReplayApi {
    answers: HashMap<String, (VecDeque<TraceResponse>, TraceResponse)>,
    budget: ApiBudget,
}

impl ReplayApi {
    pub fn new(trace: &Trace, budget: ApiBudget) -> Self {
        let mut answers: HashMap<String, (VecDeque<TraceResponse>, TraceResponse)> = HashMap::new();
        for e in &trace.entries {
            answers
                .entry(e.request.key())
                .and_modify(|(queue, last)| {
                    queue.push_back(e.response.clone());
                    *last = e.response.clone();
                })
                .or_insert_with(|| (VecDeque::from([e.response.clone()]), e.response.clone()));
        }
        ReplayApi { answers, budget }
    }

    pub fn load(path: impl AsRef<Path>, budget: ApiBudget) -> Result<Self, ApiError> {
        Ok(Self::new(&Trace::load(path)?, budget))
    }

    fn answer(&mut self, request: &TraceRequest) -> Result<TraceResponse, ApiError> {
        let key = request.key();
        let (queue, last) = self.answers.get_mut(&key).ok_or_else(|| ApiError::TraceMiss(key.clone()))?;
        Ok(queue.pop_front().unwrap_or_else(|| last.clone()))
    }
}

impl SocialApi for ReplayApi {
    fn fetch(&mut self, id: &NodeId) -> Result<NodeRecord, ApiError> {
        self.budget.try_spend()?;
        match self.answer(&TraceRequest::Fetch { id: id.clone() })? {
            TraceResponse::Record(rec) => Ok(rec),
            TraceResponse::NotFound(missing) => Err(ApiError::NotFound(missing)),
            TraceResponse::Hits(_) => Err(ApiError::CorruptTrace(format!("search hits recorded for fetch {id}"))),
        }
    }

    fn keyword_search(&mut self, keywords: &[String], limit: usize) -> Result<Vec<SearchHit>, ApiError> {
        if keywords.is_empty() {
            return Err(ApiError::EmptyKeywords);
        }
        self.budget.try_spend()?;
        match self.answer(&TraceRequest::Search { keywords: keywords.to_vec(), limit })? {
            TraceResponse::Hits(hits) => Ok(hits),
            _ => Err(ApiError::CorruptTrace("non-search response recorded for search".into())),
        }
    }

    fn budget(&self) -> &ApiBudget {
        &self.budget
    }

    fn wait_tick(&mut self) {
        self.budget.wait_tick();
    }
}
