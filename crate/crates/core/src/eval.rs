//! Precision of crawled tweets against ground truth, and paired
//! focused-vs-BFS comparisons on generated networks.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::api::{ApiBudget, SyntheticNet, SyntheticNetConfig};
use crate::crawl::{crawl, crawl_bfs, CrawlConfig, CrawlOutcome};
use crate::enrich::EnrichedQuery;
use crate::graph::{CrawlGraph, NodeId, NodeKind};
use crate::text::Lexicon;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("no ground truth for visited tweet {0}")]
    MissingTruth(NodeId),
    #[error("truth file line {line}: {msg}")]
    TruthFormat { line: usize, msg: String },
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EvalError {
    fn from(e: std::io::Error) -> Self {
        EvalError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Stic,
    SimpleBfs,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Stic => "STiC",
            Method::SimpleBfs => "Simple BFS",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionReport {
    pub method: Method,
    pub retrieved_relevant: usize,
    pub retrieved: usize,
    /// 0 when nothing was retrieved, with `undefined` set.
    pub precision: f64,
    pub undefined: bool,
    pub node_counts: BTreeMap<NodeKind, usize>,
    pub edge_count: usize,
    pub api_calls: Option<u64>,
}

impl PrecisionReport {
    pub fn with_api_calls(mut self, calls: u64) -> Self {
        self.api_calls = Some(calls);
        self
    }

    pub fn nodes_of(&self, kind: NodeKind) -> usize {
        self.node_counts.get(&kind).copied().unwrap_or(0)
    }
}

/// Retrieved tweets are the visited ones; relevance comes from `truth`.
pub fn evaluate(
    graph: &CrawlGraph,
    truth: &BTreeMap<NodeId, bool>,
    method: Method,
) -> Result<PrecisionReport, EvalError> {
    let mut retrieved = 0;
    let mut relevant = 0;
    for id in graph.visited() {
        if id.kind() != NodeKind::Tweet {
            continue;
        }
        retrieved += 1;
        match truth.get(id) {
            Some(true) => relevant += 1,
            Some(false) => {}
            None => return Err(EvalError::MissingTruth(id.clone())),
        }
    }
    let mut node_counts: BTreeMap<NodeKind, usize> = NodeKind::ALL.iter().map(|k| (*k, 0)).collect();
    for n in graph.nodes() {
        *node_counts.entry(n.kind()).or_default() += 1;
    }
    Ok(PrecisionReport {
        method,
        retrieved_relevant: relevant,
        retrieved,
        precision: if retrieved == 0 { 0.0 } else { relevant as f64 / retrieved as f64 },
        undefined: retrieved == 0,
        node_counts,
        edge_count: graph.edge_count(),
        api_calls: None,
    })
}

/// Reads `id<TAB>0|1` lines keyed by tweet id.
pub fn parse_truth(text: &str) -> Result<BTreeMap<NodeId, bool>, EvalError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| EvalError::TruthFormat { line: i + 1, msg };
        let (id, label) = line.split_once('\t').ok_or_else(|| bad("expected id<TAB>0|1".into()))?;
        let label = match label {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("label {other:?} is not 0 or 1"))),
        };
        let id = NodeId::tweet(id).map_err(|e| bad(e.to_string()))?;
        out.insert(id, label);
    }
    Ok(out)
}

pub fn format_truth(truth: &BTreeMap<NodeId, bool>) -> String {
    let mut out = String::new();
    for (id, label) in truth.iter().filter(|(id, _)| id.kind() == NodeKind::Tweet) {
        let _ = writeln!(out, "{}\t{}", id.external_id(), u8::from(*label));
    }
    out
}

pub fn load_truth(path: impl AsRef<Path>) -> Result<BTreeMap<NodeId, bool>, EvalError> {
    parse_truth(&std::fs::read_to_string(path)?)
}

const COLUMNS: [&str; 9] = [
    "method", "relevant", "retrieved", "precision", "tweets", "users", "hashtags", "edges", "api_calls",
];

fn report_cells(r: &PrecisionReport) -> Vec<String> {
    let precision = if r.undefined { "n/a".to_string() } else { format!("{:.4}", r.precision) };
    vec![
        r.method.label().to_string(),
        r.retrieved_relevant.to_string(),
        r.retrieved.to_string(),
        precision,
        r.nodes_of(NodeKind::Tweet).to_string(),
        r.nodes_of(NodeKind::User).to_string(),
        r.nodes_of(NodeKind::Hashtag).to_string(),
        r.edge_count.to_string(),
        r.api_calls.map_or("-".to_string(), |c| c.to_string()),
    ]
}

fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

pub fn reports_table(reports: &[PrecisionReport]) -> String {
    aligned(&COLUMNS, &reports.iter().map(report_cells).collect::<Vec<_>>())
}

pub fn reports_tsv(reports: &[PrecisionReport]) -> String {
    let mut out = COLUMNS.join("\t");
    out.push('\n');
    for r in reports {
        let mut cells = report_cells(r);
        cells[3] = r.precision.to_string();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

/// One seed of a comparison. A failed crawl keeps its error text.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPair {
    pub seed: u64,
    pub stic: Result<PrecisionReport, String>,
    pub bfs: Result<PrecisionReport, String>,
}

impl RunPair {
    /// The focused crawl did at least as well as the baseline.
    pub fn stic_wins(&self) -> Option<bool> {
        match (&self.stic, &self.bfs) {
            (Ok(s), Ok(b)) => Some(s.precision >= b.precision),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub runs: usize,
    pub completed: usize,
    pub mean_precision_stic: f64,
    pub mean_precision_bfs: f64,
    pub stic_wins: usize,
    pub totals: [PrecisionReport; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub pairs: Vec<RunPair>,
    pub summary: Summary,
}

fn run_pair(
    net_config: &SyntheticNetConfig,
    enriched: &EnrichedQuery,
    lexicon: &Lexicon,
    crawl_config: &CrawlConfig,
    seed: u64,
) -> RunPair {
    let net = match SyntheticNet::generate(&net_config.clone().with_seed(seed)) {
        Ok(net) => net,
        Err(e) => return RunPair { seed, stic: Err(e.to_string()), bfs: Err(e.to_string()) },
    };
    let truth = net.tweet_truth();
    let config = CrawlConfig { seed, ..crawl_config.clone() };
    let score = |outcome: Result<CrawlOutcome, crate::crawl::CrawlError>, method| {
        let outcome = outcome.map_err(|e| e.to_string())?;
        evaluate(&outcome.graph, &truth, method)
            .map(|r| r.with_api_calls(outcome.api_calls))
            .map_err(|e| e.to_string())
    };
    let stic = score(crawl(net.api(ApiBudget::new(config.api_budget)), enriched, lexicon, &config), Method::Stic);
    let bfs = score(crawl_bfs(net.api(ApiBudget::new(config.api_budget)), enriched, &config), Method::SimpleBfs);
    RunPair { seed, stic, bfs }
}

/// Generates one network per seed in `base_seed..base_seed + runs` and runs
/// both crawlers on it with the same budget and seeding.
pub fn compare(
    net_config: &SyntheticNetConfig,
    enriched: &EnrichedQuery,
    lexicon: &Lexicon,
    crawl_config: &CrawlConfig,
    runs: usize,
    base_seed: u64,
) -> Result<Comparison, EvalError> {
    if runs == 0 {
        return Err(EvalError::NoRuns);
    }
    let seeds: Vec<u64> = (0..runs as u64).map(|i| base_seed + i).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(runs);
    let chunk = runs.div_ceil(workers);
    let mut pairs: Vec<RunPair> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|&seed| run_pair(net_config, enriched, lexicon, crawl_config, seed))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("compare worker panicked")).collect()
    });
    pairs.sort_by_key(|p| p.seed);
    let summary = summarize(&pairs);
    Ok(Comparison { pairs, summary })
}

fn sum_reports<'a>(method: Method, reports: impl Iterator<Item = &'a PrecisionReport>) -> PrecisionReport {
    let mut t = PrecisionReport {
        method,
        retrieved_relevant: 0,
        retrieved: 0,
        precision: 0.0,
        undefined: true,
        node_counts: NodeKind::ALL.iter().map(|k| (*k, 0)).collect(),
        edge_count: 0,
        api_calls: Some(0),
    };
    let mut n = 0;
    for r in reports {
        n += 1;
        t.retrieved_relevant += r.retrieved_relevant;
        t.retrieved += r.retrieved;
        for (k, c) in &r.node_counts {
            *t.node_counts.entry(*k).or_default() += c;
        }
        t.edge_count += r.edge_count;
        t.api_calls = Some(t.api_calls.unwrap_or(0) + r.api_calls.unwrap_or(0));
        t.precision += r.precision;
    }
    if n > 0 {
        t.precision /= n as f64;
        t.undefined = false;
    }
    t
}

fn summarize(pairs: &[RunPair]) -> Summary {
    let done: Vec<(&PrecisionReport, &PrecisionReport)> = pairs
        .iter()
        .filter_map(|p| match (&p.stic, &p.bfs) {
            (Ok(s), Ok(b)) => Some((s, b)),
            _ => None,
        })
        .collect();
    let totals = [
        sum_reports(Method::Stic, done.iter().map(|p| p.0)),
        sum_reports(Method::SimpleBfs, done.iter().map(|p| p.1)),
    ];
    Summary {
        runs: pairs.len(),
        completed: done.len(),
        mean_precision_stic: totals[0].precision,
        mean_precision_bfs: totals[1].precision,
        stic_wins: pairs.iter().filter(|p| p.stic_wins() == Some(true)).count(),
        totals,
    }
}

impl Comparison {
    /// Totals over all completed runs (counts summed, precision averaged),
    /// followed by the win count.
    pub fn table(&self) -> String {
        let s = &self.summary;
        let mut out = reports_table(&s.totals);
        let _ = writeln!(
            out,
            "runs {}  completed {}  STiC wins {}  mean precision STiC {:.4} vs Simple BFS {:.4}",
            s.runs, s.completed, s.stic_wins, s.mean_precision_stic, s.mean_precision_bfs
        );
        for p in &self.pairs {
            for e in [&p.stic, &p.bfs].into_iter().filter_map(|r| r.as_ref().err()) {
                let _ = writeln!(out, "seed {} failed: {e}", p.seed);
            }
        }
        out
    }

    /// One line per seed and method, then the totals.
    pub fn tsv(&self) -> String {
        let mut out = format!("seed\t{}\n", COLUMNS.join("\t"));
        for p in &self.pairs {
            for r in [&p.stic, &p.bfs] {
                match r {
                    Ok(r) => {
                        let mut cells = report_cells(r);
                        cells[3] = r.precision.to_string();
                        let _ = writeln!(out, "{}\t{}", p.seed, cells.join("\t"));
                    }
                    Err(e) => {
                        let _ = writeln!(out, "{}\terror\t{}", p.seed, e.replace('\t', " "));
                    }
                }
            }
        }
        for t in &self.summary.totals {
            let mut cells = report_cells(t);
            cells[3] = t.precision.to_string();
            let _ = writeln!(out, "total\t{}", cells.join("\t"));
        }
        let _ = writeln!(out, "wins\t{}\t{}", self.summary.stic_wins, self.summary.completed);
        out
    }
}
