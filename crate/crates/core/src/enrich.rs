//! Query enrichment: gather related terms from several keyword sources,
//! weight them by TF-IDF with every source acting as one document, and keep
//! those whose normalized weight clears a relevance threshold.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;

use log::warn;
use thiserror::Error;

/// Default relevance threshold for keeping enriched keywords.
pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SourceError {
    #[error("source {source_name} unavailable: {reason}")]
    Unavailable { source_name: String, reason: String },
}

#[derive(Debug, Error)]
pub enum EnrichError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("no keyword sources given")]
    NoSources,
    #[error("all {0} keyword sources failed")]
    AllSourcesFailed(usize),
    #[error("no keywords to weight")]
    EmptyInput,
    #[error("alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
    #[error("presence count {presence} of {term:?} exceeds {num_sources} sources")]
    InvalidPresence { term: String, presence: u32, num_sources: usize },
    #[error("fixture {path}: line {line}: {msg}")]
    Fixture { path: String, line: usize, msg: String },
    #[error("no fixture sources found in {0}")]
    NoFixtures(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Lowercases and collapses internal whitespace.
pub fn normalize_term(term: &str) -> String {
    term.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A provider of terms related to a query, with per-source multiplicity.
pub trait KeywordSource: Send + Sync {
    fn name(&self) -> &str;

    fn related_terms(&self, query: &str) -> Result<Vec<(String, u64)>, SourceError>;
}

/// Term list read from a fixture file.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSource {
    name: String,
    // when set, the list only answers this query
    query: Option<String>,
    terms: Vec<(String, u64)>,
}

impl FixtureSource {
    pub fn new(name: impl Into<String>, terms: Vec<(String, u64)>) -> Self {
        FixtureSource { name: name.into(), query: None, terms }
    }

    pub fn for_query(mut self, query: &str) -> Self {
        self.query = Some(normalize_term(query));
        self
    }

    /// Parses `term<TAB>count` lines; `#` starts a comment line. A missing
    /// count means 1, and repeated terms add up.
    pub fn parse(name: impl Into<String>, text: &str, origin: &str) -> Result<Self, EnrichError> {
        let mut terms: BTreeMap<String, u64> = BTreeMap::new();
        let mut order = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let err = |msg: String| EnrichError::Fixture {
                path: origin.to_string(),
                line: idx + 1,
                msg,
            };
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (term, count) = match line.split_once('\t') {
                Some((t, c)) => {
                    let count: u64 = c
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad count {c:?}")))?;
                    (t, count)
                }
                None => (line, 1),
            };
            if count == 0 {
                return Err(err("count must be positive".into()));
            }
            let term = normalize_term(term);
            if term.is_empty() {
                return Err(err("empty term".into()));
            }
            if !terms.contains_key(&term) {
                order.push(term.clone());
            }
            *terms.entry(term).or_default() += count;
        }
        let terms = order
            .into_iter()
            .map(|t| {
                let c = terms[&t];
                (t, c)
            })
            .collect();
        Ok(FixtureSource::new(name, terms))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EnrichError> {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Self::parse(name, &fs::read_to_string(path)?, &path.display().to_string())
    }
}

impl KeywordSource for FixtureSource {
    fn name(&self) -> &str {
        &self.name
    }

    fn related_terms(&self, query: &str) -> Result<Vec<(String, u64)>, SourceError> {
        match &self.query {
            Some(q) if *q != normalize_term(query) => Ok(Vec::new()),
            _ => Ok(self.terms.clone()),
        }
    }
}

type Lookup = Result<Vec<(String, u64)>, SourceError>;

/// Memoizes another source so repeated lookups in one run agree.
pub struct CachedSource<S> {
    inner: S,
    cache: Mutex<HashMap<String, Lookup>>,
}

impl<S: KeywordSource> CachedSource<S> {
    pub fn new(inner: S) -> Self {
        CachedSource { inner, cache: Mutex::new(HashMap::new()) }
    }
}

impl<S: KeywordSource> KeywordSource for CachedSource<S> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn related_terms(&self, query: &str) -> Result<Vec<(String, u64)>, SourceError> {
        let key = normalize_term(query);
        let mut cache = self.cache.lock().expect("source cache poisoned");
        cache
            .entry(key)
            .or_insert_with(|| self.inner.related_terms(query))
            .clone()
    }
}

/// Keyword source backed by an HTTP endpoint that answers
/// `GET <base_url>?<param>=<query>` with the fixture line format.
#[cfg(feature = "http")]
pub struct HttpSource {
    name: String,
    base_url: String,
    param: String,
    client: reqwest::blocking::Client,
}

#[cfg(feature = "http")]
impl HttpSource {
    pub fn new(name: impl Into<String>, base_url: impl Into<String>, param: impl Into<String>) -> Self {
        HttpSource {
            name: name.into(),
            base_url: base_url.into(),
            param: param.into(),
            client: reqwest::blocking::Client::new(),
        }
    }

    /// Wraps the source in a cache, which live sources should always use.
    pub fn cached(self) -> CachedSource<Self> {
        CachedSource::new(self)
    }
}

#[cfg(feature = "http")]
impl KeywordSource for HttpSource {
    fn name(&self) -> &str {
        &self.name
    }

    fn related_terms(&self, query: &str) -> Result<Vec<(String, u64)>, SourceError> {
        let unavailable = |reason: String| SourceError::Unavailable {
            source_name: self.name.clone(),
            reason,
        };
        let resp = self
            .client
            .get(&self.base_url)
            .query(&[(self.param.as_str(), query)])
            .send()
            .map_err(|e| unavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unavailable(format!("HTTP {}", resp.status())));
        }
        let body = resp.text().map_err(|e| unavailable(e.to_string()))?;
        FixtureSource::parse(self.name.clone(), &body, &self.base_url)
            .map(|f| f.terms)
            .map_err(|e| unavailable(e.to_string()))
    }
}

/// Term statistics gathered from all sources that answered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Collected {
    /// Total occurrences of each term over all sources.
    pub freqs: BTreeMap<String, u64>,
    /// Number of sources returning each term.
    pub presence: BTreeMap<String, u32>,
    /// Sources that answered successfully.
    pub num_sources: usize,
    pub warnings: Vec<String>,
}

/// Queries every source (concurrently) and merges their answers. Failing
/// sources are skipped with a warning as long as one source answers.
pub fn collect(sources: &[&dyn KeywordSource], query: &str) -> Result<Collected, EnrichError> {
    if normalize_term(query).is_empty() {
        return Err(EnrichError::EmptyQuery);
    }
    if sources.is_empty() {
        return Err(EnrichError::NoSources);
    }
    let answers: Vec<_> = thread::scope(|scope| {
        let handles: Vec<_> = sources
            .iter()
            .map(|src| scope.spawn(move || src.related_terms(query)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("keyword source panicked"))
            .collect()
    });

    let mut out = Collected::default();
    for (src, answer) in sources.iter().zip(answers) {
        match answer {
            Ok(terms) => {
                out.num_sources += 1;
                let mut seen_here = BTreeMap::new();
                for (term, count) in terms {
                    let term = normalize_term(&term);
                    if term.is_empty() || count == 0 {
                        continue;
                    }
                    *seen_here.entry(term).or_insert(0u64) += count;
                }
                for (term, count) in seen_here {
                    *out.freqs.entry(term.clone()).or_default() += count;
                    *out.presence.entry(term).or_default() += 1;
                }
            }
            Err(e) => {
                warn!("skipping keyword source {}: {e}", src.name());
                out.warnings.push(e.to_string());
            }
        }
    }
    if out.num_sources == 0 {
        return Err(EnrichError::AllSourcesFailed(sources.len()));
    }
    Ok(out)
}

/// A related term with its TF-IDF weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedKeyword {
    pub term: String,
    pub raw_frequency: u64,
    pub idf: f64,
    /// `raw_frequency * idf`
    pub weight: f64,
    /// Weight rescaled to [0, 1] over the candidate set.
    pub normalized: f64,
}

/// Smoothed inverse document frequency, `ln((1 + n) / (1 + df)) + 1`.
pub fn idf(num_sources: usize, presence: u32) -> f64 {
    ((1.0 + num_sources as f64) / (1.0 + f64::from(presence))).ln() + 1.0
}

fn rank_order(a: &WeightedKeyword, b: &WeightedKeyword) -> std::cmp::Ordering {
    b.normalized
        .total_cmp(&a.normalized)
        .then(b.weight.total_cmp(&a.weight))
        .then_with(|| a.term.cmp(&b.term))
}

/// Weights every term and sorts by weight descending, ties by term.
/// `normalized` is min-max scaled; when all weights are equal it is 1.
pub fn tfidf_weights(
    freqs: &BTreeMap<String, u64>,
    num_sources: usize,
    presence: &BTreeMap<String, u32>,
) -> Result<Vec<WeightedKeyword>, EnrichError> {
    if freqs.is_empty() || num_sources == 0 {
        return Err(EnrichError::EmptyInput);
    }
    let mut out = Vec::with_capacity(freqs.len());
    for (term, &raw_frequency) in freqs {
        let df = presence.get(term).copied().unwrap_or(1).max(1);
        if df as usize > num_sources {
            return Err(EnrichError::InvalidPresence {
                term: term.clone(),
                presence: df,
                num_sources,
            });
        }
        let idf = idf(num_sources, df);
        out.push(WeightedKeyword {
            term: term.clone(),
            raw_frequency,
            idf,
            weight: raw_frequency as f64 * idf,
            normalized: 0.0,
        });
    }
    let max = out.iter().map(|k| k.weight).fold(f64::NEG_INFINITY, f64::max);
    let min = out.iter().map(|k| k.weight).fold(f64::INFINITY, f64::min);
    for k in &mut out {
        k.normalized = if max > min { (k.weight - min) / (max - min) } else { 1.0 };
    }
    out.sort_by(rank_order);
    Ok(out)
}

/// An enriched query: the kept keywords ranked by relevance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedQuery {
    pub original: String,
    pub keywords: Vec<WeightedKeyword>,
    pub alpha: f64,
}

impl EnrichedQuery {
    /// A query with no enrichment: the original term alone at weight 1.
    pub fn bare(query: &str) -> Self {
        let term = normalize_term(query);
        EnrichedQuery {
            original: term.clone(),
            keywords: vec![WeightedKeyword {
                term,
                raw_frequency: 1,
                idf: 1.0,
                weight: 1.0,
                normalized: 1.0,
            }],
            alpha: 1.0,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(|k| k.term.as_str())
    }

    pub fn contains(&self, term: &str) -> bool {
        self.keywords.iter().any(|k| k.term == term)
    }

    /// `term<TAB>normalized_weight` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for k in &self.keywords {
            let _ = writeln!(out, "{}\t{}", k.term, k.normalized);
        }
        out
    }
}

/// Keeps keywords whose normalized weight is at least `alpha`; the original
/// query term is always kept at normalized weight 1.
pub fn most_related(
    weighted: Vec<WeightedKeyword>,
    query: &str,
    num_sources: usize,
    alpha: f64,
) -> Result<EnrichedQuery, EnrichError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(EnrichError::InvalidAlpha(alpha));
    }
    let original = normalize_term(query);
    if original.is_empty() {
        return Err(EnrichError::EmptyQuery);
    }
    let mut keywords: Vec<WeightedKeyword> = weighted
        .into_iter()
        .filter(|k| k.term == original || k.normalized >= alpha)
        .collect();
    match keywords.iter_mut().find(|k| k.term == original) {
        Some(k) => k.normalized = 1.0,
        None => {
            let idf = idf(num_sources, 0);
            keywords.push(WeightedKeyword {
                term: original.clone(),
                raw_frequency: 1,
                idf,
                weight: idf,
                normalized: 1.0,
            });
        }
    }
    keywords.sort_by(rank_order);
    Ok(EnrichedQuery { original, keywords, alpha })
}

/// Full enrichment: collect, weight, threshold.
pub fn enrich(
    sources: &[&dyn KeywordSource],
    query: &str,
    alpha: f64,
) -> Result<EnrichedQuery, EnrichError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(EnrichError::InvalidAlpha(alpha));
    }
    let collected = collect(sources, query)?;
    let weighted = if collected.freqs.is_empty() {
        Vec::new()
    } else {
        tfidf_weights(&collected.freqs, collected.num_sources, &collected.presence)?
    };
    most_related(weighted, query, collected.num_sources, alpha)
}

/// Loads fixture sources for `query` from `dir`.
///
/// If `dir/<query>/` exists its `*.tsv` files are used, otherwise the
/// `*.tsv` files directly inside `dir`. Files are read in name order.
pub fn load_fixture_dir(dir: impl AsRef<Path>, query: &str) -> Result<Vec<FixtureSource>, EnrichError> {
    let dir = dir.as_ref();
    let per_query = dir.join(normalize_term(query));
    let root = if per_query.is_dir() { per_query } else { dir.to_path_buf() };
    let mut paths: Vec<PathBuf> = fs::read_dir(&root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "tsv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(EnrichError::NoFixtures(root));
    }
    paths.into_iter().map(FixtureSource::load).collect()
}

macro_rules! builtin_fixture_set {
    ($query:literal: $($name:literal),+ $(,)?) => {
        &[$(($name, include_str!(concat!("../data/sources/", $query, "/", $name, ".tsv")))),+]
    };
}

static BUILTIN_OBAMA: &[(&str, &str)] = builtin_fixture_set!("obama":
    "datamuse", "dbpedia", "nyt", "pydictionary", "thesaurus", "wordnet", "wordnik", "wordsapi");
static BUILTIN_ENERGY: &[(&str, &str)] = builtin_fixture_set!("energy":
    "datamuse", "dbpedia", "nyt", "pydictionary", "thesaurus", "wordnet", "wordnik", "wordsapi");

/// Queries with bundled fixture sources.
pub fn builtin_queries() -> &'static [&'static str] {
    &["energy", "obama"]
}

/// Bundled fixture sources (eight per query, named after the lexical
/// services they stand in for).
pub fn builtin_sources(query: &str) -> Option<Vec<FixtureSource>> {
    let set = match normalize_term(query).as_str() {
        "obama" => BUILTIN_OBAMA,
        "energy" => BUILTIN_ENERGY,
        _ => return None,
    };
    Some(
        set.iter()
            .map(|(name, text)| {
                FixtureSource::parse(*name, text, name)
                    .expect("bundled fixture parses")
                    .for_query(query)
            })
            .collect(),
    )
}
