//! Tweet content analysis: tokenization, rule-based lemmatization, stopword
//! removal, and keyword matching (lexical phrase matching plus a lookup in a
//! precomputed word-similarity table).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::enrich::EnrichedQuery;

/// Default lexicon shipped with the crate.
pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.tsv");

/// Default semantic similarity threshold.
pub const DEFAULT_THETA: f64 = 0.8;

// Rules never shorten a word below this many characters.
const MIN_STEM_CHARS: usize = 3;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("relation {a} <-> {b} listed with conflicting similarities {s1} and {s2}")]
    Asymmetric { a: String, b: String, s1: f64, s2: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaRule {
    pub suffix: String,
    pub replacement: String,
}

impl LemmaRule {
    /// A rule whose replacement equals its suffix shields matching words
    /// from the rules after it.
    fn is_guard(&self) -> bool {
        self.suffix == self.replacement
    }
}

/// Word-level resources for normalization and semantic matching.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    rules: Vec<LemmaRule>,
    exceptions: HashMap<String, String>,
    stopwords: BTreeSet<String>,
    relations: HashMap<String, BTreeMap<String, f64>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// The lexicon bundled with the crate.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Parses the line format:
    ///
    /// ```text
    /// L<TAB>suffix<TAB>replacement     lemma rule, applied in file order
    /// X<TAB>word<TAB>lemma             exception, overrides the rules
    /// S<TAB>word                       stopword
    /// R<TAB>a<TAB>b<TAB>similarity     symmetric relation, similarity in [0,1]
    /// ```
    ///
    /// Blank lines and lines starting with `#` are ignored. Relation terms
    /// are lemmatized with the file's own rules so they line up with
    /// normalized tokens.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new();
        let mut raw_relations = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let err = |msg: String| LexiconError::Parse { line: lineno, msg };
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["L", suffix, replacement] => {
                    if suffix.is_empty() {
                        return Err(err("empty rule suffix".into()));
                    }
                    lex.add_rule(suffix, replacement);
                }
                ["X", word, lemma] => {
                    lex.exceptions
                        .insert(word.to_lowercase(), lemma.to_lowercase());
                }
                ["S", word] => lex.add_stopword(word),
                ["R", a, b, sim] => {
                    let sim: f64 = sim
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad similarity {sim:?}")))?;
                    if !(0.0..=1.0).contains(&sim) {
                        return Err(err(format!("similarity {sim} outside [0,1]")));
                    }
                    raw_relations.push((a.to_lowercase(), b.to_lowercase(), sim));
                }
                _ => return Err(err(format!("unrecognized record {line:?}"))),
            }
        }
        for (a, b, sim) in raw_relations {
            let a = lex.lemmatize(a.trim());
            let b = lex.lemmatize(b.trim());
            lex.add_relation(&a, &b, sim)?;
        }
        Ok(lex)
    }

    pub fn add_rule(&mut self, suffix: &str, replacement: &str) {
        self.rules.push(LemmaRule {
            suffix: suffix.to_lowercase(),
            replacement: replacement.to_lowercase(),
        });
    }

    pub fn add_stopword(&mut self, word: &str) {
        self.stopwords.insert(word.trim().to_lowercase());
    }

    /// Adds `a <-> b` in both directions.
    pub fn add_relation(&mut self, a: &str, b: &str, sim: f64) -> Result<(), LexiconError> {
        if a == b {
            return Ok(());
        }
        if let Some(&existing) = self.relations.get(a).and_then(|m| m.get(b)) {
            if existing != sim {
                return Err(LexiconError::Asymmetric {
                    a: a.into(),
                    b: b.into(),
                    s1: existing,
                    s2: sim,
                });
            }
        }
        self.relations
            .entry(a.to_string())
            .or_default()
            .insert(b.to_string(), sim);
        self.relations
            .entry(b.to_string())
            .or_default()
            .insert(a.to_string(), sim);
        Ok(())
    }

    pub fn rules(&self) -> &[LemmaRule] {
        &self.rules
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    /// Direct similarity lookup; identical words score 1, unknown pairs 0.
    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        if a == b {
            return 1.0;
        }
        self.relations
            .get(a)
            .and_then(|m| m.get(b))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.relations
            .iter()
            .flat_map(|(a, m)| m.iter().map(move |(b, s)| (a.as_str(), b.as_str(), *s)))
    }

    /// Rewrites a lowercase word to its root form.
    ///
    /// Rules are applied repeatedly until none fires, so the result is a
    /// fixed point: lemmatizing it again changes nothing.
    pub fn lemmatize(&self, word: &str) -> String {
        let mut current = word.to_string();
        // every non-guard rewrite shrinks the word or hits an exception, so
        // this terminates well before the cap
        for _ in 0..=word.len() + 1 {
            if let Some(lemma) = self.exceptions.get(&current) {
                if *lemma == current {
                    return current;
                }
                current = lemma.clone();
                continue;
            }
            match self.apply_first_rule(&current) {
                Some(next) if next != current => current = next,
                _ => return current,
            }
        }
        current
    }

    fn apply_first_rule(&self, word: &str) -> Option<String> {
        for rule in &self.rules {
            let Some(stem) = word.strip_suffix(rule.suffix.as_str()) else {
                continue;
            };
            if rule.is_guard() {
                return None;
            }
            if stem.chars().count() < MIN_STEM_CHARS {
                continue;
            }
            let candidate = format!("{stem}{}", rule.replacement);
            // rewrites that grow the word could cycle
            if candidate.len() >= word.len() {
                continue;
            }
            return Some(candidate);
        }
        None
    }
}

/// Lemmatized lowercase tokens with stopwords and punctuation removed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedText {
    tokens: Vec<String>,
}

impl TokenizedText {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

impl<S: Into<String>> FromIterator<S> for TokenizedText {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        TokenizedText {
            tokens: iter.into_iter().map(Into::into).collect(),
        }
    }
}

/// Splits on anything that is not alphanumeric (so `#energy` yields
/// `energy`), lowercases, lemmatizes and drops stopwords. A word is dropped
/// when either its surface form or its lemma is a stopword.
pub fn normalize(text: &str, lexicon: &Lexicon) -> TokenizedText {
    // lowercase before splitting: some lowercase mappings emit combining marks
    let lower = text.to_lowercase();
    let tokens = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .filter_map(|w| {
            if lexicon.is_stopword(w) {
                return None;
            }
            let lemma = lexicon.lemmatize(w);
            (!lemma.is_empty() && !lexicon.is_stopword(&lemma)).then_some(lemma)
        })
        .collect();
    TokenizedText { tokens }
}

/// Number of places where the keyword's token sequence occurs contiguously
/// in the tweet. Not normalized by tweet length.
pub fn lexical_matches(tweet: &TokenizedText, keyword: &TokenizedText) -> usize {
    let k = keyword.tokens.len();
    if k == 0 || k > tweet.tokens.len() {
        return 0;
    }
    tweet
        .tokens
        .windows(k)
        .filter(|w| *w == keyword.tokens.as_slice())
        .count()
}

/// True when the lexicon lists the pair with similarity at least `theta`.
/// Identical tokens always match.
pub fn semantic_match(tweet_token: &str, keyword_token: &str, lexicon: &Lexicon, theta: f64) -> bool {
    tweet_token == keyword_token || lexicon.similarity(tweet_token, keyword_token) >= theta
}

/// Keywords of an enriched query, pre-tokenized for repeated scoring.
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    keywords: Vec<(TokenizedText, f64)>,
    theta: f64,
}

impl KeywordMatcher {
    pub fn new(enriched: &EnrichedQuery, lexicon: &Lexicon, theta: f64) -> Self {
        let keywords = enriched
            .keywords
            .iter()
            .map(|k| (normalize(&k.term, lexicon), k.normalized))
            .collect();
        KeywordMatcher { keywords, theta }
    }

    /// Builds a matcher from explicit `(keyword, weight)` pairs.
    pub fn from_weights<'a>(
        weights: impl IntoIterator<Item = (&'a str, f64)>,
        lexicon: &Lexicon,
        theta: f64,
    ) -> Self {
        let keywords = weights
            .into_iter()
            .map(|(term, w)| (normalize(term, lexicon), w))
            .collect();
        KeywordMatcher { keywords, theta }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Sum of the weights of keywords matched either lexically or through
    /// the lexicon. Each keyword contributes at most once.
    pub fn score(&self, tweet_text: &str, lexicon: &Lexicon) -> f64 {
        self.score_tokens(&normalize(tweet_text, lexicon), lexicon)
    }

    pub fn score_tokens(&self, tweet: &TokenizedText, lexicon: &Lexicon) -> f64 {
        self.keywords
            .iter()
            .filter(|(kw, _)| self.keyword_matches(tweet, kw, lexicon))
            .fold(0.0, |acc, (_, w)| acc + w)
    }

    fn keyword_matches(&self, tweet: &TokenizedText, keyword: &TokenizedText, lexicon: &Lexicon) -> bool {
        lexical_matches(tweet, keyword) > 0
            || keyword.tokens.iter().any(|kt| {
                tweet
                    .tokens
                    .iter()
                    .any(|tt| semantic_match(tt, kt, lexicon, self.theta))
            })
    }
}

/// One-shot text score of a tweet against an enriched query.
pub fn text_score(tweet_text: &str, enriched: &EnrichedQuery, lexicon: &Lexicon, theta: f64) -> f64 {
    KeywordMatcher::new(enriched, lexicon, theta).score(tweet_text, lexicon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> TokenizedText {
        words.iter().copied().collect()
    }

    fn small_lexicon() -> Lexicon {
        let mut lex = Lexicon::new();
        lex.add_rule("s", "");
        lex.add_rule("ing", "");
        lex.add_stopword("the");
        lex.add_stopword("are");
        lex
    }

    #[test]
    fn banks_are_banking() {
        let got = normalize("The banks are banking", &small_lexicon());
        assert_eq!(got, toks(&["bank", "bank"]));
    }

    #[test]
    fn builtin_lexicon_handles_banks() {
        let lex = Lexicon::builtin();
        assert_eq!(normalize("The banks are banking", &lex), toks(&["bank", "bank"]));
    }

    #[test]
    fn empty_and_all_stopwords() {
        let lex = Lexicon::builtin();
        assert!(normalize("", &lex).is_empty());
        assert!(normalize("of the a", &lex).is_empty());
        assert!(normalize("!!! ... ,", &lex).is_empty());
    }

    #[test]
    fn hashtags_and_punctuation() {
        let lex = small_lexicon();
        assert_eq!(normalize("#Energy, now!", &lex), toks(&["energy", "now"]));
    }

    #[test]
    fn lemmatize_respects_guards_and_exceptions() {
        let lex = Lexicon::parse("L\tss\tss\nL\ties\ty\nL\ts\t\nX\tchildren\tchild\n").unwrap();
        assert_eq!(lex.lemmatize("glass"), "glass");
        assert_eq!(lex.lemmatize("energies"), "energy");
        assert_eq!(lex.lemmatize("children"), "child");
        assert_eq!(lex.lemmatize("gas"), "gas"); // stem too short
    }

    #[test]
    fn lexical_phrase_rules() {
        assert_eq!(lexical_matches(&toks(&["solar", "energy", "rise"]), &toks(&["energy"])), 1);
        assert_eq!(
            lexical_matches(&toks(&["barack", "obama", "speech"]), &toks(&["barack", "obama"])),
            1
        );
        assert_eq!(
            lexical_matches(&toks(&["obama", "meets", "barack"]), &toks(&["barack", "obama"])),
            0
        );
        assert_eq!(lexical_matches(&toks(&["a"]), &toks(&[])), 0);
    }

    #[test]
    fn semantic_lookup() {
        let mut lex = Lexicon::new();
        lex.add_relation("car", "automobile", 0.9).unwrap();
        assert!(semantic_match("car", "automobile", &lex, 0.8));
        assert!(semantic_match("automobile", "car", &lex, 0.8));
        assert!(!semantic_match("car", "automobile", &lex, 0.95));
        assert!(semantic_match("zebra", "zebra", &lex, 1.0));
        assert!(!semantic_match("car", "boat", &lex, 0.0 + f64::EPSILON));
    }

    #[test]
    fn parse_rejects_bad_lines() {
        assert!(Lexicon::parse("R\ta\tb\t1.5\n").is_err());
        assert!(Lexicon::parse("Q\tfoo\n").is_err());
        assert!(Lexicon::parse("R\ta\tb\t0.5\nR\tb\ta\t0.6\n").is_err());
        let lex = Lexicon::parse("# comment\n\nS\tThe\nR\ta\tb\t0.5\nR\tb\ta\t0.5\n").unwrap();
        assert!(lex.is_stopword("the"));
        assert_eq!(lex.similarity("b", "a"), 0.5);
    }

    #[test]
    fn relation_terms_are_lemmatized() {
        let lex = Lexicon::parse("L\ts\t\nR\tcars\tautomobiles\t0.9\n").unwrap();
        assert_eq!(lex.similarity("car", "automobile"), 0.9);
    }

    #[test]
    fn score_with_semantic_link() {
        let mut lex = Lexicon::new();
        lex.add_relation("power", "energy", 0.85).unwrap();
        let m = KeywordMatcher::from_weights([("energy", 1.0), ("power", 0.8)], &lex, 0.8);
        assert!((m.score("solar energy future", &lex) - 1.8).abs() < 1e-12);
    }

    #[test]
    fn score_without_overlap_is_zero() {
        let lex = Lexicon::new();
        let m = KeywordMatcher::from_weights([("energy", 1.0)], &lex, 0.8);
        assert_eq!(m.score("coffee and cake", &lex), 0.0);
    }

    #[test]
    fn repeated_keyword_counted_once() {
        let lex = Lexicon::new();
        let m = KeywordMatcher::from_weights([("energy", 0.7)], &lex, 0.8);
        assert_eq!(m.score("energy energy energy", &lex), 0.7);
    }

    #[test]
    fn builtin_lexicon_is_symmetric_and_bounded() {
        let lex = Lexicon::builtin();
        let mut n = 0;
        for (a, b, s) in lex.relations() {
            assert!((0.0..=1.0).contains(&s));
            assert_eq!(lex.similarity(b, a), s);
            n += 1;
        }
        assert!(n > 0);
        for w in &lex.stopwords {
            assert_eq!(w, &w.to_lowercase());
        }
    }
}
