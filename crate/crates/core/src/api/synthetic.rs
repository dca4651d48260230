//! Synthetic social network with a planted topical community.
//!
//! A fixed fraction of tweets, users and hashtags is topical. Every random
//! link whose endpoint is chosen by the generator (authorship, mentions,
//! hashtags, replies, favorites, follows) prefers an endpoint of the same
//! class with odds `intra_topic_edge_bias : 1`. Retweets and quotes always
//! point to a tweet of the same class, since their text is copied.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ApiBudget, ApiError, Incident, NodeRecord, SearchHit, SocialApi};
use crate::graph::{CrawlGraph, Edge, EdgeKind, Node, NodeId, NodeKind, Payload, MAX_TWEET_CHARS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Vocabulary {
    pub topical: Vec<String>,
    pub background: Vec<String>,
}

impl Vocabulary {
    /// Energy-themed topical words against everyday chatter.
    pub fn energy() -> Self {
        let topical = [
            "energy", "power", "solar", "wind", "renewable", "electricity", "fuel", "sustainable",
            "petrol", "breeze",
        ];
        let background = [
            "coffee", "football", "movie", "music", "weekend", "pizza", "travel", "game",
            "team", "fashion", "school", "birthday", "holiday", "dinner", "concert", "traffic",
            "puppy", "garden", "recipe", "beach", "selfie", "shopping", "netflix", "playlist",
            "gym", "running", "workout", "friday", "monday", "rain", "sunshine", "morning",
            "weather", "election", "vote", "senate", "market", "stocks", "crypto", "startup",
            "phone", "laptop", "update", "review", "tickets", "museum", "library", "book",
            "novel", "poetry", "cat", "dog", "family", "wedding", "baby", "kitchen", "burger",
            "tacos", "sushi", "basketball", "tennis", "goal", "striker", "album", "festival",
        ];
        Vocabulary {
            topical: topical.iter().map(|s| s.to_string()).collect(),
            background: background.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Parameters of a generated network. In a config file every field is
/// required except `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticNetConfig {
    pub num_users: usize,
    pub num_tweets: usize,
    pub num_hashtags: usize,
    pub topic_fraction: f64,
    pub intra_topic_edge_bias: f64,
    #[serde(default)]
    pub seed: u64,
    pub vocabulary: Vocabulary,
    #[serde(default)]
    pub shape: NetShape,
}

impl SyntheticNetConfig {
    /// 1000 users, 3000 tweets, 150 hashtags, 30% topical, bias 4.
    pub fn planted_default() -> Self {
        SyntheticNetConfig {
            num_users: 1000,
            num_tweets: 3000,
            num_hashtags: 150,
            topic_fraction: 0.3,
            intra_topic_edge_bias: 4.0,
            seed: 0,
            vocabulary: Vocabulary::energy(),
            shape: NetShape::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, ApiError> {
        let cfg: SyntheticNetConfig =
            toml::from_str(text).map_err(|e| ApiError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ApiError> {
        let bad = |m: String| Err(ApiError::InvalidConfig(m));
        if self.num_users == 0 || self.num_tweets == 0 {
            return bad("need at least one user and one tweet".into());
        }
        // 1.0 is admitted for the all-topical degenerate network
        if !(self.topic_fraction > 0.0 && self.topic_fraction <= 1.0) {
            return bad(format!("topic_fraction {} outside (0, 1]", self.topic_fraction));
        }
        if !self.intra_topic_edge_bias.is_finite() || self.intra_topic_edge_bias < 1.0 {
            return bad(format!("intra_topic_edge_bias {} below 1", self.intra_topic_edge_bias));
        }
        let v = &self.vocabulary;
        if v.topical.is_empty() || v.background.is_empty() {
            return bad("vocabulary lists must be non-empty".into());
        }
        for w in v.topical.iter().chain(&v.background) {
            if w.is_empty() || !w.chars().all(|c| c.is_lowercase() || c.is_ascii_digit()) {
                return bad(format!("vocabulary word {w:?} must be lowercase alphanumeric"));
            }
        }
        self.shape.validate().map_err(ApiError::InvalidConfig)?;
        let topical: BTreeSet<_> = v.topical.iter().collect();
        if let Some(w) = v.background.iter().find(|w| topical.contains(w)) {
            return bad(format!("{w:?} is both topical and background"));
        }
        Ok(())
    }

    fn topical_count(&self, n: usize) -> usize {
        ((n as f64) * self.topic_fraction).round() as usize
    }
}

#[derive(Debug, Clone)]
struct SynNode {
    payload: Payload,
    topical: bool,
}

/// A generated network with ground-truth labels.
#[derive(Debug, Clone)]
pub struct SyntheticNet {
    config: SyntheticNetConfig,
    nodes: BTreeMap<NodeId, SynNode>,
    edges: BTreeSet<Edge>,
    incident: HashMap<NodeId, Vec<Edge>>,
    // tweets newest first, the order search results come back in
    tweets_newest_first: Vec<NodeId>,
}

/// Role mix of tweets and per-node link counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetShape {
    pub reply_share: f64,
    pub retweet_share: f64,
    pub quote_share: f64,
    /// Inclusive word-count range of original tweets and replies.
    pub words_per_tweet: (usize, usize),
    /// Inclusive range of the words a quote adds in front of its origin.
    pub words_per_quote: (usize, usize),
    /// Chance that a word of a topical tweet comes from the topical list.
    pub topical_word_share: f64,
    /// Relative weights of 0, 1, 2, ... hashtags per original tweet.
    pub hashtag_count_weights: Vec<f64>,
    /// Relative weights of 0, 1, 2, ... mentions per original tweet.
    pub mention_count_weights: Vec<f64>,
    pub favorites_per_user: (usize, usize),
    pub follows_per_user: (usize, usize),
}

impl Default for NetShape {
    fn default() -> Self {
        NetShape {
            reply_share: 0.15,
            retweet_share: 0.35,
            quote_share: 0.15,
            words_per_tweet: (4, 9),
            words_per_quote: (2, 4),
            topical_word_share: 0.5,
            hashtag_count_weights: vec![0.5, 0.4, 0.1],
            mention_count_weights: vec![0.6, 0.3, 0.1],
            favorites_per_user: (0, 4),
            follows_per_user: (1, 6),
        }
    }
}

impl NetShape {
    fn validate(&self) -> Result<(), String> {
        let shares = [self.reply_share, self.retweet_share, self.quote_share];
        if shares.iter().any(|s| !(0.0..=1.0).contains(s)) || shares.iter().sum::<f64>() > 1.0 {
            return Err("reply, retweet and quote shares must be in [0, 1] and sum to at most 1".into());
        }
        if !(0.0..=1.0).contains(&self.topical_word_share) {
            return Err("topical_word_share must lie in [0, 1]".into());
        }
        let ranges = [self.words_per_tweet, self.words_per_quote, self.favorites_per_user, self.follows_per_user];
        if ranges.iter().any(|(lo, hi)| lo > hi) {
            return Err("every range needs min <= max".into());
        }
        if self.words_per_tweet.0 == 0 || self.words_per_quote.0 == 0 {
            return Err("tweets and quotes need at least one word".into());
        }
        for w in [&self.hashtag_count_weights, &self.mention_count_weights] {
            if w.is_empty() || w.iter().any(|x| x.is_nan() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                return Err("count weights must be non-negative with a positive sum".into());
            }
        }
        Ok(())
    }
}

fn pick_count(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let mut r: f64 = rng.random::<f64>() * weights.iter().sum::<f64>();
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return i;
        }
        r -= w;
    }
    weights.len() - 1
}

/// Picks from `same` with total weight `bias * |same|` and from `other`
/// with weight `|other|`, uniformly inside the chosen pool.
fn biased_pick(rng: &mut ChaCha8Rng, bias: f64, same: &[usize], other: &[usize]) -> Option<usize> {
    let ws = bias * same.len() as f64;
    let wo = other.len() as f64;
    if ws + wo == 0.0 {
        return None;
    }
    let pool = if rng.random::<f64>() * (ws + wo) < ws { same } else { other };
    Some(pool[rng.random_range(0..pool.len())])
}

fn split_pools(flags: &[bool], idx: impl Iterator<Item = usize>) -> [Vec<usize>; 2] {
    let mut pools = [Vec::new(), Vec::new()];
    for i in idx {
        pools[usize::from(flags[i])].push(i);
    }
    pools
}

fn planted_flags(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<bool> {
    let mut flags: Vec<bool> = (0..n).map(|i| i < k).collect();
    flags.shuffle(rng);
    flags
}

fn user_ext(i: usize) -> String {
    format!("u{i:05}")
}

fn tweet_ext(i: usize) -> String {
    format!("t{i:06}")
}

impl SyntheticNet {
    pub fn generate(config: &SyntheticNetConfig) -> Result<Self, ApiError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let bias = config.intra_topic_edge_bias;
        let vocab = &config.vocabulary;
        let shape = &config.shape;

        let user_flags = planted_flags(&mut rng, config.num_users, config.topical_count(config.num_users));
        let tag_flags =
            planted_flags(&mut rng, config.num_hashtags, config.topical_count(config.num_hashtags));
        let tweet_flags =
            planted_flags(&mut rng, config.num_tweets, config.topical_count(config.num_tweets));
        let user_pools = split_pools(&user_flags, 0..config.num_users);
        let tag_pools = split_pools(&tag_flags, 0..config.num_hashtags);

        let mut tag_names = Vec::with_capacity(config.num_hashtags);
        let mut counters = [0usize; 2];
        for &topical in &tag_flags {
            let words = if topical { &vocab.topical } else { &vocab.background };
            let c = &mut counters[usize::from(topical)];
            let base = &words[*c % words.len()];
            let round = *c / words.len();
            *c += 1;
            tag_names.push(if round == 0 { base.clone() } else { format!("{base}{round}") });
        }
        if tag_names.iter().collect::<BTreeSet<_>>().len() != tag_names.len() {
            return Err(ApiError::InvalidConfig("hashtag names collide; vary the vocabulary".into()));
        }

        let mut nodes: BTreeMap<NodeId, SynNode> = BTreeMap::new();
        let mut edges: BTreeSet<Edge> = BTreeSet::new();
        let user_ids: Vec<NodeId> = (0..config.num_users)
            .map(|i| NodeId::user(user_ext(i)))
            .collect::<Result<_, _>>()?;
        for (i, id) in user_ids.iter().enumerate() {
            nodes.insert(
                id.clone(),
                SynNode {
                    payload: Payload::User { screen_name: format!("user{i:05}") },
                    topical: user_flags[i],
                },
            );
        }
        let tag_ids: Vec<NodeId> = tag_names
            .iter()
            .map(|t| NodeId::hashtag(t.clone()))
            .collect::<Result<_, _>>()?;
        for (i, id) in tag_ids.iter().enumerate() {
            nodes.insert(
                id.clone(),
                SynNode { payload: Payload::Hashtag { tag: tag_names[i].clone() }, topical: tag_flags[i] },
            );
        }

        struct TweetInfo {
            text: String,
            tags: Vec<usize>,
            mentions: Vec<usize>,
        }
        let mut tweets: Vec<TweetInfo> = Vec::with_capacity(config.num_tweets);
        let mut tweet_ids: Vec<NodeId> = Vec::with_capacity(config.num_tweets);
        // originals and replies, by class: eligible reply/retweet/quote targets
        let mut base_pools: [Vec<usize>; 2] = [Vec::new(), Vec::new()];

        let gen_words = |rng: &mut ChaCha8Rng, topical: bool, range: (usize, usize)| -> Vec<String> {
            let n = rng.random_range(range.0..=range.1);
            let mut words: Vec<String> = (0..n)
                .map(|_| {
                    let from_topic = topical && rng.random::<f64>() < shape.topical_word_share;
                    let list = if from_topic { &vocab.topical } else { &vocab.background };
                    list[rng.random_range(0..list.len())].clone()
                })
                .collect();
            if topical && !words.iter().any(|w| vocab.topical.contains(w)) {
                let pos = rng.random_range(0..words.len());
                words[pos] = vocab.topical[rng.random_range(0..vocab.topical.len())].clone();
            }
            words
        };

        for (i, &topical) in tweet_flags.iter().enumerate() {
            let class = usize::from(topical);
            let id = NodeId::tweet(tweet_ext(i))?;
            let author = biased_pick(&mut rng, bias, &user_pools[class], &user_pools[1 - class])
                .expect("at least one user");
            let r: f64 = rng.random();
            let same_base = &base_pools[class];

            let mut info = TweetInfo { text: String::new(), tags: Vec::new(), mentions: Vec::new() };
            let mut is_base = true;
            if r < shape.retweet_share && !same_base.is_empty() {
                let origin = same_base[rng.random_range(0..same_base.len())];
                let o = &tweets[origin];
                info = TweetInfo { text: o.text.clone(), tags: o.tags.clone(), mentions: o.mentions.clone() };
                edges.insert(Edge::new(EdgeKind::ReTweets, id.clone(), tweet_ids[origin].clone()));
                is_base = false;
            } else if r < shape.retweet_share + shape.quote_share && !same_base.is_empty() {
                let origin = same_base[rng.random_range(0..same_base.len())];
                let own = gen_words(&mut rng, topical, shape.words_per_quote).join(" ");
                let text = format!("{own} {}", tweets[origin].text);
                if text.chars().count() <= MAX_TWEET_CHARS {
                    info.text = text;
                    edges.insert(Edge::new(EdgeKind::Quotes, id.clone(), tweet_ids[origin].clone()));
                    is_base = false;
                }
            }
            if is_base {
                let before_reply = shape.retweet_share + shape.quote_share;
                if r >= before_reply && r < before_reply + shape.reply_share {
                    if let Some(origin) =
                        biased_pick(&mut rng, bias, &base_pools[class], &base_pools[1 - class])
                    {
                        edges.insert(Edge::new(EdgeKind::RepliesTo, id.clone(), tweet_ids[origin].clone()));
                    }
                }
                let mut parts = gen_words(&mut rng, topical, shape.words_per_tweet);
                for _ in 0..pick_count(&mut rng, &shape.hashtag_count_weights) {
                    if let Some(h) = biased_pick(&mut rng, bias, &tag_pools[class], &tag_pools[1 - class]) {
                        if !info.tags.contains(&h) {
                            info.tags.push(h);
                            parts.push(format!("#{}", tag_names[h]));
                        }
                    }
                }
                for _ in 0..pick_count(&mut rng, &shape.mention_count_weights) {
                    let u = biased_pick(&mut rng, bias, &user_pools[class], &user_pools[1 - class])
                        .expect("at least one user");
                    if u != author && !info.mentions.contains(&u) {
                        info.mentions.push(u);
                        parts.push(format!("@user{u:05}"));
                    }
                }
                info.text = parts.join(" ");
                base_pools[class].push(i);
            }

            edges.insert(Edge::new(EdgeKind::Posts, user_ids[author].clone(), id.clone()));
            for &h in &info.tags {
                edges.insert(Edge::new(EdgeKind::HasHashtag, id.clone(), tag_ids[h].clone()));
            }
            for &u in &info.mentions {
                edges.insert(Edge::new(EdgeKind::Mentions, id.clone(), user_ids[u].clone()));
            }
            let payload = Payload::Tweet { text: info.text.clone(), author: Some(user_ext(author)) };
            payload.validate()?;
            nodes.insert(id.clone(), SynNode { payload, topical });
            tweets.push(info);
            tweet_ids.push(id);
        }

        let tweet_pools = split_pools(&tweet_flags, 0..config.num_tweets);
        for u in 0..config.num_users {
            let class = usize::from(user_flags[u]);
            let n = rng.random_range(shape.favorites_per_user.0..=shape.favorites_per_user.1);
            for _ in 0..n {
                if let Some(t) = biased_pick(&mut rng, bias, &tweet_pools[class], &tweet_pools[1 - class]) {
                    edges.insert(Edge::new(EdgeKind::Favorites, user_ids[u].clone(), tweet_ids[t].clone()));
                }
            }
            let n = rng.random_range(shape.follows_per_user.0..=shape.follows_per_user.1);
            for _ in 0..n {
                if let Some(v) = biased_pick(&mut rng, bias, &user_pools[class], &user_pools[1 - class]) {
                    if v != u {
                        edges.insert(Edge::new(EdgeKind::Follows, user_ids[u].clone(), user_ids[v].clone()));
                    }
                }
            }
        }

        let mut incident: HashMap<NodeId, Vec<Edge>> = HashMap::new();
        for e in &edges {
            incident.entry(e.src.clone()).or_default().push(e.clone());
            incident.entry(e.dst.clone()).or_default().push(e.clone());
        }
        for (id, list) in incident.iter_mut() {
            list.sort_by(|a, b| {
                (a.kind, a.other(id)).cmp(&(b.kind, b.other(id)))
            });
        }
        let mut tweets_newest_first = tweet_ids;
        tweets_newest_first.reverse();

        Ok(SyntheticNet { config: config.clone(), nodes, edges, incident, tweets_newest_first })
    }

    pub fn config(&self) -> &SyntheticNetConfig {
        &self.config
    }

    /// A crawler-facing view with its own budget.
    pub fn api(&self, budget: ApiBudget) -> SyntheticApi<'_> {
        SyntheticApi { net: self, budget }
    }

    /// Ground-truth topical label of any node.
    pub fn truth(&self, id: &NodeId) -> Option<bool> {
        self.nodes.get(id).map(|n| n.topical)
    }

    /// Labels of all tweets.
    pub fn tweet_truth(&self) -> BTreeMap<NodeId, bool> {
        self.nodes
            .iter()
            .filter(|(id, _)| id.kind() == NodeKind::Tweet)
            .map(|(id, n)| (id.clone(), n.topical))
            .collect()
    }

    pub fn payload(&self, id: &NodeId) -> Option<&Payload> {
        self.nodes.get(id).map(|n| &n.payload)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Whole network as a graph (every node in the frontier state).
    pub fn to_graph(&self) -> CrawlGraph {
        let mut g = CrawlGraph::new();
        for (id, n) in &self.nodes {
            g.add_node(Node::new(id.clone(), n.payload.clone()).expect("generated node is valid"))
                .expect("ids are unique");
        }
        for e in &self.edges {
            g.add_edge(e.clone()).expect("generated edge is valid");
        }
        g
    }

    fn record(&self, id: &NodeId) -> Option<NodeRecord> {
        let node = self.nodes.get(id)?;
        let incident = self
            .incident
            .get(id)
            .map(|edges| {
                edges
                    .iter()
                    .map(|e| {
                        let neighbor = e.other(id).expect("incident edge").clone();
                        let payload = self.nodes[&neighbor].payload.clone();
                        Incident { edge: e.clone(), neighbor, payload }
                    })
                    .collect()
            })
            .unwrap_or_default();
        Some(NodeRecord { id: id.clone(), payload: node.payload.clone(), incident })
    }

    fn search(&self, keywords: &[String], limit: usize) -> Vec<SearchHit> {
        let needles: Vec<String> = keywords.iter().map(|k| k.to_lowercase()).collect();
        self.tweets_newest_first
            .iter()
            .filter_map(|id| {
                let payload = &self.nodes[id].payload;
                let text = payload.tweet_text()?.to_lowercase();
                needles
                    .iter()
                    .any(|k| text.contains(k.as_str()))
                    .then(|| SearchHit { id: id.clone(), payload: payload.clone() })
            })
            .take(limit)
            .collect()
    }
}

/// Budgeted access to a [`SyntheticNet`].
#[derive(Debug, Clone)]
pub struct SyntheticApi<'a> {
    net: &'a SyntheticNet,
    budget: ApiBudget,
}

impl SocialApi for SyntheticApi<'_> {
    fn fetch(&mut self, id: &NodeId) -> Result<NodeRecord, ApiError> {
        self.budget.try_spend()?;
        self.net.record(id).ok_or_else(|| ApiError::NotFound(id.clone()))
    }

    fn keyword_search(&mut self, keywords: &[String], limit: usize) -> Result<Vec<SearchHit>, ApiError> {
        if keywords.is_empty() {
            return Err(ApiError::EmptyKeywords);
        }
        self.budget.try_spend()?;
        Ok(self.net.search(keywords, limit))
    }

    fn budget(&self) -> &ApiBudget {
        &self.budget
    }

    fn wait_tick(&mut self) {
        self.budget.wait_tick();
    }
}
