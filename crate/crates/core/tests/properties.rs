mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smartcrawl::archive::GraphArchive;
use smartcrawl::crawl::{select_node, selection_scores, CrawlConfig};
use smartcrawl::enrich::{most_related, tfidf_weights};
use smartcrawl::graph::{CrawlState, Edge, EdgeKind, Node, NodeId, NodeKind, Payload};
use smartcrawl::text::{normalize, KeywordMatcher, Lexicon, TokenizedText, DEFAULT_THETA};

use common::*;

fn allowed(kind: EdgeKind) -> (NodeKind, NodeKind) {
    use NodeKind::*;
    match kind {
        EdgeKind::HasHashtag => (Tweet, Hashtag),
        EdgeKind::Mentions => (Tweet, User),
        EdgeKind::Posts | EdgeKind::Favorites => (User, Tweet),
        EdgeKind::Follows => (User, User),
        EdgeKind::Quotes | EdgeKind::RepliesTo | EdgeKind::ReTweets => (Tweet, Tweet),
    }
}

fn plain_node(kind: NodeKind, name: &str) -> Node {
    let id = NodeId::new(kind, name).unwrap();
    let payload = match kind {
        NodeKind::Tweet => Payload::Tweet { text: "same words".into(), author: None },
        NodeKind::User => Payload::User { screen_name: name.into() },
        NodeKind::Hashtag => Payload::Hashtag { tag: name.into() },
    };
    Node::new(id, payload).unwrap()
}

fn arb_freqs() -> impl Strategy<Value = (BTreeMap<String, u64>, BTreeMap<String, u32>, usize)> {
    (2usize..9).prop_flat_map(|n| {
        prop::collection::btree_map("[a-z]{1,5}", (1u64..50, 1u32..=n as u32), 1..20).prop_map(move |m| {
            let freqs = m.iter().map(|(t, (f, _))| (t.clone(), *f)).collect();
            let presence = m.iter().map(|(t, (_, p))| (t.clone(), *p)).collect();
            (freqs, presence, n)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn edges_are_accepted_exactly_when_endpoint_kinds_match(k in 0usize..8, s in 0usize..3, d in 0usize..3) {
        let kind = EdgeKind::ALL[k];
        let (src_kind, dst_kind) = (NodeKind::ALL[s], NodeKind::ALL[d]);
        let mut g = smartcrawl::graph::CrawlGraph::new();
        g.add_node(plain_node(src_kind, "a")).unwrap();
        g.add_node(plain_node(dst_kind, "b")).unwrap();
        let src = NodeId::new(src_kind, "a").unwrap();
        let dst = NodeId::new(dst_kind, "b").unwrap();
        let ok = g.add_edge(Edge::new(kind, src, dst)).is_ok();
        prop_assert_eq!(ok, allowed(kind) == (src_kind, dst_kind));
    }

    #[test]
    fn random_graphs_keep_frontier_and_visited_partitioned(r in arb_recipe()) {
        let g = build_graph(&r);
        g.check_invariants().unwrap();
        let visited: BTreeSet<&NodeId> = g.visited().iter().collect();
        prop_assert_eq!(visited.len(), g.visited().len());
        for n in g.nodes() {
            let in_frontier = g.frontier().contains(n.id());
            let in_visited = visited.contains(n.id());
            prop_assert!(in_frontier != in_visited);
            prop_assert_eq!(n.state() == CrawlState::Visited, in_visited);
            let s = n.scores();
            let expected = match n.kind() {
                NodeKind::Tweet => s.text_score + s.feedback_score,
                NodeKind::User => s.estimate_score + s.feedback_score,
                NodeKind::Hashtag => s.estimate_score + s.feedback_score + f64::from(n.occurrence_count()),
            };
            prop_assert_eq!(s.final_score, expected);
        }
        prop_assert_eq!(g.frontier().len() + visited.len(), g.node_count());
        for e in g.edges() {
            prop_assert_eq!((e.src.kind(), e.dst.kind()), allowed(e.kind));
        }
    }

    #[test]
    fn raising_alpha_only_removes_keywords((freqs, presence, n) in arb_freqs(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let w = tfidf_weights(&freqs, n, &presence).unwrap();
        let keep = |alpha| -> BTreeSet<String> {
            most_related(w.clone(), "query", n, alpha).unwrap().keywords.into_iter().map(|k| k.term).collect()
        };
        prop_assert!(keep(hi).is_subset(&keep(lo)));
    }

    #[test]
    fn scaling_frequencies_keeps_ranking((freqs, presence, n) in arb_freqs(), c in 2u64..40) {
        let scaled: BTreeMap<String, u64> = freqs.iter().map(|(t, f)| (t.clone(), f * c)).collect();
        let a = tfidf_weights(&freqs, n, &presence).unwrap();
        let b = tfidf_weights(&scaled, n, &presence).unwrap();
        let terms = |v: &[smartcrawl::enrich::WeightedKeyword]| v.iter().map(|k| k.term.clone()).collect::<Vec<_>>();
        prop_assert_eq!(terms(&a), terms(&b));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.normalized - y.normalized).abs() < 1e-12);
        }
    }

    #[test]
    fn rarer_terms_weigh_more_at_equal_frequency(
        f in 1u64..100,
        (n, p1, p2) in (2usize..10).prop_flat_map(|n| (1..n as u32).prop_flat_map(move |p1| (Just(n), Just(p1), p1 + 1..=n as u32))),
    ) {
        let freqs = BTreeMap::from([("rare".to_string(), f), ("common".to_string(), f)]);
        let presence = BTreeMap::from([("rare".to_string(), p1), ("common".to_string(), p2)]);
        let w = tfidf_weights(&freqs, n, &presence).unwrap();
        prop_assert_eq!(&w[0].term, "rare");
        prop_assert!(w[0].weight > w[1].weight);
        let oracle = |p: u32| f as f64 * (((1 + n) as f64 / (1 + p) as f64).ln() + 1.0);
        prop_assert!((w[0].weight - oracle(p1)).abs() < 1e-9);
        prop_assert!((w[1].weight - oracle(p2)).abs() < 1e-9);
    }

    #[test]
    fn normalization_is_idempotent(s in "[a-zA-Z#@ ,.!']{0,60}|(walk|studies|the|runs|boxes|buses|is|children)( (walk|studies|the|runs|boxes|buses|is|children)){0,6}") {
        let lex = Lexicon::builtin();
        let once = normalize(&s, &lex);
        prop_assert_eq!(normalize(&once.joined(), &lex), once);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn archive_round_trip(r in arb_recipe(), query in "[ -~]{0,12}") {
        let a = GraphArchive::new(query, "cafe", build_graph(&r));
        let text = a.to_text();
        let b = GraphArchive::parse(&text).unwrap();
        prop_assert_eq!(b.graph.visited(), a.graph.visited());
        prop_assert_eq!(b.to_text(), text);
        prop_assert_eq!(b, a);
    }

    #[test]
    fn text_score_matches_brute_force(
        tweet in prop::collection::vec(any::<prop::sample::Index>(), 0..=10),
        keywords in prop::collection::vec((prop::collection::vec(any::<prop::sample::Index>(), 1..=3), 0.0f64..=1.0), 1..=5),
    ) {
        let lex = Lexicon::builtin();
        let words = stable_words(&lex);
        let sims = raw_similarities();
        let tweet: Vec<String> = tweet.iter().map(|i| i.get(&words).clone()).collect();
        let keywords: Vec<(Vec<String>, f64)> = keywords
            .iter()
            .map(|(ks, w)| (ks.iter().map(|i| i.get(&words).clone()).collect(), *w))
            .collect();
        let phrases: Vec<(String, f64)> = keywords.iter().map(|(k, w)| (k.join(" "), *w)).collect();
        let matcher = KeywordMatcher::from_weights(phrases.iter().map(|(p, w)| (p.as_str(), *w)), &lex, DEFAULT_THETA);
        let got = matcher.score_tokens(&TokenizedText::from_iter(tweet.clone()), &lex);
        let want = oracle_text_score(&tweet, &keywords, &sims, DEFAULT_THETA);
        prop_assert!((got - want).abs() < 1e-12, "{tweet:?} {keywords:?}: {got} vs {want}");
    }

    #[test]
    fn selection_is_a_distribution_matching_the_definition(frontier in arb_frontier(12), p in 0.0f64..=1.0) {
        let x: Vec<f64> = frontier.iter().map(|(_, s)| *s).collect();
        let probs = selection_scores(&x, p, 1e-6).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(probs.iter().all(|q| *q >= 0.0));
        for (a, b) in probs.iter().zip(oracle_probabilities(&x, p)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn selection_is_scale_invariant(frontier in arb_frontier(12), p in 0.0f64..=1.0, c in 0.1f64..10.0) {
        let x: Vec<f64> = frontier.iter().map(|(_, s)| *s).collect();
        let scaled: Vec<f64> = x.iter().map(|v| v * c).collect();
        let a = selection_scores(&x, p, 1e-6).unwrap();
        let b = selection_scores(&scaled, p, 1e-6).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn p_one_picks_the_best_and_p_zero_the_worst(frontier in arb_frontier(12)) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let greedy = CrawlConfig { p: 1.0, ..CrawlConfig::default() };
        prop_assert_eq!(select_node(&frontier, &greedy, &mut rng).unwrap(), oracle_argmax(&frontier));
        let contrary = CrawlConfig { p: 0.0, ..CrawlConfig::default() };
        prop_assert_eq!(select_node(&frontier, &contrary, &mut rng).unwrap(), oracle_argmin(&frontier));
    }
}
