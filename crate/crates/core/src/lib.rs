//! Topic-focused crawling of a heterogeneous tweet/user/hashtag graph.

pub mod api;
pub mod archive;
pub mod crawl;
pub mod enrich;
pub mod eval;
pub mod graph;
pub mod text;
