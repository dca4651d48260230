use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use smartcrawl::api::{ApiBudget, Recorder, ReplayApi, SocialApi, SyntheticNet, SyntheticNetConfig, Trace};
use smartcrawl::archive::{config_hash, GraphArchive};
use smartcrawl::crawl::{crawl, crawl_bfs, CrawlConfig, CrawlOutcome};
use smartcrawl::enrich::{builtin_queries, builtin_sources, enrich, load_fixture_dir, EnrichedQuery, KeywordSource};
use smartcrawl::eval::{compare, evaluate, format_truth, load_truth, reports_table, reports_tsv, Method};
use smartcrawl::text::Lexicon;

#[derive(Parser)]
#[command(name = "smartcrawl", version, about = "Topic-focused crawler for tweet/user/hashtag graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a query into weighted related keywords.
    Enrich {
        #[command(flatten)]
        query: QueryArgs,
        /// Keep keywords with normalized weight at least this.
        #[arg(long, default_value_t = smartcrawl::enrich::DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Generate a synthetic network; write it as an archive plus a truth file.
    Generate {
        #[arg(long)]
        net_config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Run the focused crawler.
    Crawl(CrawlArgs),
    /// Run the breadth-first baseline.
    Bfs(CrawlArgs),
    /// Score an archive against a truth file.
    Eval {
        #[arg(long)]
        archive: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Stic)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Focused crawl against the baseline over many generated networks.
    Compare {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        net_config: Option<PathBuf>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        runs: usize,
        /// First network seed; runs use seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    query: String,
    /// Directory of keyword-source fixtures (`term<TAB>count` files).
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

#[derive(Args)]
struct CrawlArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Crawl settings (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Synthetic network settings (TOML).
    #[arg(long)]
    net_config: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Seed for both the network and the crawler.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    archive: PathBuf,
    /// Run log, one line per iteration.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Truth file for the generated network.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Record every API answer to this trace file.
    #[arg(long, conflicts_with = "replay")]
    record: Option<PathBuf>,
    /// Serve API answers from this trace instead of a generated network.
    #[arg(long)]
    replay: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Tsv,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Stic,
    Bfs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Enrich { query, alpha } => {
            print!("{}", enriched_query(&query, alpha)?.to_tsv());
        }
        Command::Generate { net_config, seed, archive, truth } => {
            let net = generate(net_config.as_deref(), seed)?;
            GraphArchive::new("", "", net.to_graph())
                .save(&archive)
                .with_context(|| format!("writing {}", archive.display()))?;
            fs::write(&truth, format_truth(&net.tweet_truth()))
                .with_context(|| format!("writing {}", truth.display()))?;
            println!("{} nodes, {} edges", net.node_count(), net.edge_count());
        }
        Command::Crawl(args) => run_crawl(args, Method::Stic)?,
        Command::Bfs(args) => run_crawl(args, Method::SimpleBfs)?,
        Command::Eval { archive, truth, method, format } => {
            let archive =
                GraphArchive::load(&archive).with_context(|| format!("reading {}", archive.display()))?;
            let truth = load_truth(&truth)?;
            let method = match method {
                MethodArg::Stic => Method::Stic,
                MethodArg::Bfs => Method::SimpleBfs,
            };
            let report = evaluate(&archive.graph, &truth, method)?;
            print!("{}", render(&[report], format));
        }
        Command::Compare { query, config, net_config, lexicon, runs, seed, format } => {
            let config = crawl_config(config.as_deref())?;
            let net_config = net_config_from(net_config.as_deref())?;
            let lexicon = lexicon_from(lexicon.as_deref())?;
            let enriched = enriched_query(&query, config.alpha)?;
            let c = compare(&net_config, &enriched, &lexicon, &config, runs, seed)?;
            match format {
                Format::Table => print!("{}", c.table()),
                Format::Tsv => print!("{}", c.tsv()),
            }
        }
    }
    Ok(())
}

fn run_crawl(args: CrawlArgs, method: Method) -> Result<()> {
    let mut config = crawl_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let lexicon = lexicon_from(args.lexicon.as_deref())?;
    let enriched = enriched_query(&args.query, config.alpha)?;
    let budget = ApiBudget::new(config.api_budget);
    let run = |api: &mut dyn SocialApi| -> Result<CrawlOutcome> {
        Ok(match method {
            Method::Stic => crawl(api, &enriched, &lexicon, &config)?,
            Method::SimpleBfs => crawl_bfs(api, &enriched, &config)?,
        })
    };

    let outcome = if let Some(path) = &args.replay {
        if args.truth.is_some() {
            bail!("--truth needs a generated network, not a replayed trace");
        }
        let trace = Trace::load(path).with_context(|| format!("reading {}", path.display()))?;
        run(&mut ReplayApi::new(&trace, budget))?
    } else {
        let net = generate(args.net_config.as_deref(), args.seed)?;
        if let Some(truth) = &args.truth {
            fs::write(truth, format_truth(&net.tweet_truth()))
                .with_context(|| format!("writing {}", truth.display()))?;
        }
        let mut recorder = Recorder::new(net.api(budget));
        let outcome = run(&mut recorder)?;
        if let Some(path) = &args.record {
            recorder.trace().save(path).with_context(|| format!("writing {}", path.display()))?;
        }
        outcome
    };

    GraphArchive::new(args.query.query.as_str(), config_hash(&config), outcome.graph.clone())
        .save(&args.archive)
        .with_context(|| format!("writing {}", args.archive.display()))?;
    if let Some(path) = &args.log {
        fs::write(path, outcome.log_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    println!(
        "{}: stopped by {} after {} iterations, {} api calls, {} nodes, {} edges",
        method.label(),
        outcome.stop.name(),
        outcome.iterations,
        outcome.api_calls,
        outcome.graph.node_count(),
        outcome.graph.edge_count()
    );
    Ok(())
}

fn render(reports: &[smartcrawl::eval::PrecisionReport], format: Format) -> String {
    match format {
        Format::Table => reports_table(reports),
        Format::Tsv => reports_tsv(reports),
    }
}

fn enriched_query(args: &QueryArgs, alpha: f64) -> Result<EnrichedQuery> {
    let sources = match &args.fixtures {
        Some(dir) => load_fixture_dir(dir, &args.query)
            .with_context(|| format!("loading fixtures from {}", dir.display()))?,
        None => match builtin_sources(&args.query) {
            Some(s) => s,
            None => bail!(
                "no bundled keyword sources for {:?} (bundled: {}); pass --fixtures",
                args.query,
                builtin_queries().join(", ")
            ),
        },
    };
    let refs: Vec<&dyn KeywordSource> = sources.iter().map(|s| s as &dyn KeywordSource).collect();
    let enriched = enrich(&refs, &args.query, alpha)?;
    info!("enriched {:?} to {} keywords", args.query, enriched.keywords.len());
    Ok(enriched)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn crawl_config(path: Option<&Path>) -> Result<CrawlConfig> {
    match path {
        Some(p) => Ok(CrawlConfig::from_toml(&read(p)?).with_context(|| format!("in {}", p.display()))?),
        None => Ok(CrawlConfig::default()),
    }
}

fn net_config_from(path: Option<&Path>) -> Result<SyntheticNetConfig> {
    match path {
        Some(p) => Ok(SyntheticNetConfig::from_toml(&read(p)?).with_context(|| format!("in {}", p.display()))?),
        None => Ok(SyntheticNetConfig::planted_default()),
    }
}

fn lexicon_from(path: Option<&Path>) -> Result<Lexicon> {
    match path {
        Some(p) => Ok(Lexicon::load(p)?),
        None => Ok(Lexicon::builtin()),
    }
}

fn generate(net_config: Option<&Path>, seed: Option<u64>) -> Result<SyntheticNet> {
    let mut config = net_config_from(net_config)?;
    if let Some(seed) = seed {
        config = config.with_seed(seed);
    }
    Ok(SyntheticNet::generate(&config)?)
}
