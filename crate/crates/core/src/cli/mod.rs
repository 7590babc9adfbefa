//! The `censorlab` command.
//!
//! Exit status: 0 on success, 2 for configuration or input errors, 3 for
//! store errors and for runs in which every engine became unavailable.

mod config;

pub use config::{CampaignConfig, SimSection};

use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use crate::analyzer::{self, AnalysisConfig, AnalyzerError, Selection};
use crate::crawler::{
    run_campaign, Campaign, Clock, CrawlError, HttpTransport, SimClock, SystemClock, Transport,
};
use crate::simnet::{oracle_expected_report, Scenario, SimNetwork, SimServer, SimTransport};
use crate::store::{RunManifest, RunStore, StoreError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_STORE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "censorlab",
    version,
    about = "Differential search-engine censorship measurement"
)]
pub struct Cli {
    /// Print nothing but errors.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run measurement campaigns.
    #[command(subcommand)]
    Crawl(CrawlCommand),
    /// Analyze stored runs.
    Analyze(AnalyzeArgs),
    /// Serve or enumerate a simulated scenario.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Render report.md from an analysis directory.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum CrawlCommand {
    /// Run a campaign described by a config file.
    Run(CrawlArgs),
}

#[derive(Debug, Args)]
pub struct CrawlArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Run store root.
    #[arg(long, env = "CENSORLAB_OUT")]
    pub out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Comma-separated analyses: ratios, quotes, banners, resets, whitelist, blacklist, report.
    #[arg(value_name = "ANALYSES")]
    pub analyses: Option<String>,
    /// Same as the positional list.
    #[arg(long, conflicts_with = "analyses")]
    pub select: Option<String>,
    /// Run store root.
    #[arg(long)]
    pub runs: PathBuf,
    /// Directory for report files.
    #[arg(long, env = "CENSORLAB_OUT")]
    pub out: PathBuf,
    /// Analysis config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SimCommand {
    /// Serve every engine of a scenario over loopback HTTP until killed.
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        /// Engine i listens on port-base + i; 0 picks free ports.
        #[arg(long, default_value_t = 0)]
        port_base: u16,
    },
    /// Write the findings a campaign over the scenario must produce, as JSON.
    Oracle {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Analysis directory.
    #[arg(value_name = "DIR")]
    pub dir: Option<PathBuf>,
    #[arg(long, env = "CENSORLAB_OUT")]
    pub out: Option<PathBuf>,
}

/// A failed command with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn store(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_STORE,
            message: message.into(),
        }
    }
}

impl From<CrawlError> for Failure {
    fn from(e: CrawlError) -> Self {
        match e {
            CrawlError::Store(s) => Failure::store(s.to_string()),
            other => Failure::input(other.to_string()),
        }
    }
}

struct Printer {
    quiet: bool,
}

impl Printer {
    fn line(&self, s: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", s.as_ref());
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    let out = Printer { quiet: cli.quiet };
    let result = match cli.command {
        Command::Crawl(CrawlCommand::Run(a)) => cmd_crawl(&a, &out),
        Command::Analyze(a) => cmd_analyze(&a, &out),
        Command::Sim(SimCommand::Serve {
            scenario,
            port_base,
        }) => cmd_sim_serve(&scenario, port_base, &out),
        Command::Sim(SimCommand::Oracle {
            scenario,
            out: path,
        }) => cmd_sim_oracle(&scenario, &path, &out),
        Command::Report(a) => cmd_report(&a, &out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("censorlab: {}", f.message);
            f.code
        }
    }
}

fn run_ids(prefix: &str, runs: u32) -> Vec<String> {
    if runs == 1 {
        return vec![prefix.to_owned()];
    }
    let width = runs.to_string().len().max(2);
    (1..=runs)
        .map(|i| format!("{prefix}-{i:0width$}"))
        .collect()
}

/// Runs every campaign of `config` into `out`, returning the manifests.
pub fn crawl(config: &CampaignConfig, out: &Path) -> Result<Vec<(RunManifest, PathBuf)>, Failure> {
    let store = RunStore::open(out).map_err(|e| Failure::store(e.to_string()))?;
    let ids = run_ids(&config.run_id, config.runs);
    for id in &ids {
        if store.run_dir(id).exists() {
            return Err(Failure::store(
                StoreError::RunExists(id.clone()).to_string(),
            ));
        }
    }
    let lexicon = config.load_lexicon().map_err(Failure::input)?;

    let (transport, clock, profiles, corpus, sim): (
        Box<dyn Transport>,
        Box<dyn Clock>,
        _,
        _,
        bool,
    ) = match &config.sim {
        Some(sim) => {
            let scenario =
                Scenario::load(&sim.scenario).map_err(|e| Failure::input(e.to_string()))?;
            let net = Arc::new(
                scenario
                    .build()
                    .map_err(|e| Failure::input(e.to_string()))?,
            );
            let corpus = if config.corpus.is_empty() {
                (*net.corpus).clone()
            } else {
                config.load_corpus().map_err(Failure::input)?
            };
            let profiles = net.client_profiles();
            let transport: Box<dyn Transport> = Box::new(SimTransport::new(Arc::clone(&net)));
            (
                transport,
                Box::new(SimClock::new(sim.start_s)),
                profiles,
                corpus,
                true,
            )
        }
        None => {
            let corpus = config.load_corpus().map_err(Failure::input)?;
            let profiles = config.load_profiles().map_err(Failure::input)?;
            let transport = HttpTransport::new(Duration::from_secs_f64(config.timeout_s));
            (
                Box::new(transport),
                Box::new(SystemClock::new()),
                profiles,
                corpus,
                false,
            )
        }
    };
    let selected = config.select_profiles(profiles).map_err(Failure::input)?;
    let corpus = Arc::new(crate::corpus::label_category(corpus, &lexicon));
    let first_start = clock.now();

    let mut manifests = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let scheduled = first_start + i as f64 * config.run_spacing_s;
        if scheduled > clock.now() {
            clock.sleep_until(scheduled);
        }
        let campaign = Campaign {
            run_id: id.clone(),
            corpus: Arc::clone(&corpus),
            engines: selected.clone(),
            quoted: config.quoted,
            workers: config.workers,
            page_depth: config.page_depth,
            seed: config.seed,
            timing: config.recovery,
            keep_bodies: config.keep_bodies && !sim,
        };
        let outcome = run_campaign(&campaign, &store, transport.as_ref(), clock.as_ref())?;
        let all_down = !campaign.engines.is_empty()
            && outcome.manifest.unavailable_engines.len() == campaign.engines.len();
        manifests.push((outcome.manifest, outcome.manifest_path));
        if all_down {
            return Err(Failure::store(format!(
                "run {id}: every engine became unavailable"
            )));
        }
    }
    Ok(manifests)
}

fn cmd_crawl(args: &CrawlArgs, out: &Printer) -> Result<(), Failure> {
    let mut config = CampaignConfig::load(&args.config).map_err(Failure::input)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let manifests = crawl(&config, &args.out)?;
    for (m, path) in &manifests {
        let c = &m.counts;
        out.line(format!(
            "{}: {} parsed, {} gave up, {} skipped, {} failed attempts; manifest {}",
            m.run_id,
            c.parsed,
            c.gave_up,
            c.skipped,
            c.failed_attempts,
            path.display()
        ));
        for e in &m.unavailable_engines {
            out.line(format!("  {e} became unavailable"));
        }
    }
    Ok(())
}

fn analyzer_failure(e: AnalyzerError) -> Failure {
    match e {
        AnalyzerError::Io { .. } => Failure::store(e.to_string()),
        other => Failure::input(other.to_string()),
    }
}

fn cmd_analyze(args: &AnalyzeArgs, out: &Printer) -> Result<(), Failure> {
    let selection = match args.analyses.as_deref().or(args.select.as_deref()) {
        Some(list) => Selection::parse(list).map_err(Failure::input)?,
        None => Selection::all(),
    };
    let config = match &args.config {
        Some(p) => AnalysisConfig::load(p).map_err(|e| Failure::input(e.to_string()))?,
        None => AnalysisConfig::default(),
    };
    let lexicon = config
        .load_lexicon()
        .map_err(|e| Failure::input(e.to_string()))?;
    let store = RunStore::open_existing(&args.runs).map_err(|e| Failure::input(e.to_string()))?;
    let runs = analyzer::load_runs(&store, config.runs.as_deref())
        .map_err(|e| Failure::input(e.to_string()))?;
    let report =
        analyzer::analyze(&runs, &config, &lexicon, &selection).map_err(analyzer_failure)?;
    let files = analyzer::write_outputs(&report, &args.out).map_err(analyzer_failure)?;
    out.line(format!("analyzed {} runs", runs.len()));
    for f in files {
        out.line(format!("  wrote {}", f.display()));
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs, out: &Printer) -> Result<(), Failure> {
    let dir = args
        .dir
        .as_ref()
        .or(args.out.as_ref())
        .ok_or_else(|| Failure::input("no analysis directory given"))?;
    let path = analyzer::write_report(dir).map_err(|e| Failure::input(e.to_string()))?;
    out.line(format!("wrote {}", path.display()));
    Ok(())
}

fn cmd_sim_serve(scenario: &Path, port_base: u16, out: &Printer) -> Result<(), Failure> {
    let scenario = Scenario::load(scenario).map_err(|e| Failure::input(e.to_string()))?;
    let net = Arc::new(
        scenario
            .build()
            .map_err(|e| Failure::input(e.to_string()))?,
    );
    let server = SimServer::start(Arc::clone(&net), port_base)
        .map_err(|e| Failure::input(format!("bind: {e}")))?;
    for (id, addr) in server.addrs() {
        out.line(format!("{id} http://{addr}"));
    }
    server.wait();
    Ok(())
}

fn cmd_sim_oracle(scenario_path: &Path, path: &Path, out: &Printer) -> Result<(), Failure> {
    let scenario = Scenario::load(scenario_path).map_err(|e| Failure::input(e.to_string()))?;
    let campaign = scenario.oracle.clone().ok_or_else(|| {
        Failure::input(format!(
            "{} has no [oracle] section",
            scenario_path.display()
        ))
    })?;
    let net: SimNetwork = scenario
        .build()
        .map_err(|e| Failure::input(e.to_string()))?;
    let report = oracle_expected_report(&net, &campaign);
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| Failure::store(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, json).map_err(|e| Failure::store(format!("{}: {e}", path.display())))?;
    out.line(format!("wrote {}", path.display()));
    Ok(())
}
