#![allow(dead_code)]

pub mod brute;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::Arc;

use censorlab::analyzer::{self, AnalysisConfig, CensorshipReport, LoadedRun, Selection};
use censorlab::corpus::CategoryLexicon;
use censorlab::crawler::{
    run_campaign, Campaign, CampaignOutcome, QuotedMode, RecoveryTiming, SimClock,
};
use censorlab::engine::{BannerStyle, EngineId, QuotationMode};
use censorlab::simnet::{
    CorpusSource, EngineSpec, IndexSpec, MiddleboxPolicy, OracleCampaign, Scenario, SimNetwork,
    SimPolicy, SimTransport, DEFAULT_BANNER_TEXT,
};
use censorlab::store::RunStore;

pub fn engine(id: &str, policy: SimPolicy) -> EngineSpec {
    EngineSpec {
        id: EngineId::new(id),
        policy,
        overrides: Vec::new(),
        robot: None,
        query_encoding: censorlab::Encoding::Utf8,
        response_encoding: censorlab::Encoding::Utf8,
        results_per_page: 10,
        max_pages_fetched: 10,
        latency_s: 0.2,
        banner_text: DEFAULT_BANNER_TEXT.into(),
        pacing: Default::default(),
    }
}

pub fn clean(seed: u64) -> SimPolicy {
    let mut p = SimPolicy::clean(BannerStyle::Never, QuotationMode::ExactOnly);
    p.seed = seed;
    p
}

pub fn censoring(
    terms: impl IntoIterator<Item = impl Into<String>>,
    style: BannerStyle,
    seed: u64,
) -> SimPolicy {
    let mut p = SimPolicy::clean(style, QuotationMode::ExactOnly);
    p.blacklist_terms = terms.into_iter().map(Into::into).collect();
    p.seed = seed;
    p
}

pub fn scenario(seed: u64, words: Vec<String>, engines: Vec<EngineSpec>) -> Scenario {
    Scenario {
        seed,
        corpus: CorpusSource {
            words,
            ..Default::default()
        },
        index: IndexSpec::default(),
        probe_documents: Vec::new(),
        middlebox: MiddleboxPolicy::default(),
        engines,
        noise_epoch_s: 86_400.0,
        oracle: None,
    }
}

pub fn plan(runs: u32, spacing: f64, quoted: QuotedMode, page_depth: u32) -> OracleCampaign {
    OracleCampaign {
        runs,
        start_s: 0.0,
        run_spacing_s: spacing,
        page_depth,
        quoted,
        ratio_pairs: Vec::new(),
        reference_engine: None,
        whitelist_depth: 100,
        whitelist_threshold: 20,
    }
}

pub struct Crawled {
    pub dir: tempfile::TempDir,
    pub store: RunStore,
    pub outcomes: Vec<CampaignOutcome>,
}

impl Crawled {
    pub fn runs(&self) -> Vec<LoadedRun> {
        analyzer::load_runs(&self.store, None).unwrap()
    }

    pub fn report(&self, cfg: &AnalysisConfig) -> CensorshipReport {
        analyzer::analyze(
            &self.runs(),
            cfg,
            &CategoryLexicon::default(),
            &Selection::all(),
        )
        .unwrap()
    }
}

pub fn run_id(i: usize) -> String {
    format!("r{i:02}")
}

/// Crawls every run of `plan` against `net` on a simulated clock.
pub fn crawl(net: &Arc<SimNetwork>, plan: &OracleCampaign, workers: u32, seed: u64) -> Crawled {
    let dir = tempfile::tempdir().unwrap();
    let store = RunStore::open(dir.path().join("store")).unwrap();
    let transport = SimTransport::new(Arc::clone(net));
    let mut outcomes = Vec::new();
    for (i, start) in plan.run_starts().into_iter().enumerate() {
        let clock = SimClock::new(start);
        let campaign = Campaign {
            run_id: run_id(i),
            corpus: Arc::clone(&net.corpus),
            engines: net.client_profiles(),
            quoted: plan.quoted,
            workers,
            page_depth: plan.page_depth,
            seed,
            timing: RecoveryTiming::default(),
            keep_bodies: false,
        };
        let out = run_campaign(&campaign, &store, &transport, &clock).unwrap();
        if let Some(next) = plan.run_starts().get(i + 1) {
            assert!(
                out.manifest.finished_at < *next,
                "run {i} overran the next start"
            );
        }
        outcomes.push(out);
    }
    Crawled {
        dir,
        store,
        outcomes,
    }
}

pub fn set<I: IntoIterator<Item = S>, S: Into<String>>(items: I) -> BTreeSet<String> {
    items.into_iter().map(Into::into).collect()
}

pub fn demo_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/demo"))
}
