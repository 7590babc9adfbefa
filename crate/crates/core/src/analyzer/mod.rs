//! Detection math over stored runs.
//!
//! The building blocks ([`hit_ratio`], [`median_order`], [`banner_stats`],
//! [`reset_rate_series`], [`whitelist_infer`], [`blacklist_probe_diff`],
//! [`category_breakdown`]) are pure functions. [`analyze`] assembles them
//! into a [`CensorshipReport`] over a set of loaded runs, and
//! [`write_outputs`] emits the CSV, markdown and JSON files.

mod category;
mod output;
mod ratio;
mod signals;

pub use category::{category_breakdown, CategoryColumn, CategoryTable, ColumnSource, ColumnSpec};
pub use output::{render_report, write_outputs, write_report, ANALYSIS_FILE, REPORT_FILE};
pub use ratio::{
    band_classify, hit_ratio, median, median_order, quotation_differential, tail_boundary,
    BandClass, RankedWord, RatioFlag, RatioPoint, RatioSeries,
};
pub use signals::{
    banner_stats, banner_trigger_ratio, blacklist_probe_diff, reset_rate_series, round2,
    whitelist_infer, BannerStats, ResetSeries, TemporalSignal, WhitelistInference,
};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

use crate::corpus::{Category, CategoryLexicon};
use crate::engine::{EngineId, ResultEntry};
use crate::store::{OutcomeCounts, QueryRecord, RecordOutcome, RunManifest, RunStore, StoreError};

#[derive(Debug, Error)]
pub enum AnalyzerError {
    #[error("banner ratio needs at least one observation")]
    ZeroObservations,
    #[error("column {column}: range [{start}, {end}] outside a list of {len} words")]
    RangeOutOfBounds {
        column: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("unknown column source {0:?}")]
    UnknownColumnSource(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("no runs to analyze")]
    NoRuns,
    #[error("analysis config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AnalyzerError + '_ {
    move |source| AnalyzerError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One analysis that can be selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Ratios,
    Quotes,
    Banners,
    Resets,
    Whitelist,
    Blacklist,
    Report,
}

impl Analysis {
    pub const ALL: [Analysis; 7] = [
        Analysis::Ratios,
        Analysis::Quotes,
        Analysis::Banners,
        Analysis::Resets,
        Analysis::Whitelist,
        Analysis::Blacklist,
        Analysis::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Ratios => "ratios",
            Analysis::Quotes => "quotes",
            Analysis::Banners => "banners",
            Analysis::Resets => "resets",
            Analysis::Whitelist => "whitelist",
            Analysis::Blacklist => "blacklist",
            Analysis::Report => "report",
        }
    }
}

impl FromStr for Analysis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Analysis::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| format!("unknown analysis {s:?}"))
    }
}

/// Which analyses to run. `report` implies all of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection(pub BTreeSet<Analysis>);

impl Selection {
    pub fn all() -> Self {
        Selection(Analysis::ALL.into())
    }

    /// Parses a comma-separated list.
    pub fn parse(list: &str) -> Result<Self, String> {
        let set: BTreeSet<Analysis> = list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(Analysis::from_str)
            .collect::<Result<_, _>>()?;
        if set.is_empty() {
            return Err("empty analysis selection".into());
        }
        Ok(if set.contains(&Analysis::Report) {
            Selection::all()
        } else {
            Selection(set)
        })
    }

    pub fn has(&self, a: Analysis) -> bool {
        self.0.contains(&a) || self.0.contains(&Analysis::Report)
    }
}

fn default_low() -> f64 {
    0.1
}
fn default_high() -> f64 {
    10.0
}
fn default_quotation() -> f64 {
    0.9
}
fn default_depth() -> usize {
    100
}
fn default_k() -> usize {
    20
}
fn default_reset_min() -> u32 {
    2
}

/// Analysis parameters, loadable from TOML. Every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// `[numerator, denominator]` engine pairs. Empty: every other engine over the reference.
    #[serde(default)]
    pub ratio_pairs: Vec<(EngineId, EngineId)>,
    #[serde(default = "default_low")]
    pub low_threshold: f64,
    #[serde(default = "default_high")]
    pub high_threshold: f64,
    #[serde(default = "default_quotation")]
    pub quotation_threshold: f64,
    #[serde(default = "default_depth")]
    pub whitelist_depth: usize,
    #[serde(default = "default_k")]
    pub whitelist_threshold: usize,
    /// Defaults to the last engine of the earliest run.
    #[serde(default)]
    pub reference_engine: Option<EngineId>,
    #[serde(default)]
    pub probe_sentences: Vec<String>,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    /// Restrict the analysis to these run ids.
    #[serde(default)]
    pub runs: Option<Vec<String>>,
    /// Category table columns; empty selects one default column per analysis.
    #[serde(default)]
    pub columns: Vec<ColumnSpec>,
    /// Minimum reset count for a word to enter a reset column.
    #[serde(default = "default_reset_min")]
    pub reset_min_count: u32,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

impl AnalysisConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, AnalyzerError> {
        let mut cfg: AnalysisConfig =
            toml::from_str(text).map_err(|e| AnalyzerError::Config(e.to_string()))?;
        if let Some(p) = &cfg.lexicon {
            if p.is_relative() {
                cfg.lexicon = Some(base_dir.join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, AnalyzerError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), AnalyzerError> {
        if !(self.low_threshold > 0.0 && self.low_threshold <= self.high_threshold) {
            return Err(AnalyzerError::Config(
                "need 0 < low_threshold <= high_threshold".into(),
            ));
        }
        if self.whitelist_depth == 0 || self.whitelist_threshold == 0 {
            return Err(AnalyzerError::Config(
                "whitelist depth and threshold must be positive".into(),
            ));
        }
        for c in &self.columns {
            c.source.parse::<ColumnSource>()?;
        }
        Ok(())
    }

    pub fn load_lexicon(&self) -> Result<CategoryLexicon, AnalyzerError> {
        match &self.lexicon {
            Some(p) => CategoryLexicon::load(p).map_err(|e| AnalyzerError::Config(e.to_string())),
            None => Ok(CategoryLexicon::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedRun {
    pub manifest: RunManifest,
    pub records: Vec<QueryRecord>,
}

/// Loads runs from a store, ordered by start time then run id.
pub fn load_runs(
    store: &RunStore,
    only: Option<&[String]>,
) -> Result<Vec<LoadedRun>, AnalyzerError> {
    let ids = match only {
        Some(ids) => ids.to_vec(),
        None => store.run_ids()?,
    };
    let mut runs = Vec::with_capacity(ids.len());
    for id in ids {
        let (manifest, records) = store.load_run(&id)?;
        runs.push(LoadedRun { manifest, records });
    }
    if runs.is_empty() {
        return Err(AnalyzerError::NoRuns);
    }
    order_runs(&mut runs);
    Ok(runs)
}

pub fn order_runs(runs: &mut [LoadedRun]) {
    runs.sort_by(|a, b| {
        a.manifest
            .started_at
            .total_cmp(&b.manifest.started_at)
            .then_with(|| a.manifest.run_id.cmp(&b.manifest.run_id))
    });
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    /// Seconds since the first run started.
    pub offset_s: f64,
    pub duration_s: f64,
    pub counts: OutcomeCounts,
    pub unavailable_engines: Vec<EngineId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRow {
    pub rank: usize,
    pub word: String,
    pub median_ratio: f64,
    pub band: BandClass,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioAnalysis {
    pub numerator: EngineId,
    pub denominator: EngineId,
    pub rows: Vec<RankedRow>,
    pub without_median: Vec<String>,
    /// First rank whose median reaches the low threshold.
    pub tail_boundary: usize,
    /// Sorted by word.
    pub series: Vec<RatioSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotationRow {
    pub rank: usize,
    pub word: String,
    pub median_ratio: f64,
    pub below_threshold: bool,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotationAnalysis {
    pub engine: EngineId,
    pub threshold: f64,
    pub rows: Vec<QuotationRow>,
    pub without_median: Vec<String>,
    pub series: Vec<RatioSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BannerRow {
    #[serde(flatten)]
    pub stats: BannerStats,
    pub ratio: f64,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BannerAnalysis {
    pub engine: EngineId,
    /// False when every observed word carried the banner at least once.
    pub discriminative: bool,
    pub rows: Vec<BannerRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResetAnalysis {
    pub engine: EngineId,
    /// Words with at least one reset.
    pub series: Vec<ResetSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalPoint {
    pub engine: EngineId,
    pub word: String,
    pub run_id: String,
    pub offset_s: f64,
    pub signal: TemporalSignal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhitelistFinding {
    pub engine: EngineId,
    pub word: String,
    #[serde(flatten)]
    pub inference: WhitelistInference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlacklistFinding {
    pub probe: String,
    pub reference: EngineId,
    pub engine: EngineId,
    pub missing_domains: BTreeSet<String>,
}

/// Everything the analyzer derives from a set of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensorshipReport {
    pub selection: Selection,
    pub runs: Vec<RunSummary>,
    /// Whether the primary series use quoted queries.
    pub primary_quoted: bool,
    pub ratios: Vec<RatioAnalysis>,
    pub quotation: Vec<QuotationAnalysis>,
    pub banners: Vec<BannerAnalysis>,
    pub resets: Vec<ResetAnalysis>,
    pub temporal: Vec<TemporalPoint>,
    /// Only words with a suspected whitelist.
    pub whitelists: Vec<WhitelistFinding>,
    pub blacklist: Vec<BlacklistFinding>,
    pub categories: Option<CategoryTable>,
}

type CellKey<'a> = (&'a EngineId, &'a str, bool);

/// Per (engine, word, quoted): the terminal and first-attempt record of each run.
struct Cells<'a> {
    runs: usize,
    terminal: HashMap<CellKey<'a>, Vec<Option<&'a QueryRecord>>>,
}

impl<'a> Cells<'a> {
    fn new(runs: &'a [LoadedRun]) -> Self {
        let mut terminal: HashMap<CellKey<'a>, Vec<Option<&'a QueryRecord>>> = HashMap::new();
        for (i, run) in runs.iter().enumerate() {
            for r in &run.records {
                if r.outcome.is_terminal() {
                    let slot = terminal
                        .entry((&r.engine, r.word.as_str(), r.quoted))
                        .or_insert_with(|| vec![None; runs.len()]);
                    slot[i].get_or_insert(r);
                }
            }
        }
        Cells {
            runs: runs.len(),
            terminal,
        }
    }

    fn hits(&self, engine: &EngineId, word: &str, quoted: bool) -> Vec<Option<u64>> {
        match self.terminal.get(&(engine, word, quoted)) {
            Some(v) => v
                .iter()
                .map(|r| r.and_then(QueryRecord::hit_count))
                .collect(),
            None => vec![None; self.runs],
        }
    }

    fn words(&self, engine: &EngineId, quoted: bool) -> BTreeSet<&'a str> {
        self.terminal
            .keys()
            .filter(|(e, _, q)| *e == engine && *q == quoted)
            .map(|(_, w, _)| *w)
            .collect()
    }
}

struct Ctx<'a> {
    runs: &'a [LoadedRun],
    cfg: &'a AnalysisConfig,
    lexicon: &'a CategoryLexicon,
    cells: Cells<'a>,
    engines: Vec<EngineId>,
    primary_quoted: bool,
    run_ids: Vec<String>,
    offsets: Vec<f64>,
}

impl<'a> Ctx<'a> {
    fn category(&self, w: &str) -> Category {
        self.lexicon.category_of(w)
    }

    fn engine_records(&self, engine: &'a EngineId) -> impl Iterator<Item = &'a QueryRecord> + 'a {
        let q = self.primary_quoted;
        self.runs
            .iter()
            .flat_map(|r| &r.records)
            .filter(move |r| &r.engine == engine && r.quoted == q)
    }

    fn reference(&self) -> Option<EngineId> {
        self.cfg
            .reference_engine
            .clone()
            .or_else(|| self.runs[0].manifest.snapshot.engines.last().cloned())
    }

    fn ratio_pairs(&self) -> Vec<(EngineId, EngineId)> {
        if !self.cfg.ratio_pairs.is_empty() {
            return self.cfg.ratio_pairs.clone();
        }
        let Some(reference) = self.reference() else {
            return Vec::new();
        };
        self.engines
            .iter()
            .filter(|e| **e != reference)
            .map(|e| (e.clone(), reference.clone()))
            .collect()
    }

    fn ratio(&self, num: &EngineId, den: &EngineId) -> RatioAnalysis {
        let q = self.primary_quoted;
        let words: BTreeSet<&str> = self
            .cells
            .words(num, q)
            .union(&self.cells.words(den, q))
            .copied()
            .collect();
        let series: Vec<RatioSeries> = words
            .into_iter()
            .map(|w| {
                let points = self
                    .cells
                    .hits(num, w, q)
                    .into_iter()
                    .zip(self.cells.hits(den, w, q))
                    .map(|(n, d)| hit_ratio(n, d))
                    .collect();
                RatioSeries::new(w.to_owned(), points)
            })
            .collect();
        let (ranked, without_median) = median_order(&series);
        let boundary = tail_boundary(&ranked, self.cfg.low_threshold);
        let rows = ranked
            .into_iter()
            .map(|r| RankedRow {
                band: band_classify(r.median, self.cfg.low_threshold, self.cfg.high_threshold),
                category: self.category(&r.word),
                rank: r.rank,
                word: r.word,
                median_ratio: r.median,
            })
            .collect();
        RatioAnalysis {
            numerator: num.clone(),
            denominator: den.clone(),
            rows,
            without_median,
            tail_boundary: boundary,
            series,
        }
    }

    fn quotation(&self, engine: &EngineId) -> Option<QuotationAnalysis> {
        let unq = self.cells.words(engine, false);
        let quo = self.cells.words(engine, true);
        if unq.is_empty() || quo.is_empty() {
            return None;
        }
        let series: Vec<RatioSeries> = unq
            .union(&quo)
            .map(|w| {
                let points = self
                    .cells
                    .hits(engine, w, false)
                    .into_iter()
                    .zip(self.cells.hits(engine, w, true))
                    .map(|(u, q)| quotation_differential(u, q))
                    .collect();
                RatioSeries::new((*w).to_owned(), points)
            })
            .collect();
        let (ranked, without_median) = median_order(&series);
        let threshold = self.cfg.quotation_threshold;
        let rows = ranked
            .into_iter()
            .map(|r| QuotationRow {
                below_threshold: r.median < threshold,
                category: self.category(&r.word),
                rank: r.rank,
                word: r.word,
                median_ratio: r.median,
            })
            .collect();
        Some(QuotationAnalysis {
            engine: engine.clone(),
            threshold,
            rows,
            without_median,
            series,
        })
    }

    fn banners(&self, engine: &'a EngineId) -> BannerAnalysis {
        let rows: Vec<BannerRow> = banner_stats(
            self.engine_records(engine)
                .filter(|r| r.outcome.is_terminal()),
        )
        .into_iter()
        .map(|s| BannerRow {
            ratio: banner_trigger_ratio(s.trigger_count, s.observation_count).unwrap_or(0.0),
            category: self.category(&s.word),
            stats: s,
        })
        .collect();
        let discriminative = !(!rows.is_empty() && rows.iter().all(|r| r.stats.at_least_once));
        BannerAnalysis {
            engine: engine.clone(),
            discriminative,
            rows,
        }
    }

    fn banner_trace(&self, engine: &EngineId, word: &str) -> Vec<TemporalSignal> {
        match self
            .cells
            .terminal
            .get(&(engine, word, self.primary_quoted))
        {
            Some(v) => v
                .iter()
                .map(|r| match r.map(|r| &r.outcome) {
                    Some(RecordOutcome::Parsed { pages })
                        if pages.iter().any(|p| p.banner_present) =>
                    {
                        TemporalSignal::BannerPresent
                    }
                    Some(RecordOutcome::Parsed { .. }) => TemporalSignal::BannerAbsent,
                    _ => TemporalSignal::NoData,
                })
                .collect(),
            None => vec![TemporalSignal::NoData; self.cells.runs],
        }
    }

    fn resets(&self, engine: &'a EngineId) -> ResetAnalysis {
        let series = reset_rate_series(self.engine_records(engine), &self.run_ids)
            .into_iter()
            .filter(|s| s.reset_count >= 1)
            .collect();
        ResetAnalysis {
            engine: engine.clone(),
            series,
        }
    }

    fn latest(&self, engine: &EngineId, word: &str, quoted: bool) -> Option<&'a QueryRecord> {
        self.cells
            .terminal
            .get(&(engine, word, quoted))
            .and_then(|v| *v.last().unwrap())
    }

    fn whitelists(&self, engine: &EngineId) -> Vec<WhitelistFinding> {
        let q = self.primary_quoted;
        self.cells
            .words(engine, q)
            .into_iter()
            .filter_map(|w| {
                let r = self.latest(engine, w, q)?;
                if !matches!(r.outcome, RecordOutcome::Parsed { .. }) {
                    return None;
                }
                let inference = whitelist_infer(
                    r.pages(),
                    self.cfg.whitelist_depth,
                    self.cfg.whitelist_threshold,
                );
                inference.domains.as_ref()?;
                Some(WhitelistFinding {
                    engine: engine.clone(),
                    word: w.to_owned(),
                    inference,
                })
            })
            .collect()
    }

    fn blacklist(&self) -> Vec<BlacklistFinding> {
        let Some(reference) = self.reference() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for probe in &self.cfg.probe_sentences {
            let mut results: BTreeMap<EngineId, Vec<ResultEntry>> = BTreeMap::new();
            for e in &self.engines {
                let rec = self
                    .latest(e, probe, true)
                    .or_else(|| self.latest(e, probe, false));
                if let Some(r) = rec.filter(|r| matches!(r.outcome, RecordOutcome::Parsed { .. })) {
                    results.insert(
                        e.clone(),
                        r.pages()
                            .iter()
                            .flat_map(|p| p.entries.iter().cloned())
                            .collect(),
                    );
                }
            }
            for (engine, missing) in blacklist_probe_diff(&results, &reference) {
                out.push(BlacklistFinding {
                    probe: probe.clone(),
                    reference: reference.clone(),
                    engine,
                    missing_domains: missing,
                });
            }
        }
        out
    }
}

/// Runs the selected analyses over `runs`, which must already be in run order.
pub fn analyze(
    runs: &[LoadedRun],
    cfg: &AnalysisConfig,
    lexicon: &CategoryLexicon,
    selection: &Selection,
) -> Result<CensorshipReport, AnalyzerError> {
    if runs.is_empty() {
        return Err(AnalyzerError::NoRuns);
    }
    cfg.validate()?;
    let mut engines: Vec<EngineId> = Vec::new();
    for run in runs {
        for e in run
            .manifest
            .snapshot
            .engines
            .iter()
            .chain(run.records.iter().map(|r| &r.engine))
        {
            if !engines.contains(e) {
                engines.push(e.clone());
            }
        }
    }
    engines.sort();
    let t0 = runs[0].manifest.started_at;
    let primary_quoted = !runs.iter().flat_map(|r| &r.records).any(|r| !r.quoted);
    let ctx = Ctx {
        runs,
        cfg,
        lexicon,
        cells: Cells::new(runs),
        engines,
        primary_quoted,
        run_ids: runs.iter().map(|r| r.manifest.run_id.clone()).collect(),
        offsets: runs.iter().map(|r| r.manifest.started_at - t0).collect(),
    };

    let summaries = runs
        .iter()
        .zip(&ctx.offsets)
        .map(|(r, &offset_s)| RunSummary {
            run_id: r.manifest.run_id.clone(),
            offset_s,
            duration_s: r.manifest.finished_at - r.manifest.started_at,
            counts: r.manifest.counts.clone(),
            unavailable_engines: r.manifest.unavailable_engines.clone(),
        })
        .collect();

    let mut report = CensorshipReport {
        selection: selection.clone(),
        runs: summaries,
        primary_quoted,
        ratios: Vec::new(),
        quotation: Vec::new(),
        banners: Vec::new(),
        resets: Vec::new(),
        temporal: Vec::new(),
        whitelists: Vec::new(),
        blacklist: Vec::new(),
        categories: None,
    };
    if selection.has(Analysis::Ratios) {
        report.ratios = ctx
            .ratio_pairs()
            .iter()
            .map(|(n, d)| ctx.ratio(n, d))
            .collect();
    }
    if selection.has(Analysis::Quotes) {
        report.quotation = ctx
            .engines
            .iter()
            .filter_map(|e| ctx.quotation(e))
            .collect();
    }
    if selection.has(Analysis::Banners) {
        report.banners = ctx.engines.iter().map(|e| ctx.banners(e)).collect();
        for b in &report.banners {
            for row in b.rows.iter().filter(|r| r.stats.at_least_once) {
                push_trace(
                    &mut report.temporal,
                    &ctx,
                    &b.engine,
                    &row.stats.word,
                    &ctx.banner_trace(&b.engine, &row.stats.word),
                );
            }
        }
    }
    if selection.has(Analysis::Resets) {
        report.resets = ctx.engines.iter().map(|e| ctx.resets(e)).collect();
        for r in &report.resets {
            for s in &r.series {
                push_trace(&mut report.temporal, &ctx, &r.engine, &s.word, &s.trace);
            }
        }
    }
    if selection.has(Analysis::Whitelist) {
        report.whitelists = ctx.engines.iter().flat_map(|e| ctx.whitelists(e)).collect();
    }
    if selection.has(Analysis::Blacklist) {
        report.blacklist = ctx.blacklist();
    }
    let columns = if cfg.columns.is_empty() {
        category::default_columns(&report)
    } else {
        cfg.columns.clone()
    };
    if !columns.is_empty() {
        report.categories = Some(category_breakdown(
            &report,
            lexicon,
            &columns,
            cfg.reset_min_count,
        )?);
    }
    Ok(report)
}

fn push_trace(
    out: &mut Vec<TemporalPoint>,
    ctx: &Ctx<'_>,
    engine: &EngineId,
    word: &str,
    trace: &[TemporalSignal],
) {
    for ((signal, run_id), offset) in trace.iter().zip(&ctx.run_ids).zip(&ctx.offsets) {
        out.push(TemporalPoint {
            engine: engine.clone(),
            word: word.to_owned(),
            run_id: run_id.clone(),
            offset_s: *offset,
            signal: *signal,
        });
    }
}
