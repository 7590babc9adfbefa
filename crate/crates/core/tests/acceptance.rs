//! The acceptance criteria, one PASS/FAIL line each. Runs without the test
//! harness so every line is printed; exits non-zero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use censorlab::analyzer::{
    self, banner_stats, banner_trigger_ratio, blacklist_probe_diff, hit_ratio, median_order,
    reset_rate_series, whitelist_infer, AnalysisConfig, BandClass, CensorshipReport, Selection,
    TemporalSignal,
};
use censorlab::crawler::{FailureClass, QuotedMode, MAX_ATTEMPTS, SENTINEL_QUERY};
use censorlab::engine::{BannerStyle, EngineId, ResultEntry};
use censorlab::simnet::{
    oracle_expected_report, synthetic_words, IndexSpec, MiddleboxOverride, PolicyOverride,
    ProbeDocument, Scenario, SimNetwork,
};
use censorlab::store::{QueryRecord, RecordOutcome};

use common::*;

const DAY: f64 = 86_400.0;

fn cfg_pair(num: &str, den: &str) -> AnalysisConfig {
    AnalysisConfig {
        ratio_pairs: vec![(EngineId::new(num), EngineId::new(den))],
        reference_engine: Some(EngineId::new(den)),
        ..AnalysisConfig::default()
    }
}

fn build(s: Scenario) -> Arc<SimNetwork> {
    Arc::new(s.build().expect("scenario builds"))
}

fn records_of<'a>(
    runs: &'a [analyzer::LoadedRun],
    engine: &'a str,
) -> impl Iterator<Item = &'a QueryRecord> + 'a {
    runs.iter()
        .flat_map(|r| &r.records)
        .filter(move |r| r.engine.as_str() == engine)
}

/// Corpus with 50 planted terms among 10,000 synthetic words.
fn planted_scenario(censor: bool) -> (Scenario, BTreeSet<String>) {
    let words = synthetic_words(10_000, 101);
    let planted: BTreeSet<String> = words.iter().step_by(200).cloned().collect();
    assert_eq!(planted.len(), 50);
    let terms = if censor {
        planted.clone()
    } else {
        BTreeSet::new()
    };
    let mut cn = censoring(terms, BannerStyle::FirstPageAlways, 1);
    cn.whitelist_domains = set(["people.com.cn", "xinhuanet.com", "ce.cn"]);
    let s = scenario(5, words, vec![engine("cn", cn), engine("com", clean(2))]);
    (s, planted)
}

fn c1_planted_recovery() {
    let t0 = Instant::now();
    let (s, planted) = planted_scenario(true);
    let net = build(s);
    let p = plan(5, DAY, QuotedMode::Unquoted, 1);
    let crawled = crawl(&net, &p, 1, 9);
    let report = crawled.report(&cfg_pair("cn", "com"));
    let ratio = &report.ratios[0];
    assert_eq!(ratio.rows.len(), 10_000);

    // true suppression factor of every planted word
    for w in &planted {
        let all: u64 = net.index.about(w).map(|d| d.weight).sum();
        let wl: u64 = net
            .index
            .about(w)
            .filter(|d| ["people.com.cn", "xinhuanet.com", "ce.cn"].contains(&d.domain.as_str()))
            .map(|d| d.weight)
            .sum();
        assert!(
            wl as f64 / all as f64 <= 0.01,
            "{w}: suppression {}",
            wl as f64 / all as f64
        );
    }

    let (ordered, _) = median_order(&ratio.series);
    for w in &planted {
        let row = ordered.iter().find(|r| &r.word == w).unwrap();
        assert!(row.rank <= 60, "{w} ranked {}", row.rank);
    }
    for row in &ratio.rows {
        assert_eq!(
            row.band == BandClass::LowTail,
            planted.contains(&row.word),
            "{} {:?}",
            row.word,
            row.band
        );
    }
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
}

fn c2_noise_band() {
    let (s, _) = planted_scenario(false);
    let net = build(s);
    let crawled = crawl(&net, &plan(3, DAY, QuotedMode::Unquoted, 1), 1, 9);
    let report = crawled.report(&cfg_pair("cn", "com"));
    let ratio = &report.ratios[0];
    assert_eq!(ratio.rows.len(), 10_000);
    assert!(ratio.without_median.is_empty());
    for row in &ratio.rows {
        assert_eq!(row.band, BandClass::Unremarkable, "{}", row.word);
        assert!(
            (0.5..=2.0).contains(&row.median_ratio),
            "{} {}",
            row.word,
            row.median_ratio
        );
    }
}

fn c3_arithmetic() {
    let r = hit_ratio(Some(34), Some(230_000)).ratio.unwrap();
    assert!((r - 0.000148).abs() <= 1e-6, "{r}");
    assert!((r - 34.0 / 230_000.0).abs() < 1e-18);
    let r = hit_ratio(Some(16_900), Some(880_000)).ratio.unwrap();
    assert!((r - 0.0192).abs() <= 1e-4, "{r}");
    assert_eq!(banner_trigger_ratio(16, 18).unwrap(), 0.89);
    assert_eq!(banner_trigger_ratio(12, 17).unwrap(), 0.71);
}

fn c4_banner_styles() {
    let words = synthetic_words(40, 44);
    let base: BTreeSet<String> = words[..10].iter().cloned().collect();
    let late: BTreeSet<String> = words[10..15].iter().cloned().collect();
    let styles = [
        ("first", BannerStyle::FirstPageAlways),
        ("deep", BannerStyle::DeepPage(10)),
        ("always", BannerStyle::AlwaysOn),
        ("never", BannerStyle::Never),
    ];
    let mut engines = Vec::new();
    for (i, (id, style)) in styles.iter().enumerate() {
        let mut e = engine(id, censoring(base.clone(), *style, i as u64));
        e.overrides.push(PolicyOverride {
            from_s: 2.0 * DAY,
            until_s: None,
            add_blacklist_terms: late.clone(),
            remove_blacklist_terms: BTreeSet::new(),
            banner_style: None,
        });
        engines.push(e);
    }
    engines.push(engine("ref", clean(9)));
    let net = build(scenario(4, words.clone(), engines));
    let crawled = crawl(&net, &plan(4, DAY, QuotedMode::Unquoted, 10), 1, 3);
    let runs = crawled.runs();
    let report = crawled.report(&cfg_pair("first", "ref"));

    let all: BTreeSet<String> = words.iter().cloned().collect();
    let empty = BTreeSet::new;
    for (id, style) in styles {
        let (always, sometimes, never) = match style {
            BannerStyle::AlwaysOn => (all.clone(), empty(), empty()),
            BannerStyle::Never => (empty(), empty(), all.clone()),
            _ => (
                base.clone(),
                late.clone(),
                all.iter()
                    .filter(|w| !base.contains(*w) && !late.contains(*w))
                    .cloned()
                    .collect(),
            ),
        };
        let stats = banner_stats(records_of(&runs, id));
        let part = |f: &dyn Fn(&analyzer::BannerStats) -> bool| -> BTreeSet<String> {
            stats
                .iter()
                .filter(|s| f(s))
                .map(|s| s.word.clone())
                .collect()
        };
        assert_eq!(part(&|s| s.always_censored), always, "{id} always");
        assert_eq!(
            part(&|s| s.at_least_once && !s.always_censored),
            sometimes,
            "{id} sometimes"
        );
        assert_eq!(part(&|s| !s.at_least_once), never, "{id} never");
        let b = report
            .banners
            .iter()
            .find(|b| b.engine.as_str() == id)
            .unwrap();
        assert_eq!(
            b.rows.iter().map(|r| r.stats.clone()).collect::<Vec<_>>(),
            stats
        );
        assert_eq!(b.discriminative, style != BannerStyle::AlwaysOn, "{id}");
    }
}

fn c5_two_pass() {
    let words = synthetic_words(600, 55);
    let planted: BTreeSet<String> = words.iter().step_by(20).cloned().collect();
    assert_eq!(planted.len(), 30);
    let mut cn = censoring(planted.clone(), BannerStyle::FirstPageAlways, 1);
    cn.two_pass = true;
    cn.whitelist_domains = set(["ce.cn", "news.cn"]);
    let net = build(scenario(
        6,
        words,
        vec![engine("cn", cn), engine("com", clean(2))],
    ));
    let crawled = crawl(&net, &plan(3, DAY, QuotedMode::Both, 1), 1, 4);
    let report = crawled.report(&cfg_pair("cn", "com"));
    let q = report
        .quotation
        .iter()
        .find(|q| q.engine.as_str() == "cn")
        .unwrap();
    let mut clean_total = 0;
    let mut clean_in_band = 0;
    for s in &q.series {
        let values: Vec<f64> = s
            .points
            .iter()
            .map(|p| p.ratio.expect("both counts present"))
            .collect();
        assert_eq!(values.len(), 3);
        if planted.contains(&s.word) {
            assert!(values.iter().all(|v| *v < 0.9), "{} {values:?}", s.word);
            assert!(
                q.rows
                    .iter()
                    .find(|r| r.word == s.word)
                    .unwrap()
                    .below_threshold
            );
        } else {
            clean_total += 1;
            if values.iter().all(|v| (0.9..=1.1).contains(v)) {
                clean_in_band += 1;
            }
        }
    }
    assert_eq!(clean_total, 570);
    assert!(
        clean_in_band as f64 >= 0.99 * clean_total as f64,
        "{clean_in_band}/{clean_total}"
    );
}

fn c6_reset_recovery() {
    let mut words = synthetic_words(19, 66);
    words.insert(7, "falun".into());
    let mut s = scenario(
        7,
        words.clone(),
        vec![engine("cn", clean(1)), engine("com", clean(2))],
    );
    s.middlebox.keyword_reset_prob = BTreeMap::from([("falun".to_string(), 1.0)]);
    s.middlebox.block_window_s = 90.0;
    let net = build(s);
    let crawled = crawl(&net, &plan(1, DAY, QuotedMode::Unquoted, 1), 1, 8);
    let runs = crawled.runs();

    for e in ["cn", "com"] {
        let falun: Vec<&QueryRecord> = records_of(&runs, e).filter(|r| r.word == "falun").collect();
        let shape: Vec<(u8, &str)> = falun
            .iter()
            .map(|r| (r.attempt, r.outcome.kind()))
            .collect();
        assert_eq!(
            shape,
            [(1, "failed"), (2, "failed"), (3, "failed"), (3, "gave-up")],
            "{e}"
        );
        for r in &falun[..3] {
            assert_eq!(r.failure(), Some(FailureClass::TcpReset));
        }
        for w in words.iter().filter(|w| *w != "falun") {
            let recs: Vec<&QueryRecord> = records_of(&runs, e).filter(|r| &r.word == w).collect();
            assert_eq!(recs.len(), 1, "{e} {w}");
            assert!(
                matches!(recs[0].outcome, RecordOutcome::Parsed { .. }),
                "{e} {w}"
            );
        }
    }

    let recoveries = &crawled.outcomes[0].recoveries;
    assert_eq!(recoveries.len(), 2 * MAX_ATTEMPTS as usize);
    for rep in recoveries {
        assert_eq!(rep.failure, FailureClass::TcpReset);
        assert!(!rep.deadline_exceeded);
        assert!((rep.probes[0] - rep.blocked_since - 10.0).abs() < 1e-9);
        for w in rep.probes.windows(2) {
            assert!(
                (w[1] - w[0] - 10.0).abs() < 1e-9,
                "probe spacing {:?}",
                rep.probes
            );
        }
        let elapsed = rep.elapsed().unwrap();
        assert!((90.0..=110.0).contains(&elapsed), "resumed after {elapsed}");
    }
    // the sentinel never carries the keyword
    assert!(!SENTINEL_QUERY.contains("falun"));
}

fn c7_whitelist() {
    let planted = set([
        "people.com.cn",
        "xinhuanet.com",
        "ce.cn",
        "china.com.cn",
        "cctv.com",
        "news.cn",
        "chinadaily.com.cn",
        "youth.cn",
        "cntv.cn",
        "huanqiu.com",
        "ifeng.com",
        "qstheory.cn",
    ]);
    assert_eq!(planted.len(), 12);
    let affected = ["颜色", "色情", "红色", "色彩", "黄色", "绿色", "色素"];
    let mut words: Vec<String> = synthetic_words(20, 77)
        .into_iter()
        .filter(|w| !w.contains('色'))
        .collect();
    let clean_words = words.clone();
    words.extend(affected.iter().map(|w| w.to_string()));
    let mut cn = clean(1);
    cn.char_filters = BTreeSet::from(['色']);
    cn.whitelist_domains = planted.clone();
    let mut s = scenario(8, words, vec![engine("cn", cn), engine("com", clean(2))]);
    s.index = IndexSpec {
        docs_per_word: 100,
        whitelist_docs_per_word: 120,
        ..IndexSpec::default()
    };
    let net = build(s);
    let crawled = crawl(&net, &plan(1, DAY, QuotedMode::Unquoted, 10), 1, 2);
    let runs = crawled.runs();
    let latest = |w: &str| {
        records_of(&runs, "cn")
            .find(|r| r.word == w && r.outcome.is_terminal())
            .unwrap()
            .pages()
            .to_vec()
    };
    for w in affected {
        let pages = latest(w);
        let n: usize = pages.iter().map(|p| p.entries.len()).sum();
        assert!(n >= 100, "{w} has {n} results");
        assert_eq!(
            whitelist_infer(&pages, 100, 20).domains.as_ref(),
            Some(&planted),
            "{w}"
        );
    }
    for w in &clean_words {
        assert_eq!(whitelist_infer(&latest(w), 100, 20).domains, None, "{w}");
    }
    let report = crawled.report(&cfg_pair("cn", "com"));
    let found: BTreeSet<(String, String)> = report
        .whitelists
        .iter()
        .map(|f| (f.engine.as_str().to_owned(), f.word.clone()))
        .collect();
    let expect: BTreeSet<(String, String)> = affected
        .iter()
        .map(|w| ("cn".to_owned(), w.to_string()))
        .collect();
    assert_eq!(found, expect);
}

fn c8_blacklist_probe() {
    let probe = "法轮大法好 真相网站";
    let mut words = synthetic_words(10, 88);
    words.push(probe.into());
    let mut cn = censoring(["六四"], BannerStyle::FirstPageAlways, 1);
    cn.blacklist_domains = set(["epochtimes.com"]);
    let mut s = scenario(9, words, vec![engine("cn", cn), engine("com", clean(2))]);
    s.probe_documents.push(ProbeDocument {
        text: probe.into(),
        domains: vec![
            "a-news.com".into(),
            "b-forum.org".into(),
            "epochtimes.com".into(),
        ],
    });
    let net = build(s);
    let crawled = crawl(&net, &plan(1, DAY, QuotedMode::Quoted, 1), 1, 2);
    let runs = crawled.runs();
    let entries = |e: &str| -> Vec<ResultEntry> {
        let r = records_of(&runs, e)
            .find(|r| r.word == probe && r.outcome.is_terminal())
            .unwrap();
        r.pages().iter().flat_map(|p| p.entries.clone()).collect()
    };
    let results = BTreeMap::from([
        (EngineId::new("cn"), entries("cn")),
        (EngineId::new("com"), entries("com")),
    ]);
    let diff = blacklist_probe_diff(&results, &EngineId::new("com"));
    assert_eq!(
        diff,
        BTreeMap::from([(EngineId::new("cn"), set(["epochtimes.com"]))])
    );

    let cfg = AnalysisConfig {
        probe_sentences: vec![probe.into()],
        ..cfg_pair("cn", "com")
    };
    let report = crawled.report(&cfg);
    assert_eq!(report.blacklist.len(), 1);
    assert_eq!(report.blacklist[0].missing_domains, set(["epochtimes.com"]));
}

fn c9_temporal() {
    // middlebox entry for runs 8-11 of 18
    let teng = "滕文生";
    let mut words = synthetic_words(6, 99);
    words.push(teng.into());
    let mut s = scenario(10, words, vec![engine("cn", clean(1))]);
    s.middlebox.overrides.push(MiddleboxOverride {
        from_s: 7.0 * DAY,
        until_s: Some(11.0 * DAY),
        keywords: BTreeMap::from([(teng.to_string(), 1.0)]),
        replace: false,
    });
    let net = build(s);
    let crawled = crawl(&net, &plan(18, DAY, QuotedMode::Unquoted, 1), 1, 5);
    let runs = crawled.runs();
    let order: Vec<String> = (0..18).map(run_id).collect();
    let series = reset_rate_series(records_of(&runs, "cn"), &order);
    for s in &series {
        if s.word == teng {
            let expect: Vec<TemporalSignal> = (0..18)
                .map(|i| {
                    if (7..11).contains(&i) {
                        TemporalSignal::ResetTriggered
                    } else {
                        TemporalSignal::ResetAbsent
                    }
                })
                .collect();
            assert_eq!(s.trace, expect);
            assert_eq!(
                (s.reset_count, s.observation_count, s.longest_streak()),
                (4, 18, 4)
            );
        } else {
            assert_eq!(s.reset_count, 0, "{}", s.word);
        }
    }

    // banner from run 6 of 17
    let wen = "温家宝";
    let mut words = synthetic_words(6, 98);
    words.push(wen.into());
    let mut cn = engine("cn", censoring(["六四"], BannerStyle::FirstPageAlways, 1));
    cn.overrides.push(PolicyOverride {
        from_s: 5.0 * DAY,
        until_s: None,
        add_blacklist_terms: set([wen]),
        remove_blacklist_terms: BTreeSet::new(),
        banner_style: None,
    });
    let net = build(scenario(11, words, vec![cn]));
    let crawled = crawl(&net, &plan(17, DAY, QuotedMode::Unquoted, 1), 1, 5);
    let runs = crawled.runs();
    let stats = banner_stats(records_of(&runs, "cn"));
    let row = stats.iter().find(|s| s.word == wen).unwrap();
    assert_eq!((row.trigger_count, row.observation_count), (12, 17));
    assert_eq!(
        banner_trigger_ratio(row.trigger_count, row.observation_count).unwrap(),
        0.71
    );
}

fn check_against_oracle(report: &CensorshipReport, net: &SimNetwork) {
    let plan = net
        .scenario
        .oracle
        .clone()
        .expect("scenario has an oracle section");
    let exp = oracle_expected_report(net, &plan);
    for r in &exp.ratios {
        let got = report
            .ratios
            .iter()
            .find(|x| x.numerator == r.numerator && x.denominator == r.denominator)
            .unwrap();
        let band = |w: &str| got.rows.iter().find(|x| x.word == w).map(|x| x.band);
        for (words, want) in [
            (&r.low_tail, BandClass::LowTail),
            (&r.unremarkable, BandClass::Unremarkable),
            (&r.high_tail, BandClass::HighTail),
        ] {
            for w in words {
                assert_eq!(band(w), Some(want), "ratio band of {w}");
            }
        }
    }
    for (engine, q) in &exp.quotation {
        let got = report
            .quotation
            .iter()
            .find(|x| &x.engine == engine)
            .unwrap();
        for s in &got.series {
            let values: Vec<f64> = s.points.iter().filter_map(|p| p.ratio).collect();
            if q.below.contains(&s.word) {
                assert!(
                    values.len() as u32 == plan.runs && values.iter().all(|v| *v < 0.9),
                    "{} {values:?}",
                    s.word
                );
            }
            if q.clean.contains(&s.word) {
                assert!(
                    values.len() as u32 == plan.runs
                        && values.iter().all(|v| (0.9..=1.1).contains(v)),
                    "{} {values:?}",
                    s.word
                );
            }
        }
    }
    for (engine, b) in &exp.banners {
        let got = report.banners.iter().find(|x| &x.engine == engine).unwrap();
        for row in &got.rows {
            let w = &row.stats.word;
            if b.undetermined.contains(w) {
                continue;
            }
            assert_eq!(
                b.always.contains(w),
                row.stats.always_censored,
                "{engine} {w}"
            );
            assert_eq!(
                b.sometimes.contains(w),
                row.stats.at_least_once && !row.stats.always_censored,
                "{engine} {w}"
            );
            assert_eq!(
                b.never.contains(w),
                !row.stats.at_least_once,
                "{engine} {w}"
            );
            if let Some(c) = b.counts.get(w) {
                assert_eq!(
                    *c,
                    (row.stats.trigger_count, row.stats.observation_count),
                    "{engine} {w}"
                );
            }
        }
    }
    for (engine, words) in &exp.whitelists {
        for (w, want) in words {
            let got = report
                .whitelists
                .iter()
                .find(|f| &f.engine == engine && &f.word == w);
            assert_eq!(
                got.and_then(|f| f.inference.domains.clone()),
                *want,
                "{engine} {w}"
            );
        }
    }
    assert!(!exp.blacklist.is_empty());
    for b in &exp.blacklist {
        let got = report
            .blacklist
            .iter()
            .find(|x| x.probe == b.probe && x.engine == b.censored)
            .unwrap();
        assert_eq!(got.missing_domains, b.missing_domains);
    }
    for (engine, r) in &exp.resets {
        let got = report.resets.iter().find(|x| &x.engine == engine).unwrap();
        for (w, trace) in &r.triggered {
            let s = got.series.iter().find(|s| &s.word == w).unwrap();
            let t: Vec<bool> = s
                .trace
                .iter()
                .map(|x| *x == TemporalSignal::ResetTriggered)
                .collect();
            assert_eq!(&t, trace, "{engine} {w}");
        }
        for s in &got.series {
            assert!(
                r.triggered.contains_key(&s.word) || r.undetermined.contains(&s.word),
                "unexpected reset {}",
                s.word
            );
        }
    }
}

fn c10_oracle_equivalence() {
    let net = Arc::new(
        Scenario::load(&demo_dir().join("scenario.toml"))
            .unwrap()
            .build()
            .unwrap(),
    );
    assert!(net.corpus.len() <= 200);
    let plan = net.scenario.oracle.clone().unwrap();
    let crawled = crawl(&net, &plan, 2, 42);
    let cfg = AnalysisConfig::load(&demo_dir().join("analysis.toml")).unwrap();
    let lexicon = cfg.load_lexicon().unwrap();
    let report = analyzer::analyze(&crawled.runs(), &cfg, &lexicon, &Selection::all()).unwrap();
    check_against_oracle(&report, &net);
    let raw = brute::load_raw(&crawled.dir.path().join("store"));
    brute::assert_report_matches(&report, &raw, &cfg);
    assert!(!report.blacklist.is_empty() && !report.whitelists.is_empty());
    assert!(report.resets.iter().any(|r| !r.series.is_empty()));
}

fn pipeline(dir: &std::path::Path) {
    let demo = demo_dir();
    let store = dir.join("store");
    let out = dir.join("analysis");
    let args = |v: &[&str]| -> Vec<String> {
        std::iter::once("censorlab")
            .chain(v.iter().copied())
            .map(String::from)
            .collect()
    };
    let code = censorlab::cli::run(args(&[
        "--quiet",
        "crawl",
        "run",
        "--config",
        demo.join("campaign.toml").to_str().unwrap(),
        "--out",
        store.to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
    let code = censorlab::cli::run(args(&[
        "--quiet",
        "analyze",
        "--runs",
        store.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--config",
        demo.join("analysis.toml").to_str().unwrap(),
    ]));
    assert_eq!(code, 0);
}

fn c11_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    let mut names: Vec<String> = std::fs::read_dir(a.path().join("analysis"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert!(
        names.contains(&"report.md".to_string()) && names.contains(&"analysis.json".to_string())
    );
    for n in &names {
        let x = std::fs::read(a.path().join("analysis").join(n)).unwrap();
        let y = std::fs::read(b.path().join("analysis").join(n)).unwrap();
        assert!(x == y, "{n} differs");
    }
    let report = censorlab::analyzer::load_runs(
        &censorlab::store::RunStore::open_existing(a.path().join("store")).unwrap(),
        None,
    )
    .unwrap();
    assert_eq!(report.len(), 4);
}

fn main() {
    let criteria: [(&str, fn()); 11] = [
        ("planted-censorship recovery", c1_planted_recovery),
        ("noise-band false positives", c2_noise_band),
        ("measurement arithmetic", c3_arithmetic),
        ("banner style conformance", c4_banner_styles),
        ("two-pass quotation detection", c5_two_pass),
        ("reset handling and recovery timing", c6_reset_recovery),
        ("whitelist inference exactness", c7_whitelist),
        ("blacklist probe", c8_blacklist_probe),
        ("temporal traces", c9_temporal),
        ("oracle equivalence", c10_oracle_equivalence),
        ("end-to-end determinism", c11_determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let t = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
        if !ok {
            failed += 1;
        }
        println!(
            "{} criterion {:>2}: {name} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
