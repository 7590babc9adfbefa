//! Naive recomputation of every report statistic straight from the JSON
//! lines in a store, for comparison with the analyzer.

use serde_json::Value;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use censorlab::analyzer::{AnalysisConfig, CensorshipReport};

pub struct RawRun {
    pub id: String,
    pub started_at: f64,
    pub records: Vec<Value>,
}

pub fn load_raw(root: &Path) -> Vec<RawRun> {
    let mut runs = Vec::new();
    for entry in std::fs::read_dir(root).unwrap() {
        let dir = entry.unwrap().path();
        let Ok(manifest) = std::fs::read_to_string(dir.join("manifest.json")) else {
            continue;
        };
        let m: Value = serde_json::from_str(&manifest).unwrap();
        let text = std::fs::read_to_string(dir.join("records.jsonl")).unwrap();
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        runs.push(RawRun {
            id: m["run_id"].as_str().unwrap().to_owned(),
            started_at: m["started_at"].as_f64().unwrap(),
            records,
        });
    }
    runs.sort_by(|a, b| a.started_at.total_cmp(&b.started_at).then(a.id.cmp(&b.id)));
    runs
}

fn kind(r: &Value) -> &str {
    r["outcome"]["kind"].as_str().unwrap()
}

fn is(r: &Value, engine: &str, word: &str, quoted: bool) -> bool {
    r["engine"] == engine && r["word"] == word && r["quoted"] == quoted
}

fn terminal<'a>(run: &'a RawRun, engine: &str, word: &str, quoted: bool) -> Option<&'a Value> {
    run.records.iter().find(|r| {
        is(r, engine, word, quoted) && matches!(kind(r), "parsed" | "gave-up" | "skipped")
    })
}

fn hits(r: Option<&Value>) -> Option<u64> {
    let r = r?;
    if kind(r) != "parsed" {
        return None;
    }
    r["outcome"]["pages"][0]["hit_count"].as_u64()
}

fn words(runs: &[RawRun], engine: &str, quoted: bool) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for run in runs {
        for r in &run.records {
            if r["engine"] == engine
                && r["quoted"] == quoted
                && matches!(kind(r), "parsed" | "gave-up" | "skipped")
            {
                out.insert(r["word"].as_str().unwrap().to_owned());
            }
        }
    }
    out
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[j] < v[i] {
                v.swap(i, j);
            }
        }
    }
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// `(word, median)` ranked ascending, plus the words without a median.
fn ranked(
    runs: &[RawRun],
    word_set: BTreeSet<String>,
    pair: impl Fn(&RawRun, &str) -> (Option<u64>, Option<u64>),
) -> (Vec<(String, f64)>, Vec<String>) {
    let mut with = Vec::new();
    let mut without = Vec::new();
    for w in word_set {
        let mut values = Vec::new();
        for run in runs {
            if let (Some(n), Some(d)) = pair(run, &w) {
                if d > 0 {
                    values.push(n as f64 / d as f64);
                }
            }
        }
        match median(values) {
            Some(m) => with.push((w, m)),
            None => without.push(w),
        }
    }
    with.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    (with, without)
}

fn domains_of(r: &Value) -> Vec<(u64, String)> {
    let mut out = Vec::new();
    for page in r["outcome"]["pages"].as_array().unwrap() {
        for e in page["entries"].as_array().unwrap() {
            out.push((
                e["rank"].as_u64().unwrap(),
                e["registrable_domain"].as_str().unwrap().to_owned(),
            ));
        }
    }
    out
}

/// Asserts the analyzer's report agrees with a naive recomputation, field by field.
pub fn assert_report_matches(report: &CensorshipReport, runs: &[RawRun], cfg: &AnalysisConfig) {
    let ids: Vec<&str> = report.runs.iter().map(|r| r.run_id.as_str()).collect();
    assert_eq!(
        ids,
        runs.iter().map(|r| r.id.as_str()).collect::<Vec<_>>(),
        "run order"
    );
    let q = !runs
        .iter()
        .flat_map(|r| &r.records)
        .any(|r| r["quoted"] == false);
    assert_eq!(report.primary_quoted, q);

    for ratio in &report.ratios {
        let (n, d) = (ratio.numerator.as_str(), ratio.denominator.as_str());
        let all: BTreeSet<String> = words(runs, n, q)
            .union(&words(runs, d, q))
            .cloned()
            .collect();
        let (with, without) = ranked(runs, all, |run, w| {
            (hits(terminal(run, n, w, q)), hits(terminal(run, d, w, q)))
        });
        assert_eq!(ratio.rows.len(), with.len(), "{n}/{d} row count");
        for (i, (row, (w, m))) in ratio.rows.iter().zip(&with).enumerate() {
            assert_eq!(
                (row.rank, row.word.as_str(), row.median_ratio),
                (i + 1, w.as_str(), *m),
                "{n}/{d} row {i}"
            );
            let band = if *m < cfg.low_threshold {
                "low-tail"
            } else if *m > cfg.high_threshold {
                "high-tail"
            } else {
                "unremarkable"
            };
            assert_eq!(row.band.label(), band, "{n}/{d} {w}");
        }
        assert_eq!(ratio.without_median, without);
        let boundary = with
            .iter()
            .position(|(_, m)| *m >= cfg.low_threshold)
            .map_or(with.len() + 1, |i| i + 1);
        assert_eq!(ratio.tail_boundary, boundary);
    }

    for quote in &report.quotation {
        let e = quote.engine.as_str();
        let all: BTreeSet<String> = words(runs, e, false)
            .union(&words(runs, e, true))
            .cloned()
            .collect();
        let (with, without) = ranked(runs, all, |run, w| {
            (
                hits(terminal(run, e, w, false)),
                hits(terminal(run, e, w, true)),
            )
        });
        assert_eq!(quote.rows.len(), with.len(), "{e} quotation rows");
        for (i, (row, (w, m))) in quote.rows.iter().zip(&with).enumerate() {
            assert_eq!(
                (row.rank, row.word.as_str(), row.median_ratio),
                (i + 1, w.as_str(), *m)
            );
            assert_eq!(row.below_threshold, *m < cfg.quotation_threshold);
        }
        assert_eq!(quote.without_median, without);
    }

    for banner in &report.banners {
        let e = banner.engine.as_str();
        let mut tally: BTreeMap<String, (u32, u32)> = BTreeMap::new();
        for run in runs {
            for r in &run.records {
                if r["engine"] == e && r["quoted"] == q && kind(r) == "parsed" {
                    let t = tally
                        .entry(r["word"].as_str().unwrap().to_owned())
                        .or_default();
                    t.1 += 1;
                    if r["outcome"]["pages"]
                        .as_array()
                        .unwrap()
                        .iter()
                        .any(|p| p["banner_present"] == true)
                    {
                        t.0 += 1;
                    }
                }
            }
        }
        let got: BTreeMap<String, (u32, u32)> = banner
            .rows
            .iter()
            .map(|r| {
                (
                    r.stats.word.clone(),
                    (r.stats.trigger_count, r.stats.observation_count),
                )
            })
            .collect();
        assert_eq!(got, tally, "{e} banner counts");
        for row in &banner.rows {
            let (t, o) = tally[&row.stats.word];
            assert_eq!(row.stats.always_censored, t == o && o > 0);
            assert_eq!(row.stats.at_least_once, t > 0);
            assert_eq!(row.ratio, ((t as f64 / o as f64) * 100.0).round() / 100.0);
        }
        let all_once = !tally.is_empty() && tally.values().all(|(t, _)| *t > 0);
        assert_eq!(banner.discriminative, !all_once);
    }

    for reset in &report.resets {
        let e = reset.engine.as_str();
        let mut traces: BTreeMap<String, Vec<char>> = BTreeMap::new();
        for (i, run) in runs.iter().enumerate() {
            for r in &run.records {
                if r["engine"] != e || r["quoted"] != q || r["attempt"] != 1 {
                    continue;
                }
                let t = traces
                    .entry(r["word"].as_str().unwrap().to_owned())
                    .or_insert_with(|| vec!['-'; runs.len()]);
                if t[i] != '-' {
                    continue;
                }
                t[i] = match kind(r) {
                    "failed" if r["outcome"]["failure"]["class"] == "tcp-reset" => 'X',
                    "skipped" => '-',
                    _ => '.',
                };
            }
        }
        traces.retain(|_, t| t.contains(&'X'));
        let got: BTreeMap<String, Vec<char>> = reset
            .series
            .iter()
            .map(|s| {
                let trace = s
                    .trace
                    .iter()
                    .map(|x| match x {
                        censorlab::analyzer::TemporalSignal::ResetTriggered => 'X',
                        censorlab::analyzer::TemporalSignal::ResetAbsent => '.',
                        _ => '-',
                    })
                    .collect();
                (s.word.clone(), trace)
            })
            .collect();
        assert_eq!(got, traces, "{e} reset traces");
        for s in &reset.series {
            let t = &traces[&s.word];
            assert_eq!(
                s.reset_count as usize,
                t.iter().filter(|c| **c == 'X').count()
            );
            assert_eq!(
                s.observation_count as usize,
                t.iter().filter(|c| **c != '-').count()
            );
        }
    }

    let last = runs.last().unwrap();
    let engines: BTreeSet<String> = runs
        .iter()
        .flat_map(|r| &r.records)
        .map(|r| r["engine"].as_str().unwrap().to_owned())
        .collect();
    let mut expected_wl: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for e in &engines {
        for w in words(runs, e, q) {
            let Some(r) = terminal(last, e, &w, q).filter(|r| kind(r) == "parsed") else {
                continue;
            };
            let mut entries = domains_of(r);
            entries.sort_by_key(|(rank, _)| *rank);
            let top: BTreeSet<String> = entries
                .into_iter()
                .take(cfg.whitelist_depth)
                .map(|(_, d)| d)
                .collect();
            if top.len() < cfg.whitelist_threshold {
                expected_wl.insert((e.clone(), w), top);
            }
        }
    }
    let got_wl: BTreeMap<(String, String), BTreeSet<String>> = report
        .whitelists
        .iter()
        .map(|f| {
            (
                (f.engine.as_str().to_owned(), f.word.clone()),
                f.inference.domains.clone().unwrap(),
            )
        })
        .collect();
    assert_eq!(got_wl, expected_wl, "whitelists");

    if let Some(reference) = report
        .blacklist
        .first()
        .map(|b| b.reference.as_str().to_owned())
    {
        let mut expected = Vec::new();
        for probe in &cfg.probe_sentences {
            let doms = |e: &str| -> Option<BTreeSet<String>> {
                let r = terminal(last, e, probe, true)
                    .or_else(|| terminal(last, e, probe, false))
                    .filter(|r| kind(r) == "parsed")?;
                Some(domains_of(r).into_iter().map(|(_, d)| d).collect())
            };
            let Some(base) = doms(&reference) else {
                continue;
            };
            for e in &engines {
                if *e == reference {
                    continue;
                }
                if let Some(other) = doms(e) {
                    expected.push((
                        probe.clone(),
                        e.clone(),
                        base.difference(&other).cloned().collect::<BTreeSet<_>>(),
                    ));
                }
            }
        }
        let got: Vec<(String, String, BTreeSet<String>)> = report
            .blacklist
            .iter()
            .map(|b| {
                (
                    b.probe.clone(),
                    b.engine.as_str().to_owned(),
                    b.missing_domains.clone(),
                )
            })
            .collect();
        assert_eq!(got, expected, "blacklist");
    }
}
