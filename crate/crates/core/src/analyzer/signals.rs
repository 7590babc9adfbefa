//! Banner, reset and domain signals.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::AnalyzerError;
use crate::crawler::FailureClass;
use crate::engine::{EngineId, ParsedResponse, ResultEntry};
use crate::store::{QueryRecord, RecordOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BannerStats {
    pub word: String,
    pub always_censored: bool,
    pub at_least_once: bool,
    pub trigger_count: u32,
    pub observation_count: u32,
}

/// Per-word banner tallies over parsed records of one engine. Failed,
/// gave-up and skipped records are not observations.
pub fn banner_stats<'a>(records: impl IntoIterator<Item = &'a QueryRecord>) -> Vec<BannerStats> {
    let mut tally: BTreeMap<&str, (u32, u32)> = BTreeMap::new();
    for r in records {
        if let RecordOutcome::Parsed { pages } = &r.outcome {
            let e = tally.entry(&r.word).or_default();
            e.1 += 1;
            if pages.iter().any(|p| p.banner_present) {
                e.0 += 1;
            }
        }
    }
    tally
        .into_iter()
        .map(|(w, (t, o))| BannerStats {
            word: w.to_owned(),
            always_censored: t == o && o > 0,
            at_least_once: t >= 1,
            trigger_count: t,
            observation_count: o,
        })
        .collect()
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// `trigger / observation`, rounded to two decimals.
pub fn banner_trigger_ratio(
    trigger_count: u32,
    observation_count: u32,
) -> Result<f64, AnalyzerError> {
    if observation_count == 0 {
        return Err(AnalyzerError::ZeroObservations);
    }
    Ok(round2(trigger_count as f64 / observation_count as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalSignal {
    BannerPresent,
    BannerAbsent,
    ResetTriggered,
    ResetAbsent,
    NoData,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetSeries {
    pub word: String,
    pub reset_count: u32,
    pub observation_count: u32,
    /// One signal per run, in run order.
    pub trace: Vec<TemporalSignal>,
}

impl ResetSeries {
    /// Length of the longest run of consecutive triggers.
    pub fn longest_streak(&self) -> usize {
        let mut best = 0;
        let mut cur = 0;
        for s in &self.trace {
            if *s == TemporalSignal::ResetTriggered {
                cur += 1;
                best = best.max(cur);
            } else {
                cur = 0;
            }
        }
        best
    }
}

/// Counts runs whose first attempt ended in a TCP reset. `records` are one
/// engine's records; `run_order` fixes the trace order.
pub fn reset_rate_series<'a>(
    records: impl IntoIterator<Item = &'a QueryRecord>,
    run_order: &[String],
) -> Vec<ResetSeries> {
    let pos: BTreeMap<&str, usize> = run_order
        .iter()
        .enumerate()
        .map(|(i, r)| (r.as_str(), i))
        .collect();
    let mut traces: BTreeMap<&str, Vec<TemporalSignal>> = BTreeMap::new();
    for r in records {
        let Some(&i) = pos.get(r.run_id.as_str()) else {
            continue;
        };
        let trace = traces
            .entry(&r.word)
            .or_insert_with(|| vec![TemporalSignal::NoData; run_order.len()]);
        if r.attempt != 1 || trace[i] != TemporalSignal::NoData {
            continue;
        }
        trace[i] = match &r.outcome {
            RecordOutcome::Failed {
                failure: FailureClass::TcpReset,
            } => TemporalSignal::ResetTriggered,
            RecordOutcome::Skipped { .. } => TemporalSignal::NoData,
            _ => TemporalSignal::ResetAbsent,
        };
    }
    traces
        .into_iter()
        .map(|(w, trace)| ResetSeries {
            word: w.to_owned(),
            reset_count: trace
                .iter()
                .filter(|s| **s == TemporalSignal::ResetTriggered)
                .count() as u32,
            observation_count: trace
                .iter()
                .filter(|s| **s != TemporalSignal::NoData)
                .count() as u32,
            trace,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhitelistInference {
    /// The suspected whitelist, when fewer than `k` domains cover the top `n` entries.
    pub domains: Option<BTreeSet<String>>,
    pub entries_considered: usize,
    pub unique_domains: usize,
    /// Fewer than `n` entries were available.
    pub partial: bool,
}

/// Looks for a whitelist in the top `n` results of one (word, engine).
pub fn whitelist_infer(pages: &[ParsedResponse], n: usize, k: usize) -> WhitelistInference {
    let mut entries: Vec<&ResultEntry> = pages.iter().flat_map(|p| &p.entries).collect();
    entries.sort_by_key(|e| e.rank);
    entries.truncate(n);
    let domains: BTreeSet<String> = entries
        .iter()
        .map(|e| e.registrable_domain.clone())
        .collect();
    let unique = domains.len();
    WhitelistInference {
        domains: (unique < k).then_some(domains),
        entries_considered: entries.len(),
        unique_domains: unique,
        partial: entries.len() < n,
    }
}

/// For every engine other than `reference`, the domains the reference
/// returns for the probe that the other engine omits.
pub fn blacklist_probe_diff(
    results: &BTreeMap<EngineId, Vec<ResultEntry>>,
    reference: &EngineId,
) -> BTreeMap<EngineId, BTreeSet<String>> {
    let domains = |entries: &[ResultEntry]| -> BTreeSet<String> {
        entries
            .iter()
            .map(|e| e.registrable_domain.clone())
            .collect()
    };
    let Some(base) = results.get(reference).map(|e| domains(e)) else {
        return BTreeMap::new();
    };
    results
        .iter()
        .filter(|(id, _)| *id != reference)
        .map(|(id, entries)| {
            (
                id.clone(),
                base.difference(&domains(entries)).cloned().collect(),
            )
        })
        .collect()
}
