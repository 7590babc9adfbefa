//! Category breakdown of flagged words.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::str::FromStr;

use super::{AnalyzerError, CensorshipReport};
use crate::corpus::{Category, CategoryLexicon};
use crate::engine::EngineId;

/// Where a column takes its ordered word list from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSource {
    /// `ratio:<numerator>/<denominator>`, in rank order.
    Ratio(EngineId, EngineId),
    /// `quotation:<engine>`, ascending differential.
    Quotation(EngineId),
    /// `banner-always:<engine>`, by word.
    BannerAlways(EngineId),
    /// `banner-once:<engine>`, by word.
    BannerOnce(EngineId),
    /// `reset:<engine>`, most resets first.
    Reset(EngineId),
}

impl FromStr for ColumnSource {
    type Err = AnalyzerError;

    fn from_str(s: &str) -> Result<Self, AnalyzerError> {
        let bad = || AnalyzerError::UnknownColumnSource(s.to_owned());
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        if arg.is_empty() {
            return Err(bad());
        }
        let e = || EngineId::new(arg);
        Ok(match kind {
            "ratio" => {
                let (n, d) = arg
                    .split_once('/')
                    .filter(|(n, d)| !n.is_empty() && !d.is_empty())
                    .ok_or_else(bad)?;
                ColumnSource::Ratio(EngineId::new(n), EngineId::new(d))
            }
            "quotation" => ColumnSource::Quotation(e()),
            "banner-always" => ColumnSource::BannerAlways(e()),
            "banner-once" => ColumnSource::BannerOnce(e()),
            "reset" => ColumnSource::Reset(e()),
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub id: String,
    pub source: String,
    /// 1-based inclusive `[first, last]`; `[n + 1, n]` is empty. Absent: the
    /// flagged part of the list (low tail, below threshold, reset at least
    /// `reset_min_count` times, or the whole list).
    #[serde(default)]
    pub range: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryColumn {
    pub id: String,
    pub source: String,
    pub first: usize,
    pub last: usize,
    /// One entry per category, in report row order.
    pub counts: BTreeMap<Category, u32>,
    pub total: u32,
    pub sensitive: u32,
    /// Whole percent of sensitive words.
    pub percent: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTable {
    pub columns: Vec<CategoryColumn>,
}

/// The ordered list a source addresses and the length of its flagged prefix.
fn source_list(
    report: &CensorshipReport,
    src: &ColumnSource,
    reset_min: u32,
) -> Option<(Vec<String>, usize)> {
    match src {
        ColumnSource::Ratio(n, d) => {
            let r = report
                .ratios
                .iter()
                .find(|r| &r.numerator == n && &r.denominator == d)?;
            let words: Vec<String> = r.rows.iter().map(|x| x.word.clone()).collect();
            Some((words, r.tail_boundary - 1))
        }
        ColumnSource::Quotation(e) => {
            let q = report.quotation.iter().find(|q| &q.engine == e)?;
            let flagged = q.rows.iter().take_while(|x| x.below_threshold).count();
            Some((q.rows.iter().map(|x| x.word.clone()).collect(), flagged))
        }
        ColumnSource::BannerAlways(e) | ColumnSource::BannerOnce(e) => {
            let b = report.banners.iter().find(|b| &b.engine == e)?;
            let always = matches!(src, ColumnSource::BannerAlways(_));
            let words: Vec<String> = b
                .rows
                .iter()
                .filter(|r| {
                    if always {
                        r.stats.always_censored
                    } else {
                        r.stats.at_least_once
                    }
                })
                .map(|r| r.stats.word.clone())
                .collect();
            let n = words.len();
            Some((words, n))
        }
        ColumnSource::Reset(e) => {
            let r = report.resets.iter().find(|r| &r.engine == e)?;
            let mut s: Vec<(u32, &str)> = r
                .series
                .iter()
                .map(|s| (s.reset_count, s.word.as_str()))
                .collect();
            s.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
            let flagged = s.iter().take_while(|(c, _)| *c >= reset_min).count();
            Some((s.into_iter().map(|(_, w)| w.to_owned()).collect(), flagged))
        }
    }
}

/// Counts words per category in each column's range of its source list.
pub fn category_breakdown(
    report: &CensorshipReport,
    lexicon: &CategoryLexicon,
    columns: &[ColumnSpec],
    reset_min_count: u32,
) -> Result<CategoryTable, AnalyzerError> {
    let mut out = Vec::with_capacity(columns.len());
    for spec in columns {
        let src: ColumnSource = spec.source.parse()?;
        let (list, flagged) = source_list(report, &src, reset_min_count).unwrap_or_default();
        let (first, last) = spec.range.unwrap_or((1, flagged));
        if first < 1 || last > list.len() || first > last + 1 {
            return Err(AnalyzerError::RangeOutOfBounds {
                column: spec.id.clone(),
                start: first,
                end: last,
                len: list.len(),
            });
        }
        let mut counts: BTreeMap<Category, u32> = Category::ROWS.iter().map(|c| (*c, 0)).collect();
        for w in &list[first - 1..last] {
            *counts.entry(lexicon.category_of(w)).or_default() += 1;
        }
        let total: u32 = counts.values().sum();
        let sensitive: u32 = counts
            .iter()
            .filter(|(c, _)| c.is_sensitive())
            .map(|(_, n)| n)
            .sum();
        let percent = if total == 0 {
            0
        } else {
            (sensitive as f64 / total as f64 * 100.0).round() as u32
        };
        out.push(CategoryColumn {
            id: spec.id.clone(),
            source: spec.source.clone(),
            first,
            last,
            counts,
            total,
            sensitive,
            percent,
        });
    }
    Ok(CategoryTable { columns: out })
}

/// One column per ratio pair, quotation engine, banner engine with an
/// always-censored word, and reset engine with a repeated reset.
pub(crate) fn default_columns(report: &CensorshipReport) -> Vec<ColumnSpec> {
    let mut cols = Vec::new();
    let mut push = |source: String| {
        let id = ((b'A' + (cols.len() % 26) as u8) as char).to_string();
        cols.push(ColumnSpec {
            id,
            source,
            range: None,
        });
    };
    for r in &report.ratios {
        push(format!("ratio:{}/{}", r.numerator, r.denominator));
    }
    for q in &report.quotation {
        push(format!("quotation:{}", q.engine));
    }
    for b in &report.banners {
        if b.discriminative && b.rows.iter().any(|r| r.stats.always_censored) {
            push(format!("banner-always:{}", b.engine));
        }
    }
    for r in &report.resets {
        if !r.series.is_empty() {
            push(format!("reset:{}", r.engine));
        }
    }
    cols
}
