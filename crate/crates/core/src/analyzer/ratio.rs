use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioFlag {
    ZeroNumerator,
    ZeroDenominator,
    MissingData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub numerator_hits: Option<u64>,
    pub denominator_hits: Option<u64>,
    /// `0.0` for a zero numerator (flagged); absent without both counts or with a zero denominator.
    pub ratio: Option<f64>,
    pub flags: BTreeSet<RatioFlag>,
}

impl RatioPoint {
    /// Whether the point belongs on a log-scale plot.
    pub fn plottable(&self) -> Option<f64> {
        self.ratio.filter(|r| *r > 0.0)
    }
}

pub fn hit_ratio(numerator: Option<u64>, denominator: Option<u64>) -> RatioPoint {
    let mut flags = BTreeSet::new();
    let ratio = match (numerator, denominator) {
        (Some(n), Some(d)) => {
            if n == 0 {
                flags.insert(RatioFlag::ZeroNumerator);
            }
            if d == 0 {
                flags.insert(RatioFlag::ZeroDenominator);
                None
            } else {
                Some(n as f64 / d as f64)
            }
        }
        _ => {
            flags.insert(RatioFlag::MissingData);
            None
        }
    };
    RatioPoint {
        numerator_hits: numerator,
        denominator_hits: denominator,
        ratio,
        flags,
    }
}

/// Ratio of unquoted to quoted hits for the same word and engine.
pub fn quotation_differential(unquoted_hits: Option<u64>, quoted_hits: Option<u64>) -> RatioPoint {
    hit_ratio(unquoted_hits, quoted_hits)
}

/// Median of the present values; the mean of the middle two for an even count.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub word: String,
    /// One point per run, in run order.
    pub points: Vec<RatioPoint>,
    pub median_ratio: Option<f64>,
}

impl RatioSeries {
    pub fn new(word: String, points: Vec<RatioPoint>) -> Self {
        let present: Vec<f64> = points.iter().filter_map(|p| p.ratio).collect();
        let median_ratio = median(&present);
        RatioSeries {
            word,
            points,
            median_ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BandClass {
    LowTail,
    Unremarkable,
    HighTail,
}

impl BandClass {
    pub fn label(self) -> &'static str {
        match self {
            BandClass::LowTail => "low-tail",
            BandClass::Unremarkable => "unremarkable",
            BandClass::HighTail => "high-tail",
        }
    }
}

/// The closed band `[low, high]` is unremarkable.
pub fn band_classify(median: f64, low: f64, high: f64) -> BandClass {
    if median < low {
        BandClass::LowTail
    } else if median > high {
        BandClass::HighTail
    } else {
        BandClass::Unremarkable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedWord {
    /// 1-based.
    pub rank: usize,
    pub word: String,
    pub median: f64,
}

/// Words in ascending median order, ties by word; words without a median
/// are returned separately, sorted.
pub fn median_order(series: &[RatioSeries]) -> (Vec<RankedWord>, Vec<String>) {
    let mut with: Vec<(&str, f64)> = Vec::new();
    let mut without: Vec<String> = Vec::new();
    for s in series {
        match s.median_ratio {
            Some(m) => with.push((&s.word, m)),
            None => without.push(s.word.clone()),
        }
    }
    with.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    without.sort();
    let ranked = with
        .into_iter()
        .enumerate()
        .map(|(i, (w, m))| RankedWord {
            rank: i + 1,
            word: w.to_owned(),
            median: m,
        })
        .collect();
    (ranked, without)
}

/// Smallest rank whose median reaches `threshold`; `len + 1` when none does.
pub fn tail_boundary(ordered: &[RankedWord], threshold: f64) -> usize {
    ordered
        .iter()
        .position(|r| r.median >= threshold)
        .map_or(ordered.len() + 1, |i| i + 1)
}
