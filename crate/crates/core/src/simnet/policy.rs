use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use super::SimError;
use crate::engine::{BannerStyle, EngineId, QuotationMode};

/// Hit-count scale applied to reordered matches of a quoted query under `LooseReorder`.
pub const LOOSE_REORDER_FACTOR: f64 = 0.3;

fn default_noise() -> f64 {
    0.10
}

fn default_block_window() -> f64 {
    90.0
}

/// One engine's self-censorship policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPolicy {
    /// Queries containing any of these as a substring are censored.
    #[serde(default)]
    pub blacklist_terms: BTreeSet<String>,
    /// Queries containing any of these characters are censored.
    #[serde(default)]
    pub char_filters: BTreeSet<char>,
    #[serde(default)]
    pub whitelist_domains: BTreeSet<String>,
    #[serde(default)]
    pub second_class_domains: BTreeSet<String>,
    /// Censored queries matching one of these also draw from the second-class domains.
    #[serde(default)]
    pub second_class_terms: BTreeSet<String>,
    /// Never served, censored or not.
    #[serde(default)]
    pub blacklist_domains: BTreeSet<String>,
    pub banner_style: BannerStyle,
    pub quotation_mode: QuotationMode,
    /// Censor unquoted queries only.
    #[serde(default)]
    pub two_pass: bool,
    /// Half-width of the multiplicative hit-count noise.
    #[serde(default = "default_noise")]
    pub hit_noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SimPolicy {
    /// An uncensored engine.
    pub fn clean(banner_style: BannerStyle, quotation_mode: QuotationMode) -> Self {
        SimPolicy {
            blacklist_terms: BTreeSet::new(),
            char_filters: BTreeSet::new(),
            whitelist_domains: BTreeSet::new(),
            second_class_domains: BTreeSet::new(),
            second_class_terms: BTreeSet::new(),
            blacklist_domains: BTreeSet::new(),
            banner_style,
            quotation_mode,
            two_pass: false,
            hit_noise: default_noise(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let sets = [
            &self.whitelist_domains,
            &self.second_class_domains,
            &self.blacklist_domains,
        ];
        for (i, a) in sets.iter().enumerate() {
            for b in &sets[i + 1..] {
                if let Some(d) = a.intersection(b).next() {
                    return Err(SimError::InvalidScenario(format!(
                        "domain {d} is in two policy domain sets"
                    )));
                }
            }
        }
        if !(0.0..=0.5).contains(&self.hit_noise) {
            return Err(SimError::InvalidScenario(format!(
                "hit_noise {} outside [0, 0.5]",
                self.hit_noise
            )));
        }
        if self.blacklist_terms.iter().any(|t| t.is_empty()) {
            return Err(SimError::InvalidScenario("empty blacklist term".into()));
        }
        Ok(())
    }

    /// Whether a query text (quotes already stripped) is censored.
    pub fn censors(&self, text: &str, quoted: bool) -> bool {
        if self.two_pass && quoted {
            return false;
        }
        self.blacklist_terms
            .iter()
            .any(|t| text.contains(t.as_str()))
            || text.chars().any(|c| self.char_filters.contains(&c))
    }

    pub fn is_second_class_query(&self, text: &str) -> bool {
        self.second_class_terms
            .iter()
            .any(|t| text.contains(t.as_str()))
    }

    /// Whether a document on `domain` may be served for a query.
    pub fn allows(&self, domain: &str, censored: bool, second_class_query: bool) -> bool {
        if self.blacklist_domains.contains(domain) {
            return false;
        }
        !censored
            || self.whitelist_domains.contains(domain)
            || (second_class_query && self.second_class_domains.contains(domain))
    }

    /// The policy in force at `t` after applying every active override in order.
    pub fn at<'a>(&'a self, overrides: &[PolicyOverride], t: f64) -> Cow<'a, SimPolicy> {
        let active: Vec<&PolicyOverride> = overrides.iter().filter(|o| o.active_at(t)).collect();
        if active.is_empty() {
            return Cow::Borrowed(self);
        }
        let mut p = self.clone();
        for o in active {
            p.blacklist_terms
                .extend(o.add_blacklist_terms.iter().cloned());
            for term in &o.remove_blacklist_terms {
                p.blacklist_terms.remove(term);
            }
            if let Some(style) = o.banner_style {
                p.banner_style = style;
            }
        }
        Cow::Owned(p)
    }
}

/// A scheduled change to an engine policy, active on `[from_s, until_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOverride {
    pub from_s: f64,
    #[serde(default)]
    pub until_s: Option<f64>,
    #[serde(default)]
    pub add_blacklist_terms: BTreeSet<String>,
    #[serde(default)]
    pub remove_blacklist_terms: BTreeSet<String>,
    #[serde(default)]
    pub banner_style: Option<BannerStyle>,
}

impl PolicyOverride {
    pub fn active_at(&self, t: f64) -> bool {
        t >= self.from_s && self.until_s.is_none_or(|u| t < u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiddleboxPolicy {
    /// Monitored keyword → reset probability.
    #[serde(default, alias = "keywords")]
    pub keyword_reset_prob: BTreeMap<String, f64>,
    #[serde(default = "default_block_window")]
    pub block_window_s: f64,
    /// Engines the middlebox sits in front of; all when absent.
    #[serde(default)]
    pub engines: Option<BTreeSet<EngineId>>,
    #[serde(default)]
    pub overrides: Vec<MiddleboxOverride>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for MiddleboxPolicy {
    fn default() -> Self {
        MiddleboxPolicy {
            keyword_reset_prob: BTreeMap::new(),
            block_window_s: default_block_window(),
            engines: None,
            overrides: Vec::new(),
            seed: 0,
        }
    }
}

/// A scheduled keyword-map change, active on `[from_s, until_s)`. With
/// `replace` the map is swapped out entirely (a lenient or strict day).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiddleboxOverride {
    pub from_s: f64,
    #[serde(default)]
    pub until_s: Option<f64>,
    #[serde(default)]
    pub keywords: BTreeMap<String, f64>,
    #[serde(default)]
    pub replace: bool,
}

impl MiddleboxPolicy {
    pub fn validate(&self) -> Result<(), SimError> {
        let maps = std::iter::once(&self.keyword_reset_prob)
            .chain(self.overrides.iter().map(|o| &o.keywords));
        for map in maps {
            for (k, p) in map {
                if k.is_empty() || !(0.0..=1.0).contains(p) {
                    return Err(SimError::InvalidScenario(format!(
                        "bad middlebox keyword {k:?} with probability {p}"
                    )));
                }
            }
        }
        if self.block_window_s < 0.0 {
            return Err(SimError::InvalidScenario(
                "block_window_s must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn applies_to(&self, engine: &EngineId) -> bool {
        self.engines.as_ref().is_none_or(|e| e.contains(engine))
    }

    /// The keyword map in force at `t`.
    pub fn keywords_at(&self, t: f64) -> Cow<'_, BTreeMap<String, f64>> {
        let active: Vec<&MiddleboxOverride> = self
            .overrides
            .iter()
            .filter(|o| t >= o.from_s && o.until_s.is_none_or(|u| t < u))
            .collect();
        if active.is_empty() {
            return Cow::Borrowed(&self.keyword_reset_prob);
        }
        let mut map = self.keyword_reset_prob.clone();
        for o in active {
            if o.replace {
                map.clear();
            }
            map.extend(o.keywords.iter().map(|(k, p)| (k.clone(), *p)));
        }
        Cow::Owned(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RobotDetection {
    /// More than `queries` queries within `window_s` seconds.
    RateThreshold { queries: u32, window_s: f64 },
    /// A burst of back-to-back queries lasting longer than `duration_s`.
    BurstTolerance { duration_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RobotReaction {
    Http999,
    Http503,
    ApologyHtml,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotPolicy {
    pub detection: RobotDetection,
    pub reaction: RobotReaction,
    pub unblock_after_s: f64,
}

impl RobotPolicy {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = match self.detection {
            RobotDetection::RateThreshold { queries, window_s } => queries > 0 && window_s > 0.0,
            RobotDetection::BurstTolerance { duration_s } => duration_s > 0.0,
        };
        if !ok || self.unblock_after_s <= 0.0 {
            return Err(SimError::InvalidScenario(
                "robot thresholds must be positive".into(),
            ));
        }
        Ok(())
    }
}
