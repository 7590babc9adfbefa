//! Expected findings computed by direct enumeration over the planted
//! index and policies. Deliberately shares no code with the analyzer.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::index::Document;
use super::policy::{SimPolicy, LOOSE_REORDER_FACTOR};
use super::scenario::{EngineSpec, SimNetwork};
use crate::crawler::QuotedMode;
use crate::engine::{EngineId, QuotationMode};

fn one() -> u32 {
    1
}
fn unquoted() -> QuotedMode {
    QuotedMode::Unquoted
}
fn hundred() -> usize {
    100
}
fn twenty() -> usize {
    20
}

/// The campaign shape an expectation is computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCampaign {
    pub runs: u32,
    #[serde(default)]
    pub start_s: f64,
    pub run_spacing_s: f64,
    #[serde(default = "one")]
    pub page_depth: u32,
    #[serde(default = "unquoted")]
    pub quoted: QuotedMode,
    /// `(numerator, denominator)` engine pairs for hit ratios.
    #[serde(default)]
    pub ratio_pairs: Vec<(EngineId, EngineId)>,
    /// Engine whose probe-sentence results the others are compared against.
    #[serde(default)]
    pub reference_engine: Option<EngineId>,
    #[serde(default = "hundred")]
    pub whitelist_depth: usize,
    #[serde(default = "twenty")]
    pub whitelist_threshold: usize,
}

impl OracleCampaign {
    pub fn run_starts(&self) -> Vec<f64> {
        (0..self.runs)
            .map(|i| self.start_s + i as f64 * self.run_spacing_s)
            .collect()
    }
}

/// Band membership that holds for every admissible noise draw.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RatioExpectation {
    pub numerator: EngineId,
    pub denominator: EngineId,
    pub low_tail: BTreeSet<String>,
    pub unremarkable: BTreeSet<String>,
    pub high_tail: BTreeSet<String>,
    /// Words whose band depends on the noise draw or whose data may be missing.
    pub undetermined: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuotationExpectation {
    /// Differential below 0.9 in every run.
    pub below: BTreeSet<String>,
    /// Differential within [0.9, 1.1] in every run.
    pub clean: BTreeSet<String>,
    pub undetermined: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BannerExpectation {
    pub always: BTreeSet<String>,
    pub sometimes: BTreeSet<String>,
    pub never: BTreeSet<String>,
    /// `(trigger_count, observation_count)` for words that carried a banner at least once.
    pub counts: BTreeMap<String, (u32, u32)>,
    pub undetermined: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResetExpectation {
    /// Per-run first-attempt reset trace of every word that resets at least once.
    pub triggered: BTreeMap<String, Vec<bool>>,
    /// Words whose reset depends on a probability strictly between 0 and 1.
    pub undetermined: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlacklistExpectation {
    pub probe: String,
    pub reference: EngineId,
    pub censored: EngineId,
    pub missing_domains: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectedReport {
    pub ratios: Vec<RatioExpectation>,
    pub quotation: BTreeMap<EngineId, QuotationExpectation>,
    pub banners: BTreeMap<EngineId, BannerExpectation>,
    /// Per engine, per word: the whitelist that must be inferred from the last run, or `None`.
    pub whitelists: BTreeMap<EngineId, BTreeMap<String, Option<BTreeSet<String>>>>,
    pub blacklist: Vec<BlacklistExpectation>,
    pub resets: BTreeMap<EngineId, ResetExpectation>,
}

struct Oracle<'a> {
    net: &'a SimNetwork,
    campaign: &'a OracleCampaign,
    by_chars: HashMap<String, Vec<&'a Document>>,
    starts: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Reset {
    Never,
    Always,
    Maybe,
}

impl<'a> Oracle<'a> {
    fn policy(&self, spec: &EngineSpec, t: f64) -> SimPolicy {
        let mut p = spec.policy.clone();
        for o in &spec.overrides {
            if t >= o.from_s && o.until_s.is_none_or(|u| t < u) {
                p.blacklist_terms
                    .extend(o.add_blacklist_terms.iter().cloned());
                p.blacklist_terms
                    .retain(|b| !o.remove_blacklist_terms.contains(b));
                if let Some(s) = o.banner_style {
                    p.banner_style = s;
                }
            }
        }
        p
    }

    fn censored(p: &SimPolicy, text: &str, quoted: bool) -> bool {
        !(p.two_pass && quoted)
            && (p.blacklist_terms.iter().any(|b| text.contains(b.as_str()))
                || p.char_filters.iter().any(|c| text.contains(*c)))
    }

    /// Served documents in rank order with their weights.
    fn served(&self, p: &SimPolicy, text: &str, quoted: bool) -> Vec<(&'a Document, f64)> {
        let censored = Self::censored(p, text, quoted);
        let second = censored
            && p.second_class_terms
                .iter()
                .any(|t| text.contains(t.as_str()));
        let mut key: Vec<char> = text.chars().collect();
        key.sort_unstable();
        let key: String = key.into_iter().collect();
        let mut out: Vec<(&Document, f64)> = Vec::new();
        for d in self.by_chars.get(&key).into_iter().flatten() {
            let factor = if !quoted || &*d.term == text {
                1.0
            } else if p.quotation_mode == QuotationMode::LooseReorder {
                LOOSE_REORDER_FACTOR
            } else {
                continue;
            };
            let ok = !p.blacklist_domains.contains(&d.domain)
                && (!censored
                    || p.whitelist_domains.contains(&d.domain)
                    || (second && p.second_class_domains.contains(&d.domain)));
            if ok {
                out.push((d, d.weight as f64 * factor));
            }
        }
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.id.cmp(&b.0.id)));
        out
    }

    /// Reported hit count as a function of the noise draw `u`.
    fn hits(&self, p: &SimPolicy, text: &str, quoted: bool, u: f64) -> f64 {
        let served = self.served(p, text, quoted);
        let total: f64 = served.iter().map(|(_, w)| w).sum();
        ((total * (1.0 + u)).round()).max(served.len() as f64)
    }

    fn reset(&self, engine: &EngineId, text: &str, t: f64) -> Reset {
        let mb = &self.net.scenario.middlebox;
        if mb.engines.as_ref().is_some_and(|e| !e.contains(engine)) {
            return Reset::Never;
        }
        let mut keywords = mb.keyword_reset_prob.clone();
        for o in &mb.overrides {
            if t >= o.from_s && o.until_s.is_none_or(|u| t < u) {
                if o.replace {
                    keywords.clear();
                }
                keywords.extend(o.keywords.clone());
            }
        }
        let probs: Vec<f64> = keywords
            .iter()
            .filter(|(k, _)| text.contains(k.as_str()))
            .map(|(_, p)| *p)
            .collect();
        if probs.iter().any(|&p| p >= 1.0) {
            Reset::Always
        } else if probs.iter().any(|&p| p > 0.0) {
            Reset::Maybe
        } else {
            Reset::Never
        }
    }

    fn primary_quoted(&self) -> bool {
        self.campaign.quoted == QuotedMode::Quoted
    }

    fn depth(&self, spec: &EngineSpec) -> u32 {
        self.campaign.page_depth.min(spec.max_pages_fetched).max(1)
    }

    fn words(&self) -> impl Iterator<Item = &'a str> {
        self.net.corpus.words.iter().map(|w| w.text.as_str())
    }

    fn any_reset(&self, engine: &EngineId, text: &str) -> bool {
        self.starts
            .iter()
            .any(|&t| !matches!(self.reset(engine, text, t), Reset::Never))
    }

    fn ratios(&self, num: &EngineSpec, den: &EngineSpec) -> RatioExpectation {
        let mut exp = RatioExpectation {
            numerator: num.id.clone(),
            denominator: den.id.clone(),
            ..Default::default()
        };
        let quoted = self.primary_quoted();
        for w in self.words() {
            if self.any_reset(&num.id, w) || self.any_reset(&den.id, w) {
                exp.undetermined.insert(w.to_owned());
                continue;
            }
            let mut bands = BTreeSet::new();
            for &t in &self.starts {
                let (pn, pd) = (self.policy(num, t), self.policy(den, t));
                let n_lo = self.hits(&pn, w, quoted, -pn.hit_noise);
                let n_hi = self.hits(&pn, w, quoted, pn.hit_noise);
                let d_lo = self.hits(&pd, w, quoted, -pd.hit_noise);
                let d_hi = self.hits(&pd, w, quoted, pd.hit_noise);
                if d_lo <= 0.0 {
                    bands.insert("?");
                    continue;
                }
                let (lo, hi) = (n_lo / d_hi, n_hi / d_lo);
                bands.insert(if hi < 0.1 {
                    "low"
                } else if lo > 10.0 {
                    "high"
                } else if lo >= 0.1 && hi <= 10.0 {
                    "mid"
                } else {
                    "?"
                });
            }
            let set = match (bands.len(), bands.first().copied()) {
                (1, Some("low")) => &mut exp.low_tail,
                (1, Some("mid")) => &mut exp.unremarkable,
                (1, Some("high")) => &mut exp.high_tail,
                _ => &mut exp.undetermined,
            };
            set.insert(w.to_owned());
        }
        exp
    }

    fn quotation(&self, spec: &EngineSpec) -> QuotationExpectation {
        let mut exp = QuotationExpectation::default();
        for w in self.words() {
            if self.any_reset(&spec.id, w) {
                exp.undetermined.insert(w.to_owned());
                continue;
            }
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &t in &self.starts {
                let p = self.policy(spec, t);
                for k in 0..=40 {
                    let u = p.hit_noise * (k as f64 / 20.0 - 1.0);
                    let (a, b) = (self.hits(&p, w, false, u), self.hits(&p, w, true, u));
                    if b <= 0.0 {
                        lo = f64::NAN;
                        continue;
                    }
                    lo = lo.min(a / b);
                    hi = hi.max(a / b);
                }
            }
            if lo.is_nan() {
                exp.undetermined.insert(w.to_owned());
            } else if hi < 0.9 {
                exp.below.insert(w.to_owned());
            } else if lo >= 0.9 && hi <= 1.1 {
                exp.clean.insert(w.to_owned());
            } else {
                exp.undetermined.insert(w.to_owned());
            }
        }
        exp
    }

    fn banners(&self, spec: &EngineSpec) -> BannerExpectation {
        let mut exp = BannerExpectation::default();
        let quoted = self.primary_quoted();
        let depth = self.depth(spec);
        for w in self.words() {
            let (mut trig, mut obs, mut unsure) = (0u32, 0u32, false);
            for &t in &self.starts {
                match self.reset(&spec.id, w, t) {
                    Reset::Always => continue,
                    Reset::Maybe => unsure = true,
                    Reset::Never => {}
                }
                let p = self.policy(spec, t);
                let censored = Self::censored(&p, w, quoted);
                obs += 1;
                if (1..=depth).any(|page| p.banner_style.shows_on(censored, page)) {
                    trig += 1;
                }
            }
            let w = w.to_owned();
            if unsure || obs == 0 {
                exp.undetermined.insert(w);
                continue;
            }
            if trig > 0 {
                exp.counts.insert(w.clone(), (trig, obs));
            }
            if trig == obs {
                exp.always.insert(w);
            } else if trig > 0 {
                exp.sometimes.insert(w);
            } else {
                exp.never.insert(w);
            }
        }
        exp
    }

    fn whitelist(&self, spec: &EngineSpec) -> BTreeMap<String, Option<BTreeSet<String>>> {
        let Some(&t) = self.starts.last() else {
            return BTreeMap::new();
        };
        let quoted = self.primary_quoted();
        let p = self.policy(spec, t);
        let fetched = (self.depth(spec) * spec.results_per_page) as usize;
        let n = self.campaign.whitelist_depth.min(fetched);
        let mut out = BTreeMap::new();
        for w in self.words() {
            if !matches!(self.reset(&spec.id, w, t), Reset::Never) {
                continue;
            }
            let domains: BTreeSet<String> = self
                .served(&p, w, quoted)
                .iter()
                .take(n)
                .map(|(d, _)| d.domain.clone())
                .collect();
            let inferred = (domains.len() < self.campaign.whitelist_threshold).then_some(domains);
            out.insert(w.to_owned(), inferred);
        }
        out
    }

    fn blacklist(&self) -> Vec<BlacklistExpectation> {
        let Some(reference) = &self.campaign.reference_engine else {
            return Vec::new();
        };
        let Some(rspec) = self.net.spec(reference) else {
            return Vec::new();
        };
        let Some(&t) = self.starts.last() else {
            return Vec::new();
        };
        let domains = |spec: &EngineSpec, text: &str| -> BTreeSet<String> {
            let n = (self.depth(spec) * spec.results_per_page) as usize;
            self.served(&self.policy(spec, t), text, true)
                .iter()
                .take(n)
                .map(|(d, _)| d.domain.clone())
                .collect()
        };
        let mut out = Vec::new();
        for probe in &self.net.scenario.probe_documents {
            let base = domains(rspec, &probe.text);
            for spec in &self.net.scenario.engines {
                if &spec.id == reference {
                    continue;
                }
                let other = domains(spec, &probe.text);
                out.push(BlacklistExpectation {
                    probe: probe.text.clone(),
                    reference: reference.clone(),
                    censored: spec.id.clone(),
                    missing_domains: base.difference(&other).cloned().collect(),
                });
            }
        }
        out
    }

    fn resets(&self, spec: &EngineSpec) -> ResetExpectation {
        let mut exp = ResetExpectation::default();
        for w in self.words() {
            let trace: Vec<Reset> = self
                .starts
                .iter()
                .map(|&t| self.reset(&spec.id, w, t))
                .collect();
            if trace.iter().any(|r| matches!(r, Reset::Maybe)) {
                exp.undetermined.insert(w.to_owned());
            } else if trace.iter().any(|r| matches!(r, Reset::Always)) {
                exp.triggered.insert(
                    w.to_owned(),
                    trace.iter().map(|r| matches!(r, Reset::Always)).collect(),
                );
            }
        }
        exp
    }
}

/// Enumerates what an analysis of `campaign` over `net` must find.
pub fn oracle_expected_report(net: &SimNetwork, campaign: &OracleCampaign) -> ExpectedReport {
    let mut by_chars: HashMap<String, Vec<&Document>> = HashMap::new();
    for d in &net.index.documents {
        let mut key: Vec<char> = d.term.chars().collect();
        key.sort_unstable();
        by_chars
            .entry(key.into_iter().collect())
            .or_default()
            .push(d);
    }
    let oracle = Oracle {
        net,
        campaign,
        by_chars,
        starts: campaign.run_starts(),
    };
    let engines = &net.scenario.engines;

    let mut report = ExpectedReport::default();
    for (num, den) in &campaign.ratio_pairs {
        if let (Some(n), Some(d)) = (net.spec(num), net.spec(den)) {
            report.ratios.push(oracle.ratios(n, d));
        }
    }
    for spec in engines {
        if campaign.quoted == QuotedMode::Both {
            report
                .quotation
                .insert(spec.id.clone(), oracle.quotation(spec));
        }
        report.banners.insert(spec.id.clone(), oracle.banners(spec));
        report
            .whitelists
            .insert(spec.id.clone(), oracle.whitelist(spec));
        report.resets.insert(spec.id.clone(), oracle.resets(spec));
    }
    report.blacklist = oracle.blacklist();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::{MiddleboxPolicy, Scenario};

    fn scenario() -> Scenario {
        let text = r#"
seed = 3
[corpus]
words = ["六四", "你好", "世界", "温家宝", "falun"]
[middlebox]
keywords = { falun = 1.0 }
[[engines]]
id = "cn"
[engines.policy]
blacklist_terms = ["六四"]
whitelist_domains = ["ce.cn"]
banner_style = "first-page-always"
quotation_mode = "exact-only"
two_pass = true
[[engines.overrides]]
from_s = 500.0
add_blacklist_terms = ["温家宝"]
[[engines]]
id = "com"
[engines.policy]
banner_style = "never"
quotation_mode = "exact-only"
"#;
        Scenario::from_toml(text, std::path::Path::new(".")).unwrap()
    }

    fn campaign() -> OracleCampaign {
        OracleCampaign {
            runs: 4,
            start_s: 0.0,
            run_spacing_s: 200.0,
            page_depth: 1,
            quoted: QuotedMode::Both,
            ratio_pairs: vec![(EngineId::new("cn"), EngineId::new("com"))],
            reference_engine: Some(EngineId::new("com")),
            whitelist_depth: 100,
            whitelist_threshold: 20,
        }
    }

    #[test]
    fn planted_terms_are_required_low_tail() {
        let net = scenario().build().unwrap();
        let exp = oracle_expected_report(&net, &campaign());
        let r = &exp.ratios[0];
        assert_eq!(r.low_tail, ["六四".to_string()].into());
        assert!(r.unremarkable.contains("你好"));
        assert!(r.undetermined.contains("falun"));
        assert!(r.undetermined.contains("温家宝"));
    }

    #[test]
    fn two_pass_terms_fall_below_quotation_threshold() {
        let net = scenario().build().unwrap();
        let q = &oracle_expected_report(&net, &campaign()).quotation[&EngineId::new("cn")];
        assert!(q.below.contains("六四"));
        assert!(q.clean.contains("你好"));
    }

    #[test]
    fn banner_partition_and_reset_set() {
        let net = scenario().build().unwrap();
        let exp = oracle_expected_report(&net, &campaign());
        let b = &exp.banners[&EngineId::new("cn")];
        assert!(b.always.contains("六四"));
        assert_eq!(b.counts["温家宝"], (1, 4));
        assert!(b.sometimes.contains("温家宝"));
        assert!(b.never.contains("你好"));
        let resets = &exp.resets[&EngineId::new("com")];
        assert_eq!(resets.triggered.keys().collect::<Vec<_>>(), ["falun"]);
        assert_eq!(resets.triggered["falun"], vec![true; 4]);
    }

    #[test]
    fn middlebox_zero_probability_never_resets() {
        let mut s = scenario();
        s.middlebox = MiddleboxPolicy::default();
        s.middlebox.keyword_reset_prob.insert("falun".into(), 0.0);
        let exp = oracle_expected_report(&s.build().unwrap(), &campaign());
        assert!(exp
            .resets
            .values()
            .all(|r| r.triggered.is_empty() && r.undetermined.is_empty()));
    }
}
