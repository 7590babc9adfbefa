use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use super::policy::{SimPolicy, LOOSE_REORDER_FACTOR};
use super::SimError;
use crate::corpus::Corpus;
use crate::crawler::SENTINEL_QUERY;
use crate::engine::QuotationMode;

/// Shape of the generated document collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndexSpec {
    /// General (uncensored) documents per word.
    pub docs_per_word: u32,
    /// Documents per word on whitelist domains, round-robin over them.
    pub whitelist_docs_per_word: u32,
    pub second_class_docs_per_word: u32,
    pub blacklist_docs_per_word: u32,
    /// General document weights are log-uniform integers in `[weight_min, weight_max]`.
    pub weight_min: u64,
    pub weight_max: u64,
    /// Number of distinct general domains.
    pub domain_pool: u32,
}

impl Default for IndexSpec {
    fn default() -> Self {
        IndexSpec {
            docs_per_word: 20,
            whitelist_docs_per_word: 3,
            second_class_docs_per_word: 0,
            blacklist_docs_per_word: 0,
            weight_min: 200,
            weight_max: 20_000,
            domain_pool: 2000,
        }
    }
}

impl IndexSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.docs_per_word < 1 {
            return Err(SimError::InvalidScenario(
                "docs_per_word must be at least 1".into(),
            ));
        }
        if self.weight_min < 1 || self.weight_min > self.weight_max || self.domain_pool < 1 {
            return Err(SimError::InvalidScenario(
                "bad weight range or domain pool".into(),
            ));
        }
        Ok(())
    }
}

/// A sentence planted verbatim on the given domains.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeDocument {
    pub text: String,
    pub domains: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocClass {
    General,
    Whitelist,
    SecondClass,
    Blacklist,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: u32,
    pub url: String,
    pub domain: String,
    /// The text the document is about; queries match against it.
    pub term: Arc<str>,
    /// Number of result pages the document stands for in hit counts.
    pub weight: u64,
    pub class: DocClass,
}

impl Document {
    pub fn snippet(&self) -> String {
        format!("{} - {}", self.term, self.domain)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimIndex {
    pub documents: Vec<Document>,
    by_term: HashMap<Arc<str>, Vec<u32>>,
    by_chars: HashMap<String, Vec<u32>>,
}

fn char_key(text: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    chars.sort_unstable();
    chars.into_iter().collect()
}

impl SimIndex {
    fn push(&mut self, domain: &str, term: &Arc<str>, weight: u64, class: DocClass) {
        let id = self.documents.len() as u32;
        self.documents.push(Document {
            id,
            url: format!("http://www.{domain}/d/{id}"),
            domain: domain.to_owned(),
            term: Arc::clone(term),
            weight,
            class,
        });
        self.by_term.entry(Arc::clone(term)).or_default().push(id);
        self.by_chars.entry(char_key(term)).or_default().push(id);
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, id: u32) -> &Document {
        &self.documents[id as usize]
    }

    /// Documents exactly about `term`.
    pub fn about(&self, term: &str) -> impl Iterator<Item = &Document> {
        self.by_term
            .get(term)
            .into_iter()
            .flatten()
            .map(|&id| self.get(id))
    }

    /// Documents matching a query text with the weight factor each contributes.
    ///
    /// Unquoted queries match any ordering of their characters. Quoted
    /// queries match the exact text, plus reorderings at a reduced factor
    /// under `LooseReorder`.
    pub fn matches(&self, text: &str, quoted: bool, mode: QuotationMode) -> Vec<(&Document, f64)> {
        let Some(ids) = self.by_chars.get(&char_key(text)) else {
            return Vec::new();
        };
        ids.iter()
            .map(|&id| self.get(id))
            .filter_map(|d| {
                let exact = &*d.term == text;
                match (quoted, exact, mode) {
                    (false, _, _) | (true, true, _) => Some((d, 1.0)),
                    (true, false, QuotationMode::LooseReorder) => Some((d, LOOSE_REORDER_FACTOR)),
                    (true, false, QuotationMode::ExactOnly) => None,
                }
            })
            .collect()
    }
}

fn general_domain(i: u32) -> String {
    const TLDS: [&str; 3] = ["com", "net", "org"];
    format!("site{i:04}.{}", TLDS[i as usize % TLDS.len()])
}

fn union<'a>(
    policies: &[&'a SimPolicy],
    f: impl Fn(&'a SimPolicy) -> &'a BTreeSet<String>,
) -> Vec<String> {
    let all: BTreeSet<&String> = policies.iter().flat_map(|p| f(p)).collect();
    all.into_iter().cloned().collect()
}

/// Builds one index shared by every engine of a scenario.
///
/// Every corpus word gets `docs_per_word` general documents with
/// log-uniform weights, plus weight-1 documents on the union of the
/// policies' whitelist, second-class and blacklist domains. A corpus word
/// equal to a probe sentence gets only the probe's documents. Deterministic
/// under `seed`.
pub fn generate_index(
    spec: &IndexSpec,
    policies: &[&SimPolicy],
    corpus: &Corpus,
    probes: &[ProbeDocument],
    seed: u64,
) -> Result<SimIndex, SimError> {
    spec.validate()?;
    let whitelist = union(policies, |p| &p.whitelist_domains);
    let second = union(policies, |p| &p.second_class_domains);
    let blacklist = union(policies, |p| &p.blacklist_domains);
    let class_of = |domain: &str| {
        if whitelist.iter().any(|d| d == domain) {
            DocClass::Whitelist
        } else if second.iter().any(|d| d == domain) {
            DocClass::SecondClass
        } else if blacklist.iter().any(|d| d == domain) {
            DocClass::Blacklist
        } else {
            DocClass::General
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ((spec.weight_min as f64).ln(), (spec.weight_max as f64).ln());
    let mut index = SimIndex::default();
    let general = |index: &mut SimIndex, rng: &mut ChaCha8Rng, term: &Arc<str>, n: u32| {
        for _ in 0..n {
            let domain = general_domain(rng.gen_range(0..spec.domain_pool));
            let weight = (lo + rng.gen::<f64>() * (hi - lo)).exp().round() as u64;
            index.push(
                &domain,
                term,
                weight.clamp(spec.weight_min, spec.weight_max),
                DocClass::General,
            );
        }
    };

    let probe_texts: BTreeSet<&str> = probes.iter().map(|p| p.text.as_str()).collect();
    for (i, word) in corpus.words.iter().enumerate() {
        if probe_texts.contains(word.text.as_str()) {
            continue;
        }
        let term: Arc<str> = Arc::from(word.text.as_str());
        general(&mut index, &mut rng, &term, spec.docs_per_word);
        for (domains, n, class) in [
            (
                &whitelist,
                spec.whitelist_docs_per_word,
                DocClass::Whitelist,
            ),
            (
                &second,
                spec.second_class_docs_per_word,
                DocClass::SecondClass,
            ),
            (
                &blacklist,
                spec.blacklist_docs_per_word,
                DocClass::Blacklist,
            ),
        ] {
            if domains.is_empty() {
                continue;
            }
            for j in 0..n as usize {
                index.push(&domains[(i + j) % domains.len()], &term, 1, class);
            }
        }
    }

    let sentinel: Arc<str> = Arc::from(SENTINEL_QUERY);
    general(&mut index, &mut rng, &sentinel, 5);
    for probe in probes {
        let term: Arc<str> = Arc::from(probe.text.as_str());
        for domain in &probe.domains {
            index.push(domain, &term, 1, class_of(domain));
        }
    }
    Ok(index)
}
