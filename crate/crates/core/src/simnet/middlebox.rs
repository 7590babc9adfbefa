use percent_encoding::percent_encode;
use rand::{Rng, RngCore};
use std::collections::HashMap;

use super::policy::MiddleboxPolicy;
use crate::corpus::{self, Encoding};
use crate::crawler::SourceId;
use crate::engine::{EngineId, QUERY_ESCAPES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVerdict {
    Pass,
    InjectReset,
}

/// Keyword-sniffing middlebox with per-(source, engine) block windows.
#[derive(Debug)]
pub struct Middlebox {
    pub policy: MiddleboxPolicy,
    /// Onset of the latest block window per (source, engine).
    windows: HashMap<(SourceId, EngineId), f64>,
}

impl Middlebox {
    pub fn new(policy: MiddleboxPolicy) -> Self {
        Middlebox {
            policy,
            windows: HashMap::new(),
        }
    }

    /// Onset of the block window covering `t`, if any.
    pub fn blocked_since(&self, source: &SourceId, engine: &EngineId, t: f64) -> Option<f64> {
        let onset = *self.windows.get(&(source.clone(), engine.clone()))?;
        (t >= onset && t < onset + self.policy.block_window_s).then_some(onset)
    }
}

/// Byte patterns a keyword can appear as on the wire: UTF-8 and GB18030,
/// raw and percent-encoded (both hex cases).
pub fn keyword_forms(keyword: &str) -> Vec<Vec<u8>> {
    let mut raw = vec![keyword.as_bytes().to_vec()];
    if let Ok(gb) = corpus::transcode(keyword, Encoding::Gb18030) {
        raw.push(gb);
    }
    let mut forms = raw.clone();
    for bytes in &raw {
        let upper = percent_encode(bytes, QUERY_ESCAPES).to_string();
        let mut lower = String::with_capacity(upper.len());
        let mut chars = upper.chars();
        while let Some(c) = chars.next() {
            lower.push(c);
            if c == '%' {
                lower.extend(chars.by_ref().take(2).map(|h| h.to_ascii_lowercase()));
            }
        }
        forms.push(upper.into_bytes());
        forms.push(lower.into_bytes());
    }
    forms.sort();
    forms.dedup();
    forms
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Inspects bytes flowing between `source` and `engine` at `at`.
///
/// Inside an active block window everything is reset. Otherwise a
/// monitored keyword triggers a reset with its probability and opens a
/// new window.
pub fn gfw_filter(
    mb: &mut Middlebox,
    source: &SourceId,
    engine: &EngineId,
    bytes: &[u8],
    at: f64,
    rng: &mut dyn RngCore,
) -> FilterVerdict {
    if !mb.policy.applies_to(engine) {
        return FilterVerdict::Pass;
    }
    if mb.blocked_since(source, engine, at).is_some() {
        return FilterVerdict::InjectReset;
    }
    let keywords = mb.policy.keywords_at(at).into_owned();
    for (keyword, p) in &keywords {
        if *p <= 0.0 || !keyword_forms(keyword).iter().any(|f| contains(bytes, f)) {
            continue;
        }
        if *p >= 1.0 || rng.gen_bool(*p) {
            mb.windows.insert((source.clone(), engine.clone()), at);
            return FilterVerdict::InjectReset;
        }
    }
    FilterVerdict::Pass
}
