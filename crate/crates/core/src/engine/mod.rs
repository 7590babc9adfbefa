//! Engine profiles, request construction and result-page parsing.
//!
//! Everything engine-specific lives in an [`EngineProfile`]: the URL
//! template, the query and response encodings, the hit-count marker, the
//! result-entry delimiters, banner needles and robot-block signatures.
//! Parsing is pure and driven entirely by the profile.

mod domain;

pub use domain::{
    default_public_suffixes, domain_of_url, registrable_domain, DEFAULT_PUBLIC_SUFFIXES,
};

use percent_encoding::{percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use thiserror::Error;

use crate::corpus::{self, CorpusError, Encoding};
use crate::crawler::PacingPolicy;

pub const QUERY_PLACEHOLDER: &str = "{query}";
pub const PAGE_PLACEHOLDER: &str = "{page}";

/// Bytes left literal in a query string; everything else is `%XX`-escaped.
pub(crate) const QUERY_ESCAPES: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Encoding(#[from] CorpusError),
    #[error("endpoint {0:?} must contain exactly one {{query}} placeholder")]
    BadEndpoint(String),
    #[error("endpoint has no {{page}} placeholder, cannot request page {0}")]
    NoPagePlaceholder(u32),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("undecodable response body at byte {offset}")]
    UndecodableBody { offset: usize },
    #[error("robot block page (signature {0:?})")]
    RobotBlockPage(String),
    #[error("cannot load profile {path}: {message}")]
    Load { path: String, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EngineId(pub String);

impl EngineId {
    pub fn new(id: impl Into<String>) -> Self {
        EngineId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EngineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuotationMode {
    /// Quoted queries match the exact character sequence only.
    ExactOnly,
    /// Quoted queries also match reorderings of the same characters.
    LooseReorder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BannerStyle {
    /// Banner on the first page of any censored query, never on later pages.
    FirstPageAlways,
    /// Banner on the given (1-based) page of a censored query.
    DeepPage(u32),
    /// Banner on every page of every query.
    AlwaysOn,
    Never,
}

impl BannerStyle {
    /// Whether a page carries the banner under this style.
    pub fn shows_on(self, censored: bool, page: u32) -> bool {
        match self {
            BannerStyle::FirstPageAlways => censored && page == 1,
            BannerStyle::DeepPage(k) => censored && page == k,
            BannerStyle::AlwaysOn => true,
            BannerStyle::Never => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchKind {
    HttpStatus,
    BodySubstring,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotSignature {
    pub kind: MatchKind,
    pub needle: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CookiePolicy {
    Accept,
    Ignore,
}

/// Prefix/suffix needles around the hit-count digits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitMarker {
    pub prefix: String,
    pub suffix: String,
}

/// Delimiters of one result entry: `start URL url_end TITLE title_end SNIPPET snippet_end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRule {
    pub start: String,
    pub url_end: String,
    pub title_end: String,
    pub snippet_end: String,
}

impl Default for HitMarker {
    fn default() -> Self {
        HitMarker {
            prefix: "<div id=\"hits\">约 ".into(),
            suffix: " 条结果</div>".into(),
        }
    }
}

impl Default for EntryRule {
    fn default() -> Self {
        EntryRule {
            start: "<li><a href=\"".into(),
            url_end: "\">".into(),
            title_end: "</a><p>".into(),
            snippet_end: "</p></li>".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineProfile {
    pub id: EngineId,
    pub endpoint: String,
    pub query_encoding: Encoding,
    pub response_encoding: Encoding,
    pub quotation_mode: QuotationMode,
    #[serde(default)]
    pub pacing: PacingPolicy,
    #[serde(default)]
    pub banner_needles: Vec<String>,
    pub banner_style: BannerStyle,
    #[serde(default)]
    pub robot_signatures: Vec<RobotSignature>,
    pub user_agent: String,
    pub cookie_policy: CookiePolicy,
    pub results_per_page: u32,
    pub max_pages_fetched: u32,
    #[serde(default)]
    pub hit_marker: HitMarker,
    #[serde(default)]
    pub entry_rule: EntryRule,
    #[serde(default = "default_public_suffixes")]
    pub public_suffixes: Vec<String>,
}

pub const FIREFOX_USER_AGENT: &str =
    "Mozilla/5.0 (Windows; U; Windows NT 6.1; en-US; rv:1.9.2.3) Gecko/20100401 Firefox/3.6.3";

impl EngineProfile {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.endpoint.matches(QUERY_PLACEHOLDER).count() != 1 {
            return Err(EngineError::BadEndpoint(self.endpoint.clone()));
        }
        if self.endpoint.matches(PAGE_PLACEHOLDER).count() > 1 {
            return Err(EngineError::InvalidProfile(
                "more than one {page} placeholder".into(),
            ));
        }
        if self.results_per_page < 1 || self.max_pages_fetched < 1 {
            return Err(EngineError::InvalidProfile(
                "results_per_page and max_pages_fetched must be at least 1".into(),
            ));
        }
        if self.hit_marker.prefix.is_empty() || self.entry_rule.start.is_empty() {
            return Err(EngineError::InvalidProfile(
                "empty hit marker or entry start needle".into(),
            ));
        }
        self.pacing
            .validate()
            .map_err(EngineError::InvalidProfile)?;
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, EngineError> {
        let profile: EngineProfile =
            toml::from_str(text).map_err(|e| EngineError::InvalidProfile(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profiles always serialize")
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let text = std::fs::read_to_string(path).map_err(|e| EngineError::Load {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text).map_err(|e| EngineError::Load {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Built-in profiles for the engines of the original study.
    pub fn builtin() -> BTreeMap<&'static str, EngineProfile> {
        BUILTIN_PROFILES
            .iter()
            .map(|(name, text)| {
                (
                    *name,
                    EngineProfile::from_toml(text).expect("builtin profile"),
                )
            })
            .collect()
    }
}

const BUILTIN_PROFILES: &[(&str, &str)] = &[
    ("google.com", include_str!("../../profiles/google.com.toml")),
    ("google.cn", include_str!("../../profiles/google.cn.toml")),
    ("google.hk", include_str!("../../profiles/google.hk.toml")),
    ("baidu.com", include_str!("../../profiles/baidu.com.toml")),
    (
        "cn.bing.com",
        include_str!("../../profiles/cn.bing.com.toml"),
    ),
    ("bing.com", include_str!("../../profiles/bing.com.toml")),
    (
        "cn.yahoo.com",
        include_str!("../../profiles/cn.yahoo.com.toml"),
    ),
    ("yahoo.com", include_str!("../../profiles/yahoo.com.toml")),
];

/// A request ready to put on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRequest {
    pub method: String,
    pub url: Vec<u8>,
    pub headers: Vec<(String, String)>,
}

impl WireRequest {
    /// The URL is always ASCII after percent-encoding.
    pub fn url_str(&self) -> &str {
        std::str::from_utf8(&self.url).expect("request URLs are ASCII")
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

pub fn build_request(
    profile: &EngineProfile,
    word: &str,
    quoted: bool,
    page: u32,
) -> Result<WireRequest, EngineError> {
    if profile.endpoint.matches(QUERY_PLACEHOLDER).count() != 1 {
        return Err(EngineError::BadEndpoint(profile.endpoint.clone()));
    }
    let query = if quoted {
        format!("\"{word}\"")
    } else {
        word.to_owned()
    };
    let bytes = corpus::transcode(&query, profile.query_encoding)?;
    let encoded = percent_encode(&bytes, QUERY_ESCAPES).to_string();
    let mut url = profile.endpoint.replacen(QUERY_PLACEHOLDER, &encoded, 1);
    if url.contains(PAGE_PLACEHOLDER) {
        url = url.replacen(PAGE_PLACEHOLDER, &page.to_string(), 1);
    } else if page != 1 {
        return Err(EngineError::NoPagePlaceholder(page));
    }
    Ok(WireRequest {
        method: "GET".into(),
        url: url.into_bytes(),
        headers: vec![
            ("User-Agent".into(), profile.user_agent.clone()),
            ("Accept".into(), "text/html".into()),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub rank: u32,
    pub url: String,
    pub registrable_domain: String,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    /// `None` when the page declares no count; never conflated with zero.
    pub hit_count: Option<u64>,
    pub entries: Vec<ResultEntry>,
    pub banner_present: bool,
    pub page_index: u32,
    pub raw_size: u64,
}

/// First matching body-substring robot signature, if any.
pub fn match_robot_body<'a>(profile: &'a EngineProfile, text: &str) -> Option<&'a RobotSignature> {
    profile
        .robot_signatures
        .iter()
        .find(|s| s.kind == MatchKind::BodySubstring && text.contains(&s.needle))
}

pub fn parse_response(
    profile: &EngineProfile,
    body: &[u8],
    page: u32,
) -> Result<ParsedResponse, EngineError> {
    let text = corpus::decode(body, profile.response_encoding).map_err(|e| match e {
        CorpusError::UndecodableBytes { offset } => EngineError::UndecodableBody { offset },
        other => EngineError::Encoding(other),
    })?;
    if let Some(sig) = match_robot_body(profile, &text) {
        return Err(EngineError::RobotBlockPage(sig.needle.clone()));
    }
    let hit_count = extract_hit_count(&text, &profile.hit_marker);
    let first_rank = (page.max(1) - 1) * profile.results_per_page + 1;
    let entries = extract_entries(
        &text,
        &profile.entry_rule,
        &profile.public_suffixes,
        first_rank,
    );
    let banner_present =
        profile.banner_style != BannerStyle::Never && detect_banner(profile, &text);
    Ok(ParsedResponse {
        hit_count,
        entries,
        banner_present,
        page_index: page,
        raw_size: body.len() as u64,
    })
}

pub fn detect_banner(profile: &EngineProfile, decoded_body: &str) -> bool {
    profile
        .banner_needles
        .iter()
        .any(|needle| !needle.is_empty() && decoded_body.contains(needle.as_str()))
}

fn extract_hit_count(text: &str, marker: &HitMarker) -> Option<u64> {
    let start = text.find(&marker.prefix)? + marker.prefix.len();
    let rest = &text[start..];
    let end = if marker.suffix.is_empty() {
        rest.len()
    } else {
        rest.find(&marker.suffix)?
    };
    let digits: String = rest[..end]
        .chars()
        .skip_while(|c| !c.is_ascii_digit())
        .take_while(|c| c.is_ascii_digit() || matches!(c, ',' | '.' | ' ' | '\u{a0}'))
        .filter(char::is_ascii_digit)
        .collect();
    digits.parse().ok()
}

fn extract_entries(
    text: &str,
    rule: &EntryRule,
    suffixes: &[String],
    first_rank: u32,
) -> Vec<ResultEntry> {
    let mut entries = Vec::new();
    let mut rest = text;
    let mut rank = first_rank;
    while let Some(pos) = rest.find(&rule.start) {
        rest = &rest[pos + rule.start.len()..];
        let Some((url, after)) = split_at_needle(rest, &rule.url_end) else {
            break;
        };
        let Some((_title, after)) = split_at_needle(after, &rule.title_end) else {
            break;
        };
        let Some((snippet, after)) = split_at_needle(after, &rule.snippet_end) else {
            break;
        };
        rest = after;
        let url = html_unescape(url);
        let Some(domain) = domain_of_url(&url, suffixes) else {
            continue;
        };
        entries.push(ResultEntry {
            rank,
            url,
            registrable_domain: domain,
            snippet: html_unescape(snippet),
        });
        rank += 1;
    }
    entries
}

fn split_at_needle<'a>(s: &'a str, needle: &str) -> Option<(&'a str, &'a str)> {
    let idx = s.find(needle)?;
    Some((&s[..idx], &s[idx + needle.len()..]))
}

pub fn html_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

pub fn html_unescape(s: &str) -> String {
    if !s.contains('&') {
        return s.to_owned();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest.find(';').filter(|&semi| semi <= 10).and_then(|semi| {
            let entity = &rest[1..semi];
            let ch = match entity {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                _ => entity
                    .strip_prefix("#x")
                    .or_else(|| entity.strip_prefix("#X"))
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .or_else(|| entity.strip_prefix('#').and_then(|d| d.parse().ok()))
                    .and_then(char::from_u32),
            };
            ch.map(|c| (c, semi))
        });
        match decoded {
            Some((c, semi)) => {
                out.push(c);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Tallies registrable domains over the first `n` entries by global rank,
/// sorted by count descending, then domain ascending.
pub fn extract_top_domains(responses: &[ParsedResponse], n: usize) -> Vec<(String, usize)> {
    let mut entries: Vec<&ResultEntry> = responses.iter().flat_map(|r| r.entries.iter()).collect();
    entries.sort_by_key(|e| e.rank);
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for e in entries.into_iter().take(n) {
        *tally.entry(e.registrable_domain.as_str()).or_default() += 1;
    }
    let mut out: Vec<(String, usize)> = tally.into_iter().map(|(d, c)| (d.to_owned(), c)).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
