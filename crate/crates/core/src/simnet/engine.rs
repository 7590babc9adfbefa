use percent_encoding::percent_decode;
use sha2::{Digest, Sha256};
use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use super::index::{Document, SimIndex};
use super::policy::{PolicyOverride, RobotDetection, RobotPolicy, RobotReaction, SimPolicy};
use crate::corpus::{self, Encoding};
use crate::crawler::SourceId;
use crate::engine::{html_escape, EngineId};

pub const RATE_LIMIT_BODY: &str = "ERROR 999: Unable to process request at this time";
pub const APOLOGY_TEXT: &str = "很抱歉，您的访问出错了";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResponse {
    pub status: u16,
    pub content_type: String,
    pub body: Vec<u8>,
}

impl SimResponse {
    fn text(status: u16, body: &str) -> Self {
        SimResponse {
            status,
            content_type: "text/plain; charset=utf-8".into(),
            body: body.as_bytes().to_vec(),
        }
    }
}

#[derive(Debug, Default)]
struct RobotTrack {
    recent: VecDeque<f64>,
    burst_start: f64,
    last: Option<f64>,
    blocked_until: f64,
}

/// One simulated search engine: a policy over the shared index plus robot-detection state.
#[derive(Debug)]
pub struct SimEngine {
    pub id: EngineId,
    pub policy: SimPolicy,
    pub overrides: Vec<PolicyOverride>,
    pub robot: Option<RobotPolicy>,
    pub query_encoding: Encoding,
    pub response_encoding: Encoding,
    pub results_per_page: u32,
    pub banner_text: String,
    /// Simulated round-trip time of one request.
    pub latency_s: f64,
    /// Hit-count noise is redrawn once per epoch, so a word's quoted and
    /// unquoted counts within one run share it.
    pub noise_epoch_s: f64,
    pub noise_seed: u64,
    robot_state: Mutex<HashMap<SourceId, RobotTrack>>,
}

impl SimEngine {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: EngineId,
        policy: SimPolicy,
        overrides: Vec<PolicyOverride>,
        robot: Option<RobotPolicy>,
        query_encoding: Encoding,
        response_encoding: Encoding,
        results_per_page: u32,
        banner_text: String,
    ) -> Self {
        SimEngine {
            id,
            noise_seed: policy.seed,
            policy,
            overrides,
            robot,
            query_encoding,
            response_encoding,
            results_per_page: results_per_page.max(1),
            banner_text,
            latency_s: 0.2,
            noise_epoch_s: 86_400.0,
            robot_state: Mutex::new(HashMap::new()),
        }
    }

    /// The policy in force at `t`.
    pub fn policy_at(&self, t: f64) -> std::borrow::Cow<'_, SimPolicy> {
        self.policy.at(&self.overrides, t)
    }

    /// Multiplicative noise `u` in `[-half_width, half_width]` for one query text at `t`.
    pub fn noise(&self, text: &str, t: f64, half_width: f64) -> f64 {
        let epoch = (t / self.noise_epoch_s).floor() as i64;
        let mut h = Sha256::new();
        h.update(self.noise_seed.to_le_bytes());
        h.update(self.id.as_str().as_bytes());
        h.update([0]);
        h.update(text.as_bytes());
        h.update(epoch.to_le_bytes());
        let digest = h.finalize();
        let x = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        let unit = (x >> 11) as f64 / (1u64 << 53) as f64;
        (2.0 * unit - 1.0) * half_width
    }

    fn robot_check(&self, source: &SourceId, at: f64) -> Option<RobotReaction> {
        let robot = self.robot?;
        let mut states = self.robot_state.lock().unwrap();
        let track = states.entry(source.clone()).or_default();
        if at < track.blocked_until {
            return Some(robot.reaction);
        }
        let tripped = match robot.detection {
            RobotDetection::RateThreshold { queries, window_s } => {
                track.recent.push_back(at);
                while track.recent.front().is_some_and(|&t| t <= at - window_s) {
                    track.recent.pop_front();
                }
                track.recent.len() > queries as usize
            }
            RobotDetection::BurstTolerance { duration_s } => {
                if track
                    .last
                    .is_none_or(|last| at - last >= robot.unblock_after_s)
                {
                    track.burst_start = at;
                }
                track.last = Some(at);
                at - track.burst_start > duration_s
            }
        };
        if tripped {
            track.blocked_until = at + robot.unblock_after_s;
            track.recent.clear();
            track.last = None;
            return Some(robot.reaction);
        }
        None
    }
}

/// Parses `/s?q=<query>&p=<page>`, with or without a scheme and host.
fn parse_target(target: &[u8], encoding: Encoding) -> Option<(String, u32)> {
    let target = std::str::from_utf8(target).ok()?;
    let path_and_query = match target.find("://") {
        Some(i) => &target[target[i + 3..].find('/').map(|j| i + 3 + j)?..],
        None => target,
    };
    let (path, query) = path_and_query.split_once('?')?;
    if path != "/s" {
        return None;
    }
    let mut q = None;
    let mut page = 1u32;
    for pair in query.split('&') {
        let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
        let raw = v.replace('+', " ");
        let bytes: Vec<u8> = percent_decode(raw.as_bytes()).collect();
        match k {
            "q" => q = Some(corpus::decode(&bytes, encoding).ok()?),
            "p" => {
                page = std::str::from_utf8(&bytes)
                    .ok()?
                    .parse()
                    .ok()
                    .filter(|&p| p >= 1)?
            }
            _ => {}
        }
    }
    Some((q?, page))
}

/// Splits a surrounding pair of double quotes off a query.
fn strip_quotes(q: &str) -> (&str, bool) {
    let t = q.trim();
    match t.strip_prefix('"').and_then(|s| s.strip_suffix('"')) {
        Some(inner) if t.len() >= 2 => (inner.trim(), true),
        _ => (t, false),
    }
}

/// Renders the result page format in the engine's response encoding.
pub fn render_page(
    hits: u64,
    banner: Option<&str>,
    entries: &[&Document],
    encoding: Encoding,
) -> Vec<u8> {
    let mut html = format!("<html><body><div id=\"hits\">约 {hits} 条结果</div>");
    if let Some(b) = banner {
        html.push_str(&format!("<div id=\"banner\">{}</div>", html_escape(b)));
    }
    html.push_str("<ol>");
    for d in entries {
        html.push_str(&format!(
            "<li><a href=\"{}\">{}</a><p>{}</p></li>",
            html_escape(&d.url),
            html_escape(&d.term),
            html_escape(&d.snippet())
        ));
    }
    html.push_str("</ol></body></html>");
    corpus::encode_lossy(&html, encoding)
}

fn robot_response(reaction: RobotReaction, encoding: Encoding) -> SimResponse {
    match reaction {
        RobotReaction::Http999 => SimResponse::text(999, RATE_LIMIT_BODY),
        RobotReaction::Http503 => SimResponse::text(503, "Service Unavailable"),
        RobotReaction::ApologyHtml => SimResponse {
            status: 200,
            content_type: format!("text/html; charset={}", encoding.name()),
            body: corpus::encode_lossy(
                &format!("<html><body><p>{APOLOGY_TEXT}</p></body></html>"),
                encoding,
            ),
        },
    }
}

/// Answers one search request at simulated time `at`.
pub fn serve_query(
    engine: &SimEngine,
    index: &SimIndex,
    source: &SourceId,
    target: &[u8],
    at: f64,
) -> SimResponse {
    let Some((raw_query, page)) = parse_target(target, engine.query_encoding) else {
        return SimResponse::text(400, "bad request");
    };
    if let Some(reaction) = engine.robot_check(source, at) {
        return robot_response(reaction, engine.response_encoding);
    }
    let (text, quoted) = strip_quotes(&raw_query);
    let policy = engine.policy_at(at);
    let censored = policy.censors(text, quoted);
    let second_class = censored && policy.is_second_class_query(text);

    let mut served: Vec<(&Document, f64)> = index
        .matches(text, quoted, policy.quotation_mode)
        .into_iter()
        .filter(|(d, _)| policy.allows(&d.domain, censored, second_class))
        .map(|(d, f)| (d, d.weight as f64 * f))
        .collect();
    served.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.id.cmp(&b.0.id)));
    let true_count: f64 = served.iter().map(|(_, w)| w).sum();
    let u = engine.noise(text, at, policy.hit_noise);
    let hits = ((true_count * (1.0 + u)).round() as u64).max(served.len() as u64);

    let rpp = engine.results_per_page as usize;
    let start = (page as usize - 1).saturating_mul(rpp).min(served.len());
    let end = (start + rpp).min(served.len());
    let entries: Vec<&Document> = served[start..end].iter().map(|(d, _)| *d).collect();
    let banner = policy
        .banner_style
        .shows_on(censored, page)
        .then_some(engine.banner_text.as_str());
    SimResponse {
        status: 200,
        content_type: format!("text/html; charset={}", engine.response_encoding.name()),
        body: render_page(hits, banner, &entries, engine.response_encoding),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{merge_corpora, SetId, WordSet};
    use crate::engine::tests::test_profile;
    use crate::engine::{parse_response, BannerStyle, EngineProfile, QuotationMode};
    use crate::simnet::index::{generate_index, IndexSpec};

    const BANNER: &str = "据相关法律法规和政策，部分搜索结果未予显示。";

    fn setup(style: BannerStyle) -> (SimEngine, SimIndex, EngineProfile) {
        let mut p = SimPolicy::clean(style, QuotationMode::ExactOnly);
        p.blacklist_terms.insert("六四".into());
        p.char_filters.insert('色');
        p.whitelist_domains = ["ce.cn", "china.com.cn", "people.com.cn"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        p.blacklist_domains.insert("epochtimes.com".into());
        let corpus = merge_corpora(&[WordSet::from_texts(
            SetId::new("t"),
            ["六四", "颜色", "你好"],
        )]);
        let spec = IndexSpec {
            docs_per_word: 40,
            whitelist_docs_per_word: 30,
            blacklist_docs_per_word: 2,
            ..Default::default()
        };
        let index = generate_index(&spec, &[&p], &corpus, &[], 3).unwrap();
        let engine = SimEngine::new(
            EngineId::new("sim"),
            p,
            vec![],
            None,
            Encoding::Utf8,
            Encoding::Utf8,
            10,
            BANNER.into(),
        );
        let mut profile = test_profile();
        profile.endpoint = "http://sim/s?q={query}&p={page}".into();
        profile.banner_style = style;
        profile.banner_needles = vec!["部分搜索结果未予显示".into()];
        (engine, index, profile)
    }

    fn get(
        engine: &SimEngine,
        index: &SimIndex,
        profile: &EngineProfile,
        word: &str,
        quoted: bool,
        page: u32,
    ) -> SimResponse {
        let req = crate::engine::build_request(profile, word, quoted, page).unwrap();
        serve_query(engine, index, &SourceId::worker(0), &req.url, 0.0)
    }

    #[test]
    fn banner_only_on_first_page() {
        let (e, i, p) = setup(BannerStyle::FirstPageAlways);
        for page in 1..=5 {
            let r = get(&e, &i, &p, "六四", false, page);
            let parsed = parse_response(&p, &r.body, page).unwrap();
            assert_eq!(parsed.banner_present, page == 1, "page {page}");
        }
        let clean = parse_response(&p, &get(&e, &i, &p, "你好", false, 1).body, 1).unwrap();
        assert!(!clean.banner_present);
    }

    #[test]
    fn always_on_banner_for_neutral_queries() {
        let (e, i, mut p) = setup(BannerStyle::AlwaysOn);
        p.banner_style = BannerStyle::AlwaysOn;
        let parsed = parse_response(&p, &get(&e, &i, &p, "你好", false, 2).body, 2).unwrap();
        assert!(parsed.banner_present);
    }

    #[test]
    fn filtered_character_serves_only_whitelist() {
        let (e, i, p) = setup(BannerStyle::Never);
        for page in 1..=3 {
            let parsed =
                parse_response(&p, &get(&e, &i, &p, "颜色", false, page).body, page).unwrap();
            assert!(!parsed.entries.is_empty());
            for entry in &parsed.entries {
                assert!(
                    e.policy
                        .whitelist_domains
                        .contains(&entry.registrable_domain),
                    "{}",
                    entry.url
                );
            }
        }
    }

    #[test]
    fn blacklist_domains_never_served() {
        let (e, i, p) = setup(BannerStyle::Never);
        for word in ["你好", "颜色", "六四"] {
            for page in 1..=6 {
                let body = get(&e, &i, &p, word, false, page).body;
                assert!(!String::from_utf8(body).unwrap().contains("epochtimes.com"));
            }
        }
    }

    #[test]
    fn neutral_count_stays_within_noise() {
        let (e, i, p) = setup(BannerStyle::Never);
        let truth: u64 = i
            .about("你好")
            .filter(|d| d.domain != "epochtimes.com")
            .map(|d| d.weight)
            .sum();
        let hits = parse_response(&p, &get(&e, &i, &p, "你好", false, 1).body, 1)
            .unwrap()
            .hit_count
            .unwrap();
        let ratio = hits as f64 / truth as f64;
        assert!((0.9 - 1e-9..=1.1 + 1e-9).contains(&ratio), "{ratio}");
    }

    #[test]
    fn page_is_bit_exact() {
        let (e, i, p) = setup(BannerStyle::FirstPageAlways);
        let r = get(&e, &i, &p, "六四", false, 1);
        let text = String::from_utf8(r.body).unwrap();
        assert!(text.starts_with("<html><body><div id=\"hits\">约 "));
        assert!(text.contains(&format!(
            " 条结果</div><div id=\"banner\">{BANNER}</div><ol><li><a href=\"http://www."
        )));
        assert!(text.ends_with("</p></li></ol></body></html>"));
    }

    #[test]
    fn malformed_requests_get_400() {
        let (e, i, _) = setup(BannerStyle::Never);
        let src = SourceId::worker(0);
        assert_eq!(serve_query(&e, &i, &src, b"/x?q=a", 0.0).status, 400);
        assert_eq!(serve_query(&e, &i, &src, b"/s?p=1", 0.0).status, 400);
        assert_eq!(
            serve_query(&e, &i, &src, b"/s?q=%FF%FE&p=1", 0.0).status,
            400
        );
        assert_eq!(serve_query(&e, &i, &src, b"/s?q=a&p=0", 0.0).status, 400);
    }

    #[test]
    fn rate_threshold_blocks_then_unblocks() {
        let (mut e, i, _) = setup(BannerStyle::Never);
        e.robot = Some(RobotPolicy {
            detection: RobotDetection::RateThreshold {
                queries: 3,
                window_s: 10.0,
            },
            reaction: RobotReaction::Http999,
            unblock_after_s: 60.0,
        });
        let src = SourceId::worker(0);
        let statuses: Vec<u16> = (0..5)
            .map(|k| serve_query(&e, &i, &src, b"/s?q=a&p=1", k as f64).status)
            .collect();
        assert_eq!(statuses, [200, 200, 200, 999, 999]);
        assert_eq!(serve_query(&e, &i, &src, b"/s?q=a&p=1", 64.0).status, 200);
        assert_eq!(
            serve_query(&e, &i, &SourceId::worker(1), b"/s?q=a&p=1", 4.0).status,
            200
        );
    }

    #[test]
    fn burst_tolerance_resets_after_silence() {
        let (mut e, i, _) = setup(BannerStyle::Never);
        e.robot = Some(RobotPolicy {
            detection: RobotDetection::BurstTolerance { duration_s: 5.0 },
            reaction: RobotReaction::ApologyHtml,
            unblock_after_s: 30.0,
        });
        let src = SourceId::worker(0);
        for t in 0..=5 {
            assert_eq!(
                serve_query(&e, &i, &src, b"/s?q=a&p=1", t as f64).status,
                200
            );
        }
        let blocked = serve_query(&e, &i, &src, b"/s?q=a&p=1", 6.0);
        assert!(String::from_utf8(blocked.body)
            .unwrap()
            .contains(APOLOGY_TEXT));
        assert_eq!(serve_query(&e, &i, &src, b"/s?q=a&p=1", 36.0).status, 200);
    }

    #[test]
    fn same_inputs_same_bytes() {
        let (e, i, p) = setup(BannerStyle::FirstPageAlways);
        let a = get(&e, &i, &p, "你好", true, 1);
        let b = get(&e, &i, &p, "你好", true, 1);
        assert_eq!(a, b);
    }
}
