use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::engine::{serve_query, SimEngine, SimResponse, APOLOGY_TEXT};
use super::index::{generate_index, IndexSpec, ProbeDocument, SimIndex};
use super::middlebox::{gfw_filter, FilterVerdict, Middlebox};
use super::oracle::OracleCampaign;
use super::policy::{MiddleboxPolicy, PolicyOverride, RobotPolicy, RobotReaction, SimPolicy};
use super::synth::synthetic_words;
use super::SimError;
use crate::corpus::{load_wordset, merge_corpora, Corpus, Encoding, SetId, WordSet};
use crate::crawler::{Exchange, PacingPolicy, SourceId, Transport, TransportOutcome};
use crate::engine::{
    default_public_suffixes, registrable_domain, CookiePolicy, EngineId, EngineProfile, MatchKind,
    RobotSignature, WireRequest, FIREFOX_USER_AGENT,
};

pub const DEFAULT_BANNER_TEXT: &str = "据相关法律法规和政策，部分搜索结果未予显示。";
pub const DEFAULT_BANNER_NEEDLE: &str = "部分搜索结果未予显示";

/// Where a scenario's word list comes from; the sources are merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSource {
    pub words: Vec<String>,
    /// Word-list files, relative to the scenario file.
    pub paths: Vec<PathBuf>,
    /// Number of synthetic words to generate from the scenario seed.
    pub synthetic: Option<usize>,
}

fn default_encoding() -> Encoding {
    Encoding::Utf8
}
fn default_rpp() -> u32 {
    10
}
fn default_latency() -> f64 {
    0.2
}
fn default_banner_text() -> String {
    DEFAULT_BANNER_TEXT.into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineSpec {
    pub id: EngineId,
    pub policy: SimPolicy,
    #[serde(default)]
    pub overrides: Vec<PolicyOverride>,
    #[serde(default)]
    pub robot: Option<RobotPolicy>,
    #[serde(default = "default_encoding")]
    pub query_encoding: Encoding,
    #[serde(default = "default_encoding")]
    pub response_encoding: Encoding,
    #[serde(default = "default_rpp")]
    pub results_per_page: u32,
    #[serde(default = "default_rpp")]
    pub max_pages_fetched: u32,
    #[serde(default = "default_latency")]
    pub latency_s: f64,
    #[serde(default = "default_banner_text")]
    pub banner_text: String,
    /// Pacing the crawler should use against this engine.
    #[serde(default)]
    pub pacing: PacingPolicy,
}

fn default_epoch() -> f64 {
    86_400.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    #[serde(default)]
    pub corpus: CorpusSource,
    #[serde(default)]
    pub index: IndexSpec,
    #[serde(default)]
    pub probe_documents: Vec<ProbeDocument>,
    #[serde(default)]
    pub middlebox: MiddleboxPolicy,
    pub engines: Vec<EngineSpec>,
    #[serde(default = "default_epoch")]
    pub noise_epoch_s: f64,
    /// Campaign shape the oracle should predict for.
    #[serde(default)]
    pub oracle: Option<OracleCampaign>,
}

impl Scenario {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, SimError> {
        let mut s: Scenario =
            toml::from_str(text).map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        for p in &mut s.corpus.paths {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            SimError::InvalidScenario(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios always serialize")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.engines.is_empty() {
            return Err(SimError::InvalidScenario("no engines".into()));
        }
        let mut ids: Vec<&EngineId> = self.engines.iter().map(|e| &e.id).collect();
        ids.sort();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(SimError::InvalidScenario(
                "engine ids must be unique".into(),
            ));
        }
        for e in &self.engines {
            e.policy.validate()?;
            if let Some(r) = &e.robot {
                r.validate()?;
            }
            if e.results_per_page < 1 || e.max_pages_fetched < 1 || e.latency_s < 0.0 {
                return Err(SimError::InvalidScenario(format!(
                    "bad paging or latency on {}",
                    e.id
                )));
            }
        }
        let suffixes = default_public_suffixes();
        let planted = self.engines.iter().flat_map(|e| {
            let p = &e.policy;
            p.whitelist_domains
                .iter()
                .chain(&p.second_class_domains)
                .chain(&p.blacklist_domains)
        });
        for d in planted.chain(self.probe_documents.iter().flat_map(|p| &p.domains)) {
            if registrable_domain(&format!("www.{d}"), &suffixes).as_deref() != Some(d.as_str()) {
                return Err(SimError::InvalidScenario(format!(
                    "{d} is not a registrable domain"
                )));
            }
        }
        self.middlebox.validate()?;
        self.index.validate()?;
        if self.noise_epoch_s <= 0.0 {
            return Err(SimError::InvalidScenario(
                "noise_epoch_s must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn load_corpus(&self) -> Result<Corpus, SimError> {
        let mut sets = Vec::new();
        if !self.corpus.words.is_empty() {
            sets.push(WordSet::from_texts(
                SetId::new("scenario"),
                &self.corpus.words,
            ));
        }
        for (i, path) in self.corpus.paths.iter().enumerate() {
            sets.push(load_wordset(path, SetId::new(format!("file{i}")))?);
        }
        if let Some(n) = self.corpus.synthetic {
            sets.push(WordSet::from_texts(
                SetId::new("synthetic"),
                synthetic_words(n, self.seed),
            ));
        }
        Ok(merge_corpora(&sets))
    }

    pub fn build(&self) -> Result<SimNetwork, SimError> {
        self.validate()?;
        let corpus = self.load_corpus()?;
        SimNetwork::new(self.clone(), corpus)
    }
}

/// The running simulation: shared index, engines and middlebox.
#[derive(Debug)]
pub struct SimNetwork {
    pub scenario: Scenario,
    pub corpus: Arc<Corpus>,
    pub index: SimIndex,
    pub engines: Vec<SimEngine>,
    middlebox: Mutex<(Middlebox, ChaCha8Rng)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NetOutcome {
    Reset,
    Response(SimResponse),
}

impl SimNetwork {
    pub fn new(scenario: Scenario, corpus: Corpus) -> Result<Self, SimError> {
        let policies: Vec<&SimPolicy> = scenario.engines.iter().map(|e| &e.policy).collect();
        let index = generate_index(
            &scenario.index,
            &policies,
            &corpus,
            &scenario.probe_documents,
            scenario.seed,
        )?;
        let engines = scenario
            .engines
            .iter()
            .map(|spec| {
                let mut e = SimEngine::new(
                    spec.id.clone(),
                    spec.policy.clone(),
                    spec.overrides.clone(),
                    spec.robot,
                    spec.query_encoding,
                    spec.response_encoding,
                    spec.results_per_page,
                    spec.banner_text.clone(),
                );
                e.latency_s = spec.latency_s;
                e.noise_epoch_s = scenario.noise_epoch_s;
                e.noise_seed = scenario.seed ^ spec.policy.seed.rotate_left(32);
                e
            })
            .collect();
        let rng = ChaCha8Rng::seed_from_u64(scenario.seed ^ scenario.middlebox.seed);
        let middlebox = Mutex::new((Middlebox::new(scenario.middlebox.clone()), rng));
        Ok(SimNetwork {
            scenario,
            corpus: Arc::new(corpus),
            index,
            engines,
            middlebox,
        })
    }

    pub fn engine(&self, id: &EngineId) -> Option<&SimEngine> {
        self.engines.iter().find(|e| &e.id == id)
    }

    pub fn spec(&self, id: &EngineId) -> Option<&EngineSpec> {
        self.scenario.engines.iter().find(|e| &e.id == id)
    }

    /// The crawler-side profile for a sim engine served at `base_url`.
    pub fn client_profile(&self, id: &EngineId, base_url: &str) -> Option<EngineProfile> {
        let spec = self.spec(id)?;
        let robot_signatures = match spec.robot.map(|r| r.reaction) {
            Some(RobotReaction::Http999) => vec![RobotSignature {
                kind: MatchKind::HttpStatus,
                needle: "999".into(),
            }],
            Some(RobotReaction::Http503) => vec![RobotSignature {
                kind: MatchKind::HttpStatus,
                needle: "503".into(),
            }],
            Some(RobotReaction::ApologyHtml) => {
                vec![RobotSignature {
                    kind: MatchKind::BodySubstring,
                    needle: APOLOGY_TEXT.into(),
                }]
            }
            None => Vec::new(),
        };
        let needle = if spec.banner_text.contains(DEFAULT_BANNER_NEEDLE) {
            DEFAULT_BANNER_NEEDLE.to_owned()
        } else {
            spec.banner_text.clone()
        };
        Some(EngineProfile {
            id: id.clone(),
            endpoint: format!(
                "{}/s?q={{query}}&p={{page}}",
                base_url.trim_end_matches('/')
            ),
            query_encoding: spec.query_encoding,
            response_encoding: spec.response_encoding,
            quotation_mode: spec.policy.quotation_mode,
            pacing: spec.pacing,
            banner_needles: vec![needle],
            banner_style: spec.policy.banner_style,
            robot_signatures,
            user_agent: FIREFOX_USER_AGENT.into(),
            cookie_policy: CookiePolicy::Ignore,
            results_per_page: spec.results_per_page,
            max_pages_fetched: spec.max_pages_fetched,
            hit_marker: Default::default(),
            entry_rule: Default::default(),
            public_suffixes: default_public_suffixes(),
        })
    }

    /// Profiles for every engine, addressed for the in-process transport.
    pub fn client_profiles(&self) -> Vec<EngineProfile> {
        self.engines
            .iter()
            .map(|e| {
                self.client_profile(&e.id, &format!("http://{}.sim", e.id))
                    .expect("known engine")
            })
            .collect()
    }

    /// One request through the middlebox to an engine and back.
    pub fn handle(
        &self,
        source: &SourceId,
        engine_id: &EngineId,
        target: &[u8],
        at: f64,
    ) -> Option<NetOutcome> {
        let engine = self.engine(engine_id)?;
        {
            let mut guard = self.middlebox.lock().unwrap();
            let (mb, rng) = &mut *guard;
            if gfw_filter(mb, source, engine_id, target, at, rng) == FilterVerdict::InjectReset {
                return Some(NetOutcome::Reset);
            }
        }
        let response = serve_query(engine, &self.index, source, target, at);
        let mut guard = self.middlebox.lock().unwrap();
        let (mb, rng) = &mut *guard;
        if gfw_filter(mb, source, engine_id, &response.body, at, rng) == FilterVerdict::InjectReset
        {
            return Some(NetOutcome::Reset);
        }
        Some(NetOutcome::Response(response))
    }
}

/// Drives a [`SimNetwork`] in process. Requests are answered instantly in
/// wall time and take the engine's `latency_s` in simulated time.
#[derive(Debug, Clone)]
pub struct SimTransport {
    pub net: Arc<SimNetwork>,
}

impl SimTransport {
    pub fn new(net: Arc<SimNetwork>) -> Self {
        SimTransport { net }
    }
}

impl Transport for SimTransport {
    fn exchange(
        &self,
        source: &SourceId,
        profile: &EngineProfile,
        request: &WireRequest,
        at: f64,
    ) -> Exchange {
        let Some(engine) = self.net.engine(&profile.id) else {
            return Exchange {
                outcome: TransportOutcome::Unreachable(format!("no sim engine {}", profile.id)),
                elapsed: 0.0,
            };
        };
        let elapsed = engine.latency_s;
        let outcome = match self.net.handle(source, &profile.id, &request.url, at) {
            Some(NetOutcome::Reset) => TransportOutcome::ResetByPeer,
            Some(NetOutcome::Response(r)) => TransportOutcome::Response {
                status: r.status,
                body: r.body,
            },
            None => TransportOutcome::Unreachable(format!("no sim engine {}", profile.id)),
        };
        Exchange { outcome, elapsed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crawler::classify_exchange;
    use crate::engine::build_request;

    const SCENARIO: &str = r#"
seed = 11

[corpus]
words = ["你好", "六四", "颜色"]

[index]
docs_per_word = 12

[middlebox]
block_window_s = 90
keywords = { "六四" = 1.0 }

[[engines]]
id = "sim-cn"
query_encoding = "gb18030"
response_encoding = "gb2312"
[engines.policy]
blacklist_terms = ["六四"]
whitelist_domains = ["ce.cn"]
banner_style = "first-page-always"
quotation_mode = "loose-reorder"
[engines.robot]
detection = { rate-threshold = { queries = 100, window_s = 60.0 } }
reaction = "http999"
unblock_after_s = 300.0

[[engines]]
id = "sim-com"
[engines.policy]
banner_style = "never"
quotation_mode = "exact-only"
"#;

    #[test]
    fn scenario_parses_and_builds() {
        let s = Scenario::from_toml(SCENARIO, Path::new(".")).unwrap();
        let net = s.build().unwrap();
        assert_eq!(net.corpus.len(), 3);
        assert_eq!(net.engines.len(), 2);
        let back = Scenario::from_toml(&s.to_toml(), Path::new(".")).unwrap();
        assert_eq!(back, s);
        let profiles = net.client_profiles();
        assert_eq!(profiles[0].robot_signatures[0].needle, "999");
        profiles.iter().for_each(|p| p.validate().unwrap());
    }

    #[test]
    fn transport_round_trip_and_reset() {
        let net = Arc::new(
            Scenario::from_toml(SCENARIO, Path::new("."))
                .unwrap()
                .build()
                .unwrap(),
        );
        let t = SimTransport::new(Arc::clone(&net));
        let profiles = net.client_profiles();
        let src = SourceId::worker(0);
        let ok = t.exchange(
            &src,
            &profiles[0],
            &build_request(&profiles[0], "你好", false, 1).unwrap(),
            0.0,
        );
        let parsed = classify_exchange(&profiles[0], &ok.outcome, 1).unwrap();
        assert!(parsed.hit_count.unwrap() > 0);
        assert_eq!(ok.elapsed, 0.2);
        let reset = t.exchange(
            &src,
            &profiles[0],
            &build_request(&profiles[0], "六四", false, 1).unwrap(),
            1.0,
        );
        assert_eq!(reset.outcome, TransportOutcome::ResetByPeer);
        let blocked = t.exchange(
            &src,
            &profiles[0],
            &build_request(&profiles[0], "你好", false, 1).unwrap(),
            50.0,
        );
        assert_eq!(blocked.outcome, TransportOutcome::ResetByPeer);
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        assert!(Scenario::from_toml("seed = 1\nengines = []", Path::new(".")).is_err());
        let dup = SCENARIO.replace("sim-com", "sim-cn");
        assert!(Scenario::from_toml(&dup, Path::new(".")).is_err());
    }
}
