use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::corpus::{load_wordset, merge_corpora, CategoryLexicon, Corpus, SetId};
use crate::crawler::{QuotedMode, RecoveryTiming};
use crate::engine::EngineProfile;

fn default_run_id() -> String {
    "run".into()
}
fn one() -> u32 {
    1
}
fn unquoted() -> QuotedMode {
    QuotedMode::Unquoted
}
fn thirty() -> f64 {
    30.0
}

/// Runs the campaign against an in-process simulation on a simulated clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub scenario: PathBuf,
    /// Simulated time of the first run's start.
    #[serde(default)]
    pub start_s: f64,
}

/// The `crawl run` config file. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// Run id, or the prefix of `<run_id>-NN` ids when `runs > 1`.
    #[serde(default = "default_run_id")]
    pub run_id: String,
    /// Word-list files; in sim mode an empty list uses the scenario's corpus.
    #[serde(default)]
    pub corpus: Vec<PathBuf>,
    #[serde(default)]
    pub lexicon: Option<PathBuf>,
    /// Live mode: built-in profile names or profile files (`*.toml`).
    /// Sim mode: optional subset of the scenario's engine ids.
    #[serde(default)]
    pub engines: Vec<String>,
    #[serde(default = "unquoted")]
    pub quoted: QuotedMode,
    #[serde(default = "one")]
    pub workers: u32,
    #[serde(default = "one")]
    pub page_depth: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub runs: u32,
    /// Seconds between run starts; a run that overruns delays the next.
    #[serde(default)]
    pub run_spacing_s: f64,
    #[serde(default)]
    pub recovery: RecoveryTiming,
    #[serde(default)]
    pub keep_bodies: bool,
    /// Live-mode socket timeout.
    #[serde(default = "thirty")]
    pub timeout_s: f64,
    #[serde(default)]
    pub sim: Option<SimSection>,
}

impl CampaignConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, String> {
        let mut c: CampaignConfig =
            toml::from_str(text).map_err(|e| format!("campaign config: {e}"))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        c.corpus.iter_mut().for_each(resolve);
        c.lexicon.iter_mut().for_each(resolve);
        if let Some(s) = &mut c.sim {
            resolve(&mut s.scenario);
        }
        for e in &mut c.engines {
            if e.ends_with(".toml") && Path::new(e.as_str()).is_relative() {
                *e = base_dir.join(&*e).display().to_string();
            }
        }
        if c.runs < 1 {
            return Err("runs must be at least 1".into());
        }
        if !(c.run_spacing_s.is_finite() && c.run_spacing_s >= 0.0)
            || c.timeout_s.is_nan()
            || c.timeout_s <= 0.0
        {
            return Err("run_spacing_s must be non-negative and timeout_s positive".into());
        }
        if c.sim.is_none() && c.corpus.is_empty() {
            return Err("no corpus files given".into());
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn load_corpus(&self) -> Result<Corpus, String> {
        let mut sets = Vec::new();
        for p in &self.corpus {
            let id = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "words".into());
            sets.push(load_wordset(p, SetId::new(id)).map_err(|e| e.to_string())?);
        }
        Ok(merge_corpora(&sets))
    }

    pub fn load_lexicon(&self) -> Result<CategoryLexicon, String> {
        match &self.lexicon {
            Some(p) => CategoryLexicon::load(p).map_err(|e| e.to_string()),
            None => Ok(CategoryLexicon::default()),
        }
    }

    /// Live-mode profiles, in config order.
    pub fn load_profiles(&self) -> Result<Vec<EngineProfile>, String> {
        if self.engines.is_empty() {
            return Err("no engines given".into());
        }
        let builtin = EngineProfile::builtin();
        self.engines
            .iter()
            .map(|e| {
                if e.ends_with(".toml") {
                    EngineProfile::load(Path::new(e)).map_err(|err| format!("{e}: {err}"))
                } else {
                    builtin
                        .get(e.as_str())
                        .cloned()
                        .ok_or_else(|| format!("unknown built-in profile {e:?}"))
                }
            })
            .collect()
    }

    /// In sim mode, restricts `profiles` to the configured engine ids.
    pub fn select_profiles(
        &self,
        profiles: Vec<EngineProfile>,
    ) -> Result<Vec<EngineProfile>, String> {
        if self.sim.is_none() || self.engines.is_empty() {
            return Ok(profiles);
        }
        self.engines
            .iter()
            .map(|id| {
                profiles
                    .iter()
                    .find(|p| p.id.as_str() == id)
                    .cloned()
                    .ok_or_else(|| format!("scenario has no engine {id:?}"))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_resolve_against_the_config_dir() {
        let c = CampaignConfig::from_toml(
            r#"
corpus = ["words.txt"]
engines = ["google.cn", "mine.toml"]
quoted = "both"
[recovery]
deadline_s = 60.0
"#,
            Path::new("/base"),
        )
        .unwrap();
        assert_eq!(c.corpus, [PathBuf::from("/base/words.txt")]);
        assert_eq!(c.engines[1], "/base/mine.toml");
        assert_eq!(c.quoted, QuotedMode::Both);
        assert_eq!(c.recovery.deadline_s, 60.0);
        assert_eq!(c.recovery.probe_interval_s, 10.0);
    }

    #[test]
    fn live_mode_needs_a_corpus() {
        assert!(CampaignConfig::from_toml("engines = [\"google.cn\"]", Path::new(".")).is_err());
        assert!(CampaignConfig::from_toml("[sim]\nscenario = \"s.toml\"", Path::new(".")).is_ok());
        assert!(CampaignConfig::from_toml(
            "runs = 0\n[sim]\nscenario = \"s.toml\"",
            Path::new(".")
        )
        .is_err());
    }

    #[test]
    fn builtin_profiles_resolve() {
        let c = CampaignConfig::from_toml(
            "corpus = [\"w\"]\nengines = [\"google.cn\", \"baidu.com\"]",
            Path::new("."),
        )
        .unwrap();
        let p = c.load_profiles().unwrap();
        assert_eq!(p[1].id.as_str(), "baidu.com");
        let bad =
            CampaignConfig::from_toml("corpus = [\"w\"]\nengines = [\"nope\"]", Path::new("."))
                .unwrap();
        assert!(bad.load_profiles().is_err());
    }
}
