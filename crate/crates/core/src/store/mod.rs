//! Append-only persistence of query records and run manifests.
//!
//! Layout of a store root:
//!
//! ```text
//! <root>/<run_id>/manifest.json     run manifest, written when the run finishes
//! <root>/<run_id>/records.jsonl     one QueryRecord per line, append order
//! <root>/<run_id>/recoveries.jsonl  one RecoveryReport per line
//! <root>/<run_id>/bodies/<sha256>.html  raw response bodies, content-addressed
//! ```
//!
//! Record lines are JSON objects whose keys always appear in the order
//! `run_id, engine, word, quoted, attempt, worker, started_at, finished_at,
//! pages_fetched, outcome, body_refs`. An absent hit count is `null`, never `0`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use thiserror::Error;

use crate::corpus::Encoding;
use crate::crawler::{FailureClass, QuotedMode, RecoveryReport};
use crate::engine::{EngineId, ParsedResponse};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store unwritable: {0}")]
    Unwritable(String),
    #[error("unknown run {0:?}")]
    UnknownRun(String),
    #[error("run {0:?} already exists")]
    RunExists(String),
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: String,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {message}")]
    Unreadable { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum SkipReason {
    Unmappable { ch: char, encoding: Encoding },
    EngineUnavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RecordOutcome {
    Parsed { pages: Vec<ParsedResponse> },
    Failed { failure: FailureClass },
    Skipped { reason: SkipReason },
    GaveUp,
}

impl RecordOutcome {
    /// Terminal outcomes close a campaign cell; `Failed` marks one attempt only.
    pub fn is_terminal(&self) -> bool {
        !matches!(self, RecordOutcome::Failed { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RecordOutcome::Parsed { .. } => "parsed",
            RecordOutcome::Failed { .. } => "failed",
            RecordOutcome::Skipped { .. } => "skipped",
            RecordOutcome::GaveUp => "gave-up",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub run_id: String,
    pub engine: EngineId,
    pub word: String,
    pub quoted: bool,
    pub attempt: u8,
    pub worker: u32,
    pub started_at: f64,
    pub finished_at: f64,
    pub pages_fetched: u32,
    pub outcome: RecordOutcome,
    #[serde(default)]
    pub body_refs: Vec<String>,
}

impl QueryRecord {
    pub fn pages(&self) -> &[ParsedResponse] {
        match &self.outcome {
            RecordOutcome::Parsed { pages } => pages,
            _ => &[],
        }
    }

    /// Hit count reported on the first page of a parsed record.
    pub fn hit_count(&self) -> Option<u64> {
        self.pages().first().and_then(|p| p.hit_count)
    }

    /// Whether any fetched page carried the removed-results banner.
    pub fn banner_present(&self) -> bool {
        self.pages().iter().any(|p| p.banner_present)
    }

    pub fn failure(&self) -> Option<FailureClass> {
        match self.outcome {
            RecordOutcome::Failed { failure } => Some(failure),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub parsed: u64,
    pub gave_up: u64,
    pub skipped: u64,
    /// Non-terminal failed attempts; not part of the cell total.
    pub failed_attempts: u64,
}

impl OutcomeCounts {
    pub fn tally<'a>(records: impl IntoIterator<Item = &'a QueryRecord>) -> Self {
        let mut c = OutcomeCounts::default();
        for r in records {
            c.add(&r.outcome);
        }
        c
    }

    pub fn add(&mut self, outcome: &RecordOutcome) {
        match outcome {
            RecordOutcome::Parsed { .. } => self.parsed += 1,
            RecordOutcome::GaveUp => self.gave_up += 1,
            RecordOutcome::Skipped { .. } => self.skipped += 1,
            RecordOutcome::Failed { .. } => self.failed_attempts += 1,
        }
    }

    pub fn terminal(&self) -> u64 {
        self.parsed + self.gave_up + self.skipped
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSnapshot {
    pub corpus_hash: String,
    pub corpus_size: u64,
    pub engines: Vec<EngineId>,
    pub quoted: QuotedMode,
    pub seed: u64,
    pub workers: u32,
    pub page_depth: u32,
}

impl CampaignSnapshot {
    pub fn expected_cells(&self) -> u64 {
        self.corpus_size * self.engines.len() as u64 * self.quoted.variants().len() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub snapshot: CampaignSnapshot,
    pub started_at: f64,
    pub finished_at: f64,
    pub counts: OutcomeCounts,
    /// Engines that exceeded their recovery deadline during the run.
    #[serde(default)]
    pub unavailable_engines: Vec<EngineId>,
}

/// A newline-delimited JSON log opened either for appending or read-only.
#[derive(Debug)]
pub struct RecordLog {
    path: PathBuf,
    writer: Option<Mutex<File>>,
}

impl RecordLog {
    pub fn open_append(path: &Path) -> Result<Self, StoreError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| StoreError::Unwritable(format!("{}: {e}", path.display())))?;
        Ok(RecordLog {
            path: path.to_owned(),
            writer: Some(Mutex::new(file)),
        })
    }

    pub fn open_read_only(path: &Path) -> Self {
        RecordLog {
            path: path.to_owned(),
            writer: None,
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one record as a single line. The line is written with one
    /// `write_all` under the log's lock, so concurrent appends never interleave.
    pub fn append<T: Serialize>(&self, record: &T) -> Result<(), StoreError> {
        let writer = self.writer.as_ref().ok_or_else(|| {
            StoreError::Unwritable(format!("{} is open read-only", self.path.display()))
        })?;
        let mut line =
            serde_json::to_string(record).map_err(|e| StoreError::Unwritable(e.to_string()))?;
        line.push('\n');
        let mut file = writer.lock().unwrap();
        file.write_all(line.as_bytes())
            .and_then(|_| file.flush())
            .map_err(|e| StoreError::Unwritable(format!("{}: {e}", self.path.display())))
    }

    pub fn sync(&self) -> Result<(), StoreError> {
        if let Some(w) = &self.writer {
            w.lock()
                .unwrap()
                .sync_all()
                .map_err(|e| StoreError::Unwritable(format!("{}: {e}", self.path.display())))?;
        }
        Ok(())
    }

    pub fn read_all<T: DeserializeOwned>(&self) -> Result<Vec<T>, StoreError> {
        read_jsonl(&self.path)
    }
}

pub fn append_record(log: &RecordLog, record: &QueryRecord) -> Result<(), StoreError> {
    log.append(record)
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, StoreError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(|e| StoreError::Unreadable {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| StoreError::Unreadable {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                path: path.display().to_string(),
                line: idx + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

/// A directory holding one subdirectory per run.
#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const RECOVERIES_FILE: &str = "recoveries.jsonl";
pub const BODIES_DIR: &str = "bodies";

impl RunStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        std::fs::create_dir_all(&root)
            .map_err(|e| StoreError::Unwritable(format!("{}: {e}", root.display())))?;
        Ok(RunStore { root })
    }

    /// Opens an existing store without creating anything.
    pub fn open_existing(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        if !root.is_dir() {
            return Err(StoreError::Unreadable {
                path: root.display().to_string(),
                message: "not a directory".into(),
            });
        }
        Ok(RunStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, run_id: &str) -> PathBuf {
        self.root.join(run_id)
    }

    pub fn create_run(&self, run_id: &str) -> Result<RunWriter, StoreError> {
        if run_id.is_empty() || run_id.contains(['/', '\\']) || run_id.starts_with('.') {
            return Err(StoreError::Unwritable(format!("invalid run id {run_id:?}")));
        }
        let dir = self.run_dir(run_id);
        if dir.exists() {
            return Err(StoreError::RunExists(run_id.to_owned()));
        }
        std::fs::create_dir_all(&dir)
            .map_err(|e| StoreError::Unwritable(format!("{}: {e}", dir.display())))?;
        Ok(RunWriter {
            records: RecordLog::open_append(&dir.join(RECORDS_FILE))?,
            recoveries: RecordLog::open_append(&dir.join(RECOVERIES_FILE))?,
            dir,
            run_id: run_id.to_owned(),
        })
    }

    /// Run ids with a manifest, sorted.
    pub fn run_ids(&self) -> Result<Vec<String>, StoreError> {
        let entries = std::fs::read_dir(&self.root).map_err(|e| StoreError::Unreadable {
            path: self.root.display().to_string(),
            message: e.to_string(),
        })?;
        let mut ids: Vec<String> = entries
            .filter_map(Result::ok)
            .filter(|e| e.path().join(MANIFEST_FILE).is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        ids.sort();
        Ok(ids)
    }

    pub fn load_manifest(&self, run_id: &str) -> Result<RunManifest, StoreError> {
        let path = self.run_dir(run_id).join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(StoreError::UnknownRun(run_id.to_owned()));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| StoreError::Unreadable {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn load_run(&self, run_id: &str) -> Result<(RunManifest, Vec<QueryRecord>), StoreError> {
        let manifest = self.load_manifest(run_id)?;
        let records = read_jsonl(&self.run_dir(run_id).join(RECORDS_FILE))?;
        Ok((manifest, records))
    }

    pub fn load_recoveries(&self, run_id: &str) -> Result<Vec<RecoveryReport>, StoreError> {
        if !self.run_dir(run_id).join(MANIFEST_FILE).is_file() {
            return Err(StoreError::UnknownRun(run_id.to_owned()));
        }
        read_jsonl(&self.run_dir(run_id).join(RECOVERIES_FILE))
    }

    pub fn load_body(&self, run_id: &str, hash: &str) -> Result<Vec<u8>, StoreError> {
        let path = self
            .run_dir(run_id)
            .join(BODIES_DIR)
            .join(format!("{hash}.html"));
        std::fs::read(&path).map_err(|e| StoreError::Unreadable {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Write side of a single run.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    run_id: String,
    records: RecordLog,
    recoveries: RecordLog,
}

impl RunWriter {
    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append_record(&self, record: &QueryRecord) -> Result<(), StoreError> {
        self.records.append(record)
    }

    pub fn append_recovery(&self, report: &RecoveryReport) -> Result<(), StoreError> {
        self.recoveries.append(report)
    }

    /// Stores a raw body under its SHA-256 and returns the hex digest.
    pub fn store_body(&self, body: &[u8]) -> Result<String, StoreError> {
        use sha2::{Digest, Sha256};
        let hash = hex::encode(Sha256::digest(body));
        let dir = self.dir.join(BODIES_DIR);
        let path = dir.join(format!("{hash}.html"));
        if !path.exists() {
            std::fs::create_dir_all(&dir)
                .and_then(|_| std::fs::write(&path, body))
                .map_err(|e| StoreError::Unwritable(format!("{}: {e}", path.display())))?;
        }
        Ok(hash)
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<PathBuf, StoreError> {
        self.records.sync()?;
        self.recoveries.sync()?;
        let path = self.dir.join(MANIFEST_FILE);
        let tmp = self.dir.join(".manifest.json.tmp");
        let text = serde_json::to_string_pretty(manifest)
            .map_err(|e| StoreError::Unwritable(e.to_string()))?;
        std::fs::write(&tmp, text + "\n")
            .and_then(|_| std::fs::rename(&tmp, &path))
            .map_err(|e| StoreError::Unwritable(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
