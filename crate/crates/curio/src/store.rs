//! On-disk run store.
//!
//! ```text
//! <data>/runs/<run id>/manifest.json
//!                      catalogue.json      copy of the catalogue used
//!                      results/<key>.json  one PipelineResult per video
//!                      decisions.jsonl     append-only decision log
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use curio_core::abstention::{decide, filter_signals};
use curio_core::{AbstentionConfig, BackendDescriptor, CatalogueIndex, DecisionRecord, PipelineResult, StopwordSet};

use crate::error::{Error, Result};
use crate::io::{append_jsonl, parse_catalogue, read_json, read_jsonl, read_text, write_json, write_text};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config: AbstentionConfig,
    pub backend: BackendDescriptor,
    pub catalogue_sha256: String,
    pub catalogue_entries: usize,
    pub stopwords: Vec<String>,
    pub videos: Vec<String>,
    /// Unix seconds.
    pub started_at: u64,
    pub finished_at: u64,
}

/// One line of `decisions.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredDecision {
    pub run_id: String,
    pub video: String,
    pub record: DecisionRecord,
}

pub fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run ids become directory names, so only `[A-Za-z0-9._-]` is allowed.
pub fn valid_run_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'))
}

#[derive(Debug, Clone)]
pub struct RunStore {
    root: PathBuf,
}

impl RunStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn runs_dir(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn run_dir(&self, run_id: &str) -> Result<PathBuf> {
        if !valid_run_id(run_id) {
            return Err(Error::NotFound(format!("run `{run_id}`")));
        }
        Ok(self.runs_dir().join(run_id))
    }

    pub fn exists(&self, run_id: &str) -> bool {
        self.run_dir(run_id).is_ok_and(|d| d.join("manifest.json").is_file())
    }

    /// Writes a complete run. Refuses to overwrite an existing one.
    pub fn save_run(&self, manifest: &RunManifest, catalogue_json: &str, results: &[PipelineResult]) -> Result<()> {
        let dir = self.run_dir(&manifest.run_id)?;
        if dir.exists() {
            return Err(Error::parse(&dir, "run already exists; choose another --run id"));
        }
        write_text(&dir.join("catalogue.json"), catalogue_json)?;
        for r in results {
            write_json(&dir.join("results").join(format!("{}.json", r.key())), r)?;
        }
        let log = dir.join("decisions.jsonl");
        write_text(&log, "")?;
        for r in results {
            append_jsonl(
                &log,
                &StoredDecision {
                    run_id: manifest.run_id.clone(),
                    video: r.video_ref.clone(),
                    record: r.decision.clone(),
                },
            )?;
        }
        // The manifest goes last: its presence marks the run complete.
        write_json(&dir.join("manifest.json"), manifest)
    }

    pub fn list_runs(&self) -> Result<Vec<RunManifest>> {
        let dir = self.runs_dir();
        if !dir.exists() {
            return Ok(Vec::new());
        }
        let mut runs = Vec::new();
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let manifest = entry.path().join("manifest.json");
            if manifest.is_file() {
                runs.push(read_json::<RunManifest>(&manifest)?);
            }
        }
        runs.sort_by(|a, b| a.started_at.cmp(&b.started_at).then_with(|| a.run_id.cmp(&b.run_id)));
        Ok(runs)
    }

    pub fn manifest(&self, run_id: &str) -> Result<RunManifest> {
        if !self.exists(run_id) {
            return Err(Error::NotFound(format!("run `{run_id}`")));
        }
        read_json(&self.run_dir(run_id)?.join("manifest.json"))
    }

    /// Results in manifest video order.
    pub fn results(&self, run_id: &str) -> Result<Vec<PipelineResult>> {
        let manifest = self.manifest(run_id)?;
        let dir = self.run_dir(run_id)?.join("results");
        manifest
            .videos
            .iter()
            .map(|v| read_json(&dir.join(format!("{}.json", curio_core::video_key(v)))))
            .collect()
    }

    pub fn decisions(&self, run_id: &str) -> Result<Vec<StoredDecision>> {
        self.manifest(run_id)?;
        read_jsonl(&self.run_dir(run_id)?.join("decisions.jsonl"))
    }

    /// The catalogue index the run was decided against.
    pub fn index(&self, run_id: &str) -> Result<CatalogueIndex> {
        let manifest = self.manifest(run_id)?;
        let path = self.run_dir(run_id)?.join("catalogue.json");
        let text = read_text(&path)?;
        if sha256_hex(text.as_bytes()) != manifest.catalogue_sha256 {
            return Err(Error::parse(&path, "catalogue copy does not match the manifest hash"));
        }
        let records = parse_catalogue(&path, &text)?;
        let stopwords = StopwordSet::new(manifest.stopwords.iter().map(String::as_str));
        Ok(CatalogueIndex::build(&records, stopwords)?)
    }

    /// Re-decides the stored signals of a run under `cfg`. Never calls a
    /// backend and never writes to the store.
    pub fn replay(&self, run_id: &str, cfg: &AbstentionConfig) -> Result<Vec<StoredDecision>> {
        cfg.validate().map_err(Error::Config)?;
        let index = self.index(run_id)?;
        Ok(self
            .results(run_id)?
            .into_iter()
            .map(|r| StoredDecision {
                run_id: run_id.to_string(),
                record: replay_result(&r, &index, cfg),
                video: r.video_ref,
            })
            .collect())
    }
}

/// Decision for one stored result under another config. Stored signals
/// were filtered when the run was made; a stricter config filters again.
pub fn replay_result(result: &PipelineResult, index: &CatalogueIndex, cfg: &AbstentionConfig) -> DecisionRecord {
    if result
        .failed_stages
        .iter()
        .any(|s| *s != curio_core::Stage::FramePlanning)
    {
        return result.decision.clone();
    }
    let signals = filter_signals(result.signals.clone(), cfg.strict_abstention);
    decide(&signals, index, cfg)
}
