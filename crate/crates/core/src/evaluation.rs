//! Coverage, correctness, precision and false-positive accounting over a run.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::abstention::{AbstentionConfig, Decision};
use crate::catalogue::{CatalogueEntry, CatalogueIndex, EntryId};
use crate::result::{video_key, BackendDescriptor, PipelineResult};
use crate::textnorm::{extract_aliases, normalise};

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub video: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub artist: String,
    #[serde(default = "yes")]
    pub has_gt: bool,
    /// Unannotated video whose content was identified by inspection; the
    /// title/artist are used for the advisory count only.
    #[serde(default, skip_serializing_if = "core::ops::Not::not")]
    pub advisory: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    by_key: BTreeMap<String, GroundTruthRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvaluationError {
    DuplicateVideo(String),
    MissingGroundTruth(String),
}

impl fmt::Display for EvaluationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvaluationError::DuplicateVideo(v) => write!(f, "video `{v}` appears more than once"),
            EvaluationError::MissingGroundTruth(v) => {
                write!(f, "video `{v}` has no ground-truth record (use has_gt: false for unannotated videos)")
            }
        }
    }
}

impl core::error::Error for EvaluationError {}

impl GroundTruth {
    pub fn new(records: Vec<GroundTruthRecord>) -> Result<Self, EvaluationError> {
        let mut by_key = BTreeMap::new();
        for r in records {
            let key = String::from(video_key(&r.video));
            if by_key.contains_key(&key) {
                return Err(EvaluationError::DuplicateVideo(r.video));
            }
            by_key.insert(key, r);
        }
        Ok(GroundTruth { by_key })
    }

    pub fn get(&self, video_ref: &str) -> Option<&GroundTruthRecord> {
        self.by_key.get(video_key(video_ref))
    }

    pub fn records(&self) -> impl Iterator<Item = &GroundTruthRecord> {
        self.by_key.values()
    }

    pub fn labelled(&self) -> usize {
        self.by_key.values().filter(|r| r.has_gt).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    FalsePositive,
    Abstain,
    NoGt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoVerdict {
    pub video: String,
    pub decision: Decision,
    pub matched_id: Option<EntryId>,
    pub matched_title: Option<String>,
    pub verdict: Verdict,
    /// For accepted advisory videos: whether the match agrees with inspection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisory_correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub label: String,
    pub per_video: Vec<VideoVerdict>,
    pub videos: usize,
    pub gt_videos: usize,
    pub accepts: usize,
    pub coverage: f64,
    pub correct: usize,
    pub false_positives: usize,
    /// `None` when no GT-labelled video was accepted.
    pub precision: Option<f64>,
    pub advisory_correct: usize,
    pub config_snapshot: AbstentionConfig,
    pub backend: BackendDescriptor,
    pub format_tags: BTreeSet<String>,
    pub format_tag_mismatch: bool,
}

impl EvaluationReport {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.per_video.iter().filter(|v| v.verdict == verdict).count()
    }
}

/// Does `entry` (or its dedup group) name the ground-truth work?
///
/// Correct when the GT title matches one of the entry's aliases, or when
/// the artist agrees and the GT title matches an alias anywhere in the
/// entry's dedup group.
pub fn matches_ground_truth(index: &CatalogueIndex, entry: &CatalogueEntry, title: &str, artist: &str) -> bool {
    let gt_titles = extract_aliases(title);
    let gt_full = normalise(title).normalised;
    let hits = |e: &CatalogueEntry| {
        gt_titles
            .aliases
            .iter()
            .any(|a| e.title_aliases.contains(&a.normalised))
            || e.title_aliases.contains(&gt_full)
    };
    if hits(entry) {
        return true;
    }
    let artist_eq = !artist.trim().is_empty() && normalise(artist).normalised == entry.artist_norm.normalised;
    artist_eq
        && index
            .entries
            .iter()
            .filter(|e| e.dedup_key() == entry.dedup_key())
            .any(hits)
}

pub fn evaluate(
    label: &str,
    results: &[PipelineResult],
    gt: &GroundTruth,
    index: &CatalogueIndex,
    config: &AbstentionConfig,
) -> Result<EvaluationReport, EvaluationError> {
    let mut seen = BTreeSet::new();
    let mut per_video = Vec::with_capacity(results.len());
    for r in results {
        if !seen.insert(r.key()) {
            return Err(EvaluationError::DuplicateVideo(r.video_ref.clone()));
        }
        let truth = gt
            .get(&r.video_ref)
            .ok_or_else(|| EvaluationError::MissingGroundTruth(r.video_ref.clone()))?;

        let matched = r
            .decision
            .matched_entry_id
            .as_ref()
            .filter(|_| r.decision.is_accept())
            .and_then(|id| index.entry(id));
        let (verdict, advisory_correct) = match (r.decision.decision, matched) {
            (Decision::Abstain, _) => (Verdict::Abstain, None),
            (Decision::Accept, m) if !truth.has_gt => {
                let adv = truth
                    .advisory
                    .then(|| m.is_some_and(|e| matches_ground_truth(index, e, &truth.title, &truth.artist)));
                (Verdict::NoGt, adv)
            }
            (Decision::Accept, Some(e)) if matches_ground_truth(index, e, &truth.title, &truth.artist) => {
                (Verdict::Correct, None)
            }
            // An accept whose entry is unknown to this catalogue cannot be verified.
            (Decision::Accept, _) => (Verdict::FalsePositive, None),
        };
        per_video.push(VideoVerdict {
            video: r.video_ref.clone(),
            decision: r.decision.decision,
            matched_id: r.decision.matched_entry_id.clone(),
            matched_title: matched.map(|e| e.title_raw.clone()),
            verdict,
            advisory_correct,
        });
    }

    let videos = per_video.len();
    let accepts = per_video.iter().filter(|v| v.decision == Decision::Accept).count();
    let correct = per_video.iter().filter(|v| v.verdict == Verdict::Correct).count();
    let false_positives = per_video.iter().filter(|v| v.verdict == Verdict::FalsePositive).count();
    let judged = correct + false_positives;
    let gt_videos = results
        .iter()
        .filter(|r| gt.get(&r.video_ref).is_some_and(|t| t.has_gt))
        .count();
    let format_tags: BTreeSet<String> = results
        .iter()
        .map(|r| r.backend.input_format_tag.clone())
        .collect();

    Ok(EvaluationReport {
        label: label.into(),
        videos,
        gt_videos,
        accepts,
        coverage: if videos == 0 { 0.0 } else { accepts as f64 / videos as f64 },
        correct,
        false_positives,
        precision: (judged > 0).then(|| correct as f64 / judged as f64),
        advisory_correct: per_video.iter().filter(|v| v.advisory_correct == Some(true)).count(),
        config_snapshot: config.clone(),
        backend: results
            .first()
            .map(|r| r.backend.clone())
            .unwrap_or_else(|| BackendDescriptor::new("none", "none")),
        format_tag_mismatch: format_tags.len() > 1,
        format_tags,
        per_video,
    })
}
