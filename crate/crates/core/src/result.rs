//! Per-video pipeline output and backend provenance.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

use serde::{Deserialize, Serialize};

use crate::abstention::{DecisionRecord, SignalBundle};
use crate::frames::FrameSamplingPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Image,
    Video,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub name: String,
    pub modality_support: Vec<Modality>,
    pub quantised: bool,
    /// Visual input pathway, e.g. `native-video` or `extracted-frames`.
    pub input_format_tag: String,
}

impl BackendDescriptor {
    pub fn new(name: &str, input_format_tag: &str) -> Self {
        BackendDescriptor {
            name: name.into(),
            modality_support: alloc::vec![Modality::Image, Modality::Video],
            quantised: false,
            input_format_tag: input_format_tag.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    FramePlanning,
    LabelTranscription,
    LabelExtraction,
    VisualQa,
    Matching,
    Summary,
    DescriptionGenre,
    SceneAnalysis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub video_ref: String,
    /// Up to three artworks in order of appearance.
    pub summary: String,
    pub description: String,
    pub genre: String,
    pub scene_analysis: String,
    pub decision: DecisionRecord,
    pub signals: SignalBundle,
    pub backend: BackendDescriptor,
    #[serde(default)]
    pub label_transcription: Option<String>,
    #[serde(default)]
    pub frame_plan: Option<FrameSamplingPlan>,
    #[serde(default)]
    pub failed_stages: Vec<Stage>,
    #[serde(default)]
    pub stage_timings: BTreeMap<Stage, Duration>,
}

impl PipelineResult {
    pub fn key(&self) -> &str {
        video_key(&self.video_ref)
    }
}

/// File stem of a video reference: `clips/04_POTM.mp4` -> `04_POTM`.
pub fn video_key(video_ref: &str) -> &str {
    let name = video_ref
        .rsplit(['/', '\\'])
        .next()
        .unwrap_or(video_ref);
    match name.rfind('.') {
        Some(dot) if dot > 0 => &name[..dot],
        _ => name,
    }
}
