//! Per-video orchestration: frame planning, label-first signal collection
//! with visual fallback, matching with abstention, and descriptive outputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use curio_core::abstention::{decide, filter_signals, DecisionRecord, UncertaintyLexicon};
use curio_core::frames::{plan_frames, FrameSamplingPlan, DEFAULT_LONG_SIDE, DEFAULT_PIXEL_BUDGET};
use curio_core::{AbstentionConfig, CatalogueIndex, PipelineResult, Signal, SignalBundle, SignalSource, Stage};

use crate::backend::{BackendError, GenerationParams, GenerationRequest, ModelBackend, PromptSlot};
use crate::error::{Error, Result};
use crate::io::{read_text, VideoSpec};

/// Shortest transcription treated as a readable label.
pub const MIN_TRANSCRIPTION_CHARS: usize = 3;

pub const TRANSCRIPTION_PLACEHOLDER: &str = "{transcription}";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub transcription: String,
    /// Must ask for a JSON object with exactly the keys `title` and `artist`.
    pub label_extraction: String,
    pub title: String,
    pub artist: String,
    pub subject: String,
    pub summary: String,
    pub description_genre: String,
    pub scene: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            transcription: include_str!("../prompts/transcription.txt").trim().into(),
            label_extraction: include_str!("../prompts/label_extraction.txt").trim().into(),
            title: include_str!("../prompts/title.txt").trim().into(),
            artist: include_str!("../prompts/artist.txt").trim().into(),
            subject: include_str!("../prompts/subject.txt").trim().into(),
            summary: include_str!("../prompts/summary.txt").trim().into(),
            description_genre: include_str!("../prompts/description_genre.txt").trim().into(),
            scene: include_str!("../prompts/scene.txt").trim().into(),
        }
    }
}

impl PromptSet {
    /// Loads `<name>.txt` files from `dir`; missing files keep the default.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut set = PromptSet::default();
        let fields: [(&str, &mut String); 8] = [
            ("transcription", &mut set.transcription),
            ("label_extraction", &mut set.label_extraction),
            ("title", &mut set.title),
            ("artist", &mut set.artist),
            ("subject", &mut set.subject),
            ("summary", &mut set.summary),
            ("description_genre", &mut set.description_genre),
            ("scene", &mut set.scene),
        ];
        for (name, field) in fields {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                *field = read_text(&path)?.trim().to_string();
            }
        }
        if !set.label_extraction.contains(TRANSCRIPTION_PLACEHOLDER) {
            return Err(Error::parse(
                dir.join("label_extraction.txt"),
                format!("prompt must contain {TRANSCRIPTION_PLACEHOLDER}"),
            ));
        }
        Ok(set)
    }

    fn get(&self, slot: PromptSlot) -> &str {
        match slot {
            PromptSlot::Transcription => &self.transcription,
            PromptSlot::Label => &self.label_extraction,
            PromptSlot::Title => &self.title,
            PromptSlot::Artist => &self.artist,
            PromptSlot::Subject => &self.subject,
            PromptSlot::Summary => &self.summary,
            PromptSlot::Description => &self.description_genre,
            PromptSlot::Scene => &self.scene,
        }
    }
}

fn usable_field(obj: &serde_json::Map<String, serde_json::Value>, key: &str, lexicon: &UncertaintyLexicon) -> Option<String> {
    let v = obj.get(key)?.as_str()?.trim();
    (!v.is_empty() && !lexicon.is_uncertain(v)).then(|| v.to_string())
}

/// Title and artist from the first JSON object in `model_text`. Missing,
/// empty or uncertain fields are absent; text without a JSON object yields
/// nothing.
pub fn parse_label_json(model_text: &str) -> (Option<String>, Option<String>) {
    let lexicon = UncertaintyLexicon::default();
    for (start, _) in model_text.match_indices('{') {
        let mut stream = serde_json::Deserializer::from_str(&model_text[start..]).into_iter::<serde_json::Value>();
        if let Some(Ok(serde_json::Value::Object(obj))) = stream.next() {
            return (
                usable_field(&obj, "title", &lexicon),
                usable_field(&obj, "artist", &lexicon),
            );
        }
    }
    (None, None)
}

/// Splits a `Genre:` line off a description.
pub fn split_genre(text: &str) -> (String, String) {
    let mut genre = String::new();
    let mut body = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        match trimmed.get(..6) {
            Some(head) if head.eq_ignore_ascii_case("genre:") => genre = trimmed[6..].trim().to_string(),
            _ => body.push(line),
        }
    }
    (body.join("\n").trim().to_string(), genre)
}

fn readable(transcription: &str, strict: bool) -> bool {
    let t = transcription.trim();
    t.chars().count() >= MIN_TRANSCRIPTION_CHARS && !(strict && UncertaintyLexicon::default().is_uncertain(t))
}

struct Run<'a> {
    video: &'a VideoSpec,
    backend: &'a dyn ModelBackend,
    prompts: &'a PromptSet,
    plan: Option<FrameSamplingPlan>,
    failed: Vec<Stage>,
    timings: BTreeMap<Stage, Duration>,
}

impl Run<'_> {
    fn ask(&mut self, stage: Stage, slot: PromptSlot, prompt: String) -> Option<String> {
        let start = Instant::now();
        let request = GenerationRequest {
            media_ref: self.video.video.clone(),
            frame_plan: self.plan.clone(),
            slot,
            prompt,
            params: GenerationParams::default(),
        };
        let result = self.backend.generate(&request);
        *self.timings.entry(stage).or_default() += start.elapsed();
        match result {
            Ok(r) => Some(r.text),
            Err(e) => {
                self.fail(stage, &e);
                None
            }
        }
    }

    fn ask_slot(&mut self, stage: Stage, slot: PromptSlot) -> Option<String> {
        let prompt = self.prompts.get(slot).to_string();
        self.ask(stage, slot, prompt)
    }

    fn fail(&mut self, stage: Stage, e: &BackendError) {
        log::error!("{}: stage {stage:?} failed: {e}", self.video.video);
        if !self.failed.contains(&stage) {
            self.failed.push(stage);
        }
    }

    fn visual(&mut self) -> SignalBundle {
        let slot = |run: &mut Self, s| {
            run.ask_slot(Stage::VisualQa, s)
                .map(|t| Signal::new(&t, SignalSource::VisualQa))
        };
        SignalBundle {
            title: slot(self, PromptSlot::Title),
            artist: slot(self, PromptSlot::Artist),
            subject: slot(self, PromptSlot::Subject),
        }
    }
}

fn label_signal(guess: Option<String>, raw: &str) -> Option<Signal> {
    guess.map(|g| Signal {
        guess: Some(g),
        source: SignalSource::LabelTranscription,
        raw_output: raw.to_string(),
    })
}

/// Label signals win wherever they carry a guess.
fn merge(label: SignalBundle, visual: SignalBundle) -> SignalBundle {
    let pick = |l: Option<Signal>, v: Option<Signal>| match l {
        Some(s) if s.usable().is_some() => Some(s),
        _ => v,
    };
    SignalBundle {
        title: pick(label.title, visual.title),
        artist: pick(label.artist, visual.artist),
        subject: pick(label.subject, visual.subject),
    }
}

pub fn run_video(
    video: &VideoSpec,
    backend: &dyn ModelBackend,
    index: &CatalogueIndex,
    cfg: &AbstentionConfig,
    prompts: &PromptSet,
) -> PipelineResult {
    let mut run = Run {
        video,
        backend,
        prompts,
        plan: None,
        failed: Vec::new(),
        timings: BTreeMap::new(),
    };

    let start = Instant::now();
    match plan_frames(
        video.total_frames,
        video.fps,
        video.frame_count,
        DEFAULT_LONG_SIDE,
        (video.width, video.height),
        DEFAULT_PIXEL_BUDGET,
    ) {
        Ok(plan) => run.plan = Some(plan),
        Err(e) => {
            log::error!("{}: {e}", video.video);
            run.failed.push(Stage::FramePlanning);
        }
    }
    run.timings.insert(Stage::FramePlanning, start.elapsed());

    let mut transcription = None;
    let mut label = SignalBundle::default();
    if cfg.label_first {
        transcription = run.ask_slot(Stage::LabelTranscription, PromptSlot::Transcription);
        if let Some(text) = transcription.as_deref().filter(|t| readable(t, cfg.strict_abstention)) {
            let prompt = prompts.label_extraction.replace(TRANSCRIPTION_PLACEHOLDER, text.trim());
            if let Some(raw) = run.ask(Stage::LabelExtraction, PromptSlot::Label, prompt) {
                let (title, artist) = parse_label_json(&raw);
                label.title = label_signal(title, &raw);
                label.artist = label_signal(artist, &raw);
            }
        }
    }
    let label_read = label.has_any_guess();
    let signals = if !label_read {
        run.visual()
    } else if cfg.force_visual {
        let visual = run.visual();
        merge(label, visual)
    } else {
        label
    };
    let signals = filter_signals(signals, cfg.strict_abstention);

    let start = Instant::now();
    let mut decision = decide(&signals, index, cfg);
    run.timings.insert(Stage::Matching, start.elapsed());

    let summary = run.ask_slot(Stage::Summary, PromptSlot::Summary).unwrap_or_default();
    let (description, genre) = run
        .ask_slot(Stage::DescriptionGenre, PromptSlot::Description)
        .map(|t| split_genre(&t))
        .unwrap_or_default();
    let scene_analysis = run.ask_slot(Stage::SceneAnalysis, PromptSlot::Scene).unwrap_or_default();

    if run.failed.iter().any(|s| *s != Stage::FramePlanning) {
        decision = DecisionRecord::abstain(decision.regime, "backend failure");
    }

    PipelineResult {
        video_ref: video.video.clone(),
        summary: summary.trim().to_string(),
        description,
        genre,
        scene_analysis: scene_analysis.trim().to_string(),
        decision,
        signals,
        backend: backend.descriptor().clone(),
        label_transcription: transcription,
        frame_plan: run.plan,
        failed_stages: run.failed,
        stage_timings: run.timings,
    }
}

/// Runs every video, at most `backend.max_in_flight()` at a time. Results
/// keep the input order.
pub fn run_batch(
    videos: &[VideoSpec],
    backend: &dyn ModelBackend,
    index: &CatalogueIndex,
    cfg: &AbstentionConfig,
    prompts: &PromptSet,
) -> Vec<PipelineResult> {
    let workers = backend
        .max_in_flight()
        .unwrap_or(videos.len())
        .clamp(1, videos.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<PipelineResult>>> = Mutex::new(vec![None; videos.len()]);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(video) = videos.get(i) else { break };
                let result = run_video(video, backend, index, cfg, prompts);
                slots.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .unwrap_or_else(|p| p.into_inner())
        .into_iter()
        .map(|r| r.expect("every video is processed"))
        .collect()
}
