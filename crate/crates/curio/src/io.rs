//! File formats: catalogue, stopwords, config, ground truth, templates,
//! video lists and JSON-lines.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use curio_core::dialogue::Templates;
use curio_core::evaluation::{GroundTruth, GroundTruthRecord};
use curio_core::frames::DEFAULT_FRAME_COUNT;
use curio_core::{AbstentionConfig, CatalogueRecord, StopwordSet};

use crate::error::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::parse(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

/// A JSON array of records. Unknown keys are ignored; a malformed record is
/// reported with its position.
pub fn parse_catalogue(path: &Path, text: &str) -> Result<Vec<CatalogueRecord>> {
    let raw: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|e| Error::parse(path, format!("expected a JSON array of records: {e}")))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, v)| serde_json::from_value(v).map_err(|e| Error::parse(path, format!("record {i}: {e}"))))
        .collect()
}

pub fn load_catalogue(path: &Path) -> Result<Vec<CatalogueRecord>> {
    parse_catalogue(path, &read_text(path)?)
}

pub fn load_stopwords(path: &Path) -> Result<StopwordSet> {
    Ok(StopwordSet::from_lines(&read_text(path)?))
}

pub fn parse_config(path: &Path, text: &str) -> Result<AbstentionConfig> {
    let cfg: AbstentionConfig = serde_json::from_str(text).map_err(|e| Error::parse(path, e))?;
    cfg.validate().map_err(Error::Config)?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<AbstentionConfig> {
    parse_config(path, &read_text(path)?)
}

pub fn load_ground_truth(path: &Path) -> Result<GroundTruth> {
    let records: Vec<GroundTruthRecord> = read_json(path)?;
    Ok(GroundTruth::new(records)?)
}

pub fn load_templates(path: &Path) -> Result<Templates> {
    read_json(path)
}

/// A video plus the geometry needed for frame planning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoSpec {
    pub video: String,
    #[serde(default = "VideoSpec::default_fps")]
    pub fps: f64,
    #[serde(default = "VideoSpec::default_total_frames")]
    pub total_frames: u64,
    #[serde(default = "VideoSpec::default_width")]
    pub width: u32,
    #[serde(default = "VideoSpec::default_height")]
    pub height: u32,
    #[serde(default = "VideoSpec::default_frame_count")]
    pub frame_count: u32,
}

impl VideoSpec {
    fn default_fps() -> f64 {
        25.0
    }
    fn default_total_frames() -> u64 {
        // 90 s at 25 fps
        2250
    }
    fn default_width() -> u32 {
        1920
    }
    fn default_height() -> u32 {
        1080
    }
    fn default_frame_count() -> u32 {
        DEFAULT_FRAME_COUNT
    }

    pub fn new(video: &str) -> Self {
        VideoSpec {
            video: video.into(),
            fps: Self::default_fps(),
            total_frames: Self::default_total_frames(),
            width: Self::default_width(),
            height: Self::default_height(),
            frame_count: Self::default_frame_count(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VideoItem {
    Name(String),
    Spec(VideoSpec),
}

/// `.json` files hold an array of names or objects; anything else is one
/// video per line with `#` comments.
pub fn load_videos(path: &Path) -> Result<Vec<VideoSpec>> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let items: Vec<VideoItem> = serde_json::from_str(&text).map_err(|e| Error::parse(path, e))?;
        return Ok(items
            .into_iter()
            .map(|i| match i {
                VideoItem::Name(n) => VideoSpec::new(&n),
                VideoItem::Spec(s) => s,
            })
            .collect());
    }
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(VideoSpec::new)
        .collect())
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<usize> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::parse(path, e))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(items.len())
}

pub fn append_jsonl<T: Serialize>(path: &Path, item: &T) -> Result<()> {
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut line = serde_json::to_vec(item).map_err(|e| Error::parse(path, e))?;
    line.push(b'\n');
    file.write_all(&line).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}
