//! Frame-sampling arithmetic: which frames to extract and at what size.
//! Decoding itself is the backend's job.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub const DEFAULT_FRAME_COUNT: u32 = 8;
pub const DEFAULT_LONG_SIDE: u32 = 448;
pub const DEFAULT_PIXEL_BUDGET: u64 = 151_200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSamplingPlan {
    pub frame_count: u32,
    pub frame_indices: Vec<u64>,
    pub fps: f64,
    pub target_long_side: u32,
    pub per_frame_pixel_budget: u64,
    pub source_dimensions: (u32, u32),
    pub scaled_dimensions: (u32, u32),
}

impl FrameSamplingPlan {
    /// Timestamp of each sampled frame in seconds.
    pub fn timestamps(&self) -> impl Iterator<Item = f64> + '_ {
        let fps = self.fps;
        self.frame_indices.iter().map(move |&i| i as f64 / fps)
    }

    pub fn scaled_area(&self) -> u64 {
        self.scaled_dimensions.0 as u64 * self.scaled_dimensions.1 as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FramePlanError {
    TooFewFrames { total_frames: u64, frame_count: u32 },
    ZeroFrameCount,
    ZeroDimension,
    InvalidFps(f64),
    ZeroBudget,
}

impl fmt::Display for FramePlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FramePlanError::TooFewFrames { total_frames, frame_count } => write!(
                f,
                "video has {total_frames} frames but {frame_count} were requested; lower the frame count to at most {total_frames}"
            ),
            FramePlanError::ZeroFrameCount => f.write_str("frame count must be at least 1"),
            FramePlanError::ZeroDimension => f.write_str("source dimensions and long side must be positive"),
            FramePlanError::InvalidFps(fps) => write!(f, "frame rate must be positive, got {fps}"),
            FramePlanError::ZeroBudget => f.write_str("pixel budget must be positive"),
        }
    }
}

impl core::error::Error for FramePlanError {}

/// `round(k * (total - 1) / (count - 1))`, half rounded up, in exact integers.
pub fn frame_indices(total_frames: u64, frame_count: u32) -> Vec<u64> {
    if frame_count <= 1 {
        return alloc::vec![0; frame_count as usize];
    }
    let span = total_frames.saturating_sub(1) as u128;
    let steps = (frame_count - 1) as u128;
    (0..frame_count as u128)
        .map(|k| ((2 * k * span + steps) / (2 * steps)) as u64)
        .collect()
}

fn scale_side(side: u64, new_long: u64, long: u64) -> u64 {
    ((2 * side * new_long + long) / (2 * long)).max(1)
}

/// Scales `(w, h)` so the long side is at most `long_side` (never upscaling)
/// and the area fits `budget`, preserving aspect to within rounding.
pub fn scale_dimensions(source: (u32, u32), long_side: u32, budget: u64) -> (u32, u32) {
    let (w, h) = (source.0 as u64, source.1 as u64);
    let (long, short) = if w >= h { (w, h) } else { (h, w) };
    let mut new_long = long.min(long_side as u64);
    // Start near the area-limited size, then step down until it fits.
    let area_limited = libm::sqrt(budget as f64 * long as f64 / short as f64) as u64 + 1;
    new_long = new_long.min(area_limited).max(1);
    let mut new_short = scale_side(short, new_long, long);
    while new_long > 1 && new_long * new_short > budget {
        new_long -= 1;
        new_short = scale_side(short, new_long, long);
    }
    if w >= h {
        (new_long as u32, new_short as u32)
    } else {
        (new_short as u32, new_long as u32)
    }
}

pub fn plan_frames(
    total_frames: u64,
    fps: f64,
    frame_count: u32,
    long_side: u32,
    source_dims: (u32, u32),
    budget: u64,
) -> Result<FrameSamplingPlan, FramePlanError> {
    if frame_count == 0 {
        return Err(FramePlanError::ZeroFrameCount);
    }
    if total_frames < frame_count as u64 {
        return Err(FramePlanError::TooFewFrames {
            total_frames,
            frame_count,
        });
    }
    if source_dims.0 == 0 || source_dims.1 == 0 || long_side == 0 {
        return Err(FramePlanError::ZeroDimension);
    }
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(FramePlanError::InvalidFps(fps));
    }
    if budget == 0 {
        return Err(FramePlanError::ZeroBudget);
    }
    Ok(FrameSamplingPlan {
        frame_count,
        frame_indices: frame_indices(total_frames, frame_count),
        fps,
        target_long_side: long_side,
        per_frame_pixel_budget: budget,
        source_dimensions: source_dims,
        scaled_dimensions: scale_dimensions(source_dims, long_side, budget),
    })
}
