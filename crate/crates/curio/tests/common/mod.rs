#![allow(dead_code)]

use std::path::{Path, PathBuf};

use curio::backend::FixtureBackend;
use curio::io::{load_catalogue, load_ground_truth, load_videos, VideoSpec};
use curio::pipeline::{run_batch, PromptSet};
use curio_core::evaluation::{evaluate, EvaluationReport, GroundTruth};
use curio_core::{AbstentionConfig, CatalogueIndex, PipelineResult, StopwordSet};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn index(catalogue: Option<&str>) -> CatalogueIndex {
    match catalogue {
        Some(name) => CatalogueIndex::build(&load_catalogue(&fixture(name)).unwrap(), StopwordSet::default()).unwrap(),
        None => CatalogueIndex::empty(StopwordSet::default()),
    }
}

pub fn videos() -> Vec<VideoSpec> {
    load_videos(&fixture("videos.json")).unwrap()
}

pub fn ground_truth() -> GroundTruth {
    load_ground_truth(&fixture("ground_truth.json")).unwrap()
}

pub fn backend(name: &str) -> FixtureBackend {
    FixtureBackend::load(&fixture(&format!("{name}.json"))).unwrap()
}

/// Runs a fixture backend over the 18-video set.
pub fn run(name: &str, index: &CatalogueIndex, cfg: &AbstentionConfig) -> Vec<PipelineResult> {
    run_batch(&videos(), &backend(name), index, cfg, &PromptSet::default())
}

pub fn report(label: &str, results: &[PipelineResult], index: &CatalogueIndex, cfg: &AbstentionConfig) -> EvaluationReport {
    evaluate(label, results, &ground_truth(), index, cfg).unwrap()
}

pub fn result_for<'a>(results: &'a [PipelineResult], key: &str) -> &'a PipelineResult {
    results.iter().find(|r| r.key() == key).unwrap()
}

pub const BACKENDS: [&str; 4] = ["vl2_base", "vl2_ft", "q2vl_zs", "q2vl_ft_batch"];
