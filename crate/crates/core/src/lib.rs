//! Core of the curio attribution engine.
//!
//! Everything here is pure computation over in-memory values: text
//! normalisation, the catalogue index, similarity scoring, the abstention
//! decision, frame-plan arithmetic, dialogue synthesis and evaluation
//! metrics. File formats, backends and the operator surface live in the
//! `curio` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod abstention;
pub mod catalogue;
pub mod dialogue;
pub mod evaluation;
pub mod frames;
pub mod result;
pub mod similarity;
pub mod textnorm;

pub use abstention::{
    decide, filter_signals, select_regime, AbstentionConfig, ConfigViolation, Decision,
    DecisionRecord, Regime, Signal, SignalBundle, SignalSource, UncertaintyLexicon,
};
pub use catalogue::{CatalogueEntry, CatalogueError, CatalogueIndex, CatalogueRecord, EntryId};
pub use result::{video_key, BackendDescriptor, PipelineResult, Stage};
pub use similarity::{alias_score, FieldScore, MatchField};
pub use textnorm::{normalise, tokenise, AliasSet, NormalisedString, StopwordSet, TokenSet};
