//! Abstention: signal filtering, regime selection, combined scoring and
//! threshold/margin gating with a complete audit record per decision.

mod config;
mod decide;
mod signals;

pub use config::{AbstentionConfig, ConfigViolation, ThresholdParam, WEIGHT_SUM_TOLERANCE};
pub use decide::{decide, select_regime, AcceptRule, Decision, DecisionRecord, Regime, ThresholdCheck};
pub use signals::{filter_signals, filter_signals_with, Signal, SignalBundle, SignalSource, UncertaintyLexicon};
