use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::config::AbstentionConfig;
use super::signals::SignalBundle;
use crate::catalogue::{CatalogueIndex, EntryId};
use crate::similarity::{alias_score, FieldScore, Guess, MatchField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    ArtistDriven,
    TitleDriven,
    Fallback,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::ArtistDriven => "artist_driven",
            Regime::TitleDriven => "title_driven",
            Regime::Fallback => "fallback",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accept,
    Abstain,
}

/// Acceptance routes. A decision accepts when every check of one route holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptRule {
    ArtistCombined,
    DirectTitle,
    Combined,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCheck {
    pub rule: AcceptRule,
    pub parameter: String,
    pub threshold: f64,
    pub observed: f64,
    pub satisfied: bool,
}

impl ThresholdCheck {
    fn new(rule: AcceptRule, parameter: &str, threshold: f64, observed: f64) -> Self {
        ThresholdCheck {
            rule,
            parameter: parameter.into(),
            threshold,
            observed,
            satisfied: observed >= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    /// Regime whose rule produced the outcome.
    pub regime: Regime,
    pub decision: Decision,
    pub matched_entry_id: Option<EntryId>,
    /// Top-ranked entry of the deciding regime, whether or not accepted.
    pub top_candidate: Option<EntryId>,
    pub runner_up: Option<EntryId>,
    pub combined_score: f64,
    pub title_score: f64,
    pub best_artist_score: f64,
    pub field_scores: BTreeMap<MatchField, FieldScore>,
    pub margin: f64,
    pub thresholds_applied: Vec<ThresholdCheck>,
    pub reasoning: String,
}

impl DecisionRecord {
    pub fn is_accept(&self) -> bool {
        self.decision == Decision::Accept
    }

    /// Re-derives the decision from the recorded checks alone.
    pub fn replay_checks(&self) -> Decision {
        if winning_rule(&self.thresholds_applied).is_some() {
            Decision::Accept
        } else {
            Decision::Abstain
        }
    }

    /// Every check's flag agrees with its numbers and the recorded decision
    /// follows from the checks.
    pub fn is_audit_consistent(&self) -> bool {
        self.thresholds_applied
            .iter()
            .all(|c| c.satisfied == (c.observed >= c.threshold))
            && self.replay_checks() == self.decision
            && (self.decision == Decision::Accept) == self.matched_entry_id.is_some()
    }

    /// An abstain record with no scores, e.g. when signal collection failed.
    pub fn abstain(regime: Regime, reasoning: &str) -> Self {
        DecisionRecord {
            regime,
            decision: Decision::Abstain,
            matched_entry_id: None,
            top_candidate: None,
            runner_up: None,
            combined_score: 0.0,
            title_score: 0.0,
            best_artist_score: 0.0,
            field_scores: BTreeMap::new(),
            margin: 0.0,
            thresholds_applied: Vec::new(),
            reasoning: reasoning.into(),
        }
    }
}

fn winning_rule(checks: &[ThresholdCheck]) -> Option<AcceptRule> {
    [
        AcceptRule::ArtistCombined,
        AcceptRule::DirectTitle,
        AcceptRule::Combined,
        AcceptRule::Fallback,
    ]
    .into_iter()
    .find(|rule| {
        let mut it = checks.iter().filter(|c| c.rule == *rule).peekable();
        it.peek().is_some() && it.all(|c| c.satisfied)
    })
}

pub fn select_regime(bundle: &SignalBundle, best_artist_score: f64, cfg: &AbstentionConfig) -> Regime {
    if bundle.artist_guess().is_some() && best_artist_score >= cfg.tau_artist {
        Regime::ArtistDriven
    } else if bundle.title_guess().is_some() {
        Regime::TitleDriven
    } else {
        Regime::Fallback
    }
}

/// Scores that feed one regime's acceptance rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RuleInputs {
    pub best_artist_score: f64,
    pub combined: f64,
    pub title: f64,
    pub margin: f64,
}

pub(crate) fn rule_checks(regime: Regime, s: RuleInputs, cfg: &AbstentionConfig) -> Vec<ThresholdCheck> {
    use AcceptRule::*;
    match regime {
        // No margin requirement in this regime; the margin is still recorded.
        Regime::ArtistDriven => alloc::vec![
            ThresholdCheck::new(ArtistCombined, "tau_artist", cfg.tau_artist, s.best_artist_score),
            ThresholdCheck::new(ArtistCombined, "tau_artist_accept", cfg.tau_artist_accept, s.combined),
        ],
        Regime::TitleDriven => alloc::vec![
            ThresholdCheck::new(DirectTitle, "tau_t", cfg.tau_t, s.title),
            ThresholdCheck::new(DirectTitle, "mu_t", cfg.mu_t, s.margin),
            ThresholdCheck::new(Combined, "tau_c", cfg.tau_c, s.combined),
            ThresholdCheck::new(Combined, "mu_c", cfg.mu_c, s.margin),
        ],
        Regime::Fallback => alloc::vec![
            ThresholdCheck::new(Fallback, "tau_f", cfg.tau_f, s.combined),
            ThresholdCheck::new(Fallback, "mu_f", cfg.mu_f, s.margin),
        ],
    }
}

type EntryScores = [Option<FieldScore>; 3];

fn slot(field: MatchField) -> usize {
    match field {
        MatchField::Title => 0,
        MatchField::Artist => 1,
        MatchField::Subject => 2,
    }
}

fn regime_weights(regime: Regime, cfg: &AbstentionConfig) -> Vec<(MatchField, f64)> {
    match regime {
        Regime::ArtistDriven => {
            let [a, t, s] = cfg.artist_regime_weights;
            alloc::vec![(MatchField::Artist, a), (MatchField::Title, t), (MatchField::Subject, s)]
        }
        Regime::TitleDriven => {
            let [t, s] = cfg.title_regime_weights;
            alloc::vec![(MatchField::Title, t), (MatchField::Subject, s)]
        }
        Regime::Fallback => {
            let [a, s] = cfg.fallback_weights;
            alloc::vec![(MatchField::Artist, a), (MatchField::Subject, s)]
        }
    }
}

/// Weighted sum over fields that have a guess; weights of absent fields are
/// redistributed so the present ones sum to one.
fn combine(scores: &EntryScores, weights: &[(MatchField, f64)]) -> f64 {
    let present: Vec<(f64, f64)> = weights
        .iter()
        .filter_map(|(f, w)| scores[slot(*f)].as_ref().map(|s| (*w, s.blended)))
        .collect();
    let raw: f64 = present.iter().map(|(w, s)| w * s).sum();
    if present.len() == weights.len() {
        return raw;
    }
    let total: f64 = present.iter().map(|(w, _)| w).sum();
    if total > 0.0 {
        raw / total
    } else {
        0.0
    }
}

struct Ranking {
    /// (entry position, combined score), best first; ties keep catalogue order.
    order: Vec<(usize, f64)>,
    runner_up: Option<usize>,
    margin: f64,
}

fn rank(index: &CatalogueIndex, scores: &[EntryScores], weights: &[(MatchField, f64)]) -> Ranking {
    let mut order: Vec<(usize, f64)> = scores
        .iter()
        .enumerate()
        .map(|(i, s)| (i, combine(s, weights)))
        .collect();
    order.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then(a.0.cmp(&b.0))
            .then_with(|| index.entries[a.0].id.cmp(&index.entries[b.0].id))
    });

    let ids: Vec<(EntryId, f64)> = order
        .iter()
        .map(|(i, s)| (index.entries[*i].id.clone(), *s))
        .collect();
    let distinct = index.distinct_candidates(&ids);
    let (runner_up, margin) = match distinct.as_slice() {
        [] => (None, 0.0),
        // A lone distinct candidate is measured against zero.
        [(_, top)] => (None, *top),
        [(_, top), (id, second), ..] => (index.position(id), top - second),
    };
    Ranking {
        order,
        runner_up,
        margin,
    }
}

struct Outcome {
    regime: Regime,
    ranking: Ranking,
    checks: Vec<ThresholdCheck>,
}

fn run_regime(
    regime: Regime,
    index: &CatalogueIndex,
    scores: &[EntryScores],
    best_artist_score: f64,
    cfg: &AbstentionConfig,
) -> Outcome {
    let ranking = rank(index, scores, &regime_weights(regime, cfg));
    let (top, combined) = ranking.order[0];
    let title = scores[top][slot(MatchField::Title)]
        .as_ref()
        .map_or(0.0, |s| s.blended);
    let inputs = RuleInputs {
        best_artist_score,
        combined,
        title,
        margin: ranking.margin,
    };
    Outcome {
        regime,
        checks: rule_checks(regime, inputs, cfg),
        ranking,
    }
}

fn describe(checks: &[ThresholdCheck]) -> String {
    let mut s = String::new();
    for (i, c) in checks.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let op = if c.satisfied { ">=" } else { "<" };
        s.push_str(&format!("{} {:.3} {} {:.3}", c.parameter, c.observed, op, c.threshold));
    }
    s
}

/// Decides accept/abstain for a filtered bundle against the catalogue.
///
/// The selected regime's rule is applied to a single ranking by combined
/// score. When the artist-driven gate fails, the title-driven (or fallback)
/// rule is consulted as well, so raising `tau_artist` can only remove
/// acceptance routes.
pub fn decide(bundle: &SignalBundle, index: &CatalogueIndex, cfg: &AbstentionConfig) -> DecisionRecord {
    let guesses: [Option<Guess>; 3] = [
        bundle.title_guess().map(|g| Guess::new(g, &index.stopwords)),
        bundle.artist_guess().map(|g| Guess::new(g, &index.stopwords)),
        bundle.subject_guess().map(|g| Guess::new(g, &index.stopwords)),
    ];

    if guesses.iter().all(Option::is_none) {
        return DecisionRecord::abstain(select_regime(bundle, 0.0, cfg), "no signals");
    }
    if index.is_empty() {
        return DecisionRecord::abstain(select_regime(bundle, 0.0, cfg), "empty catalogue");
    }

    let scores: Vec<EntryScores> = index
        .entries
        .iter()
        .map(|e| {
            let mut out: EntryScores = [None, None, None];
            for field in MatchField::ALL {
                if let Some(g) = &guesses[slot(field)] {
                    out[slot(field)] = Some(alias_score(g, e, field, cfg.alpha, &index.idf));
                }
            }
            out
        })
        .collect();

    let best_artist_score = scores
        .iter()
        .filter_map(|s| s[slot(MatchField::Artist)].as_ref().map(|f| f.blended))
        .fold(0.0, f64::max);

    let selected = select_regime(bundle, best_artist_score, cfg);
    let mut thresholds_applied = Vec::new();
    let mut reasoning = String::new();

    let mut outcome = run_regime(selected, index, &scores, best_artist_score, cfg);
    if selected == Regime::ArtistDriven && winning_rule(&outcome.checks).is_none() {
        let secondary = if bundle.title_guess().is_some() {
            Regime::TitleDriven
        } else {
            Regime::Fallback
        };
        reasoning.push_str(&format!(
            "artist_driven gate failed ({}); falling through to {secondary}. ",
            describe(&outcome.checks)
        ));
        thresholds_applied.append(&mut outcome.checks);
        outcome = run_regime(secondary, index, &scores, best_artist_score, cfg);
    }
    let Outcome {
        regime,
        ranking,
        mut checks,
    } = outcome;
    let rule = winning_rule(&checks);
    let consulted = describe(&checks);
    thresholds_applied.append(&mut checks);

    let (top, combined_score) = ranking.order[0];
    let top_entry = &index.entries[top];
    let field_scores: BTreeMap<MatchField, FieldScore> = MatchField::ALL
        .into_iter()
        .filter_map(|f| scores[top][slot(f)].clone().map(|s| (f, s)))
        .collect();
    let title_score = field_scores.get(&MatchField::Title).map_or(0.0, |s| s.blended);

    let decision = match rule {
        Some(rule) => {
            reasoning.push_str(&format!(
                "{regime}: accepted `{}` via {rule:?} ({consulted}); margin {:.3}",
                top_entry.title_raw, ranking.margin
            ));
            Decision::Accept
        }
        None => {
            reasoning.push_str(&format!(
                "{regime}: abstain, best candidate `{}` failed every rule ({consulted})",
                top_entry.title_raw
            ));
            Decision::Abstain
        }
    };

    DecisionRecord {
        regime,
        decision,
        matched_entry_id: (decision == Decision::Accept).then(|| top_entry.id.clone()),
        top_candidate: Some(top_entry.id.clone()),
        runner_up: ranking.runner_up.map(|i| index.entries[i].id.clone()),
        combined_score,
        title_score,
        best_artist_score,
        field_scores,
        margin: ranking.margin,
        thresholds_applied,
        reasoning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstention::{filter_signals, Signal, SignalSource};
    use crate::catalogue::CatalogueRecord;
    use crate::textnorm::StopwordSet;

    fn inputs(best_artist_score: f64, combined: f64, title: f64, margin: f64) -> RuleInputs {
        RuleInputs {
            best_artist_score,
            combined,
            title,
            margin,
        }
    }

    fn outcome(regime: Regime, s: RuleInputs) -> Option<AcceptRule> {
        winning_rule(&rule_checks(regime, s, &AbstentionConfig::default()))
    }

    #[test]
    fn title_rule_direct() {
        assert_eq!(
            outcome(Regime::TitleDriven, inputs(0.0, 0.30, 0.60, 0.10)),
            Some(AcceptRule::DirectTitle)
        );
    }

    #[test]
    fn title_rule_combined() {
        assert_eq!(
            outcome(Regime::TitleDriven, inputs(0.0, 0.45, 0.50, 0.05)),
            Some(AcceptRule::Combined)
        );
        // Margin too small for both routes.
        assert_eq!(outcome(Regime::TitleDriven, inputs(0.0, 0.45, 0.60, 0.03)), None);
    }

    #[test]
    fn artist_rule_has_no_margin() {
        assert_eq!(
            outcome(Regime::ArtistDriven, inputs(1.0, 0.460, 0.0, 0.0)),
            Some(AcceptRule::ArtistCombined)
        );
        assert_eq!(outcome(Regime::ArtistDriven, inputs(1.0, 0.37, 0.0, 0.9)), None);
    }

    #[test]
    fn fallback_below_threshold() {
        assert_eq!(outcome(Regime::Fallback, inputs(0.0, 0.41, 0.0, 0.10)), None);
        assert_eq!(
            outcome(Regime::Fallback, inputs(0.0, 0.42, 0.0, 0.04)),
            Some(AcceptRule::Fallback)
        );
    }

    fn bundle(title: Option<&str>, artist: Option<&str>, subject: Option<&str>) -> SignalBundle {
        let s = |t: &str| Signal::new(t, SignalSource::VisualQa);
        SignalBundle {
            title: title.map(s),
            artist: artist.map(s),
            subject: subject.map(s),
        }
    }

    #[test]
    fn regime_selection() {
        let cfg = AbstentionConfig::default();
        let b = bundle(Some("x"), Some("y"), Some("z"));
        assert_eq!(select_regime(&b, 0.50, &cfg), Regime::ArtistDriven);
        assert_eq!(select_regime(&b, 0.30, &cfg), Regime::TitleDriven);
        let b = bundle(None, Some("y"), Some("z"));
        assert_eq!(select_regime(&b, 0.30, &cfg), Regime::Fallback);
    }

    fn catalogue() -> CatalogueIndex {
        let recs = [
            CatalogueRecord::new("entombment", "The Entombment", "Michelangelo"),
            CatalogueRecord::new("haywain", "The Hay Wain", "John Constable"),
            CatalogueRecord::new("lambton", "Charles William Lambton (\"The Red Boy\")", "Sir Thomas Lawrence"),
            CatalogueRecord::new("shrimp", "The Shrimp Girl", "William Hogarth"),
        ];
        CatalogueIndex::build(&recs, StopwordSet::default()).unwrap()
    }

    #[test]
    fn artist_exact_with_zero_title_scores_point_four_six() {
        let i = catalogue();
        let b = bundle(Some("Pietà"), Some("Michelangelo"), Some("figures carrying a body"));
        let r = decide(&b, &i, &AbstentionConfig::default());
        assert_eq!(r.regime, Regime::ArtistDriven);
        assert_eq!(r.decision, Decision::Accept);
        assert_eq!(r.matched_entry_id, Some("entombment".into()));
        assert_eq!(r.combined_score, 0.46);
        assert!(r.is_audit_consistent());

        let cfg = AbstentionConfig {
            tau_artist_accept: 0.50,
            ..Default::default()
        };
        let r = decide(&b, &i, &cfg);
        assert_eq!(r.decision, Decision::Abstain);
        assert_eq!(r.matched_entry_id, None);
        assert!(r.is_audit_consistent());
        assert!(r.thresholds_applied.iter().any(|c| c.parameter == "tau_artist_accept" && !c.satisfied));
    }

    #[test]
    fn verbatim_alias_accepts_via_title() {
        let i = catalogue();
        let r = decide(&bundle(Some("The Red Boy"), None, None), &i, &AbstentionConfig::default());
        assert_eq!(r.regime, Regime::TitleDriven);
        assert_eq!(r.matched_entry_id, Some("lambton".into()));
        assert_eq!(r.title_score, 1.0);
        assert!(r.runner_up.is_some());
    }

    #[test]
    fn no_signals_and_empty_catalogue() {
        let i = catalogue();
        let b = filter_signals(bundle(Some("I don't know"), Some("unknown"), Some("not sure")), true);
        let r = decide(&b, &i, &AbstentionConfig::default());
        assert_eq!(r.decision, Decision::Abstain);
        assert_eq!(r.reasoning, "no signals");

        let empty = CatalogueIndex::empty(StopwordSet::default());
        let r = decide(&bundle(Some("The Hay Wain"), None, None), &empty, &AbstentionConfig::default());
        assert_eq!(r.reasoning, "empty catalogue");
        assert!(r.is_audit_consistent());
    }

    #[test]
    fn renormalises_missing_fields() {
        let i = catalogue();
        // Title-driven with no subject: combined equals the title score.
        let r = decide(&bundle(Some("Hay Wain"), None, None), &i, &AbstentionConfig::default());
        assert_eq!(r.combined_score, r.title_score);
    }

    #[test]
    fn duplicate_top_keeps_margin() {
        let mut recs = alloc::vec![
            CatalogueRecord::new("a", "The Hay Wain", "John Constable"),
            CatalogueRecord::new("b", "Whistlejacket", "George Stubbs"),
        ];
        let b = bundle(Some("Hay Wain"), None, None);
        let cfg = AbstentionConfig::default();
        let r1 = decide(&b, &CatalogueIndex::build(&recs, StopwordSet::default()).unwrap(), &cfg);
        recs.push(CatalogueRecord::new("c", "The Hay Wain", "John Constable"));
        let r2 = decide(&b, &CatalogueIndex::build(&recs, StopwordSet::default()).unwrap(), &cfg);
        assert_eq!(r1.margin, r2.margin);
        assert_eq!(r1.decision, r2.decision);
        assert_eq!(r2.runner_up, Some("b".into()));
    }

    #[test]
    fn ties_break_by_catalogue_position() {
        let recs = [
            CatalogueRecord::new("z", "Shrimp Girl", "William Hogarth"),
            CatalogueRecord::new("a", "Graham Children", "William Hogarth"),
        ];
        let i = CatalogueIndex::build(&recs, StopwordSet::default()).unwrap();
        let r = decide(&bundle(None, Some("William Hogarth"), None), &i, &AbstentionConfig::default());
        assert_eq!(r.top_candidate, Some("z".into()));
        assert_eq!(r.margin, 0.0);
    }
}
