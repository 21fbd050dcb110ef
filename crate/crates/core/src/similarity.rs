//! Field-level similarity: IDF-weighted token Jaccard, trigram Jaccard and
//! their blend, maximised over title aliases.

use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::catalogue::{CatalogueEntry, IdfTable};
use crate::textnorm::{features, NormalisedString, StopwordSet, TokenSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchField {
    Title,
    Artist,
    Subject,
}

impl MatchField {
    pub const ALL: [MatchField; 3] = [MatchField::Title, MatchField::Artist, MatchField::Subject];

    pub fn name(self) -> &'static str {
        match self {
            MatchField::Title => "title",
            MatchField::Artist => "artist",
            MatchField::Subject => "subject",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldScore {
    pub token_jaccard: f64,
    pub trigram_jaccard: f64,
    pub blended: f64,
    pub best_alias: String,
}

/// A model guess prepared once for scoring against many entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Guess {
    pub text: NormalisedString,
    pub tokens: TokenSet,
}

impl Guess {
    pub fn new(raw: &str, stopwords: &StopwordSet) -> Self {
        let (text, tokens) = features(raw, stopwords);
        Guess { text, tokens }
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

pub fn idf_jaccard(a: &TokenSet, b: &TokenSet, idf: &IdfTable) -> f64 {
    let mut shared = 0.0;
    let mut total = 0.0;
    for t in a.tokens.union(&b.tokens) {
        let w = idf.weight(t);
        total += w;
        if a.tokens.contains(t) && b.tokens.contains(t) {
            shared += w;
        }
    }
    if total > 0.0 {
        shared / total
    } else {
        0.0
    }
}

pub fn trigram_jaccard(a: &TokenSet, b: &TokenSet) -> f64 {
    let inter = a.trigrams.intersection(&b.trigrams).count();
    let union = a.trigrams.len() + b.trigrams.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[inline]
pub fn blend(alpha: f64, token_jaccard: f64, trigram_jaccard: f64) -> f64 {
    alpha * token_jaccard + (1.0 - alpha) * trigram_jaccard
}

fn score_pair(guess: &Guess, target: &TokenSet, alias: &str, alpha: f64, idf: &IdfTable) -> FieldScore {
    let token_jaccard = idf_jaccard(&guess.tokens, target, idf);
    let trigram_jaccard = trigram_jaccard(&guess.tokens, target);
    FieldScore {
        token_jaccard,
        trigram_jaccard,
        blended: blend(alpha, token_jaccard, trigram_jaccard),
        best_alias: String::from(alias),
    }
}

/// Scores one field of `entry`. Titles take the alias with the highest
/// blended score (first alias on ties).
pub fn alias_score(
    guess: &Guess,
    entry: &CatalogueEntry,
    field: MatchField,
    alpha: f64,
    idf: &IdfTable,
) -> FieldScore {
    if guess.is_empty() {
        return FieldScore::default();
    }
    match field {
        MatchField::Title => {
            let mut best = FieldScore::default();
            for (alias, tokens) in entry
                .title_aliases
                .aliases
                .iter()
                .zip(&entry.title_tokens_per_alias)
            {
                let s = score_pair(guess, tokens, &alias.normalised, alpha, idf);
                if best.best_alias.is_empty() || s.blended > best.blended {
                    best = s;
                }
            }
            best
        }
        MatchField::Artist => score_pair(
            guess,
            &entry.artist_tokens,
            &entry.artist_norm.normalised,
            alpha,
            idf,
        ),
        MatchField::Subject => {
            let label = entry.subject_raw.as_deref().unwrap_or("");
            let mut s = score_pair(guess, &entry.subject_tokens, "", alpha, idf);
            s.best_alias = crate::textnorm::normalise(label).normalised;
            s
        }
    }
}
