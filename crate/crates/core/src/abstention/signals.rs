use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalSource {
    LabelTranscription,
    VisualQa,
}

/// One model guess. `raw_output` is kept even after the guess is dropped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signal {
    pub guess: Option<String>,
    pub source: SignalSource,
    pub raw_output: String,
}

impl Signal {
    pub fn new(text: &str, source: SignalSource) -> Self {
        Signal {
            guess: Some(text.trim().to_string()),
            source,
            raw_output: text.to_string(),
        }
    }

    /// The guess when it carries any non-whitespace text.
    pub fn usable(&self) -> Option<&str> {
        self.guess.as_deref().map(str::trim).filter(|g| !g.is_empty())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalBundle {
    pub title: Option<Signal>,
    pub artist: Option<Signal>,
    pub subject: Option<Signal>,
}

impl SignalBundle {
    pub fn title_guess(&self) -> Option<&str> {
        self.title.as_ref().and_then(Signal::usable)
    }

    pub fn artist_guess(&self) -> Option<&str> {
        self.artist.as_ref().and_then(Signal::usable)
    }

    pub fn subject_guess(&self) -> Option<&str> {
        self.subject.as_ref().and_then(Signal::usable)
    }

    pub fn has_any_guess(&self) -> bool {
        self.title_guess().is_some() || self.artist_guess().is_some() || self.subject_guess().is_some()
    }
}

/// Phrases that mark a model output as uncertain. Matching is a
/// case-insensitive substring test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UncertaintyLexicon(Vec<String>);

impl Default for UncertaintyLexicon {
    fn default() -> Self {
        UncertaintyLexicon::new(["not sure", "unknown", "i don't know", "not visible"])
    }
}

fn fold(s: &str) -> String {
    s.chars()
        .map(|c| if c == '\u{2019}' || c == '\u{2018}' { '\'' } else { c })
        .collect::<String>()
        .to_lowercase()
}

impl UncertaintyLexicon {
    pub fn new<'a>(phrases: impl IntoIterator<Item = &'a str>) -> Self {
        UncertaintyLexicon(phrases.into_iter().map(fold).collect())
    }

    pub fn extend<'a>(&mut self, phrases: impl IntoIterator<Item = &'a str>) {
        self.0.extend(phrases.into_iter().map(fold));
    }

    pub fn phrases(&self) -> &[String] {
        &self.0
    }

    pub fn is_uncertain(&self, text: &str) -> bool {
        let t = fold(text);
        self.0.iter().any(|p| t.contains(p.as_str()))
    }
}

pub fn filter_signals(bundle: SignalBundle, strict: bool) -> SignalBundle {
    filter_signals_with(bundle, strict, &UncertaintyLexicon::default())
}

/// Strict mode clears uncertain guesses but keeps each signal's raw output;
/// relaxed mode passes the bundle through unchanged.
pub fn filter_signals_with(mut bundle: SignalBundle, strict: bool, lexicon: &UncertaintyLexicon) -> SignalBundle {
    if !strict {
        return bundle;
    }
    for signal in [&mut bundle.title, &mut bundle.artist, &mut bundle.subject]
        .into_iter()
        .flatten()
    {
        if signal.guess.as_deref().is_some_and(|g| lexicon.is_uncertain(g)) {
            signal.guess = None;
        }
    }
    bundle
}
