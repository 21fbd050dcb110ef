//! Text normalisation, tokenisation and alias harvesting.
//!
//! Normalisation is compatibility decomposition, combining-mark removal,
//! lowercasing, punctuation collapse and a guarded Roman-numeral mapping.
//! The output alphabet is lowercase letters, digits and single spaces.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Pad character placed once on each side before trigram windowing.
/// It cannot occur in normalised text.
pub const TRIGRAM_PAD: char = '#';

/// Stopwords shipped with the engine.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "the", "a", "an", "of", "and", "with", "in", "on", "at", "by", "portrait", "study",
];

const ROMAN: [&str; 20] = [
    "i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x", "xi", "xii", "xiii", "xiv", "xv",
    "xvi", "xvii", "xviii", "xix", "xx",
];

const ARABIC: [&str; 20] = [
    "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12", "13", "14", "15", "16", "17",
    "18", "19", "20",
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NormalisedString {
    pub original: String,
    pub normalised: String,
}

impl NormalisedString {
    pub fn is_empty(&self) -> bool {
        self.normalised.is_empty()
    }

    pub fn as_str(&self) -> &str {
        &self.normalised
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSet {
    pub tokens: BTreeSet<String>,
    pub trigrams: BTreeSet<String>,
}

impl TokenSet {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty() && self.trigrams.is_empty()
    }
}

/// Title variants of one catalogue record. `aliases[0]` is always the primary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasSet {
    pub primary: NormalisedString,
    pub aliases: Vec<NormalisedString>,
}

impl AliasSet {
    pub fn contains(&self, normalised: &str) -> bool {
        self.aliases.iter().any(|a| a.normalised == normalised)
    }
}

/// Domain stopwords, stored in normalised form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopwordSet(BTreeSet<String>);

impl Default for StopwordSet {
    fn default() -> Self {
        Self::new(DEFAULT_STOPWORDS.iter().copied())
    }
}

impl StopwordSet {
    pub fn new<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        StopwordSet(
            words
                .into_iter()
                .map(|w| normalise(w).normalised)
                .filter(|w| !w.is_empty())
                .collect(),
        )
    }

    pub fn empty() -> Self {
        StopwordSet(BTreeSet::new())
    }

    /// One token per line; blank lines are ignored.
    pub fn from_lines(text: &str) -> Self {
        Self::new(text.lines().map(str::trim).filter(|l| !l.is_empty()))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn push_folded(c: char, out: &mut String) {
    if is_combining_mark(c) {
        return;
    }
    for lower in c.to_lowercase() {
        // Lowercasing can reintroduce decomposable characters (e.g. U+0130).
        for d in core::iter::once(lower).nfkd() {
            if is_combining_mark(d) {
                continue;
            }
            // Uppercase symbols without a lowercase form (e.g. U+1F150) count as separators.
            if d.is_alphanumeric() && !d.is_uppercase() {
                out.push(d);
            } else {
                out.push(' ');
            }
        }
    }
}

fn map_roman(token: &str) -> Option<&'static str> {
    ROMAN.iter().position(|r| *r == token).map(|i| ARABIC[i])
}

pub fn normalise(raw: &str) -> NormalisedString {
    let mut folded = String::with_capacity(raw.len());
    for c in raw.nfkd() {
        push_folded(c, &mut folded);
    }

    let mut normalised = String::with_capacity(folded.len());
    for (i, token) in folded.split_whitespace().enumerate() {
        if i > 0 {
            normalised.push(' ');
        }
        // Only numerals that follow a word: keeps a leading pronoun "I" intact.
        match (i > 0).then(|| map_roman(token)).flatten() {
            Some(digits) => normalised.push_str(digits),
            None => normalised.push_str(token),
        }
    }

    NormalisedString {
        original: raw.to_string(),
        normalised,
    }
}

/// Character 3-grams of `normalised` padded with one [`TRIGRAM_PAD`] per side.
pub fn trigrams(normalised: &str) -> BTreeSet<String> {
    if normalised.is_empty() {
        return BTreeSet::new();
    }
    let padded: Vec<char> = core::iter::once(TRIGRAM_PAD)
        .chain(normalised.chars())
        .chain(core::iter::once(TRIGRAM_PAD))
        .collect();
    padded.windows(3).map(|w| w.iter().collect()).collect()
}

pub fn tokenise(s: &NormalisedString, stopwords: &StopwordSet) -> TokenSet {
    let tokens = s
        .normalised
        .split(' ')
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .map(ToString::to_string)
        .collect();
    TokenSet {
        tokens,
        trigrams: trigrams(&s.normalised),
    }
}

/// Normalise and tokenise in one step.
pub fn features(raw: &str, stopwords: &StopwordSet) -> (NormalisedString, TokenSet) {
    let n = normalise(raw);
    let t = tokenise(&n, stopwords);
    (n, t)
}

fn closing_quote(open: char) -> Option<char> {
    match open {
        '"' => Some('"'),
        '\u{201C}' => Some('\u{201D}'),
        '\u{00AB}' => Some('\u{00BB}'),
        _ => None,
    }
}

/// Splits `segment` into the text outside any bracketed/quoted span and the
/// spans themselves. Unbalanced markers stay in the outside text.
fn split_variants(segment: &str) -> (String, Vec<String>) {
    let chars: Vec<char> = segment.chars().collect();
    let mut outside = String::new();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '(' {
            let mut depth = 0usize;
            let mut end = None;
            for (j, &d) in chars.iter().enumerate().skip(i) {
                if d == '(' {
                    depth += 1;
                } else if d == ')' {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(j);
                        break;
                    }
                }
            }
            if let Some(j) = end {
                spans.push(chars[i + 1..j].iter().collect());
                outside.push(' ');
                i = j + 1;
                continue;
            }
        } else if let Some(close) = closing_quote(c) {
            if let Some(off) = chars[i + 1..].iter().position(|&d| d == close) {
                let j = i + 1 + off;
                spans.push(chars[i + 1..j].iter().collect());
                outside.push(' ');
                i = j + 1;
                continue;
            }
        }
        outside.push(c);
        i += 1;
    }
    (outside, spans)
}

fn collapse_ws(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for w in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(w);
    }
    out
}

/// Harvests title variants: the primary is the segment before the first `;`
/// with bracketed and quoted spans removed; every such span anywhere in the
/// raw title becomes an additional alias.
pub fn extract_aliases(title_raw: &str) -> AliasSet {
    let primary_segment = title_raw.split(';').next().unwrap_or("");
    let (outside, _) = split_variants(primary_segment);
    let mut primary = normalise(&collapse_ws(&outside));
    if primary.is_empty() {
        primary = normalise(&collapse_ws(primary_segment));
    }

    let (_, spans) = split_variants(title_raw);
    let mut aliases = Vec::with_capacity(spans.len() + 1);
    aliases.push(primary.clone());
    for span in spans {
        let alias = normalise(&collapse_ws(&span));
        if !alias.is_empty() && !aliases.iter().any(|a| a.normalised == alias.normalised) {
            aliases.push(alias);
        }
    }
    AliasSet { primary, aliases }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn lowercases() {
        assert_eq!(normalise("The Hay Wain").normalised, "the hay wain");
    }

    #[test]
    fn strips_diacritics() {
        assert_eq!(
            normalise("Señora Sabasa García").normalised,
            "senora sabasa garcia"
        );
    }

    #[test]
    fn maps_roman_numerals_after_a_word() {
        assert_eq!(normalise("Charles II").normalised, "charles 2");
        assert_eq!(normalise("Louis XIV, King").normalised, "louis 14 king");
        assert_eq!(normalise("I don't know").normalised, "i don t know");
        // XXI is outside the mapped range.
        assert_eq!(normalise("Room XXI").normalised, "room xxi");
    }

    #[test]
    fn collapses_punctuation_and_ligatures() {
        assert_eq!(normalise("  Œuvre — “ﬁnal”!! ").normalised, "œuvre final");
        assert_eq!(normalise("").normalised, "");
        assert_eq!(normalise("İstanbul").normalised, "istanbul");
    }

    #[test]
    fn tokenise_drops_stopwords() {
        let sw = StopwordSet::new(["the"]);
        let t = tokenise(&normalise("the hay wain"), &sw);
        assert_eq!(t.tokens, set(&["hay", "wain"]));
    }

    #[test]
    fn tokenise_empty() {
        let t = tokenise(&normalise(""), &StopwordSet::default());
        assert!(t.tokens.is_empty());
        assert!(t.trigrams.is_empty());
    }

    #[test]
    fn trigram_windows_are_single_padded() {
        let t = tokenise(&normalise("hay"), &StopwordSet::empty());
        assert_eq!(t.trigrams, set(&["#ha", "hay", "ay#"]));
        assert_eq!(trigrams("a"), set(&["#a#"]));
    }

    #[test]
    fn stopwords_from_lines() {
        let sw = StopwordSet::from_lines("The\n\n  Study \nof\n");
        assert_eq!(sw.iter().collect::<Vec<_>>(), vec!["of", "study", "the"]);
    }

    #[test]
    fn aliases_from_parenthetical() {
        let a = extract_aliases("Master John (The Red Boy)");
        assert_eq!(a.primary.normalised, "master john");
        assert_eq!(a.primary.original, "Master John");
        let names: Vec<_> = a.aliases.iter().map(|a| a.normalised.as_str()).collect();
        assert_eq!(names, vec!["master john", "the red boy"]);
    }

    #[test]
    fn aliases_without_variants() {
        let a = extract_aliases("The Entombment");
        assert_eq!(a.primary.normalised, "the entombment");
        assert_eq!(a.aliases.len(), 1);
    }

    #[test]
    fn aliases_semicolon_and_parenthetical() {
        // Primary "A"; "B" is neither primary nor variant; "(C)" is a variant.
        let a = extract_aliases("A; B (C)");
        let names: Vec<_> = a.aliases.iter().map(|a| a.normalised.as_str()).collect();
        assert_eq!(a.primary.normalised, "a");
        assert_eq!(names, vec!["a", "c"]);
    }

    #[test]
    fn aliases_from_quotes_and_unbalanced_parens() {
        let a = extract_aliases("Portrait of Charles William Lambton (\u{201C}The Red Boy\u{201D})");
        assert!(a.contains("the red boy"));
        assert_eq!(a.primary.normalised, "portrait of charles william lambton");

        let a = extract_aliases("Whistlejacket \"the horse\"");
        assert!(a.contains("the horse"));
        assert_eq!(a.primary.normalised, "whistlejacket");

        let a = extract_aliases("Odd (title");
        assert_eq!(a.primary.normalised, "odd title");
        assert_eq!(a.aliases.len(), 1);
    }

    #[test]
    fn duplicate_variants_collapse() {
        let a = extract_aliases("Red Boy (red boy) \"RED BOY\"");
        assert_eq!(a.aliases.len(), 1);
    }

    proptest! {
        #[test]
        fn normalise_is_idempotent(s in "\\PC{0,40}") {
            let once = normalise(&s);
            let twice = normalise(&once.normalised);
            prop_assert_eq!(&once.normalised, &twice.normalised);
        }

        #[test]
        fn normalised_alphabet(s in "\\PC{0,40}") {
            let n = normalise(&s).normalised;
            prop_assert!(!n.starts_with(' ') && !n.ends_with(' ') && !n.contains("  "));
            for c in n.chars() {
                prop_assert!(c == ' ' || c.is_alphanumeric());
                prop_assert!(!c.is_uppercase());
            }
        }

        #[test]
        fn aliases_are_fixed_points(s in "[A-Za-zÀ-ÿ ;()\"“”IVX]{1,40}") {
            let set = extract_aliases(&s);
            prop_assert_eq!(&set.aliases[0], &set.primary);
            for a in &set.aliases {
                prop_assert_eq!(&normalise(&a.normalised).normalised, &a.normalised);
            }
            for (i, a) in set.aliases.iter().enumerate() {
                for b in &set.aliases[i + 1..] {
                    prop_assert_ne!(&a.normalised, &b.normalised);
                }
            }
        }

        #[test]
        fn tokenise_is_deterministic(s in "[a-z ]{0,30}") {
            let n = normalise(&s);
            let sw = StopwordSet::default();
            let a = tokenise(&n, &sw);
            prop_assert_eq!(&a, &tokenise(&normalise(&n.normalised), &sw));
            for t in &a.tokens {
                prop_assert!(!sw.contains(t));
            }
        }
    }
}
