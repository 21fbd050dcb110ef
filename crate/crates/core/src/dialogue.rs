//! Catalogue-derived training dialogues with synthetic abstention samples.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalogue::{CatalogueEntry, CatalogueIndex};

pub const ABSTENTION_TARGET: &str = "not visible";
pub const DEFAULT_P_ABS: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Title,
    Artist,
    Subject,
    Description,
    Genre,
}

impl Slot {
    pub const ALL: [Slot; 5] = [Slot::Title, Slot::Artist, Slot::Subject, Slot::Description, Slot::Genre];

    pub fn is_identification(self) -> bool {
        matches!(self, Slot::Title | Slot::Artist)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueSample {
    #[serde(rename = "media")]
    pub media_ref: String,
    #[serde(rename = "conversations")]
    pub turns: Vec<Turn>,
    #[serde(rename = "slots")]
    pub slots_covered: BTreeSet<Slot>,
    #[serde(rename = "abstention")]
    pub is_abstention: bool,
}

impl DialogueSample {
    pub fn alternates(&self) -> bool {
        !self.turns.is_empty()
            && self.turns.len().is_multiple_of(2)
            && self.turns.iter().enumerate().all(|(i, t)| {
                t.role == if i % 2 == 0 { Role::User } else { Role::Assistant }
            })
    }
}

/// Question paraphrases per slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Templates(pub BTreeMap<Slot, Vec<String>>);

impl Default for Templates {
    fn default() -> Self {
        let table: [(Slot, &[&str]); 5] = [
            (
                Slot::Title,
                &[
                    "What is the title of this painting?",
                    "Which artwork is shown here?",
                    "Can you name this work?",
                    "What is this painting called?",
                ],
            ),
            (
                Slot::Artist,
                &[
                    "Who painted this work?",
                    "Which artist made this painting?",
                    "Who is the artist?",
                    "Can you attribute this painting to an artist?",
                ],
            ),
            (
                Slot::Subject,
                &[
                    "What does this painting depict?",
                    "Describe the subject of this work.",
                    "What is shown in the picture?",
                ],
            ),
            (
                Slot::Description,
                &[
                    "Write a short catalogue description of this painting.",
                    "Describe this artwork as a curator would.",
                    "Give a brief description for the collection record.",
                ],
            ),
            (
                Slot::Genre,
                &[
                    "What genre is this painting?",
                    "Which genre does this work belong to?",
                    "Classify the genre of this artwork.",
                ],
            ),
        ];
        Templates(
            table
                .into_iter()
                .map(|(slot, qs)| (slot, qs.iter().map(|q| q.to_string()).collect()))
                .collect(),
        )
    }
}

impl Templates {
    fn questions(&self, slot: Slot) -> &[String] {
        self.0.get(&slot).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// How many samples each entry contributes. `Average(3.5)` alternates 3 and
/// 4 so that `n` entries yield `floor(3.5 * n)` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplesPerEntry {
    Fixed(u32),
    Average(f64),
}

impl Default for SamplesPerEntry {
    fn default() -> Self {
        SamplesPerEntry::Average(3.5)
    }
}

impl SamplesPerEntry {
    pub fn for_entry(self, position: usize) -> u32 {
        match self {
            SamplesPerEntry::Fixed(n) => n,
            SamplesPerEntry::Average(avg) => {
                let hi = libm::floor((position + 1) as f64 * avg);
                let lo = libm::floor(position as f64 * avg);
                (hi - lo) as u32
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DialogueSettings {
    pub per_entry: SamplesPerEntry,
    pub p_abs: f64,
    pub seed: u64,
    pub visibility_cues: Vec<String>,
}

impl Default for DialogueSettings {
    fn default() -> Self {
        DialogueSettings {
            per_entry: SamplesPerEntry::default(),
            p_abs: DEFAULT_P_ABS,
            seed: 0,
            visibility_cues: [
                "The label is not visible.",
                "No wall label can be read in this view.",
                "The caption is outside the frame.",
            ]
            .iter()
            .map(|c| c.to_string())
            .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DialogueError {
    MissingTemplates(Slot),
    InvalidProbability(f64),
    NoVisibilityCues,
}

impl fmt::Display for DialogueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DialogueError::MissingTemplates(slot) => write!(f, "no question templates for slot {slot:?}"),
            DialogueError::InvalidProbability(p) => write!(f, "p_abs must lie in [0, 1], got {p}"),
            DialogueError::NoVisibilityCues => f.write_str("at least one visibility cue is required"),
        }
    }
}

impl core::error::Error for DialogueError {}

fn tidy(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn answer(entry: &CatalogueEntry, slot: Slot) -> Option<String> {
    let text = match slot {
        // Short, consistent identification target: the primary alias only.
        Slot::Title => entry.title_aliases.primary.original.clone(),
        Slot::Artist => entry.artist_raw.clone(),
        Slot::Subject => entry.subject_raw.clone()?,
        Slot::Description => entry.description.clone()?,
        Slot::Genre => entry.genre.clone()?,
    };
    let text = tidy(&text);
    (!text.is_empty()).then_some(text)
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

pub fn build_dialogues(
    index: &CatalogueIndex,
    templates: &Templates,
    settings: &DialogueSettings,
) -> Result<Vec<DialogueSample>, DialogueError> {
    for slot in Slot::ALL {
        if templates.questions(slot).is_empty() {
            return Err(DialogueError::MissingTemplates(slot));
        }
    }
    if !(0.0..=1.0).contains(&settings.p_abs) {
        return Err(DialogueError::InvalidProbability(settings.p_abs));
    }
    if settings.visibility_cues.is_empty() {
        return Err(DialogueError::NoVisibilityCues);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut samples = Vec::new();
    for (position, entry) in index.entries.iter().enumerate() {
        let media_ref = entry
            .media_file
            .clone()
            .unwrap_or_else(|| format!("{}.jpg", entry.id));
        let ask = |rng: &mut ChaCha8Rng, slot: Slot| pick(rng, templates.questions(slot)).clone();

        for _ in 0..settings.per_entry.for_entry(position) {
            let abstain = rng.random_bool(settings.p_abs);
            if abstain {
                // Auxiliary identification tasks are skipped for these samples.
                let slot = *pick(&mut rng, &[Slot::Title, Slot::Artist]);
                let cue = pick(&mut rng, &settings.visibility_cues).clone();
                let question = ask(&mut rng, slot);
                samples.push(DialogueSample {
                    media_ref: media_ref.clone(),
                    turns: alloc::vec![
                        Turn { role: Role::User, content: format!("{cue} {question}") },
                        Turn { role: Role::Assistant, content: ABSTENTION_TARGET.into() },
                    ],
                    slots_covered: BTreeSet::new(),
                    is_abstention: true,
                });
                continue;
            }

            let mut primary = *pick(&mut rng, &Slot::ALL);
            if answer(entry, primary).is_none() {
                log::debug!("entry {}: no {:?} field, slot skipped", entry.id, primary);
                primary = *pick(&mut rng, &[Slot::Title, Slot::Artist]);
            }
            let auxiliary = match primary {
                Slot::Title => Slot::Artist,
                Slot::Artist => Slot::Title,
                _ => *pick(&mut rng, &[Slot::Title, Slot::Artist]),
            };
            let mut turns = Vec::with_capacity(4);
            let mut slots_covered = BTreeSet::new();
            for slot in [primary, auxiliary] {
                let Some(a) = answer(entry, slot) else {
                    log::debug!("entry {}: no {:?} field, slot skipped", entry.id, slot);
                    continue;
                };
                turns.push(Turn { role: Role::User, content: ask(&mut rng, slot) });
                turns.push(Turn { role: Role::Assistant, content: a });
                slots_covered.insert(slot);
            }
            samples.push(DialogueSample {
                media_ref: media_ref.clone(),
                turns,
                slots_covered,
                is_abstention: false,
            });
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue::CatalogueRecord;
    use crate::textnorm::{normalise, StopwordSet};

    fn catalogue(n: usize) -> CatalogueIndex {
        let records: Vec<_> = (0..n)
            .map(|i| {
                let mut r = CatalogueRecord::new(
                    &format!("p{i}"),
                    &format!("Painting {i} (\"Variant {i}\"); Oil on canvas"),
                    "Some Artist",
                );
                if i % 2 == 0 {
                    r.subject = Some("a river".into());
                    r.genre = Some("landscape".into());
                }
                r
            })
            .collect();
        CatalogueIndex::build(&records, StopwordSet::default()).unwrap()
    }

    fn settings(p_abs: f64, seed: u64) -> DialogueSettings {
        DialogueSettings { p_abs, seed, ..Default::default() }
    }

    #[test]
    fn mixed_assignment_yields_210_for_60() {
        let d = build_dialogues(&catalogue(60), &Templates::default(), &settings(0.05, 1)).unwrap();
        assert_eq!(d.len(), 210);
        assert_eq!(SamplesPerEntry::default().for_entry(0), 3);
        assert_eq!(SamplesPerEntry::default().for_entry(1), 4);
    }

    #[test]
    fn zero_probability_has_no_abstentions() {
        let d = build_dialogues(&catalogue(20), &Templates::default(), &settings(0.0, 3)).unwrap();
        assert!(d.iter().all(|s| !s.is_abstention));
    }

    #[test]
    fn unit_probability_is_all_abstentions() {
        let d = build_dialogues(&catalogue(20), &Templates::default(), &settings(1.0, 3)).unwrap();
        for s in &d {
            assert!(s.is_abstention);
            assert!(s.slots_covered.iter().all(|slot| !slot.is_identification()));
            assert_eq!(s.turns.len(), 2);
            assert_eq!(s.turns[1].content, ABSTENTION_TARGET);
        }
    }

    #[test]
    fn samples_are_well_formed() {
        let idx = catalogue(30);
        let d = build_dialogues(&idx, &Templates::default(), &settings(0.2, 9)).unwrap();
        for s in &d {
            assert!(s.alternates());
            let targets_abstain = s.turns.iter().any(|t| t.role == Role::Assistant && t.content == ABSTENTION_TARGET);
            assert_eq!(targets_abstain, s.is_abstention);
            if s.is_abstention {
                assert!(s.slots_covered.is_empty());
            }
        }
        // Title answers are the primary alias, never the raw multi-variant string.
        for s in d.iter().filter(|s| s.slots_covered.contains(&Slot::Title)) {
            let q = &Templates::default().0[&Slot::Title];
            let i = s.turns.iter().position(|t| q.contains(&t.content)).unwrap();
            let ans = &s.turns[i + 1].content;
            assert!(!ans.contains('(') && !ans.contains(';'), "{ans}");
            let entry = idx.entries.iter().find(|e| format!("{}.jpg", e.id) == s.media_ref).unwrap();
            assert_eq!(normalise(ans).normalised, entry.title_aliases.primary.normalised);
        }
    }

    #[test]
    fn missing_fields_are_skipped() {
        let recs = [CatalogueRecord::new("a", "Only Title", "Artist")];
        let idx = CatalogueIndex::build(&recs, StopwordSet::default()).unwrap();
        let d = build_dialogues(&idx, &Templates::default(), &DialogueSettings { per_entry: SamplesPerEntry::Fixed(50), ..settings(0.0, 4) }).unwrap();
        assert_eq!(d.len(), 50);
        for s in &d {
            assert!(s.slots_covered.iter().all(|s| s.is_identification()));
        }
    }

    #[test]
    fn seeded_determinism() {
        let idx = catalogue(12);
        let a = build_dialogues(&idx, &Templates::default(), &settings(0.3, 42)).unwrap();
        let b = build_dialogues(&idx, &Templates::default(), &settings(0.3, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_inputs() {
        let idx = catalogue(2);
        assert_eq!(
            build_dialogues(&idx, &Templates::default(), &settings(1.5, 0)),
            Err(DialogueError::InvalidProbability(1.5))
        );
        let mut t = Templates::default();
        t.0.insert(Slot::Genre, Vec::new());
        assert_eq!(
            build_dialogues(&idx, &t, &settings(0.1, 0)),
            Err(DialogueError::MissingTemplates(Slot::Genre))
        );
    }
}
