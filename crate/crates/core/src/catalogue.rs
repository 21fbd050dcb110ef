//! Catalogue records and the deduplicated retrieval index.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::textnorm::{
    extract_aliases, features, normalise, tokenise, AliasSet, NormalisedString, StopwordSet,
    TokenSet,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntryId(pub String);

impl EntryId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntryId {
    fn from(s: &str) -> Self {
        EntryId(String::from(s))
    }
}

/// One museum record as it appears in the catalogue file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogueRecord {
    pub id: String,
    pub title: String,
    pub artist: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genre: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_file: Option<String>,
}

impl CatalogueRecord {
    pub fn new(id: &str, title: &str, artist: &str) -> Self {
        CatalogueRecord {
            id: id.into(),
            title: title.into(),
            artist: artist.into(),
            subject: None,
            description: None,
            genre: None,
            media_file: None,
        }
    }

    pub fn with_subject(mut self, subject: &str) -> Self {
        self.subject = Some(subject.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CatalogueError {
    DuplicateId(String),
    InvalidRecord {
        position: usize,
        id: String,
        reason: &'static str,
    },
}

impl fmt::Display for CatalogueError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogueError::DuplicateId(id) => write!(f, "duplicate catalogue id `{id}`"),
            CatalogueError::InvalidRecord { position, id, reason } => {
                write!(f, "record {position} (id `{id}`): {reason}")
            }
        }
    }
}

impl core::error::Error for CatalogueError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogueEntry {
    pub id: EntryId,
    pub title_raw: String,
    pub artist_raw: String,
    pub subject_raw: Option<String>,
    pub description: Option<String>,
    pub genre: Option<String>,
    pub media_file: Option<String>,
    pub title_aliases: AliasSet,
    pub artist_norm: NormalisedString,
    pub artist_tokens: TokenSet,
    pub subject_tokens: TokenSet,
    /// Parallel to `title_aliases.aliases`.
    pub title_tokens_per_alias: Vec<TokenSet>,
}

impl CatalogueEntry {
    pub fn from_record(record: &CatalogueRecord, stopwords: &StopwordSet) -> Self {
        let title_aliases = extract_aliases(&record.title);
        let title_tokens_per_alias = title_aliases
            .aliases
            .iter()
            .map(|a| tokenise(a, stopwords))
            .collect();
        let (artist_norm, artist_tokens) = features(&record.artist, stopwords);
        // Missing subjects are empty sets, never wildcards.
        let subject_tokens = record
            .subject
            .as_deref()
            .map(|s| tokenise(&normalise(s), stopwords))
            .unwrap_or_default();
        CatalogueEntry {
            id: EntryId(record.id.clone()),
            title_raw: record.title.clone(),
            artist_raw: record.artist.clone(),
            subject_raw: record.subject.clone(),
            description: record.description.clone(),
            genre: record.genre.clone(),
            media_file: record.media_file.clone(),
            title_aliases,
            artist_norm,
            artist_tokens,
            subject_tokens,
            title_tokens_per_alias,
        }
    }

    /// Normalised primary title; entries sharing it form one dedup group.
    pub fn dedup_key(&self) -> &str {
        &self.title_aliases.primary.normalised
    }

    fn content_tokens(&self) -> impl Iterator<Item = &String> {
        self.title_tokens_per_alias
            .iter()
            .flat_map(|t| t.tokens.iter())
            .chain(self.artist_tokens.tokens.iter())
            .chain(self.subject_tokens.tokens.iter())
    }
}

/// Smoothed inverse document frequencies: `ln((N + 1) / (df + 1)) + 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    pub document_count: usize,
    pub weights: BTreeMap<String, f64>,
}

impl IdfTable {
    pub fn smoothed(document_count: usize, document_frequency: usize) -> f64 {
        libm::log((document_count as f64 + 1.0) / (document_frequency as f64 + 1.0)) + 1.0
    }

    pub fn from_documents<'a, I, D>(documents: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        let mut n = 0;
        for doc in documents {
            n += 1;
            let uniq: BTreeSet<&String> = doc.into_iter().collect();
            for t in uniq {
                *df.entry(t.clone()).or_default() += 1;
            }
        }
        let weights = df
            .into_iter()
            .map(|(t, f)| (t, Self::smoothed(n, f)))
            .collect();
        IdfTable {
            document_count: n,
            weights,
        }
    }

    /// Weight of `token`; tokens absent from the catalogue get the df = 0 weight.
    pub fn weight(&self, token: &str) -> f64 {
        self.weights
            .get(token)
            .copied()
            .unwrap_or_else(|| self.unseen_weight())
    }

    pub fn unseen_weight(&self) -> f64 {
        Self::smoothed(self.document_count, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogueIndex {
    pub entries: Vec<CatalogueEntry>,
    pub idf: IdfTable,
    pub dedup_key: BTreeMap<EntryId, String>,
    pub stopwords: StopwordSet,
}

impl CatalogueIndex {
    pub fn empty(stopwords: StopwordSet) -> Self {
        CatalogueIndex {
            entries: Vec::new(),
            idf: IdfTable::default(),
            dedup_key: BTreeMap::new(),
            stopwords,
        }
    }

    /// Builds the index. IDF documents are dedup groups (entries sharing a
    /// normalised primary title), so duplicate records of one painting do not
    /// shift the weights.
    pub fn build(records: &[CatalogueRecord], stopwords: StopwordSet) -> Result<Self, CatalogueError> {
        let mut seen = BTreeSet::new();
        let mut entries = Vec::with_capacity(records.len());
        for (position, record) in records.iter().enumerate() {
            let invalid = |reason| CatalogueError::InvalidRecord {
                position,
                id: record.id.clone(),
                reason,
            };
            if record.id.trim().is_empty() {
                return Err(invalid("empty id"));
            }
            if normalise(&record.title).is_empty() {
                return Err(invalid("title has no content"));
            }
            if !seen.insert(record.id.as_str()) {
                return Err(CatalogueError::DuplicateId(record.id.clone()));
            }
            entries.push(CatalogueEntry::from_record(record, &stopwords));
        }

        let mut groups: BTreeMap<&str, Vec<&String>> = BTreeMap::new();
        for e in &entries {
            groups.entry(e.dedup_key()).or_default().extend(e.content_tokens());
        }
        let idf = IdfTable::from_documents(groups.into_values());

        let dedup_key = entries
            .iter()
            .map(|e| (e.id.clone(), String::from(e.dedup_key())))
            .collect();

        Ok(CatalogueIndex {
            entries,
            idf,
            dedup_key,
            stopwords,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn document_count(&self) -> usize {
        self.idf.document_count
    }

    pub fn entry(&self, id: &EntryId) -> Option<&CatalogueEntry> {
        self.entries.iter().find(|e| &e.id == id)
    }

    pub fn position(&self, id: &EntryId) -> Option<usize> {
        self.entries.iter().position(|e| &e.id == id)
    }

    /// Collapses a descending ranking to one representative per dedup group,
    /// keeping the first (best) member and the original order.
    pub fn distinct_candidates(&self, ranked: &[(EntryId, f64)]) -> Vec<(EntryId, f64)> {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        ranked
            .iter()
            .filter(|(id, _)| {
                let key = self.dedup_key.get(id).map(String::as_str).unwrap_or(id.as_str());
                seen.insert(key)
            })
            .cloned()
            .collect()
    }
}
