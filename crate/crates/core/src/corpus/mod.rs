//! Word sets, the merged corpus, category labels and query transcoding.
//!
//! Word-list files are UTF-8, one word per line. Lexicon files are UTF-8
//! TSV with `text<TAB>category` columns. All text is NFC-normalized and
//! trimmed at load so that visually equal words dedupe.

mod encoding;

pub use encoding::{decode, encode_lossy, transcode, Encoding};

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("undecodable bytes at offset {offset}")]
    UndecodableBytes { offset: usize },
    #[error("word file {0} contains no words")]
    EmptyFile(String),
    #[error("character {ch:?} cannot be encoded in {encoding}")]
    UnmappableCharacter { ch: char, encoding: Encoding },
    #[error("lexicon line {line}: {message}")]
    BadLexicon { line: usize, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Identifier of a word set (`GeneralWords`, `ConceptDoppler`, `LeaderName`,
/// `MyList`, or any user-defined name).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SetId(pub String);

impl SetId {
    pub const GENERAL_WORDS: &'static str = "GeneralWords";
    pub const CONCEPT_DOPPLER: &'static str = "ConceptDoppler";
    pub const LEADER_NAME: &'static str = "LeaderName";
    pub const MY_LIST: &'static str = "MyList";

    pub fn new(id: impl Into<String>) -> Self {
        SetId(id.into())
    }
}

impl fmt::Display for SetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Pornography,
    TiananmenSq,
    FalunGong,
    Leaders,
    Politics,
    Other,
}

impl Category {
    /// Report row order; the first five are the sensitive categories.
    pub const ROWS: [Category; 6] = [
        Category::Pornography,
        Category::TiananmenSq,
        Category::FalunGong,
        Category::Leaders,
        Category::Politics,
        Category::Other,
    ];

    pub fn is_sensitive(self) -> bool {
        self != Category::Other
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::Pornography => "Pornography",
            Category::TiananmenSq => "Tiananmen Sq.",
            Category::FalunGong => "Falun Gong",
            Category::Leaders => "Leaders",
            Category::Politics => "Politics",
            Category::Other => "-",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect::<String>()
            .to_lowercase();
        Ok(match key.as_str() {
            "pornography" | "porn" => Category::Pornography,
            "tiananmensq" | "tiananmen" | "tiananmensquare" => Category::TiananmenSq,
            "falungong" => Category::FalunGong,
            "leaders" | "leader" => Category::Leaders,
            "politics" => Category::Politics,
            "other" | "" => Category::Other,
            _ => return Err(format!("unknown category {s:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Word {
    pub text: String,
    pub sources: BTreeSet<SetId>,
    pub category: Option<Category>,
}

/// Applies load-time normalization: NFC, then trim. Returns `None` for blank input.
pub fn normalize_text(raw: &str) -> Option<String> {
    let nfc: String = raw.nfc().collect();
    let trimmed = nfc.trim();
    (!trimmed.is_empty()).then(|| trimmed.to_owned())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordSet {
    pub id: SetId,
    pub words: Vec<Word>,
}

impl WordSet {
    /// Builds a set from raw texts: normalized, blank entries dropped,
    /// duplicates collapsed with the first occurrence winning.
    pub fn from_texts<I, S>(id: SetId, texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = std::collections::HashSet::new();
        let mut words = Vec::new();
        for raw in texts {
            let Some(text) = normalize_text(raw.as_ref()) else {
                continue;
            };
            if seen.insert(text.clone()) {
                words.push(Word {
                    text,
                    sources: BTreeSet::from([id.clone()]),
                    category: None,
                });
            }
        }
        WordSet { id, words }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|w| w.text.as_str())
    }
}

pub fn load_wordset(path: &Path, id: SetId) -> Result<WordSet, CorpusError> {
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = decode(&bytes, Encoding::Utf8)?;
    let set = WordSet::from_texts(id, text.split('\n'));
    if set.is_empty() {
        return Err(CorpusError::EmptyFile(path.display().to_string()));
    }
    Ok(set)
}

/// The deduplicated union of word sets, ordered by code point.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub words: Vec<Word>,
    pub provenance: BTreeMap<String, BTreeSet<SetId>>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, text: &str) -> Option<&Word> {
        self.words
            .binary_search_by(|w| w.text.as_str().cmp(text))
            .ok()
            .map(|i| &self.words[i])
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|w| w.text.as_str())
    }

    /// Hex SHA-256 over the newline-joined word texts.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for w in &self.words {
            hasher.update(w.text.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }
}

pub fn merge_corpora(sets: &[WordSet]) -> Corpus {
    let mut merged: BTreeMap<String, Word> = BTreeMap::new();
    for set in sets {
        for word in &set.words {
            let entry = merged.entry(word.text.clone()).or_insert_with(|| Word {
                text: word.text.clone(),
                sources: BTreeSet::new(),
                category: None,
            });
            entry.sources.extend(word.sources.iter().cloned());
            entry.sources.insert(set.id.clone());
            if entry.category.is_none() {
                entry.category = word.category;
            }
        }
    }
    let provenance = merged
        .values()
        .map(|w| (w.text.clone(), w.sources.clone()))
        .collect();
    Corpus {
        words: merged.into_values().collect(),
        provenance,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryLexicon {
    pub entries: BTreeMap<String, Category>,
}

impl CategoryLexicon {
    pub fn category_of(&self, text: &str) -> Category {
        self.entries.get(text).copied().unwrap_or(Category::Other)
    }

    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, cat) = line
                .split_once('\t')
                .ok_or_else(|| CorpusError::BadLexicon {
                    line: idx + 1,
                    message: "expected text<TAB>category".into(),
                })?;
            let word = normalize_text(word).ok_or_else(|| CorpusError::BadLexicon {
                line: idx + 1,
                message: "empty word".into(),
            })?;
            let cat =
                cat.trim()
                    .parse::<Category>()
                    .map_err(|message| CorpusError::BadLexicon {
                        line: idx + 1,
                        message,
                    })?;
            entries.insert(word, cat);
        }
        Ok(CategoryLexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&decode(&bytes, Encoding::Utf8)?)
    }

    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|(w, c)| format!("{w}\t{c:?}\n"))
            .collect()
    }
}

pub fn label_category(mut corpus: Corpus, lexicon: &CategoryLexicon) -> Corpus {
    for word in &mut corpus.words {
        word.category = Some(lexicon.category_of(&word.text));
    }
    corpus
}
