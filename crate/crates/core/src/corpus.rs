//! Parallel-corpus loading, tokenization, and word-alignment parsing.
//!
//! A corpus is a UTF-8 JSONL file, one record per line: `id`, `src`, `tgt`,
//! optional `align` (Pharaoh `i-j` pairs), optional `src_lang`/`tgt_lang`
//! (default `"und"`), optional `duration_ms`. Unknown fields are ignored.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{ASR_TAG, ST_TAG};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("token is empty")]
    EmptyToken,
    #[error("token {0:?} contains whitespace")]
    WhitespaceInToken(String),
    #[error("token {0:?} collides with a reserved tag")]
    ReservedTag(String),
    #[error("malformed alignment pair {0:?}")]
    MalformedPair(String),
    #[error("alignment link {src}-{tgt} out of bounds for lengths ({src_len}, {tgt_len})")]
    LinkOutOfBounds {
        src: usize,
        tgt: usize,
        src_len: usize,
        tgt_len: usize,
    },
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("line {line}: invalid JSON: {msg}")]
    Json { line: usize, msg: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("record {id:?}: {source}")]
    InRecord {
        id: String,
        #[source]
        source: Box<CorpusError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One word of a transcription or translation. Non-empty, free of
/// whitespace, and distinct from the two reserved tag tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn new(text: impl Into<String>) -> Result<Self, CorpusError> {
        let text = text.into();
        if text.is_empty() {
            return Err(CorpusError::EmptyToken);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(CorpusError::WhitespaceInToken(text));
        }
        if text == ASR_TAG || text == ST_TAG {
            return Err(CorpusError::ReservedTag(text));
        }
        Ok(Token(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Split on runs of Unicode whitespace. Punctuation stays attached to its
/// word; empty or all-whitespace input yields an empty sequence. Fails only
/// when a word collides with a reserved tag, which would make the joint
/// stream ambiguous.
pub fn tokenize(text: &str) -> Result<Vec<Token>, CorpusError> {
    text.split_whitespace().map(Token::new).collect()
}

/// Join tokens back into a single space-separated string.
pub fn join_tokens(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(Token::as_str)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Word alignment as a set of 0-based (source, target) index links.
/// Duplicate links collapse; iteration order is lexicographic.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alignment {
    links: BTreeSet<(usize, usize)>,
}

impl Alignment {
    pub fn new(links: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Alignment {
            links: links.into_iter().collect(),
        }
    }

    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, link: (usize, usize)) -> bool {
        self.links.contains(&link)
    }

    /// Bounds-check every link against token counts.
    pub fn check_bounds(&self, src_len: usize, tgt_len: usize) -> Result<(), CorpusError> {
        for &(s, t) in &self.links {
            if s >= src_len || t >= tgt_len {
                return Err(CorpusError::LinkOutOfBounds {
                    src: s,
                    tgt: t,
                    src_len,
                    tgt_len,
                });
            }
        }
        Ok(())
    }
}

/// Parse Pharaoh-format alignment text: whitespace-separated `i-j` pairs of
/// decimal integers, 0-based. Duplicates collapse to set semantics.
pub fn parse_pharaoh(text: &str, src_len: usize, tgt_len: usize) -> Result<Alignment, CorpusError> {
    let mut links = BTreeSet::new();
    for pair in text.split_whitespace() {
        let (i, j) = pair
            .split_once('-')
            .ok_or_else(|| CorpusError::MalformedPair(pair.to_string()))?;
        let s: usize = i
            .parse()
            .map_err(|_| CorpusError::MalformedPair(pair.to_string()))?;
        let t: usize = j
            .parse()
            .map_err(|_| CorpusError::MalformedPair(pair.to_string()))?;
        if s >= src_len || t >= tgt_len {
            return Err(CorpusError::LinkOutOfBounds {
                src: s,
                tgt: t,
                src_len,
                tgt_len,
            });
        }
        links.insert((s, t));
    }
    Ok(Alignment { links })
}

/// Render an alignment in canonical Pharaoh form: links sorted
/// lexicographically, space-joined.
pub fn render_pharaoh(alignment: &Alignment) -> String {
    alignment
        .links()
        .map(|(s, t)| format!("{s}-{t}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One parallel sample: a tokenized transcription and translation with an
/// optional word alignment and source-audio duration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtterancePair {
    pub id: String,
    pub src_lang: String,
    pub tgt_lang: String,
    pub transcription: Vec<Token>,
    pub translation: Vec<Token>,
    pub alignment: Option<Alignment>,
    pub duration_ms: Option<u64>,
}

impl UtterancePair {
    /// Build a pair, bounds-checking the alignment against the token counts.
    pub fn new(
        id: impl Into<String>,
        transcription: Vec<Token>,
        translation: Vec<Token>,
        alignment: Option<Alignment>,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        if let Some(a) = &alignment {
            a.check_bounds(transcription.len(), translation.len())
                .map_err(|e| CorpusError::InRecord {
                    id: id.clone(),
                    source: Box::new(e),
                })?;
        }
        Ok(UtterancePair {
            id,
            src_lang: "und".to_string(),
            tgt_lang: "und".to_string(),
            transcription,
            translation,
            alignment,
            duration_ms: None,
        })
    }

    pub fn src_len(&self) -> usize {
        self.transcription.len()
    }

    pub fn tgt_len(&self) -> usize {
        self.translation.len()
    }
}

/// On-disk corpus record. Extra fields in the input are ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub src: String,
    pub tgt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub align: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub src_lang: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tgt_lang: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<u64>,
}

impl CorpusRecord {
    /// Tokenize and validate this record into an [`UtterancePair`].
    pub fn into_pair(self) -> Result<UtterancePair, CorpusError> {
        let wrap = |e: CorpusError, id: &str| CorpusError::InRecord {
            id: id.to_string(),
            source: Box::new(e),
        };
        let transcription = tokenize(&self.src).map_err(|e| wrap(e, &self.id))?;
        let translation = tokenize(&self.tgt).map_err(|e| wrap(e, &self.id))?;
        let alignment = match &self.align {
            Some(text) => Some(
                parse_pharaoh(text, transcription.len(), translation.len())
                    .map_err(|e| wrap(e, &self.id))?,
            ),
            None => None,
        };
        let mut pair = UtterancePair::new(self.id, transcription, translation, alignment)?;
        pair.src_lang = self.src_lang.unwrap_or_else(|| "und".to_string());
        pair.tgt_lang = self.tgt_lang.unwrap_or_else(|| "und".to_string());
        pair.duration_ms = self.duration_ms;
        Ok(pair)
    }

    pub fn from_pair(pair: &UtterancePair) -> Self {
        CorpusRecord {
            id: pair.id.clone(),
            src: join_tokens(&pair.transcription),
            tgt: join_tokens(&pair.translation),
            align: pair.alignment.as_ref().map(render_pharaoh),
            src_lang: Some(pair.src_lang.clone()),
            tgt_lang: Some(pair.tgt_lang.clone()),
            duration_ms: pair.duration_ms,
        }
    }
}

/// Load a JSONL corpus file, one [`UtterancePair`] per line in file order.
/// Blank lines are skipped. Schema violations report the 1-based line
/// number; alignment violations also name the record id.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<UtterancePair>, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut pairs = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord =
            serde_json::from_str(&line).map_err(|e| CorpusError::Json {
                line: line_no,
                msg: e.to_string(),
            })?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: record.id,
            });
        }
        let pair = record.into_pair().map_err(|e| CorpusError::Record {
            line: line_no,
            source: Box::new(e),
        })?;
        pairs.push(pair);
    }
    Ok(pairs)
}
