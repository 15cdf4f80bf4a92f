//! Corpus ingestion and persistence.
//!
//! A corpus is an id-ordered, duplicate-free collection of source documents.
//! The interchange format is one JSON object per line with fields `id`,
//! `path`, `lang`, `content`. Ingestion rejects the whole stream on the
//! first malformed line; silently skipping records would make downstream
//! prune fractions irreproducible.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Minimum document content length in bytes, forced by the trigram embedder.
pub const MIN_CONTENT_BYTES: usize = 3;

/// One source file: the unit of embedding, corruption, and pruning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub path: String,
    #[serde(rename = "lang")]
    pub language: String,
    pub content: String,
}

/// An id-sorted, duplicate-free document collection.
///
/// Iteration order is id order; that ordering anchors determinism for every
/// downstream stage.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    documents: Vec<Document>,
}

#[derive(Debug)]
pub enum CorpusError {
    Io(std::io::Error),
    /// Line is not valid UTF-8.
    InvalidUtf8 { line: usize },
    /// Line is not a JSON object of the expected shape.
    Malformed { line: usize, detail: String },
    /// Record object lacks a required string field.
    MissingField { line: usize, field: &'static str },
    /// Content shorter than [`MIN_CONTENT_BYTES`].
    ContentTooShort { line: usize, id: String },
    /// Empty id string.
    EmptyId { line: usize },
    DuplicateId { line: usize, id: String },
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::Io(e) => write!(f, "io: {e}"),
            CorpusError::InvalidUtf8 { line } => {
                write!(f, "invalid-utf8: line {line} is not valid UTF-8")
            }
            CorpusError::Malformed { line, detail } => {
                write!(f, "malformed-record: line {line}: {detail}")
            }
            CorpusError::MissingField { line, field } => {
                write!(f, "missing-field: line {line}: field `{field}`")
            }
            CorpusError::ContentTooShort { line, id } => write!(
                f,
                "content-too-short: line {line}: document `{id}` has fewer than \
                 {MIN_CONTENT_BYTES} bytes of content"
            ),
            CorpusError::EmptyId { line } => write!(f, "empty-id: line {line}"),
            CorpusError::DuplicateId { line, id } => {
                write!(f, "duplicate-id: line {line}: id `{id}` seen before")
            }
        }
    }
}

impl std::error::Error for CorpusError {}

impl From<std::io::Error> for CorpusError {
    fn from(e: std::io::Error) -> Self {
        CorpusError::Io(e)
    }
}

impl Corpus {
    /// Build a corpus from documents, sorting by id and validating
    /// uniqueness and minimum content length.
    pub fn from_documents(mut documents: Vec<Document>) -> Result<Self, CorpusError> {
        for (i, doc) in documents.iter().enumerate() {
            if doc.id.is_empty() {
                return Err(CorpusError::EmptyId { line: i + 1 });
            }
            if doc.content.len() < MIN_CONTENT_BYTES {
                return Err(CorpusError::ContentTooShort {
                    line: i + 1,
                    id: doc.id.clone(),
                });
            }
        }
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in documents.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(CorpusError::DuplicateId {
                    line: 0,
                    id: pair[0].id.clone(),
                });
            }
        }
        Ok(Corpus { documents })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.documents.iter()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents
            .binary_search_by(|d| d.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.documents[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(|d| d.id.as_str())
    }

    /// Keep only the documents whose ids satisfy the predicate.
    pub fn retain_ids<F: Fn(&str) -> bool>(&self, keep: F) -> Corpus {
        Corpus {
            documents: self
                .documents
                .iter()
                .filter(|d| keep(&d.id))
                .cloned()
                .collect(),
        }
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.documents.iter()
    }
}

/// Parse a line-delimited record stream into a corpus.
///
/// Input line order does not matter; the result is sorted by id. Any
/// malformed line rejects the whole stream, with the offending 1-based line
/// number in the error.
pub fn ingest<R: Read>(reader: R) -> Result<Corpus, CorpusError> {
    let mut reader = BufReader::new(reader);
    let mut documents: Vec<Document> = Vec::new();
    let mut seen = std::collections::HashMap::new();
    let mut raw = Vec::new();
    let mut line_no = 0usize;

    loop {
        raw.clear();
        let n = reader.read_until(b'\n', &mut raw)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&raw)
            .map_err(|_| CorpusError::InvalidUtf8 { line: line_no })?
            .trim_end_matches(['\n', '\r']);
        if line.is_empty() {
            continue;
        }
        let doc = parse_record(line, line_no)?;
        if doc.id.is_empty() {
            return Err(CorpusError::EmptyId { line: line_no });
        }
        if doc.content.len() < MIN_CONTENT_BYTES {
            return Err(CorpusError::ContentTooShort {
                line: line_no,
                id: doc.id,
            });
        }
        if seen.insert(doc.id.clone(), line_no).is_some() {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: doc.id,
            });
        }
        documents.push(doc);
    }

    documents.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(Corpus { documents })
}

fn parse_record(line: &str, line_no: usize) -> Result<Document, CorpusError> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            detail: e.to_string(),
        })?;
    let obj = value.as_object().ok_or_else(|| CorpusError::Malformed {
        line: line_no,
        detail: "record is not a JSON object".to_string(),
    })?;
    let field = |name: &'static str| -> Result<String, CorpusError> {
        match obj.get(name) {
            None => Err(CorpusError::MissingField {
                line: line_no,
                field: name,
            }),
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(CorpusError::Malformed {
                line: line_no,
                detail: format!("field `{name}` is not a string"),
            }),
        }
    };
    Ok(Document {
        id: field("id")?,
        path: field("path")?,
        language: field("lang")?,
        content: field("content")?,
    })
}

/// Write a corpus as one JSON record per line, in id order.
///
/// `ingest(write(c))` reproduces `c` byte-for-byte on every field; JSON
/// string escaping keeps embedded newlines and quotes intact.
pub fn write<W: Write>(corpus: &Corpus, writer: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    for doc in corpus.iter() {
        serde_json::to_writer(&mut w, doc)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn ingest_path<P: AsRef<Path>>(path: P) -> Result<Corpus, CorpusError> {
    ingest(File::open(path)?)
}

pub fn write_path<P: AsRef<Path>>(corpus: &Corpus, path: P) -> std::io::Result<()> {
    write(corpus, File::create(path)?)
}
