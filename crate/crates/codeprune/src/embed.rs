//! Unit-norm document embeddings.
//!
//! Vectors come from either the built-in hashed-trigram embedder or an
//! external encoder via the EMB1 file format. Every stored vector is float32
//! with L2 norm within 1e-6 of 1.0; distances and norms are accumulated in
//! f64 over a fixed index order so results do not depend on thread count.
//!
//! EMB1 layout, little-endian, no padding:
//! magic `EMB1`, u32 record count, u32 dim, then per record a u16 id byte
//! length, the id bytes (UTF-8), and dim f32 coordinates.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, MIN_CONTENT_BYTES};

pub const EMB1_MAGIC: &[u8; 4] = b"EMB1";

/// 64-bit FNV-1a offset basis.
pub const FNV_OFFSET: u64 = 14695981039346656037;
/// 64-bit FNV-1a prime.
pub const FNV_PRIME: u64 = 1099511628211;

/// Tolerance inside which a stored vector counts as unit norm.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// Built-in embedder variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinEmbedder {
    /// Hashed byte trigrams, log(1+count) weights, L2-normalized.
    TrigramHashV1,
}

impl BuiltinEmbedder {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinEmbedder::TrigramHashV1 => "trigram-hash-v1",
        }
    }
}

impl std::str::FromStr for BuiltinEmbedder {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, EmbedError> {
        match s {
            "trigram-hash-v1" => Ok(BuiltinEmbedder::TrigramHashV1),
            other => Err(EmbedError::UnknownVariant {
                variant: other.to_string(),
            }),
        }
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Id-keyed unit-norm float32 vectors of a shared dimension.
///
/// Ids are held sorted ascending; all iteration follows that order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
}

#[derive(Debug)]
pub enum EmbedError {
    Io(std::io::Error),
    BadMagic,
    /// Stream ended before the declared record count was read.
    Truncated,
    InvalidDim { dim: usize },
    DuplicateId { id: String },
    EmptyId,
    IdTooLong { id: String },
    NonFinite { id: String },
    ZeroVector { id: String },
    /// Operand dimensions disagree.
    DimMismatch { expected: usize, actual: usize },
    /// Document too short for the trigram window.
    ContentTooShort { id: String },
    UnknownVariant { variant: String },
    InvalidId { detail: String },
}

impl fmt::Display for EmbedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedError::Io(e) => write!(f, "io: {e}"),
            EmbedError::BadMagic => write!(f, "bad-magic: not an EMB1 stream"),
            EmbedError::Truncated => write!(f, "truncated: EMB1 stream ended early"),
            EmbedError::InvalidDim { dim } => write!(f, "invalid-dim: {dim}"),
            EmbedError::DuplicateId { id } => write!(f, "duplicate-id: `{id}`"),
            EmbedError::EmptyId => write!(f, "empty-id"),
            EmbedError::IdTooLong { id } => {
                write!(f, "id-too-long: `{}…` exceeds u16 bytes", &id[..16.min(id.len())])
            }
            EmbedError::NonFinite { id } => write!(f, "non-finite: vector `{id}`"),
            EmbedError::ZeroVector { id } => write!(f, "zero-vector: vector `{id}`"),
            EmbedError::DimMismatch { expected, actual } => {
                write!(f, "dim-mismatch: expected {expected}, got {actual}")
            }
            EmbedError::ContentTooShort { id } => write!(
                f,
                "content-too-short: document `{id}` has fewer than {MIN_CONTENT_BYTES} bytes"
            ),
            EmbedError::UnknownVariant { variant } => {
                write!(f, "unknown-variant: `{variant}`")
            }
            EmbedError::InvalidId { detail } => write!(f, "invalid-id: {detail}"),
        }
    }
}

impl std::error::Error for EmbedError {}

impl From<std::io::Error> for EmbedError {
    fn from(e: std::io::Error) -> Self {
        EmbedError::Io(e)
    }
}

impl EmbeddingSet {
    /// Build a set from (id, vector) entries, sorting by id and normalizing.
    ///
    /// Vectors whose norm is already within [`UNIT_NORM_TOL`] of 1.0 are kept
    /// bit-identical so write/read round-trips are exact; anything else is
    /// renormalized. Zero or non-finite vectors are rejected.
    pub fn from_entries(
        dim: usize,
        entries: Vec<(String, Vec<f32>)>,
    ) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::InvalidDim { dim });
        }
        let mut entries = entries;
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let mut ids = Vec::with_capacity(entries.len());
        let mut data = Vec::with_capacity(entries.len() * dim);
        let mut index = HashMap::with_capacity(entries.len());
        for (id, vec) in entries {
            if id.is_empty() {
                return Err(EmbedError::EmptyId);
            }
            if vec.len() != dim {
                return Err(EmbedError::DimMismatch {
                    expected: dim,
                    actual: vec.len(),
                });
            }
            if vec.iter().any(|x| !x.is_finite()) {
                return Err(EmbedError::NonFinite { id });
            }
            let norm = l2_norm(&vec);
            if norm == 0.0 {
                return Err(EmbedError::ZeroVector { id });
            }
            let normalized: Vec<f32> = if (norm - 1.0).abs() <= UNIT_NORM_TOL {
                vec
            } else {
                vec.iter().map(|&x| (x as f64 / norm) as f32).collect()
            };
            if index.insert(id.clone(), ids.len()).is_some() {
                return Err(EmbedError::DuplicateId { id });
            }
            ids.push(id);
            data.extend_from_slice(&normalized);
        }
        Ok(EmbeddingSet {
            dim,
            ids,
            data,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Ids in ascending order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.index.get(id).map(|&i| self.vector(i))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), self.vector(i)))
    }

    /// Subset restricted to the given ids, which must all exist.
    pub fn subset(&self, keep: &[String]) -> Result<EmbeddingSet, EmbedError> {
        let mut entries = Vec::with_capacity(keep.len());
        for id in keep {
            let vec = self.get(id).ok_or_else(|| EmbedError::InvalidId {
                detail: format!("id `{id}` not in embedding set"),
            })?;
            entries.push((id.clone(), vec.to_vec()));
        }
        EmbeddingSet::from_entries(self.dim, entries)
    }

    /// Serialize in the EMB1 format, records in id order.
    pub fn write<W: Write>(&self, writer: W) -> Result<(), EmbedError> {
        let mut w = BufWriter::new(writer);
        w.write_all(EMB1_MAGIC)?;
        let count = u32::try_from(self.ids.len()).map_err(|_| EmbedError::InvalidId {
            detail: "record count exceeds u32".to_string(),
        })?;
        w.write_all(&count.to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        for (i, id) in self.ids.iter().enumerate() {
            let id_len = u16::try_from(id.len())
                .map_err(|_| EmbedError::IdTooLong { id: id.clone() })?;
            w.write_all(&id_len.to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            for &x in self.vector(i) {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Parse an EMB1 stream, validating ids and renormalizing noisy vectors.
    pub fn read<R: Read>(reader: R) -> Result<Self, EmbedError> {
        let mut r = BufReader::new(reader);
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if &magic != EMB1_MAGIC {
            return Err(EmbedError::BadMagic);
        }
        let mut u32buf = [0u8; 4];
        read_exact(&mut r, &mut u32buf)?;
        let count = u32::from_le_bytes(u32buf) as usize;
        read_exact(&mut r, &mut u32buf)?;
        let dim = u32::from_le_bytes(u32buf) as usize;
        if dim == 0 {
            return Err(EmbedError::InvalidDim { dim });
        }
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let mut u16buf = [0u8; 2];
            read_exact(&mut r, &mut u16buf)?;
            let id_len = u16::from_le_bytes(u16buf) as usize;
            let mut id_bytes = vec![0u8; id_len];
            read_exact(&mut r, &mut id_bytes)?;
            let id = String::from_utf8(id_bytes).map_err(|_| EmbedError::InvalidId {
                detail: "id is not valid UTF-8".to_string(),
            })?;
            let mut vec = vec![0f32; dim];
            let mut f32buf = [0u8; 4];
            for slot in vec.iter_mut() {
                read_exact(&mut r, &mut f32buf)?;
                *slot = f32::from_le_bytes(f32buf);
            }
            entries.push((id, vec));
        }
        EmbeddingSet::from_entries(dim, entries)
    }

    pub fn write_path<P: AsRef<Path>>(&self, path: P) -> Result<(), EmbedError> {
        self.write(File::create(path)?)
    }

    pub fn read_path<P: AsRef<Path>>(path: P) -> Result<Self, EmbedError> {
        Self::read(File::open(path)?)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), EmbedError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            EmbedError::Truncated
        } else {
            EmbedError::Io(e)
        }
    })
}

fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt()
}

/// Pre-normalization trigram bucket weights for one document.
///
/// Bucket index is FNV-1a-64 of each 3-byte window mod `dim`; the weight is
/// log(1 + count). Counts are exact integers, so the result is independent
/// of accumulation order.
pub fn trigram_weights(content: &str, dim: usize) -> Vec<f64> {
    let mut counts = vec![0u64; dim];
    for window in content.as_bytes().windows(3) {
        let bucket = (fnv1a64(window) % dim as u64) as usize;
        counts[bucket] += 1;
    }
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { (1.0 + c as f64).ln() })
        .collect()
}

fn embed_one(id: &str, content: &str, dim: usize) -> Result<Vec<f32>, EmbedError> {
    if content.len() < MIN_CONTENT_BYTES {
        return Err(EmbedError::ContentTooShort { id: id.to_string() });
    }
    let weights = trigram_weights(content, dim);
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    // At least one trigram exists, so at least one weight is ln(2) > 0.
    Ok(weights.iter().map(|&w| (w / norm) as f32).collect())
}

/// Embed every document of a corpus with the built-in embedder.
///
/// Bit-exact given (content, dim); embedding is a pure per-document map, so
/// the parallel pass cannot change the result.
pub fn embed_builtin(
    corpus: &Corpus,
    dim: usize,
    variant: BuiltinEmbedder,
) -> Result<EmbeddingSet, EmbedError> {
    let items: Vec<(&str, &str)> = corpus
        .iter()
        .map(|d| (d.id.as_str(), d.content.as_str()))
        .collect();
    embed_texts(&items, dim, variant)
}

/// Embed arbitrary (id, content) pairs with the built-in embedder.
pub fn embed_texts(
    items: &[(&str, &str)],
    dim: usize,
    variant: BuiltinEmbedder,
) -> Result<EmbeddingSet, EmbedError> {
    let BuiltinEmbedder::TrigramHashV1 = variant;
    if dim < 8 {
        return Err(EmbedError::InvalidDim { dim });
    }
    let entries: Vec<(String, Vec<f32>)> = items
        .par_iter()
        .map(|(id, content)| Ok((id.to_string(), embed_one(id, content, dim)?)))
        .collect::<Result<_, EmbedError>>()?;
    EmbeddingSet::from_entries(dim, entries)
}

/// Cosine distance 1 - x·y between two unit vectors, in [0, 2].
///
/// The dot product is accumulated in f64 over ascending index, so the value
/// is the same however the callers are scheduled. Panics if dimensions
/// differ; length checks belong at the set and model boundaries.
pub fn cosine_distance(x: &[f32], y: &[f32]) -> f64 {
    assert_eq!(x.len(), y.len(), "cosine_distance dimension mismatch");
    1.0 - dot(x, y)
}

pub fn dot(x: &[f32], y: &[f32]) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(&a, &b)| a as f64 * b as f64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use proptest::prelude::*;

    /// Independent FNV-1a-64, written as a plain fold for cross-checking.
    fn fnv_oracle(bytes: &[u8]) -> u64 {
        bytes.iter().fold(14695981039346656037u64, |h, &b| {
            (h ^ b as u64).wrapping_mul(1099511628211)
        })
    }

    fn set_of(entries: &[(&str, &[f32])]) -> EmbeddingSet {
        EmbeddingSet::from_entries(
            entries[0].1.len(),
            entries
                .iter()
                .map(|(id, v)| (id.to_string(), v.to_vec()))
                .collect(),
        )
        .unwrap()
    }

    fn corpus_of(contents: &[(&str, &str)]) -> Corpus {
        Corpus::from_documents(
            contents
                .iter()
                .map(|(id, c)| Document {
                    id: id.to_string(),
                    path: format!("{id}.py"),
                    language: "python".to_string(),
                    content: c.to_string(),
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn repeated_trigram_is_a_basis_vector() {
        // "aaaa" has two windows, both "aaa": exactly one nonzero bucket.
        let corpus = corpus_of(&[("a", "aaaa")]);
        let set = embed_builtin(&corpus, 64, BuiltinEmbedder::TrigramHashV1).unwrap();
        let v = set.get("a").unwrap();
        let expected_bucket = (fnv_oracle(b"aaa") % 64) as usize;
        for (i, &x) in v.iter().enumerate() {
            if i == expected_bucket {
                assert!((x - 1.0).abs() < 1e-6, "bucket {i} = {x}");
            } else {
                assert_eq!(x, 0.0);
            }
        }
    }

    #[test]
    fn identical_documents_embed_identically() {
        let corpus = corpus_of(&[("a", "def f(x):\n    return x\n"), ("b", "def f(x):\n    return x\n")]);
        let set = embed_builtin(&corpus, 128, BuiltinEmbedder::TrigramHashV1).unwrap();
        assert_eq!(set.get("a").unwrap(), set.get("b").unwrap());
    }

    #[test]
    fn rejects_dim_below_8() {
        let corpus = corpus_of(&[("a", "aaaa")]);
        assert!(matches!(
            embed_builtin(&corpus, 4, BuiltinEmbedder::TrigramHashV1),
            Err(EmbedError::InvalidDim { dim: 4 })
        ));
    }

    #[test]
    fn cosine_distance_identity_orthogonal_antipodal() {
        let e1 = [1.0f32, 0.0, 0.0];
        let e2 = [0.0f32, 1.0, 0.0];
        let neg = [-1.0f32, 0.0, 0.0];
        assert_eq!(cosine_distance(&e1, &e1), 0.0);
        assert_eq!(cosine_distance(&e1, &e2), 1.0);
        assert_eq!(cosine_distance(&e1, &neg), 2.0);
    }

    #[test]
    fn emb1_round_trip() {
        let s = 0.5f32.sqrt();
        let set = set_of(&[
            ("a", &[1.0, 0.0, 0.0, 0.0]),
            ("b", &[0.0, 1.0, 0.0, 0.0]),
            ("c", &[s, s, 0.0, 0.0]),
            ("d", &[0.0, 0.0, 0.0, 1.0]),
            ("e", &[0.0, s, 0.0, s]),
        ]);
        let mut buf = Vec::new();
        set.write(&mut buf).unwrap();
        let back = EmbeddingSet::read(&buf[..]).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn emb1_rejects_zero_vector() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"EMB1");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&1u16.to_le_bytes());
        buf.push(b'a');
        buf.extend_from_slice(&0f32.to_le_bytes());
        buf.extend_from_slice(&0f32.to_le_bytes());
        assert!(matches!(
            EmbeddingSet::read(&buf[..]),
            Err(EmbedError::ZeroVector { .. })
        ));
    }

    #[test]
    fn emb1_rejects_nan() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"EMB1");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&1u16.to_le_bytes());
        buf.push(b'a');
        buf.extend_from_slice(&f32::NAN.to_le_bytes());
        buf.extend_from_slice(&1f32.to_le_bytes());
        assert!(matches!(
            EmbeddingSet::read(&buf[..]),
            Err(EmbedError::NonFinite { .. })
        ));
    }

    #[test]
    fn emb1_rejects_bad_magic() {
        assert!(matches!(
            EmbeddingSet::read(&b"EMB2\x00\x00\x00\x00\x00\x00\x00\x00"[..]),
            Err(EmbedError::BadMagic)
        ));
    }

    #[test]
    fn emb1_rejects_duplicate_id() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"EMB1");
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&1u32.to_le_bytes());
        for _ in 0..2 {
            buf.extend_from_slice(&1u16.to_le_bytes());
            buf.push(b'a');
            buf.extend_from_slice(&1f32.to_le_bytes());
        }
        assert!(matches!(
            EmbeddingSet::read(&buf[..]),
            Err(EmbedError::DuplicateId { .. })
        ));
    }

    #[test]
    fn emb1_rejects_truncation() {
        let set = set_of(&[("a", &[1.0, 0.0])]);
        let mut buf = Vec::new();
        set.write(&mut buf).unwrap();
        buf.truncate(buf.len() - 2);
        assert!(matches!(
            EmbeddingSet::read(&buf[..]),
            Err(EmbedError::Truncated)
        ));
    }

    #[test]
    fn load_renormalizes_noisy_vectors() {
        let mut buf = Vec::new();
        buf.extend_from_slice(b"EMB1");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&1u16.to_le_bytes());
        buf.push(b'a');
        buf.extend_from_slice(&3f32.to_le_bytes());
        buf.extend_from_slice(&4f32.to_le_bytes());
        let set = EmbeddingSet::read(&buf[..]).unwrap();
        let v = set.get("a").unwrap();
        assert!((v[0] - 0.6).abs() < 1e-6);
        assert!((v[1] - 0.8).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn prop_builtin_vectors_are_unit_norm(content in "[ -~]{3,120}", dim in 8usize..64) {
            let corpus = corpus_of(&[("a", &content)]);
            let set = embed_builtin(&corpus, dim, BuiltinEmbedder::TrigramHashV1).unwrap();
            let norm = l2_norm(set.get("a").unwrap());
            prop_assert!((norm - 1.0).abs() < UNIT_NORM_TOL);
        }

        #[test]
        fn prop_cosine_distance_symmetric_and_bounded(
            a in proptest::collection::vec(-1.0f32..1.0, 16),
            b in proptest::collection::vec(-1.0f32..1.0, 16),
        ) {
            prop_assume!(l2_norm(&a) > 1e-3 && l2_norm(&b) > 1e-3);
            let set = set_of(&[("a", &a), ("b", &b)]);
            let (x, y) = (set.get("a").unwrap(), set.get("b").unwrap());
            let d_xy = cosine_distance(x, y);
            let d_yx = cosine_distance(y, x);
            prop_assert_eq!(d_xy, d_yx);
            prop_assert!((-1e-6..=2.0 + 1e-6).contains(&d_xy));
        }

        #[test]
        fn prop_single_byte_edit_touches_at_most_six_buckets(
            prefix in "[a-z]{10,40}", suffix in "[a-z]{10,40}", replacement in "[0-9]"
        ) {
            let original = format!("{prefix}x{suffix}");
            let edited = format!("{prefix}{replacement}{suffix}");
            let dim = 512;
            let w0 = trigram_weights(&original, dim);
            let w1 = trigram_weights(&edited, dim);
            let changed = w0.iter().zip(&w1).filter(|(a, b)| a != b).count();
            prop_assert!(changed <= 6, "{changed} buckets changed");
        }
    }
}
