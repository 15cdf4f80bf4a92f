//! Synthetic corruption operators.
//!
//! Four operators plant errors into source text and report how many sites
//! they touched. Two break syntax: deleting closing brackets and rewriting
//! variable usages to undeclared names. Two break content while staying
//! parseable: negating relational operators and offsetting subscript
//! indices.
//!
//! Site detection is tokenizer-level, not AST-level, so the operators also
//! apply to files that are already broken. A byte mask over single- or
//! double-quoted literals and `#` comments keeps the conditional and index
//! operators away from string contents; bracket removal deliberately works
//! on raw bytes so that a no-op always means "no closing bracket anywhere in
//! the file".

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embed::fnv1a64;

/// The four corruption operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionKind {
    RemoveClosedBrackets,
    RenameVariables,
    AlterConditionals,
    OffsetArrayIndices,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 4] = [
        CorruptionKind::RemoveClosedBrackets,
        CorruptionKind::RenameVariables,
        CorruptionKind::AlterConditionals,
        CorruptionKind::OffsetArrayIndices,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CorruptionKind::RemoveClosedBrackets => "remove-closed-brackets",
            CorruptionKind::RenameVariables => "rename-variables",
            CorruptionKind::AlterConditionals => "alter-conditionals",
            CorruptionKind::OffsetArrayIndices => "offset-array-indices",
        }
    }

    /// True for the operators that leave files unparseable.
    pub fn is_syntax_error(&self) -> bool {
        matches!(
            self,
            CorruptionKind::RemoveClosedBrackets | CorruptionKind::RenameVariables
        )
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CorruptionKind {
    type Err = CorruptError;

    fn from_str(s: &str) -> Result<Self, CorruptError> {
        CorruptionKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| CorruptError::UnknownKind { kind: s.to_string() })
    }
}

#[derive(Debug)]
pub enum CorruptError {
    UnknownKind { kind: String },
    /// Rate outside (0, 1].
    InvalidRate { rate: f64 },
    Io(std::io::Error),
    MalformedPair { line: usize, detail: String },
}

impl fmt::Display for CorruptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorruptError::UnknownKind { kind } => write!(f, "unknown-kind: `{kind}`"),
            CorruptError::InvalidRate { rate } => {
                write!(f, "invalid-rate: {rate} not in (0, 1]")
            }
            CorruptError::Io(e) => write!(f, "io: {e}"),
            CorruptError::MalformedPair { line, detail } => {
                write!(f, "malformed-pair: line {line}: {detail}")
            }
        }
    }
}

impl std::error::Error for CorruptError {}

impl From<std::io::Error> for CorruptError {
    fn from(e: std::io::Error) -> Self {
        CorruptError::Io(e)
    }
}

impl From<serde_json::Error> for CorruptError {
    fn from(e: serde_json::Error) -> Self {
        CorruptError::Io(e.into())
    }
}

/// A corruption operator with its site-selection rate and seed.
///
/// Equal (kind, rate, seed, input) always yields equal output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionOperator {
    pub kind: CorruptionKind,
    pub rate: f64,
    pub seed: u64,
}

impl CorruptionOperator {
    pub const DEFAULT_RATE: f64 = 0.5;

    pub fn new(kind: CorruptionKind, rate: f64, seed: u64) -> Result<Self, CorruptError> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(CorruptError::InvalidRate { rate });
        }
        Ok(CorruptionOperator { kind, rate, seed })
    }
}

/// Result of corrupting one piece of content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corruption {
    pub corrupted: String,
    pub sites_corrupted: usize,
}

/// A matched original/corrupted pair for one document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptionPair {
    pub doc_id: String,
    pub kind: CorruptionKind,
    pub original: String,
    pub corrupted: String,
    pub sites_corrupted: usize,
}

impl CorruptionPair {
    /// True when the input had no eligible site and is unchanged.
    pub fn is_noop(&self) -> bool {
        self.sites_corrupted == 0
    }
}

/// Number of sites to corrupt: fraction `rate` of `n`, at least 1 if any.
fn subset_size(n: usize, rate: f64) -> usize {
    if n == 0 {
        return 0;
    }
    ((rate * n as f64).round() as usize).clamp(1, n)
}

/// Pick `k` of `n` site indices with the seeded generator.
fn pick_sites(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut picked = rand::seq::index::sample(rng, n, k).into_vec();
    picked.sort_unstable();
    picked
}

// ---------------------------------------------------------------------------
// Lightweight lexing
// ---------------------------------------------------------------------------

/// Byte mask over `'…'`/`"…"` literals and `#` comments.
///
/// Quote characters themselves are masked. Strings are single-line: an
/// unterminated literal ends at the newline, which Python-leaning corpora
/// make the safer guess. Backslash escapes the next byte inside a literal.
pub fn literal_comment_mask(content: &str) -> Vec<bool> {
    #[derive(PartialEq)]
    enum State {
        Code,
        Str(u8),
        Comment,
    }
    let bytes = content.as_bytes();
    let mut mask = vec![false; bytes.len()];
    let mut state = State::Code;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match state {
            State::Code => {
                if b == b'#' {
                    mask[i] = true;
                    state = State::Comment;
                } else if b == b'\'' || b == b'"' {
                    mask[i] = true;
                    state = State::Str(b);
                }
            }
            State::Comment => {
                if b == b'\n' {
                    state = State::Code;
                } else {
                    mask[i] = true;
                }
            }
            State::Str(quote) => {
                if b == b'\n' {
                    // Unterminated literal; resume code at the newline.
                    state = State::Code;
                } else {
                    mask[i] = true;
                    if b == b'\\' && i + 1 < bytes.len() && bytes[i + 1] != b'\n' {
                        mask[i + 1] = true;
                        i += 1;
                    } else if b == quote {
                        state = State::Code;
                    }
                }
            }
        }
        i += 1;
    }
    mask
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_continue(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Maximal identifier runs as (start, end) byte spans.
///
/// Runs starting with a digit are numeric literals and are skipped. With
/// `unmasked_only`, runs inside literals or comments are skipped too.
fn identifier_spans(bytes: &[u8], mask: &[bool], unmasked_only: bool) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if is_ident_continue(bytes[i]) {
            let start = i;
            while i < bytes.len() && is_ident_continue(bytes[i]) {
                i += 1;
            }
            if is_ident_start(bytes[start]) && !(unmasked_only && mask[start]) {
                spans.push((start, i));
            }
        } else {
            i += 1;
        }
    }
    spans
}

#[derive(Debug, Clone, Copy)]
struct RelationalSite {
    pos: usize,
    len: usize,
    replacement: &'static str,
}

/// Relational operator tokens outside literals and comments, with their
/// negations: == <-> !=, < <-> >=, > <-> <=.
fn relational_sites(bytes: &[u8], mask: &[bool]) -> Vec<RelationalSite> {
    let mut sites = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if mask[i] {
            i += 1;
            continue;
        }
        let rest = &bytes[i..];
        let unmasked = |len: usize| i + len <= mask.len() && !mask[i..i + len].iter().any(|&m| m);
        // Longest match first; shift and arrow tokens consume their bytes so
        // a `<` inside `<<` or `->` is never treated as relational.
        let skip3 = [&b"<<="[..], &b">>="[..]];
        let skip2 = [&b"<<"[..], &b">>"[..], &b"->"[..]];
        let rel2: [(&[u8], &str); 4] =
            [(b"==", "!="), (b"!=", "=="), (b"<=", ">"), (b">=", "<")];
        let rel1: [(u8, &str); 2] = [(b'<', ">="), (b'>', "<=")];

        if let Some(op) = skip3.iter().find(|op| rest.starts_with(op)) {
            if unmasked(op.len()) {
                i += op.len();
                continue;
            }
        }
        if let Some((op, repl)) = rel2
            .iter()
            .find(|(op, _)| rest.starts_with(op) && unmasked(op.len()))
        {
            sites.push(RelationalSite {
                pos: i,
                len: op.len(),
                replacement: repl,
            });
            i += op.len();
            continue;
        }
        if let Some(op) = skip2.iter().find(|op| rest.starts_with(op)) {
            if unmasked(op.len()) {
                i += op.len();
                continue;
            }
        }
        if let Some((_, repl)) = rel1.iter().find(|(op, _)| rest[0] == *op) {
            sites.push(RelationalSite {
                pos: i,
                len: 1,
                replacement: repl,
            });
        }
        i += 1;
    }
    sites
}

#[derive(Debug, Clone, Copy)]
struct SubscriptSite {
    /// Byte position of the matching `]`, where `+1` gets inserted.
    close: usize,
}

/// Subscript expressions `name[expr]` outside literals and comments.
///
/// An eligible `[` directly follows an identifier byte, `]`, or `)`, so
/// chained subscripts like `a[i][j]` yield two sites while list literals
/// like `[1, 2]` yield none. The expression must be non-empty.
fn subscript_sites(bytes: &[u8], mask: &[bool]) -> Vec<SubscriptSite> {
    let mut sites = Vec::new();
    for i in 0..bytes.len() {
        if bytes[i] != b'[' || mask[i] || i == 0 {
            continue;
        }
        let prev = bytes[i - 1];
        if !(is_ident_continue(prev) || prev == b']' || prev == b')') || mask[i - 1] {
            continue;
        }
        let mut depth = 1usize;
        let mut close = None;
        for (j, &b) in bytes.iter().enumerate().skip(i + 1) {
            if mask[j] {
                continue;
            }
            if b == b'[' {
                depth += 1;
            } else if b == b']' {
                depth -= 1;
                if depth == 0 {
                    close = Some(j);
                    break;
                }
            }
        }
        if let Some(close) = close {
            let expr = &bytes[i + 1..close];
            if expr.iter().any(|b| !b.is_ascii_whitespace()) {
                sites.push(SubscriptSite { close });
            }
        }
    }
    sites
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Delete a seeded subset of the closing brackets `)`, `]`, `}`.
///
/// Works on raw bytes, so a no-op result means the input contains no closing
/// bracket at all.
pub fn remove_closed_brackets(content: &str, rate: f64, seed: u64) -> Corruption {
    let bytes = content.as_bytes();
    let sites: Vec<usize> = bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b')' || b == b']' || b == b'}')
        .map(|(i, _)| i)
        .collect();
    if sites.is_empty() {
        return Corruption {
            corrupted: content.to_string(),
            sites_corrupted: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = subset_size(sites.len(), rate);
    let picked = pick_sites(&mut rng, sites.len(), k);
    let mut out = bytes.to_vec();
    for &site_idx in picked.iter().rev() {
        out.remove(sites[site_idx]);
    }
    Corruption {
        corrupted: String::from_utf8(out).expect("removing ASCII bytes keeps UTF-8 valid"),
        sites_corrupted: k,
    }
}

/// Rewrite usages of one declared variable to a fresh, undeclared name.
///
/// Declarations are statements of the form `ident = …` or `ident += …` at
/// the start of a line. One declared-then-used variable is picked with the
/// seed; a seeded subset of its usages after the declaration is renamed to
/// `ident_xxxx` with four hex digits, re-drawn until the name collides with
/// no token in the file. The declaration itself stays intact, so every
/// rewritten usage is a reference to an undeclared variable.
pub fn rename_variables(content: &str, rate: f64, seed: u64) -> Corruption {
    let bytes = content.as_bytes();
    let mask = literal_comment_mask(content);
    let idents = identifier_spans(bytes, &mask, true);

    #[derive(PartialEq, Clone, Copy)]
    enum DeclKind {
        Plain,
        Augmented,
    }
    // Declaration spans per line start, with the operator that follows.
    let mut decls: Vec<((usize, usize), DeclKind)> = Vec::new();
    let mut line_start = 0usize;
    while line_start < bytes.len() {
        let line_end = bytes[line_start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| line_start + p)
            .unwrap_or(bytes.len());
        let mut s = line_start;
        while s < line_end && (bytes[s] == b' ' || bytes[s] == b'\t') {
            s += 1;
        }
        if s < line_end && is_ident_start(bytes[s]) && !mask[s] {
            let mut e = s;
            while e < line_end && is_ident_continue(bytes[e]) {
                e += 1;
            }
            let mut t = e;
            while t < line_end && (bytes[t] == b' ' || bytes[t] == b'\t') {
                t += 1;
            }
            if t < line_end && !mask[t] {
                if bytes[t] == b'=' && bytes.get(t + 1) != Some(&b'=') {
                    decls.push(((s, e), DeclKind::Plain));
                } else if bytes[t] == b'+' && bytes.get(t + 1) == Some(&b'=') {
                    decls.push(((s, e), DeclKind::Augmented));
                }
            }
        }
        line_start = line_end + 1;
    }

    let text = |span: &(usize, usize)| &content[span.0..span.1];
    // First declaration position per name, in file order.
    let mut first_decl: Vec<(&str, usize)> = Vec::new();
    for (span, _) in &decls {
        let name = text(span);
        if !first_decl.iter().any(|(n, _)| *n == name) {
            first_decl.push((name, span.1));
        }
    }
    // Plain `=` left-hand sides bind a new value; they are not reads and
    // renaming them would not create an undeclared reference.
    let plain_lhs: std::collections::HashSet<usize> = decls
        .iter()
        .filter(|(_, kind)| *kind == DeclKind::Plain)
        .map(|(span, _)| span.0)
        .collect();

    let usages_of = |name: &str, decl_end: usize| -> Vec<(usize, usize)> {
        idents
            .iter()
            .filter(|span| span.0 >= decl_end && text(span) == name && !plain_lhs.contains(&span.0))
            .copied()
            .collect()
    };

    let candidates: Vec<(&str, usize, Vec<(usize, usize)>)> = first_decl
        .iter()
        .map(|&(name, end)| (name, end, usages_of(name, end)))
        .filter(|(_, _, usages)| !usages.is_empty())
        .collect();
    if candidates.is_empty() {
        return Corruption {
            corrupted: content.to_string(),
            sites_corrupted: 0,
        };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (name, _, usages) = &candidates[rng.random_range(0..candidates.len())];

    let all_tokens: std::collections::HashSet<&str> = identifier_spans(bytes, &mask, false)
        .iter()
        .map(|span| text(span))
        .collect();
    let mut draws = 0u32;
    let fresh = loop {
        // Widen the suffix if a pathological file exhausts the 16-bit space.
        let candidate = if draws < 128 {
            format!("{name}_{:04x}", rng.random::<u16>())
        } else {
            format!("{name}_{:08x}", rng.random::<u32>())
        };
        draws += 1;
        if !all_tokens.contains(candidate.as_str()) {
            break candidate;
        }
    };

    let k = subset_size(usages.len(), rate);
    let picked = pick_sites(&mut rng, usages.len(), k);
    let mut out = content.to_string();
    for &u in picked.iter().rev() {
        let (s, e) = usages[u];
        out.replace_range(s..e, &fresh);
    }
    Corruption {
        corrupted: out,
        sites_corrupted: k,
    }
}

/// Negate a seeded subset of relational operators.
///
/// Replacement map: `==` <-> `!=`, `<` <-> `>=`, `>` <-> `<=`. Tokens inside
/// string literals or comments are never touched.
pub fn alter_conditionals(content: &str, rate: f64, seed: u64) -> Corruption {
    let bytes = content.as_bytes();
    let mask = literal_comment_mask(content);
    let sites = relational_sites(bytes, &mask);
    if sites.is_empty() {
        return Corruption {
            corrupted: content.to_string(),
            sites_corrupted: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = subset_size(sites.len(), rate);
    let picked = pick_sites(&mut rng, sites.len(), k);
    let mut out = content.to_string();
    for &s in picked.iter().rev() {
        let site = sites[s];
        out.replace_range(site.pos..site.pos + site.len, site.replacement);
    }
    Corruption {
        corrupted: out,
        sites_corrupted: k,
    }
}

/// Rewrite a seeded subset of subscripts `name[expr]` to `name[expr+1]`.
pub fn offset_array_indices(content: &str, rate: f64, seed: u64) -> Corruption {
    let bytes = content.as_bytes();
    let mask = literal_comment_mask(content);
    let sites = subscript_sites(bytes, &mask);
    if sites.is_empty() {
        return Corruption {
            corrupted: content.to_string(),
            sites_corrupted: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = subset_size(sites.len(), rate);
    let picked = pick_sites(&mut rng, sites.len(), k);
    // Sites are ordered by opening bracket, but nesting means close
    // positions are not monotone in that order; insert right to left by
    // close position so earlier insertions cannot shift later ones.
    let mut closes: Vec<usize> = picked.iter().map(|&s| sites[s].close).collect();
    closes.sort_unstable_by(|a, b| b.cmp(a));
    let mut out = content.to_string();
    for close in closes {
        out.insert_str(close, "+1");
    }
    Corruption {
        corrupted: out,
        sites_corrupted: k,
    }
}

/// Apply one operator kind to one piece of content.
pub fn corrupt_content(kind: CorruptionKind, content: &str, rate: f64, seed: u64) -> Corruption {
    match kind {
        CorruptionKind::RemoveClosedBrackets => remove_closed_brackets(content, rate, seed),
        CorruptionKind::RenameVariables => rename_variables(content, rate, seed),
        CorruptionKind::AlterConditionals => alter_conditionals(content, rate, seed),
        CorruptionKind::OffsetArrayIndices => offset_array_indices(content, rate, seed),
    }
}

/// Per-document seed: FNV-1a over the global seed bytes and the doc id, so
/// the output of a document does not depend on processing order.
pub fn derive_doc_seed(global_seed: u64, doc_id: &str) -> u64 {
    let mut bytes = Vec::with_capacity(8 + doc_id.len());
    bytes.extend_from_slice(&global_seed.to_le_bytes());
    bytes.extend_from_slice(doc_id.as_bytes());
    fnv1a64(&bytes)
}

/// Corrupt every document of a corpus, one pair per document in id order.
pub fn corrupt_corpus(corpus: &Corpus, operator: &CorruptionOperator) -> Vec<CorruptionPair> {
    corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let seed = derive_doc_seed(operator.seed, &doc.id);
            let corruption = corrupt_content(operator.kind, &doc.content, operator.rate, seed);
            CorruptionPair {
                doc_id: doc.id.clone(),
                kind: operator.kind,
                original: doc.content.clone(),
                corrupted: corruption.corrupted,
                sites_corrupted: corruption.sites_corrupted,
            }
        })
        .collect()
}

/// Persisted pair record. The original content is recoverable from the
/// corpus file and is not duplicated here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairRecord {
    pub doc_id: String,
    pub kind: CorruptionKind,
    pub sites_corrupted: usize,
    pub corrupted: String,
}

pub fn write_pairs<W: Write>(pairs: &[CorruptionPair], writer: W) -> Result<(), CorruptError> {
    let mut w = BufWriter::new(writer);
    for pair in pairs {
        let record = PairRecord {
            doc_id: pair.doc_id.clone(),
            kind: pair.kind,
            sites_corrupted: pair.sites_corrupted,
            corrupted: pair.corrupted.clone(),
        };
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<PairRecord>, CorruptError> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord =
            serde_json::from_str(&line).map_err(|e| CorruptError::MalformedPair {
                line: i + 1,
                detail: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_pairs_path<P: AsRef<Path>>(
    pairs: &[CorruptionPair],
    path: P,
) -> Result<(), CorruptError> {
    write_pairs(pairs, File::create(path)?)
}

pub fn read_pairs_path<P: AsRef<Path>>(path: P) -> Result<Vec<PairRecord>, CorruptError> {
    read_pairs(File::open(path)?)
}
