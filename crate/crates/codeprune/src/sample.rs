//! Deterministic synthetic sample corpus.
//!
//! One thousand small python-flavored documents with planted duplicates,
//! bracket-heavy files, and a block of bracket-free files, spread over
//! twenty identifier vocabularies so clustering has structure to find. The
//! same generator output ships in-repo as `data/sample_corpus.jsonl`; a test
//! keeps the file and the generator in lockstep.
//!
//! Every bracket-bearing document is balanced per bracket family, so
//! deleting any closing bracket provably unbalances it, and a document
//! without closing brackets has no brackets at all.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document};

pub const SAMPLE_SEED: u64 = 42;
pub const SAMPLE_SIZE: usize = 1000;
pub const SAMPLE_TOPICS: usize = 20;

const VERBS: [&str; 10] = [
    "load", "parse", "merge", "scan", "fold", "index", "pack", "route", "score", "trim",
];
const NOUNS: [&str; 10] = [
    "table", "buffer", "record", "graph", "frame", "queue", "chunk", "lattice", "ledger", "shard",
];

/// Generate the bundled corpus. Pure function of the constants above.
pub fn sample_corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut contents: Vec<String> = (0..SAMPLE_SIZE)
        .map(|i| {
            let topic = i / (SAMPLE_SIZE / SAMPLE_TOPICS);
            document_text(topic, &mut rng)
        })
        .collect();

    // Planted duplicates: one content four times, five contents twice.
    for copy in 101..=103 {
        contents[copy] = contents[100].clone();
    }
    for base in [200, 300, 400, 500, 600] {
        contents[base + 1] = contents[base].clone();
    }

    let documents: Vec<Document> = contents
        .into_iter()
        .enumerate()
        .map(|(i, content)| {
            let topic = i / (SAMPLE_SIZE / SAMPLE_TOPICS);
            Document {
                id: format!("doc{i:04}"),
                path: format!("src/topic{topic:02}/doc{i:04}.py"),
                language: "python".to_string(),
                content,
            }
        })
        .collect();
    Corpus::from_documents(documents).expect("generator emits valid documents")
}

fn document_text(topic: usize, rng: &mut ChaCha8Rng) -> String {
    let verb = VERBS[topic % VERBS.len()];
    let noun = NOUNS[(topic / 2) % NOUNS.len()];
    let fn_name = format!("{verb}_{noun}{topic:02}");
    let var = format!("{noun}_{}", &verb[..2]);
    let c1 = rng.random_range(2..90);
    let c2 = rng.random_range(2..90);
    let c3 = rng.random_range(2..12);
    let suffix = rng.random_range(0..1000u32);

    // Topics 4 and 14 are bracket-free on purpose; the rest lean on
    // brackets, comparisons, and subscripts so every operator finds sites.
    let text = match topic % SAMPLE_TOPICS {
        4 | 14 => format!(
            "{var} = {c1}\n\
             total_{suffix} = {var} + {c2}\n\
             delta = total_{suffix} - {var}\n\
             {var} = delta + {c3}\n"
        ),
        t if t % 3 == 0 => format!(
            "def {fn_name}(items, limit):\n\
             \x20   {var} = 0\n\
             \x20   for i in range(limit):\n\
             \x20       {var} = {var} + items[i]\n\
             \x20   if {var} == {c1}:\n\
             \x20       return items[{var}]\n\
             \x20   return {var} + {c2}\n"
        ),
        t if t % 3 == 1 => format!(
            "def {fn_name}(value):\n\
             \x20   out = {{}}\n\
             \x20   out['{noun}_{suffix}'] = value * {c1}\n\
             \x20   if value < {c2}:\n\
             \x20       out['rest'] = value\n\
             \x20   return out\n"
        ),
        _ => format!(
            "def {fn_name}(xs, y):\n\
             \x20   {var} = xs[{c3}]\n\
             \x20   # keep {noun} totals in bounds\n\
             \x20   if {var} > y:\n\
             \x20       return {var} - y\n\
             \x20   label = '{verb} {noun} {suffix}'\n\
             \x20   if label != 'done':\n\
             \x20       {var} = {var} + {c1}\n\
             \x20   return {var}\n"
        ),
    };

    debug_assert!(brackets_balanced(&text), "unbalanced template: {text}");
    text
}

fn brackets_balanced(text: &str) -> bool {
    [(b'(', b')'), (b'[', b']'), (b'{', b'}')]
        .iter()
        .all(|&(open, close)| {
            text.bytes().filter(|&b| b == open).count()
                == text.bytes().filter(|&b| b == close).count()
        })
}

/// Repo location of the bundled corpus file.
pub fn bundled_corpus_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/sample_corpus.jsonl")
}
