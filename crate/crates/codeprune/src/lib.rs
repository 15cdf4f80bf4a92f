//! Toolkit for finding and removing low-quality entries from code corpora.
//!
//! The pipeline has three legs. First, code is synthetically corrupted with
//! operators that plant syntax errors (dropped closing brackets, references
//! to undeclared variables) or content errors (negated conditionals, offset
//! array indices), producing matched original/corrupted pairs. Second, both
//! sides of each pair are embedded as unit vectors and the embeddings of the
//! original data are clustered with spherical k-means, which makes visible
//! where corrupted code lands: in smaller clusters and farther from
//! centroids. Third, real data that shares those signatures is pruned, by a
//! weighted size-plus-distance ranking or by one of the comparison
//! strategies (random, prototype distance, semantic dedup, two-stage dedup
//! plus prototypes).
//!
//! Everything is seeded and deterministic: the same inputs, flags, and seed
//! produce byte-identical artifacts regardless of thread count.

pub mod analyze;
pub mod cluster;
pub mod corpus;
pub mod corrupt;
pub mod embed;
pub mod manifest;
pub mod passk;
pub mod prune;
pub mod sample;

pub use corpus::{Corpus, Document};
pub use corrupt::{CorruptionKind, CorruptionOperator, CorruptionPair};
pub use embed::{cosine_distance, EmbeddingSet};
pub use cluster::{ClusterModel, KmeansConfig};
pub use prune::{PruneConfig, PruneMethod, PruneReport};
