//! Spherical k-means over unit-norm embeddings.
//!
//! Points and centroids live on the unit sphere and the metric is cosine
//! distance. Each update step takes the arithmetic mean of a cluster's
//! members and renormalizes it, which is the unit vector minimizing the
//! summed cosine distance, so the objective never increases. Tie-breaking is
//! always toward the lowest cluster index and reductions run in a fixed id
//! order, so a fit is bit-identical across reruns and thread counts.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{cosine_distance, EmbedError, EmbeddingSet};

/// Slack for the objective monotonicity assertion; covers f64 rounding in
/// the ordered sums, nothing more.
const OBJECTIVE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        KmeansConfig {
            k: 100,
            seed: 0,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

/// Cluster index and cosine distance of one document to its centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub cluster: usize,
    pub distance: f64,
}

/// A fitted spherical k-means model.
///
/// Ids are sorted ascending; `assignments` is parallel to them. Every id maps
/// to its nearest centroid under cosine distance, ties to the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    dim: usize,
    k: usize,
    centroids: Vec<f32>,
    ids: Vec<String>,
    assignments: Vec<Assignment>,
    sizes: Vec<usize>,
    objective: f64,
}

#[derive(Debug)]
pub enum ClusterError {
    /// k = 0 or k > number of embeddings.
    InvalidK { k: usize, n: usize },
    InvalidTol { tol: f64 },
    InvalidIters,
    DimMismatch { expected: usize, actual: usize },
    Embed(EmbedError),
    Io(std::io::Error),
    MalformedAssignment { line: usize, detail: String },
    /// Persisted assignment disagrees with the nearest centroid.
    AssignmentNotNearest { id: String },
    /// Assignment and centroid files disagree on ids or cluster range.
    InconsistentModel { detail: String },
}

impl fmt::Display for ClusterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterError::InvalidK { k, n } => {
                write!(f, "invalid-k: k={k} with {n} embeddings")
            }
            ClusterError::InvalidTol { tol } => write!(f, "invalid-tol: {tol}"),
            ClusterError::InvalidIters => write!(f, "invalid-iters: max_iters must be >= 1"),
            ClusterError::DimMismatch { expected, actual } => {
                write!(f, "dim-mismatch: expected {expected}, got {actual}")
            }
            ClusterError::Embed(e) => write!(f, "{e}"),
            ClusterError::Io(e) => write!(f, "io: {e}"),
            ClusterError::MalformedAssignment { line, detail } => {
                write!(f, "malformed-assignment: line {line}: {detail}")
            }
            ClusterError::AssignmentNotNearest { id } => {
                write!(f, "assignment-not-nearest: id `{id}`")
            }
            ClusterError::InconsistentModel { detail } => {
                write!(f, "inconsistent-model: {detail}")
            }
        }
    }
}

impl std::error::Error for ClusterError {}

impl From<EmbedError> for ClusterError {
    fn from(e: EmbedError) -> Self {
        ClusterError::Embed(e)
    }
}

impl From<std::io::Error> for ClusterError {
    fn from(e: std::io::Error) -> Self {
        ClusterError::Io(e)
    }
}

impl From<serde_json::Error> for ClusterError {
    fn from(e: serde_json::Error) -> Self {
        ClusterError::Io(e.into())
    }
}

fn nearest_centroid(v: &[f32], centroids: &[f32], dim: usize, k: usize) -> Assignment {
    let mut best = Assignment {
        cluster: 0,
        distance: f64::INFINITY,
    };
    for c in 0..k {
        let d = cosine_distance(v, &centroids[c * dim..(c + 1) * dim]);
        // Strict less keeps the lowest index on ties.
        if d < best.distance {
            best = Assignment {
                cluster: c,
                distance: d,
            };
        }
    }
    best
}

/// k-means++ seeding with cosine distance as the selection weight.
fn init_centroids(embeddings: &EmbeddingSet, k: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let n = embeddings.len();
    let dim = embeddings.dim();
    let mut centroids = Vec::with_capacity(k * dim);
    let mut chosen = vec![false; n];

    let first = rng.random_range(0..n);
    centroids.extend_from_slice(embeddings.vector(first));
    chosen[first] = true;

    let mut dists: Vec<f64> = (0..n)
        .map(|i| cosine_distance(embeddings.vector(i), embeddings.vector(first)))
        .collect();

    while centroids.len() / dim < k {
        let total: f64 = dists.iter().sum();
        let next = if total > 0.0 {
            let draw = rng.random::<f64>() * total;
            let mut cum = 0.0;
            let mut pick = None;
            for (i, &d) in dists.iter().enumerate() {
                cum += d;
                if cum > draw {
                    pick = Some(i);
                    break;
                }
            }
            // Cumulative rounding can leave the draw past the last positive
            // weight; fall back to the last point with positive weight.
            pick.unwrap_or_else(|| {
                dists
                    .iter()
                    .rposition(|&d| d > 0.0)
                    .expect("total > 0 implies a positive weight")
            })
        } else {
            // All remaining points coincide with a centroid; take the lowest
            // unchosen index.
            match chosen.iter().position(|&c| !c) {
                Some(i) => i,
                None => 0,
            }
        };
        chosen[next] = true;
        let start = centroids.len();
        centroids.extend_from_slice(embeddings.vector(next));
        let new_centroid: Vec<f32> = centroids[start..].to_vec();
        for (i, d) in dists.iter_mut().enumerate() {
            let nd = cosine_distance(embeddings.vector(i), &new_centroid);
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

/// Fit spherical k-means.
///
/// Initialization is k-means++; iterations stop when the objective improves
/// by less than `tol` or after `max_iters` assignment passes. An empty
/// cluster is reseeded from the point farthest from its current centroid.
pub fn kmeans(embeddings: &EmbeddingSet, config: &KmeansConfig) -> Result<ClusterModel, ClusterError> {
    let n = embeddings.len();
    let dim = embeddings.dim();
    let k = config.k;
    if k == 0 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    if !(config.tol > 0.0) {
        return Err(ClusterError::InvalidTol { tol: config.tol });
    }
    if config.max_iters == 0 {
        return Err(ClusterError::InvalidIters);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = init_centroids(embeddings, k, &mut rng);
    let mut prev_objective = f64::INFINITY;
    let mut assignments: Vec<Assignment> = Vec::new();

    for iter in 0..config.max_iters {
        // Assignment is a pure per-point map; the parallel collect keeps
        // index order, and the objective sums sequentially over that order.
        assignments = (0..n)
            .into_par_iter()
            .map(|i| nearest_centroid(embeddings.vector(i), &centroids, dim, k))
            .collect();
        let objective: f64 = assignments.iter().map(|a| a.distance).sum();
        assert!(
            objective <= prev_objective + OBJECTIVE_SLACK,
            "objective increased: {prev_objective} -> {objective}"
        );
        let converged = prev_objective - objective < config.tol;
        prev_objective = objective;
        // The loop always ends right after an assignment pass, so the
        // published assignment matches the published centroids.
        if converged || iter + 1 == config.max_iters {
            break;
        }

        // Mean-then-renormalize update, accumulated in fixed id order.
        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (i, a) in assignments.iter().enumerate() {
            counts[a.cluster] += 1;
            let v = embeddings.vector(i);
            let sum = &mut sums[a.cluster * dim..(a.cluster + 1) * dim];
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += x as f64;
            }
        }
        let mut reseed_pool: Option<Vec<usize>> = None;
        for c in 0..k {
            let sum = &sums[c * dim..(c + 1) * dim];
            let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
            if counts[c] == 0 || norm < 1e-12 {
                // Reseed from the point farthest from its centroid, ties to
                // the lowest index, skipping points already used this round.
                let pool = reseed_pool.get_or_insert_with(|| {
                    let mut order: Vec<usize> = (0..n).collect();
                    order.sort_by(|&a, &b| {
                        assignments[b]
                            .distance
                            .total_cmp(&assignments[a].distance)
                            .then(a.cmp(&b))
                    });
                    order.reverse(); // used as a stack, farthest on top
                    order
                });
                if let Some(idx) = pool.pop() {
                    centroids[c * dim..(c + 1) * dim].copy_from_slice(embeddings.vector(idx));
                }
            } else {
                for (slot, &s) in centroids[c * dim..(c + 1) * dim].iter_mut().zip(sum) {
                    *slot = (s / norm) as f32;
                }
            }
        }
    }

    let mut sizes = vec![0usize; k];
    for a in &assignments {
        sizes[a.cluster] += 1;
    }
    Ok(ClusterModel {
        dim,
        k,
        centroids,
        ids: embeddings.ids().to_vec(),
        assignments,
        sizes,
        objective: prev_objective,
    })
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn centroid(&self, c: usize) -> &[f32] {
        &self.centroids[c * self.dim..(c + 1) * self.dim]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Training ids in ascending order.
    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    pub fn assignment_of(&self, id: &str) -> Option<Assignment> {
        self.ids
            .binary_search_by(|x| x.as_str().cmp(id))
            .ok()
            .map(|i| self.assignments[i])
    }

    /// Assign one vector to its nearest centroid; the model is unchanged.
    pub fn assign_vector(&self, v: &[f32]) -> Result<Assignment, ClusterError> {
        if v.len() != self.dim {
            return Err(ClusterError::DimMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        Ok(nearest_centroid(v, &self.centroids, self.dim, self.k))
    }

    /// Assign every vector of a set, in id order.
    pub fn assign_set(
        &self,
        vectors: &EmbeddingSet,
    ) -> Result<Vec<(String, Assignment)>, ClusterError> {
        if vectors.dim() != self.dim {
            return Err(ClusterError::DimMismatch {
                expected: self.dim,
                actual: vectors.dim(),
            });
        }
        let out: Vec<(String, Assignment)> = (0..vectors.len())
            .into_par_iter()
            .map(|i| {
                let a = nearest_centroid(vectors.vector(i), &self.centroids, self.dim, self.k);
                (vectors.ids()[i].clone(), a)
            })
            .collect();
        Ok(out)
    }

    fn centroid_id(c: usize, k: usize) -> String {
        let width = 4.max(if k <= 1 { 1 } else { (k - 1).to_string().len() });
        format!("c{c:0width$}")
    }

    /// Write the centroid block (EMB1, ids `c0000`..) and the assignment
    /// records (JSONL: id, cluster, distance).
    pub fn write<W1: Write, W2: Write>(
        &self,
        centroid_writer: W1,
        assignment_writer: W2,
    ) -> Result<(), ClusterError> {
        let entries: Vec<(String, Vec<f32>)> = (0..self.k)
            .map(|c| (Self::centroid_id(c, self.k), self.centroid(c).to_vec()))
            .collect();
        let set = EmbeddingSet::from_entries(self.dim, entries)?;
        set.write(centroid_writer)?;

        let mut w = BufWriter::new(assignment_writer);
        for (id, a) in self.ids.iter().zip(&self.assignments) {
            let record = AssignmentRecord {
                id: id.clone(),
                cluster: a.cluster,
                distance: a.distance,
            };
            serde_json::to_writer(&mut w, &record)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a model back, checking structural consistency: centroid ids,
    /// cluster ranges, unique assignment ids, distances inside [0, 2].
    pub fn read<R1: Read, R2: Read>(
        centroid_reader: R1,
        assignment_reader: R2,
    ) -> Result<Self, ClusterError> {
        let centroid_set = EmbeddingSet::read(centroid_reader)?;
        let k = centroid_set.len();
        let dim = centroid_set.dim();
        if k == 0 {
            return Err(ClusterError::InconsistentModel {
                detail: "centroid block is empty".to_string(),
            });
        }
        // Centroid ids are fixed-width, so their sort order is index order.
        let mut centroids = Vec::with_capacity(k * dim);
        for c in 0..k {
            let expected = Self::centroid_id(c, k);
            let got = &centroid_set.ids()[c];
            if got != &expected {
                return Err(ClusterError::InconsistentModel {
                    detail: format!("centroid id `{got}` where `{expected}` expected"),
                });
            }
            centroids.extend_from_slice(centroid_set.vector(c));
        }

        let mut ids = Vec::new();
        let mut assignments = Vec::new();
        for (i, line) in BufReader::new(assignment_reader).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: AssignmentRecord =
                serde_json::from_str(&line).map_err(|e| ClusterError::MalformedAssignment {
                    line: i + 1,
                    detail: e.to_string(),
                })?;
            if record.cluster >= k {
                return Err(ClusterError::InconsistentModel {
                    detail: format!("cluster {} out of range for k={k}", record.cluster),
                });
            }
            ids.push(record.id);
            assignments.push(Assignment {
                cluster: record.cluster,
                distance: record.distance,
            });
        }
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        let ids: Vec<String> = order.iter().map(|&i| ids[i].clone()).collect();
        let assignments: Vec<Assignment> = order.iter().map(|&i| assignments[i]).collect();
        for pair in ids.windows(2) {
            if pair[0] == pair[1] {
                return Err(ClusterError::InconsistentModel {
                    detail: format!("duplicate assignment id `{}`", pair[0]),
                });
            }
        }

        let mut sizes = vec![0usize; k];
        let mut objective = 0.0;
        for a in &assignments {
            sizes[a.cluster] += 1;
            objective += a.distance;
        }
        for (id, a) in ids.iter().zip(&assignments) {
            if !(0.0..=2.0).contains(&a.distance) {
                return Err(ClusterError::InconsistentModel {
                    detail: format!("distance {} of `{id}` outside [0, 2]", a.distance),
                });
            }
        }
        Ok(ClusterModel {
            dim,
            k,
            centroids,
            ids,
            assignments,
            sizes,
            objective,
        })
    }

    /// Check that every stored assignment is the nearest centroid of the
    /// corresponding vector. Persisted models cannot carry the document
    /// vectors, so this runs wherever model and embeddings meet again.
    pub fn validate_against(&self, embeddings: &EmbeddingSet) -> Result<(), ClusterError> {
        if embeddings.dim() != self.dim {
            return Err(ClusterError::DimMismatch {
                expected: self.dim,
                actual: embeddings.dim(),
            });
        }
        for (id, a) in self.ids.iter().zip(&self.assignments) {
            let v = match embeddings.get(id) {
                Some(v) => v,
                None => continue,
            };
            let nearest = nearest_centroid(v, &self.centroids, self.dim, self.k);
            if nearest.cluster != a.cluster || (nearest.distance - a.distance).abs() > 1e-9 {
                return Err(ClusterError::AssignmentNotNearest { id: id.clone() });
            }
        }
        Ok(())
    }

    pub fn centroid_path(prefix: &Path) -> PathBuf {
        with_suffix(prefix, ".centroids.emb1")
    }

    pub fn assignment_path(prefix: &Path) -> PathBuf {
        with_suffix(prefix, ".assignments.jsonl")
    }

    pub fn save<P: AsRef<Path>>(&self, prefix: P) -> Result<(), ClusterError> {
        let prefix = prefix.as_ref();
        self.write(
            File::create(Self::centroid_path(prefix))?,
            File::create(Self::assignment_path(prefix))?,
        )
    }

    pub fn load<P: AsRef<Path>>(prefix: P) -> Result<Self, ClusterError> {
        let prefix = prefix.as_ref();
        Self::read(
            File::open(Self::centroid_path(prefix))?,
            File::open(Self::assignment_path(prefix))?,
        )
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, Serialize, Deserialize)]
struct AssignmentRecord {
    id: String,
    cluster: usize,
    distance: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn basis(dim: usize, axis: usize) -> Vec<f32> {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        v
    }

    #[test]
    fn identical_vectors_single_cluster() {
        let v = basis(8, 0);
        let set = set_of(&[("a", &v), ("b", &v), ("c", &v)]);
        let model = kmeans(&set, &KmeansConfig { k: 1, ..KmeansConfig::default() }).unwrap();
        assert_eq!(model.objective(), 0.0);
        assert_eq!(model.sizes(), &[3]);
        assert_eq!(model.centroid(0), &v[..]);
    }

    #[test]
    fn two_planted_clusters_recovered() {
        let e1 = basis(8, 0);
        let e2 = basis(8, 1);
        let set = set_of(&[("a", &e1), ("b", &e1), ("c", &e2), ("d", &e2)]);
        let model = kmeans(&set, &KmeansConfig { k: 2, ..KmeansConfig::default() }).unwrap();
        assert_eq!(model.objective(), 0.0);
        let mut sizes = model.sizes().to_vec();
        sizes.sort_unstable();
        assert_eq!(sizes, [2, 2]);
        let a = model.assignment_of("a").unwrap();
        let b = model.assignment_of("b").unwrap();
        let c = model.assignment_of("c").unwrap();
        let d = model.assignment_of("d").unwrap();
        assert_eq!(a.cluster, b.cluster);
        assert_eq!(c.cluster, d.cluster);
        assert_ne!(a.cluster, c.cluster);
        // Exhaustive check over the three nontrivial 2-partitions of four
        // points: only {ab|cd} reaches objective 0, so this is the optimum.
        assert_eq!(model.centroid(a.cluster), &e1[..]);
        assert_eq!(model.centroid(c.cluster), &e2[..]);
    }

    #[test]
    fn k_equals_n_puts_every_point_alone() {
        let set = set_of(&[
            ("a", &basis(8, 0)),
            ("b", &basis(8, 1)),
            ("c", &basis(8, 2)),
            ("d", &basis(8, 3)),
        ]);
        let model = kmeans(&set, &KmeansConfig { k: 4, ..KmeansConfig::default() }).unwrap();
        assert_eq!(model.objective(), 0.0);
        assert_eq!(model.sizes(), &[1, 1, 1, 1]);
    }

    #[test]
    fn rejects_bad_k() {
        let set = set_of(&[("a", &basis(8, 0))]);
        assert!(matches!(
            kmeans(&set, &KmeansConfig { k: 0, ..KmeansConfig::default() }),
            Err(ClusterError::InvalidK { .. })
        ));
        assert!(matches!(
            kmeans(&set, &KmeansConfig { k: 2, ..KmeansConfig::default() }),
            Err(ClusterError::InvalidK { .. })
        ));
    }

    #[test]
    fn assign_training_vectors_reproduces_assignment() {
        let set = set_of(&[
            ("a", &basis(8, 0)),
            ("b", &basis(8, 1)),
            ("c", &basis(8, 1)),
        ]);
        let model = kmeans(&set, &KmeansConfig { k: 2, ..KmeansConfig::default() }).unwrap();
        let assigned = model.assign_set(&set).unwrap();
        for (id, a) in assigned {
            let expected = model.assignment_of(&id).unwrap();
            assert_eq!(a.cluster, expected.cluster);
            assert_eq!(a.distance, expected.distance);
        }
    }

    #[test]
    fn assign_vector_equal_to_centroid_has_zero_distance() {
        let set = set_of(&[("a", &basis(8, 0)), ("b", &basis(8, 1))]);
        let model = kmeans(&set, &KmeansConfig { k: 2, ..KmeansConfig::default() }).unwrap();
        let c1 = model.centroid(1).to_vec();
        let a = model.assign_vector(&c1).unwrap();
        assert_eq!(a.cluster, 1);
        assert_eq!(a.distance, 0.0);
    }

    #[test]
    fn tie_breaks_to_lowest_cluster_index() {
        let set = set_of(&[("a", &basis(4, 0)), ("b", &basis(4, 1))]);
        let model = kmeans(&set, &KmeansConfig { k: 2, ..KmeansConfig::default() }).unwrap();
        let s = 0.5f32.sqrt();
        let mid = [s, s, 0.0, 0.0];
        let a = model.assign_vector(&mid).unwrap();
        assert_eq!(a.cluster, 0, "equidistant vector goes to the lower index");
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let entries: Vec<(String, Vec<f32>)> = (0..40)
            .map(|i| {
                let mut v = vec![0.1f32; 16];
                v[i % 16] = 1.0 + (i as f32) * 0.01;
                (format!("d{i:02}"), v)
            })
            .collect();
        let set = EmbeddingSet::from_entries(16, entries).unwrap();
        let cfg = KmeansConfig { k: 5, seed: 9, ..KmeansConfig::default() };
        let m1 = kmeans(&set, &cfg).unwrap();
        let m2 = kmeans(&set, &cfg).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn dim_mismatch_is_rejected() {
        let set = set_of(&[("a", &basis(8, 0)), ("b", &basis(8, 1))]);
        let model = kmeans(&set, &KmeansConfig { k: 1, ..KmeansConfig::default() }).unwrap();
        assert!(matches!(
            model.assign_vector(&basis(4, 0)),
            Err(ClusterError::DimMismatch { .. })
        ));
    }

    #[test]
    fn model_round_trips_through_files() {
        let entries: Vec<(String, Vec<f32>)> = (0..12)
            .map(|i| {
                let mut v = vec![0.05f32; 8];
                v[i % 4] = 1.0;
                (format!("d{i:02}"), v)
            })
            .collect();
        let set = EmbeddingSet::from_entries(8, entries).unwrap();
        let model = kmeans(&set, &KmeansConfig { k: 3, seed: 4, ..KmeansConfig::default() }).unwrap();
        let mut centroid_buf = Vec::new();
        let mut assign_buf = Vec::new();
        model.write(&mut centroid_buf, &mut assign_buf).unwrap();
        let back = ClusterModel::read(&centroid_buf[..], &assign_buf[..]).unwrap();
        assert_eq!(back, model);
    }

    /// No single-point reassignment may lower the objective at termination.
    #[test]
    fn local_optimality_on_small_instances() {
        let entries: Vec<(String, Vec<f32>)> = (0..9)
            .map(|i| {
                let mut v = vec![0.2f32; 6];
                v[i % 3] = 1.0;
                v[(i * 2) % 6] += 0.1 * (i as f32);
                (format!("d{i}"), v)
            })
            .collect();
        let set = EmbeddingSet::from_entries(6, entries).unwrap();
        let model = kmeans(&set, &KmeansConfig { k: 3, seed: 1, ..KmeansConfig::default() }).unwrap();

        let objective_of = |assign: &[usize]| -> f64 {
            let mut total = 0.0;
            for c in 0..3 {
                let members: Vec<usize> =
                    (0..set.len()).filter(|&i| assign[i] == c).collect();
                if members.is_empty() {
                    continue;
                }
                let mut sum = vec![0.0f64; 6];
                for &m in &members {
                    for (s, &x) in sum.iter_mut().zip(set.vector(m)) {
                        *s += x as f64;
                    }
                }
                let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
                let centroid: Vec<f32> = sum.iter().map(|&s| (s / norm) as f32).collect();
                for &m in &members {
                    total += cosine_distance(set.vector(m), &centroid);
                }
            }
            total
        };

        let base: Vec<usize> = model.assignments().iter().map(|a| a.cluster).collect();
        let base_obj = objective_of(&base);
        for i in 0..set.len() {
            for c in 0..3 {
                if c == base[i] {
                    continue;
                }
                let mut moved = base.clone();
                moved[i] = c;
                assert!(
                    objective_of(&moved) >= base_obj - 1e-9,
                    "moving point {i} to cluster {c} improved the objective"
                );
            }
        }
    }
}
