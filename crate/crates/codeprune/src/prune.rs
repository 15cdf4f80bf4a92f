//! Pruning strategies over a fitted cluster model.
//!
//! The weighted strategy ("scip") splits the prune budget between two
//! rankings: documents in the smallest clusters go first, then the documents
//! farthest from their centroid among the survivors. Both budget shares are
//! fractions of the original corpus size, so the total pruned is always
//! exactly floor(p * N). The comparison strategies are seeded random
//! sampling, prototype pruning (closest to centroid first), semantic dedup
//! within clusters, and the two-stage dedup-then-prototypes combination.
//!
//! Every ranking uses total orders with id tie-breaks, so reports are
//! deterministic given (model, embeddings, config).

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cluster::{kmeans, ClusterError, ClusterModel, KmeansConfig};
use crate::embed::{dot, EmbeddingSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneMethod {
    Scip,
    Random,
    SslPrototypes,
    SemDeDup,
    D4,
}

impl PruneMethod {
    pub const ALL: [PruneMethod; 5] = [
        PruneMethod::Scip,
        PruneMethod::Random,
        PruneMethod::SslPrototypes,
        PruneMethod::SemDeDup,
        PruneMethod::D4,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PruneMethod::Scip => "scip",
            PruneMethod::Random => "random",
            PruneMethod::SslPrototypes => "ssl-prototypes",
            PruneMethod::SemDeDup => "semdedup",
            PruneMethod::D4 => "d4",
        }
    }

    /// True when the method needs the document embeddings, not just the
    /// model.
    pub fn needs_embeddings(&self) -> bool {
        matches!(self, PruneMethod::SemDeDup | PruneMethod::D4)
    }
}

impl fmt::Display for PruneMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PruneMethod {
    type Err = PruneError;

    fn from_str(s: &str) -> Result<Self, PruneError> {
        PruneMethod::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| PruneError::UnknownMethod { method: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub method: PruneMethod,
    /// Fraction p of the corpus to prune, in [0, 1).
    pub fraction: f64,
    /// Share of the budget spent on the cluster-size criterion (scip only).
    pub alpha: f64,
    /// Pairwise similarity threshold for dedup grouping (d4 stage 1; the
    /// standalone semdedup method finds its own threshold by binary search).
    pub tau: f64,
    pub seed: u64,
    /// Share of the budget given to the dedup stage of d4.
    pub dedup_share: f64,
}

impl PruneConfig {
    pub const DEFAULT_FRACTION: f64 = 0.20;
    pub const DEFAULT_ALPHA: f64 = 0.8;
    pub const DEFAULT_TAU: f64 = 0.95;
    pub const DEFAULT_DEDUP_SHARE: f64 = 0.5;

    pub fn new(method: PruneMethod) -> Self {
        PruneConfig {
            method,
            fraction: Self::DEFAULT_FRACTION,
            alpha: Self::DEFAULT_ALPHA,
            tau: Self::DEFAULT_TAU,
            seed: 0,
            dedup_share: Self::DEFAULT_DEDUP_SHARE,
        }
    }

    pub fn validate(&self) -> Result<(), PruneError> {
        let ok = (0.0..1.0).contains(&self.fraction)
            && (0.0..=1.0).contains(&self.alpha)
            && (-1.0..=1.0).contains(&self.tau)
            && (0.0..=1.0).contains(&self.dedup_share);
        if ok {
            Ok(())
        } else {
            Err(PruneError::InvalidConfig {
                detail: format!(
                    "fraction {} must be in [0,1), alpha {} in [0,1], tau {} in [-1,1], \
                     dedup_share {} in [0,1]",
                    self.fraction, self.alpha, self.tau, self.dedup_share
                ),
            })
        }
    }
}

/// One pruned document with the signals that ranked it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    pub reason: String,
}

/// Outcome of one pruning run: the ordered prune trace plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub method: PruneMethod,
    pub config: PruneConfig,
    pub total: usize,
    pub kept_count: usize,
    /// Pruned documents in rank order.
    pub pruned: Vec<RankEntry>,
    /// (cluster, pruned count) pairs against the input model, ascending.
    pub per_cluster_pruned: Vec<(usize, usize)>,
}

impl PruneReport {
    pub fn pruned_ids(&self) -> impl Iterator<Item = &str> {
        self.pruned.iter().map(|e| e.id.as_str())
    }

    pub fn pruned_id_set(&self) -> HashSet<&str> {
        self.pruned_ids().collect()
    }
}

#[derive(Debug)]
pub enum PruneError {
    UnknownMethod { method: String },
    InvalidConfig { detail: String },
    /// Method needs embeddings but none were supplied.
    MissingEmbeddings,
    /// Model ids missing from the embedding set, or dims disagree.
    ModelEmbeddingMismatch { detail: String },
    /// Dedup cannot reach the requested budget even at tau = -1.
    BudgetUnreachable { budget: usize, reachable: usize },
    Cluster(ClusterError),
    Io(std::io::Error),
}

impl fmt::Display for PruneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PruneError::UnknownMethod { method } => write!(f, "unknown-method: `{method}`"),
            PruneError::InvalidConfig { detail } => write!(f, "invalid-config: {detail}"),
            PruneError::MissingEmbeddings => {
                write!(f, "missing-embeddings: method requires an embedding set")
            }
            PruneError::ModelEmbeddingMismatch { detail } => {
                write!(f, "model-embedding-mismatch: {detail}")
            }
            PruneError::BudgetUnreachable { budget, reachable } => write!(
                f,
                "budget-unreachable: dedup can prune at most {reachable} of the requested {budget}"
            ),
            PruneError::Cluster(e) => write!(f, "{e}"),
            PruneError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for PruneError {}

impl From<ClusterError> for PruneError {
    fn from(e: ClusterError) -> Self {
        PruneError::Cluster(e)
    }
}

impl From<std::io::Error> for PruneError {
    fn from(e: std::io::Error) -> Self {
        PruneError::Io(e)
    }
}

/// floor(fraction * n), nudged so decimal fractions hit their mathematical
/// floor despite binary representation noise.
pub fn budget(n: usize, fraction: f64) -> usize {
    (((fraction * n as f64) + 1e-9).floor() as usize).min(n)
}

#[derive(Clone)]
struct DocSignal {
    idx: usize,
    cluster: usize,
    size: usize,
    distance: f64,
}

fn signals(model: &ClusterModel) -> Vec<DocSignal> {
    model
        .assignments()
        .iter()
        .enumerate()
        .map(|(idx, a)| DocSignal {
            idx,
            cluster: a.cluster,
            size: model.sizes()[a.cluster],
            distance: a.distance,
        })
        .collect()
}

fn entry(model: &ClusterModel, s: &DocSignal, reason: &str) -> RankEntry {
    RankEntry {
        id: model.ids()[s.idx].clone(),
        cluster: Some(s.cluster),
        cluster_size: Some(s.size),
        distance: Some(s.distance),
        reason: reason.to_string(),
    }
}

fn build_report(model: &ClusterModel, config: &PruneConfig, pruned: Vec<RankEntry>) -> PruneReport {
    let mut per_cluster = vec![0usize; model.k()];
    for e in &pruned {
        if let Some(c) = e.cluster {
            per_cluster[c] += 1;
        }
    }
    PruneReport {
        method: config.method,
        config: *config,
        total: model.ids().len(),
        kept_count: model.ids().len() - pruned.len(),
        per_cluster_pruned: per_cluster
            .into_iter()
            .enumerate()
            .filter(|(_, n)| *n > 0)
            .collect(),
        pruned,
    }
}

/// Weighted size-plus-distance pruning.
///
/// With budget B = floor(p * N): the first floor(alpha * B) documents go by
/// ascending cluster size (within a cluster, farthest from the centroid
/// first, then lowest id); the remaining budget goes to the survivors ranked
/// by descending centroid distance, ties to the lowest id. Both shares are
/// fractions of the original corpus, so a run never over- or under-prunes.
pub fn prune_scip(model: &ClusterModel, config: &PruneConfig) -> Result<PruneReport, PruneError> {
    config.validate()?;
    let n = model.ids().len();
    let total_budget = budget(n, config.fraction);
    let size_budget = budget(total_budget, config.alpha);
    let distance_budget = total_budget - size_budget;

    let mut by_size = signals(model);
    by_size.sort_by(|a, b| {
        a.size
            .cmp(&b.size)
            .then_with(|| b.distance.total_cmp(&a.distance))
            .then_with(|| model.ids()[a.idx].cmp(&model.ids()[b.idx]))
    });
    let (size_pruned, survivors) = by_size.split_at(size_budget.min(n));

    let mut by_distance: Vec<&DocSignal> = survivors.iter().collect();
    by_distance.sort_by(|a, b| {
        b.distance
            .total_cmp(&a.distance)
            .then_with(|| model.ids()[a.idx].cmp(&model.ids()[b.idx]))
    });

    let mut pruned = Vec::with_capacity(total_budget);
    pruned.extend(size_pruned.iter().map(|s| entry(model, s, "size")));
    pruned.extend(
        by_distance
            .iter()
            .take(distance_budget)
            .map(|s| entry(model, s, "distance")),
    );
    Ok(build_report(model, config, pruned))
}

/// Seeded uniform sample of floor(p * N) ids, without replacement.
pub fn prune_random(ids: &[String], config: &PruneConfig) -> Result<PruneReport, PruneError> {
    config.validate()?;
    let n = ids.len();
    let b = budget(n, config.fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let picked = rand::seq::index::sample(&mut rng, n, b);
    let pruned: Vec<RankEntry> = picked
        .iter()
        .map(|i| RankEntry {
            id: ids[i].clone(),
            cluster: None,
            cluster_size: None,
            distance: None,
            reason: "random".to_string(),
        })
        .collect();
    Ok(PruneReport {
        method: config.method,
        config: *config,
        total: n,
        kept_count: n - pruned.len(),
        per_cluster_pruned: Vec::new(),
        pruned,
    })
}

/// Prototype pruning: remove the floor(p * N) documents closest to their
/// centroid, the most prototypical examples of a large dataset.
pub fn prune_ssl_prototypes(
    model: &ClusterModel,
    config: &PruneConfig,
) -> Result<PruneReport, PruneError> {
    config.validate()?;
    let b = budget(model.ids().len(), config.fraction);
    let mut by_distance = signals(model);
    by_distance.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| model.ids()[a.idx].cmp(&model.ids()[b.idx]))
    });
    let pruned = by_distance
        .iter()
        .take(b)
        .map(|s| entry(model, s, "prototype"))
        .collect();
    Ok(build_report(model, config, pruned))
}

/// A document slated for removal by dedup grouping.
#[derive(Debug, Clone, PartialEq)]
pub struct DedupCandidate {
    pub id: String,
    pub cluster: usize,
    pub cluster_size: usize,
    pub similarity_to_centroid: f64,
}

/// Per-cluster pairwise similarities, computed once and thresholded many
/// times during the budget search.
struct ClusterGeometry {
    /// Per cluster: member indices into the model id order, ascending.
    members: Vec<Vec<usize>>,
    /// Per cluster: row-major square of pairwise similarities.
    pair_sims: Vec<Vec<f64>>,
    /// Per cluster: member similarity to the cluster centroid.
    centroid_sims: Vec<Vec<f64>>,
}

fn cluster_geometry(
    model: &ClusterModel,
    embeddings: &EmbeddingSet,
) -> Result<ClusterGeometry, PruneError> {
    if embeddings.dim() != model.dim() {
        return Err(PruneError::ModelEmbeddingMismatch {
            detail: format!(
                "model dim {} vs embedding dim {}",
                model.dim(),
                embeddings.dim()
            ),
        });
    }
    let k = model.k();
    let mut members = vec![Vec::new(); k];
    for (idx, a) in model.assignments().iter().enumerate() {
        members[a.cluster].push(idx);
    }
    let vector_of = |idx: usize| -> Result<&[f32], PruneError> {
        let id = &model.ids()[idx];
        embeddings
            .get(id)
            .ok_or_else(|| PruneError::ModelEmbeddingMismatch {
                detail: format!("id `{id}` missing from embedding set"),
            })
    };
    let mut pair_sims = Vec::with_capacity(k);
    let mut centroid_sims = Vec::with_capacity(k);
    for (c, member) in members.iter().enumerate() {
        let m = member.len();
        let mut sims = vec![0.0f64; m * m];
        for i in 0..m {
            for j in (i + 1)..m {
                let s = dot(vector_of(member[i])?, vector_of(member[j])?);
                sims[i * m + j] = s;
                sims[j * m + i] = s;
            }
        }
        let to_centroid: Vec<f64> = member
            .iter()
            .map(|&idx| Ok(dot(vector_of(idx)?, model.centroid(c))))
            .collect::<Result<_, PruneError>>()?;
        pair_sims.push(sims);
        centroid_sims.push(to_centroid);
    }
    Ok(ClusterGeometry {
        members,
        pair_sims,
        centroid_sims,
    })
}

fn union_find_root(parent: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while parent[root] != root {
        root = parent[root];
    }
    let mut cur = x;
    while parent[cur] != root {
        let next = parent[cur];
        parent[cur] = root;
        cur = next;
    }
    root
}

/// Dedup candidates at a fixed threshold: within each cluster, pairs with
/// similarity strictly above `tau` are grouped transitively; every group
/// keeps only its member least similar to the centroid (ties to the lowest
/// id) and offers the rest for pruning.
fn candidates_at(geo: &ClusterGeometry, model: &ClusterModel, tau: f64) -> Vec<DedupCandidate> {
    let mut candidates = Vec::new();
    for (c, member) in geo.members.iter().enumerate() {
        let m = member.len();
        if m < 2 {
            continue;
        }
        let sims = &geo.pair_sims[c];
        let mut parent: Vec<usize> = (0..m).collect();
        for i in 0..m {
            for j in (i + 1)..m {
                if sims[i * m + j] > tau {
                    let (ri, rj) = (
                        union_find_root(&mut parent, i),
                        union_find_root(&mut parent, j),
                    );
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> =
            std::collections::BTreeMap::new();
        for i in 0..m {
            let root = union_find_root(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        for group in groups.values() {
            if group.len() < 2 {
                continue;
            }
            // Members are in ascending id order, so strict less keeps the
            // lowest id among equally-similar entries.
            let keep = group
                .iter()
                .copied()
                .reduce(|best, i| {
                    if geo.centroid_sims[c][i] < geo.centroid_sims[c][best] {
                        i
                    } else {
                        best
                    }
                })
                .expect("group has members");
            for &i in group {
                if i != keep {
                    candidates.push(DedupCandidate {
                        id: model.ids()[geo.members[c][i]].clone(),
                        cluster: c,
                        cluster_size: m,
                        similarity_to_centroid: geo.centroid_sims[c][i],
                    });
                }
            }
        }
    }
    candidates
}

/// Public fixed-threshold dedup: the grouping primitive behind both the
/// budgeted method and d4 stage 1.
pub fn semdedup_candidates(
    model: &ClusterModel,
    embeddings: &EmbeddingSet,
    tau: f64,
) -> Result<Vec<DedupCandidate>, PruneError> {
    let geo = cluster_geometry(model, embeddings)?;
    Ok(candidates_at(&geo, model, tau))
}

fn rank_candidates(mut candidates: Vec<DedupCandidate>) -> Vec<DedupCandidate> {
    // Most prototypical duplicates first; id breaks ties.
    candidates.sort_by(|a, b| {
        b.similarity_to_centroid
            .total_cmp(&a.similarity_to_centroid)
            .then_with(|| a.id.cmp(&b.id))
    });
    candidates
}

fn candidate_entry(c: &DedupCandidate, reason: &str) -> RankEntry {
    RankEntry {
        id: c.id.clone(),
        cluster: Some(c.cluster),
        cluster_size: Some(c.cluster_size),
        distance: Some(1.0 - c.similarity_to_centroid),
        reason: reason.to_string(),
    }
}

/// Semantic dedup pruning to an exact budget.
///
/// A 32-step binary search over [-1, 1] finds the largest threshold whose
/// candidate count still covers floor(p * N); the ranked candidate list is
/// then truncated to the budget.
pub fn prune_semdedup(
    model: &ClusterModel,
    embeddings: &EmbeddingSet,
    config: &PruneConfig,
) -> Result<PruneReport, PruneError> {
    config.validate()?;
    let n = model.ids().len();
    let b = budget(n, config.fraction);
    if b == 0 {
        return Ok(build_report(model, config, Vec::new()));
    }
    let geo = cluster_geometry(model, embeddings)?;

    let reachable = candidates_at(&geo, model, -1.0);
    if reachable.len() < b {
        return Err(PruneError::BudgetUnreachable {
            budget: b,
            reachable: reachable.len(),
        });
    }
    let at_top = candidates_at(&geo, model, 1.0);
    let final_candidates = if at_top.len() >= b {
        at_top
    } else {
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        for _ in 0..32 {
            let mid = 0.5 * (lo + hi);
            if candidates_at(&geo, model, mid).len() >= b {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        candidates_at(&geo, model, lo)
    };
    let pruned = rank_candidates(final_candidates)
        .iter()
        .take(b)
        .map(|c| candidate_entry(c, "semdedup"))
        .collect();
    Ok(build_report(model, config, pruned))
}

/// Two-stage pruning: dedup at the configured threshold up to the dedup
/// share of the budget, then re-cluster the survivors (same k and seed) and
/// prune prototypes for the remainder.
pub fn prune_d4(
    model: &ClusterModel,
    embeddings: &EmbeddingSet,
    config: &PruneConfig,
) -> Result<PruneReport, PruneError> {
    config.validate()?;
    let n = model.ids().len();
    let total_budget = budget(n, config.fraction);
    if total_budget == 0 {
        return Ok(build_report(model, config, Vec::new()));
    }
    let stage1_budget = budget(total_budget, config.dedup_share);
    let ranked = rank_candidates(semdedup_candidates(model, embeddings, config.tau)?);
    let stage1: Vec<&DedupCandidate> = ranked.iter().take(stage1_budget).collect();
    let stage1_ids: HashSet<&str> = stage1.iter().map(|c| c.id.as_str()).collect();

    let mut pruned: Vec<RankEntry> = stage1
        .iter()
        .map(|c| candidate_entry(c, "semdedup-stage1"))
        .collect();

    let stage2_budget = total_budget - pruned.len();
    if stage2_budget > 0 {
        let survivors: Vec<String> = model
            .ids()
            .iter()
            .filter(|id| !stage1_ids.contains(id.as_str()))
            .cloned()
            .collect();
        let sub_embeddings = embeddings
            .subset(&survivors)
            .map_err(|e| PruneError::ModelEmbeddingMismatch { detail: e.to_string() })?;
        let sub_config = KmeansConfig {
            k: model.k().min(survivors.len()),
            seed: config.seed,
            ..KmeansConfig::default()
        };
        let sub_model = kmeans(&sub_embeddings, &sub_config)?;
        let mut by_distance = signals(&sub_model);
        by_distance.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then_with(|| sub_model.ids()[a.idx].cmp(&sub_model.ids()[b.idx]))
        });
        for s in by_distance.iter().take(stage2_budget) {
            // Report the cluster signals of the input model, the frame of
            // reference shared by every method.
            let id = &sub_model.ids()[s.idx];
            let original = model.assignment_of(id).expect("survivor came from the model");
            pruned.push(RankEntry {
                id: id.clone(),
                cluster: Some(original.cluster),
                cluster_size: Some(model.sizes()[original.cluster]),
                distance: Some(original.distance),
                reason: "prototype-stage2".to_string(),
            });
        }
    }
    Ok(build_report(model, config, pruned))
}

/// Dispatch on the configured method. Embeddings are required for the
/// methods that compare documents pairwise.
pub fn prune(
    model: &ClusterModel,
    embeddings: Option<&EmbeddingSet>,
    config: &PruneConfig,
) -> Result<PruneReport, PruneError> {
    match config.method {
        PruneMethod::Scip => prune_scip(model, config),
        PruneMethod::SslPrototypes => prune_ssl_prototypes(model, config),
        PruneMethod::Random => {
            let mut report = prune_random(model.ids(), config)?;
            // The model is at hand here, so fill in the cluster signals the
            // bare id-sampling operation cannot know.
            for e in &mut report.pruned {
                if let Some(a) = model.assignment_of(&e.id) {
                    e.cluster = Some(a.cluster);
                    e.cluster_size = Some(model.sizes()[a.cluster]);
                    e.distance = Some(a.distance);
                }
            }
            let mut per_cluster = vec![0usize; model.k()];
            for e in &report.pruned {
                if let Some(c) = e.cluster {
                    per_cluster[c] += 1;
                }
            }
            report.per_cluster_pruned = per_cluster
                .into_iter()
                .enumerate()
                .filter(|(_, n)| *n > 0)
                .collect();
            Ok(report)
        }
        PruneMethod::SemDeDup => {
            let embeddings = embeddings.ok_or(PruneError::MissingEmbeddings)?;
            prune_semdedup(model, embeddings, config)
        }
        PruneMethod::D4 => {
            let embeddings = embeddings.ok_or(PruneError::MissingEmbeddings)?;
            prune_d4(model, embeddings, config)
        }
    }
}

/// Write the rank trace as JSONL and the report summary as one JSON object.
pub fn write_report<W1: Write, W2: Write>(
    report: &PruneReport,
    records_writer: W1,
    summary_writer: W2,
) -> Result<(), PruneError> {
    let mut w = BufWriter::new(records_writer);
    for e in &report.pruned {
        serde_json::to_writer(&mut w, e).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct Summary<'a> {
        method: PruneMethod,
        config: &'a PruneConfig,
        total: usize,
        pruned_count: usize,
        kept_count: usize,
        per_cluster_pruned: &'a [(usize, usize)],
    }
    let mut w = BufWriter::new(summary_writer);
    serde_json::to_writer_pretty(
        &mut w,
        &Summary {
            method: report.method,
            config: &report.config,
            total: report.total,
            pruned_count: report.pruned.len(),
            kept_count: report.kept_count,
            per_cluster_pruned: &report.per_cluster_pruned,
        },
    )
    .map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_report_paths<P: AsRef<Path>>(
    report: &PruneReport,
    records_path: P,
    summary_path: P,
) -> Result<(), PruneError> {
    write_report(
        report,
        File::create(records_path)?,
        File::create(summary_path)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::KmeansConfig;
    use crate::embed::EmbeddingSet;

    /// Model with hand-picked clusters and distances, built through the
    /// persistence surface so tests control every signal exactly.
    fn synthetic_model(assignments: &[(&str, usize, f64)], k: usize, dim: usize) -> ClusterModel {
        let mut centroid_buf = Vec::new();
        let entries: Vec<(String, Vec<f32>)> = (0..k)
            .map(|c| {
                let mut v = vec![0.0f32; dim];
                v[c % dim] = 1.0;
                (format!("c{c:04}"), v)
            })
            .collect();
        EmbeddingSet::from_entries(dim, entries)
            .unwrap()
            .write(&mut centroid_buf)
            .unwrap();
        let assign_buf: String = assignments
            .iter()
            .map(|(id, cluster, distance)| {
                format!(
                    "{}\n",
                    serde_json::json!({ "id": id, "cluster": cluster, "distance": distance })
                )
            })
            .collect();
        ClusterModel::read(&centroid_buf[..], assign_buf.as_bytes()).unwrap()
    }

    /// Clusters sized {6, 3, 1} over ten documents.
    fn sized_631_model() -> ClusterModel {
        synthetic_model(
            &[
                ("d0", 0, 0.10),
                ("d1", 0, 0.20),
                ("d2", 0, 0.30),
                ("d3", 0, 0.40),
                ("d4", 0, 0.50),
                ("d5", 0, 0.60),
                ("d6", 1, 0.15),
                ("d7", 1, 0.45),
                ("d8", 1, 0.25),
                ("d9", 2, 0.05),
            ],
            3,
            4,
        )
    }

    fn cfg(method: PruneMethod) -> PruneConfig {
        PruneConfig::new(method)
    }

    #[test]
    fn scip_alpha_one_takes_smallest_clusters() {
        let model = sized_631_model();
        let config = PruneConfig {
            fraction: 0.2,
            alpha: 1.0,
            ..cfg(PruneMethod::Scip)
        };
        let report = prune_scip(&model, &config).unwrap();
        // B = 2: the singleton cluster's document, then the farthest member
        // of the size-3 cluster.
        let ids: Vec<&str> = report.pruned_ids().collect();
        assert_eq!(ids, ["d9", "d7"]);
        assert!(report.pruned.iter().all(|e| e.reason == "size"));
        assert_eq!(report.kept_count, 8);
    }

    #[test]
    fn scip_alpha_zero_is_pure_distance_pruning() {
        let model = sized_631_model();
        let config = PruneConfig {
            fraction: 0.3,
            alpha: 0.0,
            ..cfg(PruneMethod::Scip)
        };
        let report = prune_scip(&model, &config).unwrap();
        // Top-3 distances: d5 (0.60), d4 (0.50), d7 (0.45).
        let ids: Vec<&str> = report.pruned_ids().collect();
        assert_eq!(ids, ["d5", "d4", "d7"]);
        assert!(report.pruned.iter().all(|e| e.reason == "distance"));
    }

    #[test]
    fn scip_fraction_zero_prunes_nothing() {
        let model = sized_631_model();
        let config = PruneConfig {
            fraction: 0.0,
            ..cfg(PruneMethod::Scip)
        };
        let report = prune_scip(&model, &config).unwrap();
        assert!(report.pruned.is_empty());
        assert_eq!(report.kept_count, 10);
    }

    #[test]
    fn scip_sub_single_budget_is_reported_empty() {
        let model = synthetic_model(&[("a", 0, 0.1), ("b", 0, 0.2)], 1, 4);
        let config = PruneConfig {
            fraction: 0.3,
            ..cfg(PruneMethod::Scip)
        };
        // floor(0.3 * 2) = 0: requested but empty.
        let report = prune_scip(&model, &config).unwrap();
        assert_eq!(report.pruned.len(), 0);
    }

    #[test]
    fn scip_mixed_alpha_splits_budget() {
        let model = sized_631_model();
        let config = PruneConfig {
            fraction: 0.4,
            alpha: 0.5,
            ..cfg(PruneMethod::Scip)
        };
        let report = prune_scip(&model, &config).unwrap();
        // B = 4, size budget 2 (d9, d7), distance budget 2 over survivors
        // (d5 0.60, d4 0.50).
        let ids: Vec<&str> = report.pruned_ids().collect();
        assert_eq!(ids, ["d9", "d7", "d5", "d4"]);
        assert_eq!(report.pruned[0].reason, "size");
        assert_eq!(report.pruned[2].reason, "distance");
    }

    #[test]
    fn scip_size_pruned_set_grows_with_alpha() {
        let model = sized_631_model();
        let mut previous: HashSet<String> = HashSet::new();
        for alpha in [0.0, 0.2, 0.5, 0.7, 0.8, 1.0] {
            let config = PruneConfig {
                fraction: 0.5,
                alpha,
                ..cfg(PruneMethod::Scip)
            };
            let report = prune_scip(&model, &config).unwrap();
            let size_pruned: HashSet<String> = report
                .pruned
                .iter()
                .filter(|e| e.reason == "size")
                .map(|e| e.id.clone())
                .collect();
            assert!(
                previous.is_subset(&size_pruned),
                "size-pruned set shrank at alpha {alpha}"
            );
            previous = size_pruned;
        }
    }

    #[test]
    fn random_has_exact_budget_and_is_seeded() {
        let ids: Vec<String> = (0..10).map(|i| format!("d{i}")).collect();
        let config = PruneConfig {
            fraction: 0.2,
            seed: 5,
            ..cfg(PruneMethod::Random)
        };
        let r1 = prune_random(&ids, &config).unwrap();
        let r2 = prune_random(&ids, &config).unwrap();
        assert_eq!(r1.pruned.len(), 2);
        assert_eq!(r1, r2);
        let other = prune_random(&ids, &PruneConfig { seed: 6, ..config }).unwrap();
        let other2 = prune_random(&ids, &PruneConfig { seed: 7, ..config }).unwrap();
        let all_equal = r1.pruned_id_set() == other.pruned_id_set()
            && r1.pruned_id_set() == other2.pruned_id_set();
        assert!(!all_equal, "three seeds produced identical samples");
    }

    #[test]
    fn prototypes_prune_closest_first() {
        let model = sized_631_model();
        let config = PruneConfig {
            fraction: 0.2,
            ..cfg(PruneMethod::SslPrototypes)
        };
        let report = prune_ssl_prototypes(&model, &config).unwrap();
        // Minimal distances: d9 (0.05), d0 (0.10).
        let ids: Vec<&str> = report.pruned_ids().collect();
        assert_eq!(ids, ["d9", "d0"]);
    }

    #[test]
    fn prototypes_and_pure_distance_are_disjoint_at_small_p() {
        let model = sized_631_model();
        for p in [0.1, 0.2, 0.3, 0.5] {
            let proto = prune_ssl_prototypes(
                &model,
                &PruneConfig { fraction: p, ..cfg(PruneMethod::SslPrototypes) },
            )
            .unwrap();
            let far = prune_scip(
                &model,
                &PruneConfig { fraction: p, alpha: 0.0, ..cfg(PruneMethod::Scip) },
            )
            .unwrap();
            assert!(
                proto.pruned_id_set().is_disjoint(&far.pruned_id_set()),
                "overlap at p={p}"
            );
        }
    }

    #[test]
    fn prototypes_tie_break_prunes_lowest_ids() {
        let model = synthetic_model(
            &[("a", 0, 0.3), ("b", 0, 0.3), ("c", 0, 0.3), ("d", 0, 0.3)],
            1,
            4,
        );
        let config = PruneConfig {
            fraction: 0.5,
            ..cfg(PruneMethod::SslPrototypes)
        };
        let report = prune_ssl_prototypes(&model, &config).unwrap();
        let ids: Vec<&str> = report.pruned_ids().collect();
        assert_eq!(ids, ["a", "b"]);
    }

    /// Ten unit vectors with one direction duplicated four times; k-means
    /// with k = 2 separates the duplicates from the spread-out rest.
    fn duplicated_corpus() -> (ClusterModel, EmbeddingSet) {
        let dim = 8;
        let mut entries: Vec<(String, Vec<f32>)> = Vec::new();
        for i in 0..4 {
            let mut v = vec![0.0f32; dim];
            v[0] = 1.0;
            entries.push((format!("dup{i}"), v));
        }
        for i in 0..6 {
            let mut v = vec![0.0f32; dim];
            v[1] = 1.0;
            v[2 + i] = 0.4 + 0.05 * i as f32;
            entries.push((format!("solo{i}"), v));
        }
        let set = EmbeddingSet::from_entries(dim, entries).unwrap();
        let model = kmeans(
            &set,
            &KmeansConfig { k: 2, seed: 11, ..KmeansConfig::default() },
        )
        .unwrap();
        (model, set)
    }

    #[test]
    fn semdedup_prunes_exact_duplicates() {
        let (model, set) = duplicated_corpus();
        let candidates = semdedup_candidates(&model, &set, 0.95).unwrap();
        // Brute-force check: the only pairs above 0.95 are among the four
        // identical vectors.
        for a in set.ids() {
            for b in set.ids() {
                if a < b {
                    let sim = dot(set.get(a).unwrap(), set.get(b).unwrap());
                    assert_eq!(
                        sim > 0.95,
                        a.starts_with("dup") && b.starts_with("dup"),
                        "unexpected similarity {sim} between {a} and {b}"
                    );
                }
            }
        }
        let ids: HashSet<&str> = candidates.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(candidates.len(), 3, "three of four duplicates go");
        assert!(ids.iter().all(|id| id.starts_with("dup")));
        // All four duplicates tie on centroid similarity, so the survivor is
        // the lowest id.
        assert!(!ids.contains("dup0"));
    }

    #[test]
    fn semdedup_finds_nothing_without_near_duplicates() {
        let (_, set) = duplicated_corpus();
        let solo_only: Vec<String> = set
            .ids()
            .iter()
            .filter(|id| id.starts_with("solo"))
            .cloned()
            .collect();
        let solo_set = set.subset(&solo_only).unwrap();
        let solo_model = kmeans(
            &solo_set,
            &KmeansConfig { k: 1, seed: 2, ..KmeansConfig::default() },
        )
        .unwrap();
        let none = semdedup_candidates(&solo_model, &solo_set, 0.99).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn semdedup_budget_search_hits_floor_exactly() {
        let (model, set) = duplicated_corpus();
        let config = PruneConfig {
            fraction: 0.3,
            ..cfg(PruneMethod::SemDeDup)
        };
        let report = prune_semdedup(&model, &set, &config).unwrap();
        assert_eq!(report.pruned.len(), 3);
        assert!(report.pruned.iter().all(|e| e.id.starts_with("dup")));
        assert!(!report.pruned_id_set().contains("dup0"));
    }

    #[test]
    fn semdedup_unreachable_budget_errors() {
        let (model, set) = duplicated_corpus();
        let config = PruneConfig {
            fraction: 0.9,
            ..cfg(PruneMethod::SemDeDup)
        };
        assert!(matches!(
            prune_semdedup(&model, &set, &config),
            Err(PruneError::BudgetUnreachable { .. })
        ));
    }

    #[test]
    fn d4_stage2_absorbs_budget_without_duplicates() {
        // Ten near-orthogonal directions: every pairwise similarity is far
        // below tau, so dedup finds nothing anywhere.
        let dim = 16;
        let entries: Vec<(String, Vec<f32>)> = (0..10)
            .map(|i| {
                let mut v = vec![0.0f32; dim];
                v[i] = 1.0;
                v[10 + (i % 6)] = 0.3;
                (format!("d{i}"), v)
            })
            .collect();
        let set = EmbeddingSet::from_entries(dim, entries).unwrap();
        let model = kmeans(
            &set,
            &KmeansConfig { k: 3, seed: 7, ..KmeansConfig::default() },
        )
        .unwrap();
        let config = PruneConfig {
            fraction: 0.4,
            tau: 0.95,
            ..cfg(PruneMethod::D4)
        };
        let report = prune_d4(&model, &set, &config).unwrap();
        assert_eq!(report.pruned.len(), 4);
        assert!(report.pruned.iter().all(|e| e.reason == "prototype-stage2"));
    }

    #[test]
    fn d4_zero_fraction_is_empty() {
        let (model, set) = duplicated_corpus();
        let config = PruneConfig {
            fraction: 0.0,
            ..cfg(PruneMethod::D4)
        };
        let report = prune_d4(&model, &set, &config).unwrap();
        assert!(report.pruned.is_empty());
    }

    #[test]
    fn d4_duplicate_heavy_corpus_fills_stage1() {
        let (model, set) = duplicated_corpus();
        let config = PruneConfig {
            fraction: 0.4,
            tau: 0.95,
            ..cfg(PruneMethod::D4)
        };
        let report = prune_d4(&model, &set, &config).unwrap();
        assert_eq!(report.pruned.len(), 4);
        let stage1: Vec<&RankEntry> = report
            .pruned
            .iter()
            .filter(|e| e.reason == "semdedup-stage1")
            .collect();
        // Stage 1 is capped at floor(4 * 0.5) = 2 even though 3 duplicates
        // qualify.
        assert_eq!(stage1.len(), 2);
        assert!(stage1.iter().all(|e| e.id.starts_with("dup")));
    }

    #[test]
    fn every_method_hits_the_exact_budget() {
        let (model, set) = duplicated_corpus();
        for method in PruneMethod::ALL {
            let config = PruneConfig {
                fraction: 0.3,
                ..cfg(method)
            };
            let report = prune(&model, Some(&set), &config).unwrap();
            assert_eq!(report.pruned.len(), 3, "method {method}");
            assert_eq!(report.kept_count, 7, "method {method}");
            assert_eq!(report.pruned_id_set().len(), 3, "method {method}");
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let (model, set) = duplicated_corpus();
        for method in PruneMethod::ALL {
            let config = PruneConfig {
                fraction: 0.3,
                seed: 21,
                ..cfg(method)
            };
            let r1 = prune(&model, Some(&set), &config).unwrap();
            let r2 = prune(&model, Some(&set), &config).unwrap();
            assert_eq!(r1, r2, "method {method}");
        }
    }

    #[test]
    fn dispatcher_requires_embeddings_for_dedup() {
        let (model, _) = duplicated_corpus();
        let config = cfg(PruneMethod::SemDeDup);
        assert!(matches!(
            prune(&model, None, &config),
            Err(PruneError::MissingEmbeddings)
        ));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let (model, _) = duplicated_corpus();
        let config = PruneConfig {
            fraction: 1.0,
            ..cfg(PruneMethod::Scip)
        };
        assert!(matches!(
            prune_scip(&model, &config),
            Err(PruneError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn budget_floor_handles_decimal_fractions() {
        assert_eq!(budget(1000, 0.2), 200);
        assert_eq!(budget(1000, 0.1), 100);
        assert_eq!(budget(10, 0.3), 3);
        assert_eq!(budget(7, 0.5), 3);
        assert_eq!(budget(10, 0.0), 0);
        assert_eq!(budget(3, 0.99), 2);
    }

    #[test]
    fn report_round_trips_as_records_and_summary() {
        let model = sized_631_model();
        let config = PruneConfig {
            fraction: 0.2,
            ..cfg(PruneMethod::Scip)
        };
        let report = prune_scip(&model, &config).unwrap();
        let mut records = Vec::new();
        let mut summary = Vec::new();
        write_report(&report, &mut records, &mut summary).unwrap();
        let lines = String::from_utf8(records).unwrap();
        assert_eq!(lines.lines().count(), report.pruned.len());
        let summary: serde_json::Value = serde_json::from_slice(&summary).unwrap();
        assert_eq!(summary["pruned_count"], 2);
        assert_eq!(summary["method"], "scip");
    }
}
