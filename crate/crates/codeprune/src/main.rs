//! Command-line front door for the pruning pipeline.
//!
//! Subcommands mirror the pipeline stages: ingest, corrupt, embed, cluster,
//! shift, prune, passk. Every run writes a manifest beside its primary
//! output with all flags resolved; re-running the command recorded in a
//! manifest reproduces the outputs byte-for-byte. Seeds are always explicit
//! flags, and `--threads` caps parallelism without affecting any output.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use codeprune::analyze;
use codeprune::cluster::{self, ClusterModel, KmeansConfig};
use codeprune::corpus;
use codeprune::corrupt::{self, CorruptionKind, CorruptionOperator};
use codeprune::embed::{self, BuiltinEmbedder, EmbeddingSet};
use codeprune::manifest::RunManifest;
use codeprune::passk;
use codeprune::prune::{self, PruneConfig, PruneMethod};

#[derive(Parser)]
#[command(name = "codeprune", version, about = "Corruption-informed pruning of code corpora")]
struct Cli {
    /// Cap the worker thread pool (0 = all cores). Outputs never depend on
    /// this value.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a record stream and write the id-sorted corpus.
    Ingest(IngestArgs),
    /// Apply one corruption operator to every document.
    Corrupt(CorruptArgs),
    /// Embed a corpus (or corruption pairs) with the built-in embedder, or
    /// validate and normalize an external EMB1 file.
    Embed(EmbedArgs),
    /// Fit spherical k-means over an embedding set.
    Cluster(ClusterArgs),
    /// Compare original and corrupted embeddings against a frozen model.
    Shift(ShiftArgs),
    /// Prune a corpus by one of the embedding-space strategies.
    Prune(PruneArgs),
    /// Evaluate pass@k over a tally file.
    Passk(PasskArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Line-delimited records: id, path, lang, content.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct CorruptArgs {
    /// Corpus file produced by `ingest`.
    #[arg(long)]
    corpus: PathBuf,
    /// Operator: remove-closed-brackets, rename-variables,
    /// alter-conditionals, offset-array-indices.
    #[arg(long)]
    kind: String,
    /// Fraction of eligible sites to corrupt, in (0, 1].
    #[arg(long, default_value_t = CorruptionOperator::DEFAULT_RATE)]
    rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pair records: doc_id, kind, sites_corrupted, corrupted.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    /// Corpus file or corruption-pair file; the record shape decides which.
    #[arg(long, conflicts_with = "from_emb1", required_unless_present = "from_emb1")]
    input: Option<PathBuf>,
    /// Embedding dimension for the built-in embedder.
    #[arg(long, default_value_t = 512)]
    dim: usize,
    /// Import an externally produced EMB1 file instead of embedding.
    #[arg(long)]
    from_emb1: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Model prefix; writes <prefix>.centroids.emb1 and
    /// <prefix>.assignments.jsonl.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ShiftArgs {
    /// Model prefix as written by `cluster`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    originals: PathBuf,
    #[arg(long)]
    corrupted: PathBuf,
    /// Operator kind stamped into the records.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = analyze::DEFAULT_SHIFT_THRESHOLD)]
    threshold: f64,
    /// Output prefix; writes <prefix>.records.jsonl and
    /// <prefix>.summary.json, and prints the fraction table.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct PruneArgs {
    /// Model prefix as written by `cluster`.
    #[arg(long)]
    model: PathBuf,
    /// Embedding set; required by semdedup and d4.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Method: scip, random, ssl-prototypes, semdedup, d4.
    #[arg(long)]
    method: String,
    /// Fraction of documents to prune.
    #[arg(long, default_value_t = PruneConfig::DEFAULT_FRACTION)]
    p: f64,
    /// Share of the budget pruned by cluster size (scip).
    #[arg(long, default_value_t = PruneConfig::DEFAULT_ALPHA)]
    alpha: f64,
    /// Dedup similarity threshold (d4 stage 1).
    #[arg(long, default_value_t = PruneConfig::DEFAULT_TAU)]
    tau: f64,
    /// Share of the budget given to d4's dedup stage.
    #[arg(long, default_value_t = PruneConfig::DEFAULT_DEDUP_SHARE)]
    dedup_share: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report prefix; writes <prefix>.report.jsonl and
    /// <prefix>.summary.json.
    #[arg(long)]
    output: PathBuf,
    /// Also write the surviving corpus here (requires --corpus).
    #[arg(long, requires = "corpus")]
    emit_kept_corpus: Option<PathBuf>,
    /// Corpus file backing --emit-kept-corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Args)]
struct PasskArgs {
    /// Tally lines: problem_id n c.
    #[arg(long)]
    tallies: PathBuf,
    /// k values, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k: Vec<usize>,
    /// Also write the table here (and a manifest beside it).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // Ignore the error from double initialization in tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Single-line, machine-parsable: `error: <category>: <detail>`.
            let line = e.to_string().replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(args) => cmd_ingest(args),
        Command::Corrupt(args) => cmd_corrupt(args),
        Command::Embed(args) => cmd_embed(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Shift(args) => cmd_shift(args),
        Command::Prune(args) => cmd_prune(args),
        Command::Passk(args) => cmd_passk(args),
    }
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    let corpus = corpus::ingest_path(&args.input).map_err(|e| anyhow!("ingest: {e}"))?;
    corpus::write_path(&corpus, &args.output).context("writing corpus")?;
    RunManifest::new("ingest")
        .arg("input", args.input.display().to_string())
        .arg("output", args.output.display().to_string())
        .input(&args.input)
        .output(&args.output)
        .write_beside(&args.output)?;
    eprintln!("ingested {} documents", corpus.len());
    Ok(())
}

fn cmd_corrupt(args: CorruptArgs) -> Result<()> {
    let kind: CorruptionKind = args.kind.parse().map_err(|e| anyhow!("corrupt: {e}"))?;
    let operator =
        CorruptionOperator::new(kind, args.rate, args.seed).map_err(|e| anyhow!("corrupt: {e}"))?;
    let corpus = corpus::ingest_path(&args.corpus).map_err(|e| anyhow!("corrupt: {e}"))?;
    let pairs = corrupt::corrupt_corpus(&corpus, &operator);
    corrupt::write_pairs_path(&pairs, &args.output).map_err(|e| anyhow!("corrupt: {e}"))?;
    let noops = pairs.iter().filter(|p| p.is_noop()).count();
    RunManifest::new("corrupt")
        .arg("corpus", args.corpus.display().to_string())
        .arg("kind", kind.name())
        .arg("rate", args.rate)
        .arg("seed", args.seed)
        .arg("output", args.output.display().to_string())
        .input(&args.corpus)
        .output(&args.output)
        .write_beside(&args.output)?;
    eprintln!("corrupted {} documents ({} no-ops)", pairs.len(), noops);
    Ok(())
}

/// Peek at the first record to tell corpus files from pair files.
fn detect_pairs(path: &Path) -> Result<bool> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut line = String::new();
    while line.trim().is_empty() {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Ok(false); // empty file: treat as an empty corpus
        }
    }
    let value: serde_json::Value =
        serde_json::from_str(&line).context("first record is not JSON")?;
    Ok(value.get("corrupted").is_some())
}

fn cmd_embed(args: EmbedArgs) -> Result<()> {
    let set = if let Some(external) = &args.from_emb1 {
        EmbeddingSet::read_path(external).map_err(|e| anyhow!("embed: {e}"))?
    } else {
        let input = args.input.as_ref().expect("clap enforces input xor from_emb1");
        if detect_pairs(input)? {
            let pairs = corrupt::read_pairs_path(input).map_err(|e| anyhow!("embed: {e}"))?;
            let items: Vec<(&str, &str)> = pairs
                .iter()
                .map(|p| (p.doc_id.as_str(), p.corrupted.as_str()))
                .collect();
            embed::embed_texts(&items, args.dim, BuiltinEmbedder::TrigramHashV1)
                .map_err(|e| anyhow!("embed: {e}"))?
        } else {
            let corpus = corpus::ingest_path(input).map_err(|e| anyhow!("embed: {e}"))?;
            embed::embed_builtin(&corpus, args.dim, BuiltinEmbedder::TrigramHashV1)
                .map_err(|e| anyhow!("embed: {e}"))?
        }
    };
    set.write_path(&args.output).map_err(|e| anyhow!("embed: {e}"))?;
    let mut manifest = RunManifest::new("embed")
        .arg("dim", args.dim)
        .arg("output", args.output.display().to_string());
    if let Some(input) = &args.input {
        manifest = manifest.arg("input", input.display().to_string()).input(input);
    }
    if let Some(external) = &args.from_emb1 {
        manifest = manifest
            .arg("from-emb1", external.display().to_string())
            .input(external);
    }
    manifest.output(&args.output).write_beside(&args.output)?;
    eprintln!("embedded {} vectors of dim {}", set.len(), set.dim());
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let set = EmbeddingSet::read_path(&args.embeddings).map_err(|e| anyhow!("cluster: {e}"))?;
    let config = KmeansConfig {
        k: args.k,
        seed: args.seed,
        max_iters: args.max_iters,
        tol: args.tol,
    };
    let model = cluster::kmeans(&set, &config).map_err(|e| anyhow!("cluster: {e}"))?;
    model.save(&args.output).map_err(|e| anyhow!("cluster: {e}"))?;
    RunManifest::new("cluster")
        .arg("embeddings", args.embeddings.display().to_string())
        .arg("k", args.k)
        .arg("seed", args.seed)
        .arg("max-iters", args.max_iters)
        .arg("tol", args.tol)
        .arg("output", args.output.display().to_string())
        .input(&args.embeddings)
        .output(&ClusterModel::centroid_path(&args.output))
        .output(&ClusterModel::assignment_path(&args.output))
        .write_beside(&args.output)?;
    eprintln!(
        "clustered {} vectors into k={} (objective {:.6})",
        set.len(),
        model.k(),
        model.objective()
    );
    Ok(())
}

fn cmd_shift(args: ShiftArgs) -> Result<()> {
    let kind: CorruptionKind = args.kind.parse().map_err(|e| anyhow!("shift: {e}"))?;
    let model = ClusterModel::load(&args.model).map_err(|e| anyhow!("shift: {e}"))?;
    let originals =
        EmbeddingSet::read_path(&args.originals).map_err(|e| anyhow!("shift: {e}"))?;
    let corrupted =
        EmbeddingSet::read_path(&args.corrupted).map_err(|e| anyhow!("shift: {e}"))?;
    let records = analyze::shift_analysis(&model, &originals, &corrupted, kind)
        .map_err(|e| anyhow!("shift: {e}"))?;
    let summary =
        analyze::summarize(&records, args.threshold).map_err(|e| anyhow!("shift: {e}"))?;

    let records_path = with_suffix(&args.output, ".records.jsonl");
    let summary_path = with_suffix(&args.output, ".summary.json");
    analyze::write_records_path(&records, &records_path).map_err(|e| anyhow!("shift: {e}"))?;
    let mut w = File::create(&summary_path)?;
    serde_json::to_writer_pretty(&mut w, &summary)?;
    w.write_all(b"\n")?;

    print!("{}", analyze::render_summary_table(std::slice::from_ref(&summary)));
    RunManifest::new("shift")
        .arg("model", args.model.display().to_string())
        .arg("originals", args.originals.display().to_string())
        .arg("corrupted", args.corrupted.display().to_string())
        .arg("kind", kind.name())
        .arg("threshold", args.threshold)
        .arg("output", args.output.display().to_string())
        .input(&args.originals)
        .input(&args.corrupted)
        .output(&records_path)
        .output(&summary_path)
        .write_beside(&args.output)?;
    Ok(())
}

fn cmd_prune(args: PruneArgs) -> Result<()> {
    let method: PruneMethod = args.method.parse().map_err(|e| anyhow!("prune: {e}"))?;
    let config = PruneConfig {
        method,
        fraction: args.p,
        alpha: args.alpha,
        tau: args.tau,
        seed: args.seed,
        dedup_share: args.dedup_share,
    };
    config.validate().map_err(|e| anyhow!("prune: {e}"))?;
    let model = ClusterModel::load(&args.model).map_err(|e| anyhow!("prune: {e}"))?;
    let embeddings = match &args.embeddings {
        Some(path) => Some(EmbeddingSet::read_path(path).map_err(|e| anyhow!("prune: {e}"))?),
        None => None,
    };
    let report =
        prune::prune(&model, embeddings.as_ref(), &config).map_err(|e| anyhow!("prune: {e}"))?;

    let records_path = with_suffix(&args.output, ".report.jsonl");
    let summary_path = with_suffix(&args.output, ".summary.json");
    prune::write_report_paths(&report, &records_path, &summary_path)
        .map_err(|e| anyhow!("prune: {e}"))?;

    if let Some(kept_path) = &args.emit_kept_corpus {
        let corpus_path = args.corpus.as_ref().expect("clap enforces --corpus");
        let corpus = corpus::ingest_path(corpus_path).map_err(|e| anyhow!("prune: {e}"))?;
        let pruned = report.pruned_id_set();
        let kept = corpus.retain_ids(|id| !pruned.contains(id));
        corpus::write_path(&kept, kept_path).context("writing kept corpus")?;
    }

    let mut manifest = RunManifest::new("prune")
        .arg("model", args.model.display().to_string())
        .arg("method", method.name())
        .arg("p", args.p)
        .arg("alpha", args.alpha)
        .arg("tau", args.tau)
        .arg("dedup-share", args.dedup_share)
        .arg("seed", args.seed)
        .arg("output", args.output.display().to_string());
    if let Some(path) = &args.embeddings {
        manifest = manifest.arg("embeddings", path.display().to_string()).input(path);
    }
    if let Some(path) = &args.emit_kept_corpus {
        manifest = manifest.arg("emit-kept-corpus", path.display().to_string());
    }
    if let Some(path) = &args.corpus {
        manifest = manifest.arg("corpus", path.display().to_string()).input(path);
    }
    manifest
        .output(&records_path)
        .output(&summary_path)
        .write_beside(&args.output)?;
    eprintln!(
        "pruned {} of {} documents ({} kept)",
        report.pruned.len(),
        report.total,
        report.kept_count
    );
    Ok(())
}

fn cmd_passk(args: PasskArgs) -> Result<()> {
    if args.k.is_empty() {
        bail!("passk: no k values given");
    }
    let tallies = passk::read_tallies(File::open(&args.tallies)?)
        .map_err(|e| anyhow!("passk: {e}"))?;
    let mut table = String::from("k\tpass@k\n");
    for &k in &args.k {
        let mean = passk::aggregate(&tallies, k).map_err(|e| anyhow!("passk: {e}"))?;
        table.push_str(&format!("{k}\t{mean:.6}\n"));
    }
    print!("{table}");
    if let Some(output) = &args.output {
        std::fs::write(output, &table)?;
        RunManifest::new("passk")
            .arg("tallies", args.tallies.display().to_string())
            .arg(
                "k",
                args.k
                    .iter()
                    .map(|k| k.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            )
            .arg("output", output.display().to_string())
            .input(&args.tallies)
            .output(output)
            .write_beside(output)?;
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}
