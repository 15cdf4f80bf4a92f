//! C ABI over the codeprune toolkit.
//!
//! Handles are opaque pointers created and freed by this library; every
//! fallible call returns a [`CpStatus`] and writes its result through out
//! parameters. On failure the thread-local error message is readable via
//! [`cp_last_error_message`]. Strings returned through out parameters are
//! owned by the caller and must be released with [`cp_string_free`].
//!
//! The generated header lives at `include/codeprune.h`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use libc::c_char;

use codeprune::cluster::{kmeans, ClusterModel, KmeansConfig};
use codeprune::corpus::{ingest_path, Corpus};
use codeprune::corrupt::{corrupt_content, CorruptionKind};
use codeprune::embed::{embed_builtin, BuiltinEmbedder, EmbeddingSet};
use codeprune::passk::{pass_at_k, PassAtKInput};
use codeprune::prune::{prune, PruneConfig, PruneMethod, PruneReport};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidUtf8 = 3,
    Io = 4,
    Internal = 5,
}

/// Corruption operator selector mirroring the library enum.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpCorruptionKind {
    RemoveClosedBrackets = 0,
    RenameVariables = 1,
    AlterConditionals = 2,
    OffsetArrayIndices = 3,
}

impl From<CpCorruptionKind> for CorruptionKind {
    fn from(kind: CpCorruptionKind) -> Self {
        match kind {
            CpCorruptionKind::RemoveClosedBrackets => CorruptionKind::RemoveClosedBrackets,
            CpCorruptionKind::RenameVariables => CorruptionKind::RenameVariables,
            CpCorruptionKind::AlterConditionals => CorruptionKind::AlterConditionals,
            CpCorruptionKind::OffsetArrayIndices => CorruptionKind::OffsetArrayIndices,
        }
    }
}

/// Pruning method selector mirroring the library enum.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpPruneMethod {
    Scip = 0,
    Random = 1,
    SslPrototypes = 2,
    SemDeDup = 3,
    D4 = 4,
}

impl From<CpPruneMethod> for PruneMethod {
    fn from(method: CpPruneMethod) -> Self {
        match method {
            CpPruneMethod::Scip => PruneMethod::Scip,
            CpPruneMethod::Random => PruneMethod::Random,
            CpPruneMethod::SslPrototypes => PruneMethod::SslPrototypes,
            CpPruneMethod::SemDeDup => PruneMethod::SemDeDup,
            CpPruneMethod::D4 => PruneMethod::D4,
        }
    }
}

/// Opaque corpus handle.
pub struct CpCorpus(Corpus);
/// Opaque embedding-set handle.
pub struct CpEmbeddingSet(EmbeddingSet);
/// Opaque cluster-model handle.
pub struct CpClusterModel(ClusterModel);
/// Opaque prune-report handle.
pub struct CpPruneReport(PruneReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl std::fmt::Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).ok();
    });
}

fn fail(status: CpStatus, message: impl std::fmt::Display) -> CpStatus {
    set_last_error(message);
    status
}

/// Run a body that cannot be allowed to unwind across the ABI.
fn guarded(body: impl FnOnce() -> CpStatus) -> CpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            fail(CpStatus::Internal, format!("panic: {message}"))
        }
    }
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string for the call.
unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, CpStatus> {
    if ptr.is_null() {
        set_last_error("null string argument");
        return Err(CpStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error("argument is not valid UTF-8");
        CpStatus::InvalidUtf8
    })
}

fn out_string(text: &str) -> Result<*mut c_char, CpStatus> {
    CString::new(text.replace('\0', " "))
        .map(CString::into_raw)
        .map_err(|_| CpStatus::Internal)
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn cp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Last error message of the current thread, or NULL when none was
/// recorded. The caller frees the result with `cp_string_free`.
#[no_mangle]
pub extern "C" fn cp_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(message) => message.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// # Safety
/// `ptr` must be null or a string previously returned by this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cp_string_free(ptr: *mut c_char) {
    if !ptr.is_null() {
        drop(CString::from_raw(ptr));
    }
}

/// Read a line-delimited corpus file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer. On success `*out` owns a corpus that must be released with
/// `cp_corpus_free`.
#[no_mangle]
pub unsafe extern "C" fn cp_corpus_read_path(
    path: *const c_char,
    out: *mut *mut CpCorpus,
) -> CpStatus {
    guarded(|| {
        if out.is_null() {
            return fail(CpStatus::NullPointer, "null out pointer");
        }
        let path = match utf8_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match ingest_path(Path::new(path)) {
            Ok(corpus) => {
                *out = Box::into_raw(Box::new(CpCorpus(corpus)));
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::Io, e),
        }
    })
}

/// # Safety
/// `corpus` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cp_corpus_free(corpus: *mut CpCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// # Safety
/// `corpus` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cp_corpus_len(corpus: *const CpCorpus, out: *mut usize) -> CpStatus {
    guarded(|| {
        if corpus.is_null() || out.is_null() {
            return fail(CpStatus::NullPointer, "null corpus or out pointer");
        }
        *out = (*corpus).0.len();
        CpStatus::Ok
    })
}

/// Corrupt one piece of source text. Writes the corrupted text (caller
/// frees) and the number of corrupted sites.
///
/// # Safety
/// `content` must be a valid NUL-terminated string; `out_text` and
/// `out_sites` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cp_corrupt_text(
    content: *const c_char,
    kind: CpCorruptionKind,
    rate: f64,
    seed: u64,
    out_text: *mut *mut c_char,
    out_sites: *mut usize,
) -> CpStatus {
    guarded(|| {
        if out_text.is_null() || out_sites.is_null() {
            return fail(CpStatus::NullPointer, "null out pointer");
        }
        let content = match utf8_arg(content) {
            Ok(c) => c,
            Err(status) => return status,
        };
        if !(rate > 0.0 && rate <= 1.0) {
            return fail(CpStatus::InvalidArgument, format!("rate {rate} not in (0, 1]"));
        }
        let corruption = corrupt_content(kind.into(), content, rate, seed);
        match out_string(&corruption.corrupted) {
            Ok(text) => {
                *out_text = text;
                *out_sites = corruption.sites_corrupted;
                CpStatus::Ok
            }
            Err(status) => fail(status, "result not representable as a C string"),
        }
    })
}

/// Embed every corpus document with the built-in trigram embedder.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be a valid pointer. On
/// success `*out` must be released with `cp_embeddings_free`.
#[no_mangle]
pub unsafe extern "C" fn cp_embed_builtin(
    corpus: *const CpCorpus,
    dim: usize,
    out: *mut *mut CpEmbeddingSet,
) -> CpStatus {
    guarded(|| {
        if corpus.is_null() || out.is_null() {
            return fail(CpStatus::NullPointer, "null corpus or out pointer");
        }
        match embed_builtin(&(*corpus).0, dim, BuiltinEmbedder::TrigramHashV1) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(CpEmbeddingSet(set)));
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cp_embeddings_read_path(
    path: *const c_char,
    out: *mut *mut CpEmbeddingSet,
) -> CpStatus {
    guarded(|| {
        if out.is_null() {
            return fail(CpStatus::NullPointer, "null out pointer");
        }
        let path = match utf8_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match EmbeddingSet::read_path(path) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(CpEmbeddingSet(set)));
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::Io, e),
        }
    })
}

/// # Safety
/// `set` must be a live handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cp_embeddings_write_path(
    set: *const CpEmbeddingSet,
    path: *const c_char,
) -> CpStatus {
    guarded(|| {
        if set.is_null() {
            return fail(CpStatus::NullPointer, "null embedding set");
        }
        let path = match utf8_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match (*set).0.write_path(path) {
            Ok(()) => CpStatus::Ok,
            Err(e) => fail(CpStatus::Io, e),
        }
    })
}

/// # Safety
/// `set` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cp_embeddings_len(
    set: *const CpEmbeddingSet,
    out: *mut usize,
) -> CpStatus {
    guarded(|| {
        if set.is_null() || out.is_null() {
            return fail(CpStatus::NullPointer, "null set or out pointer");
        }
        *out = (*set).0.len();
        CpStatus::Ok
    })
}

/// # Safety
/// `set` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cp_embeddings_dim(
    set: *const CpEmbeddingSet,
    out: *mut usize,
) -> CpStatus {
    guarded(|| {
        if set.is_null() || out.is_null() {
            return fail(CpStatus::NullPointer, "null set or out pointer");
        }
        *out = (*set).0.dim();
        CpStatus::Ok
    })
}

/// # Safety
/// `set` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cp_embeddings_free(set: *mut CpEmbeddingSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Fit spherical k-means over an embedding set.
///
/// # Safety
/// `set` must be a live handle; `out` must be a valid pointer. On success
/// `*out` must be released with `cp_model_free`.
#[no_mangle]
pub unsafe extern "C" fn cp_kmeans(
    set: *const CpEmbeddingSet,
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
    out: *mut *mut CpClusterModel,
) -> CpStatus {
    guarded(|| {
        if set.is_null() || out.is_null() {
            return fail(CpStatus::NullPointer, "null set or out pointer");
        }
        let config = KmeansConfig {
            k,
            seed,
            max_iters,
            tol,
        };
        match kmeans(&(*set).0, &config) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(CpClusterModel(model)));
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cp_model_k(model: *const CpClusterModel, out: *mut usize) -> CpStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return fail(CpStatus::NullPointer, "null model or out pointer");
        }
        *out = (*model).0.k();
        CpStatus::Ok
    })
}

/// Persist a model under a path prefix (`<prefix>.centroids.emb1` and
/// `<prefix>.assignments.jsonl`).
///
/// # Safety
/// `model` must be a live handle; `prefix` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cp_model_save_path(
    model: *const CpClusterModel,
    prefix: *const c_char,
) -> CpStatus {
    guarded(|| {
        if model.is_null() {
            return fail(CpStatus::NullPointer, "null model");
        }
        let prefix = match utf8_arg(prefix) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match (*model).0.save(prefix) {
            Ok(()) => CpStatus::Ok,
            Err(e) => fail(CpStatus::Io, e),
        }
    })
}

/// # Safety
/// `prefix` must be a valid NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cp_model_load_path(
    prefix: *const c_char,
    out: *mut *mut CpClusterModel,
) -> CpStatus {
    guarded(|| {
        if out.is_null() {
            return fail(CpStatus::NullPointer, "null out pointer");
        }
        let prefix = match utf8_arg(prefix) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match ClusterModel::load(prefix) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(CpClusterModel(model)));
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::Io, e),
        }
    })
}

/// # Safety
/// `model` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cp_model_free(model: *mut CpClusterModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Prune against a model. `embeddings` may be NULL except for the dedup
/// methods.
///
/// # Safety
/// `model` must be a live handle; `embeddings` null or a live handle; `out`
/// valid. On success `*out` must be released with `cp_report_free`.
#[no_mangle]
pub unsafe extern "C" fn cp_prune(
    model: *const CpClusterModel,
    embeddings: *const CpEmbeddingSet,
    method: CpPruneMethod,
    fraction: f64,
    alpha: f64,
    tau: f64,
    seed: u64,
    out: *mut *mut CpPruneReport,
) -> CpStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return fail(CpStatus::NullPointer, "null model or out pointer");
        }
        let config = PruneConfig {
            fraction,
            alpha,
            tau,
            seed,
            ..PruneConfig::new(method.into())
        };
        let embeddings = if embeddings.is_null() {
            None
        } else {
            Some(&(*embeddings).0)
        };
        match prune(&(*model).0, embeddings, &config) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(CpPruneReport(report)));
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::InvalidArgument, e),
        }
    })
}

/// # Safety
/// `report` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cp_report_pruned_len(
    report: *const CpPruneReport,
    out: *mut usize,
) -> CpStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(CpStatus::NullPointer, "null report or out pointer");
        }
        *out = (*report).0.pruned.len();
        CpStatus::Ok
    })
}

/// Pruned document id at `index`, in rank order. The caller frees the
/// string with `cp_string_free`.
///
/// # Safety
/// `report` must be a live handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_report_pruned_id(
    report: *const CpPruneReport,
    index: usize,
    out: *mut *mut c_char,
) -> CpStatus {
    guarded(|| {
        if report.is_null() || out.is_null() {
            return fail(CpStatus::NullPointer, "null report or out pointer");
        }
        let pruned = &(*report).0.pruned;
        let Some(entry) = pruned.get(index) else {
            return fail(
                CpStatus::InvalidArgument,
                format!("index {index} out of range for {} entries", pruned.len()),
            );
        };
        match out_string(&entry.id) {
            Ok(text) => {
                *out = text;
                CpStatus::Ok
            }
            Err(status) => fail(status, "id not representable as a C string"),
        }
    })
}

/// # Safety
/// `report` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn cp_report_free(report: *mut CpPruneReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// pass@k for one (n, c, k) tally.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cp_pass_at_k(n: u64, c: u64, k: u64, out: *mut f64) -> CpStatus {
    guarded(|| {
        if out.is_null() {
            return fail(CpStatus::NullPointer, "null out pointer");
        }
        match PassAtKInput::new(n as usize, c as usize, k as usize) {
            Ok(input) => {
                *out = pass_at_k(input);
                CpStatus::Ok
            }
            Err(e) => fail(CpStatus::InvalidArgument, e),
        }
    })
}
