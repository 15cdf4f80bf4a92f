//! Drive the C ABI the way a foreign binding would: through raw pointers
//! and status codes only.

use std::ffi::{CStr, CString};
use std::io::Write;
use std::ptr;

use codeprune_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(ptr: *mut libc::c_char) -> String {
    assert!(!ptr.is_null());
    let s = CStr::from_ptr(ptr).to_str().unwrap().to_string();
    cp_string_free(ptr);
    s
}

unsafe fn last_error() -> String {
    let ptr = cp_last_error_message();
    if ptr.is_null() {
        return String::new();
    }
    take_string(ptr)
}

#[test]
fn version_is_a_static_string() {
    let version = unsafe { CStr::from_ptr(cp_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn pass_at_k_values_through_the_abi() {
    unsafe {
        let mut out = f64::NAN;
        assert_eq!(cp_pass_at_k(5, 5, 1, &mut out), CpStatus::Ok);
        assert_eq!(out, 1.0);

        assert_eq!(cp_pass_at_k(4, 2, 2, &mut out), CpStatus::Ok);
        assert!((out - 5.0 / 6.0).abs() < 1e-12);

        assert_eq!(cp_pass_at_k(200, 0, 1, &mut out), CpStatus::Ok);
        assert_eq!(out, 0.0);

        assert_eq!(cp_pass_at_k(4, 5, 1, &mut out), CpStatus::InvalidArgument);
        assert!(last_error().contains("invalid-input"));

        assert_eq!(cp_pass_at_k(4, 2, 1, ptr::null_mut()), CpStatus::NullPointer);
    }
}

#[test]
fn corrupt_text_matches_library_behavior() {
    unsafe {
        let content = c("for i in range(10):");
        let mut text: *mut libc::c_char = ptr::null_mut();
        let mut sites = 0usize;
        let status = cp_corrupt_text(
            content.as_ptr(),
            CpCorruptionKind::RemoveClosedBrackets,
            1.0,
            7,
            &mut text,
            &mut sites,
        );
        assert_eq!(status, CpStatus::Ok);
        assert_eq!(take_string(text), "for i in range(10:");
        assert_eq!(sites, 1);

        // Invalid rate is rejected with a message.
        let mut text: *mut libc::c_char = ptr::null_mut();
        let status = cp_corrupt_text(
            content.as_ptr(),
            CpCorruptionKind::AlterConditionals,
            0.0,
            7,
            &mut text,
            &mut sites,
        );
        assert_eq!(status, CpStatus::InvalidArgument);
        assert!(last_error().contains("rate"));

        let status = cp_corrupt_text(
            ptr::null(),
            CpCorruptionKind::AlterConditionals,
            0.5,
            7,
            &mut text,
            &mut sites,
        );
        assert_eq!(status, CpStatus::NullPointer);
    }
}

#[test]
fn full_pipeline_through_handles() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("corpus.jsonl");
    let mut f = std::fs::File::create(&corpus_path).unwrap();
    for i in 0..20 {
        let topic = if i % 2 == 0 { "alpha" } else { "omega" };
        writeln!(
            f,
            "{}",
            serde_json::json!({
                "id": format!("d{i:02}"),
                "path": format!("{i}.py"),
                "lang": "python",
                "content": format!("def {topic}_{i}(x):\n    return {topic}[x + {i}]\n"),
            })
        )
        .unwrap();
    }
    drop(f);

    unsafe {
        let path = c(corpus_path.to_str().unwrap());
        let mut corpus: *mut CpCorpus = ptr::null_mut();
        assert_eq!(cp_corpus_read_path(path.as_ptr(), &mut corpus), CpStatus::Ok);
        let mut len = 0usize;
        assert_eq!(cp_corpus_len(corpus, &mut len), CpStatus::Ok);
        assert_eq!(len, 20);

        let mut set: *mut CpEmbeddingSet = ptr::null_mut();
        assert_eq!(cp_embed_builtin(corpus, 64, &mut set), CpStatus::Ok);
        let (mut n, mut dim) = (0usize, 0usize);
        assert_eq!(cp_embeddings_len(set, &mut n), CpStatus::Ok);
        assert_eq!(cp_embeddings_dim(set, &mut dim), CpStatus::Ok);
        assert_eq!((n, dim), (20, 64));

        let emb_path = c(dir.path().join("vectors.emb1").to_str().unwrap());
        assert_eq!(cp_embeddings_write_path(set, emb_path.as_ptr()), CpStatus::Ok);
        let mut reread: *mut CpEmbeddingSet = ptr::null_mut();
        assert_eq!(cp_embeddings_read_path(emb_path.as_ptr(), &mut reread), CpStatus::Ok);

        let mut model: *mut CpClusterModel = ptr::null_mut();
        assert_eq!(cp_kmeans(set, 2, 3, 100, 1e-6, &mut model), CpStatus::Ok);
        let mut k = 0usize;
        assert_eq!(cp_model_k(model, &mut k), CpStatus::Ok);
        assert_eq!(k, 2);

        let prefix = c(dir.path().join("model").to_str().unwrap());
        assert_eq!(cp_model_save_path(model, prefix.as_ptr()), CpStatus::Ok);
        let mut loaded: *mut CpClusterModel = ptr::null_mut();
        assert_eq!(cp_model_load_path(prefix.as_ptr(), &mut loaded), CpStatus::Ok);

        let mut report: *mut CpPruneReport = ptr::null_mut();
        let status = cp_prune(
            loaded,
            set,
            CpPruneMethod::Scip,
            0.2,
            0.8,
            0.95,
            0,
            &mut report,
        );
        assert_eq!(status, CpStatus::Ok);
        let mut pruned = 0usize;
        assert_eq!(cp_report_pruned_len(report, &mut pruned), CpStatus::Ok);
        assert_eq!(pruned, 4, "floor(0.2 * 20)");

        let mut seen = Vec::new();
        for i in 0..pruned {
            let mut id: *mut libc::c_char = ptr::null_mut();
            assert_eq!(cp_report_pruned_id(report, i, &mut id), CpStatus::Ok);
            seen.push(take_string(id));
        }
        assert_eq!(seen.len(), 4);
        assert!(seen.iter().all(|id| id.starts_with('d')));

        let mut id: *mut libc::c_char = ptr::null_mut();
        assert_eq!(
            cp_report_pruned_id(report, 99, &mut id),
            CpStatus::InvalidArgument
        );

        cp_report_free(report);
        cp_model_free(loaded);
        cp_model_free(model);
        cp_embeddings_free(reread);
        cp_embeddings_free(set);
        cp_corpus_free(corpus);
    }
}

#[test]
fn io_errors_surface_with_messages() {
    unsafe {
        let path = c("/nonexistent/nowhere.jsonl");
        let mut corpus: *mut CpCorpus = ptr::null_mut();
        assert_eq!(cp_corpus_read_path(path.as_ptr(), &mut corpus), CpStatus::Io);
        assert!(!last_error().is_empty());

        // Dedup without embeddings is rejected, not crashed.
        let dir = tempfile::tempdir().unwrap();
        let corpus_path = dir.path().join("c.jsonl");
        std::fs::write(
            &corpus_path,
            concat!(
                "{\"id\":\"a\",\"path\":\"a\",\"lang\":\"py\",\"content\":\"aaa\"}\n",
                "{\"id\":\"b\",\"path\":\"b\",\"lang\":\"py\",\"content\":\"bbb\"}\n"
            ),
        )
        .unwrap();
        let path = c(corpus_path.to_str().unwrap());
        let mut corpus: *mut CpCorpus = ptr::null_mut();
        assert_eq!(cp_corpus_read_path(path.as_ptr(), &mut corpus), CpStatus::Ok);
        let mut set: *mut CpEmbeddingSet = ptr::null_mut();
        assert_eq!(cp_embed_builtin(corpus, 32, &mut set), CpStatus::Ok);
        let mut model: *mut CpClusterModel = ptr::null_mut();
        assert_eq!(cp_kmeans(set, 1, 0, 10, 1e-6, &mut model), CpStatus::Ok);
        let mut report: *mut CpPruneReport = ptr::null_mut();
        let status = cp_prune(
            model,
            ptr::null(),
            CpPruneMethod::SemDeDup,
            0.2,
            0.8,
            0.95,
            0,
            &mut report,
        );
        assert_eq!(status, CpStatus::InvalidArgument);
        assert!(last_error().contains("missing-embeddings"));
        cp_model_free(model);
        cp_embeddings_free(set);
        cp_corpus_free(corpus);
    }
}

#[test]
fn generated_header_exports_the_surface() {
    let header = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/codeprune.h"),
    )
    .expect("header generated at build time");
    for symbol in [
        "cp_version",
        "cp_last_error_message",
        "cp_string_free",
        "cp_corpus_read_path",
        "cp_embed_builtin",
        "cp_kmeans",
        "cp_prune",
        "cp_report_pruned_id",
        "cp_pass_at_k",
        "typedef struct CpCorpus CpCorpus",
        "CP_STATUS_OK",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }
}
