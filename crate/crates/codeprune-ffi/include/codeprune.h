#ifndef CODEPRUNE_H
#define CODEPRUNE_H

/* Generated by cbindgen from codeprune-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum CpStatus {
  CP_STATUS_OK = 0,
  CP_STATUS_NULL_POINTER = 1,
  CP_STATUS_INVALID_ARGUMENT = 2,
  CP_STATUS_INVALID_UTF8 = 3,
  CP_STATUS_IO = 4,
  CP_STATUS_INTERNAL = 5,
} CpStatus;

/**
 * Corruption operator selector mirroring the library enum.
 */
typedef enum CpCorruptionKind {
  CP_CORRUPTION_KIND_REMOVE_CLOSED_BRACKETS = 0,
  CP_CORRUPTION_KIND_RENAME_VARIABLES = 1,
  CP_CORRUPTION_KIND_ALTER_CONDITIONALS = 2,
  CP_CORRUPTION_KIND_OFFSET_ARRAY_INDICES = 3,
} CpCorruptionKind;

/**
 * Pruning method selector mirroring the library enum.
 */
typedef enum CpPruneMethod {
  CP_PRUNE_METHOD_SCIP = 0,
  CP_PRUNE_METHOD_RANDOM = 1,
  CP_PRUNE_METHOD_SSL_PROTOTYPES = 2,
  CP_PRUNE_METHOD_SEM_DE_DUP = 3,
  CP_PRUNE_METHOD_D4 = 4,
} CpPruneMethod;

/**
 * Opaque cluster-model handle.
 */
typedef struct CpClusterModel CpClusterModel;

/**
 * Opaque corpus handle.
 */
typedef struct CpCorpus CpCorpus;

/**
 * Opaque embedding-set handle.
 */
typedef struct CpEmbeddingSet CpEmbeddingSet;

/**
 * Opaque prune-report handle.
 */
typedef struct CpPruneReport CpPruneReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *cp_version(void);

/**
 * Last error message of the current thread, or NULL when none was
 * recorded. The caller frees the result with `cp_string_free`.
 */
char *cp_last_error_message(void);

/**
 * # Safety
 * `ptr` must be null or a string previously returned by this library and
 * not yet freed.
 */
void cp_string_free(char *ptr);

/**
 * Read a line-delimited corpus file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be a valid
 * pointer. On success `*out` owns a corpus that must be released with
 * `cp_corpus_free`.
 */
enum CpStatus cp_corpus_read_path(const char *path, struct CpCorpus **out);

/**
 * # Safety
 * `corpus` must be null or an unfreed handle from this library.
 */
void cp_corpus_free(struct CpCorpus *corpus);

/**
 * # Safety
 * `corpus` and `out` must be valid pointers.
 */
enum CpStatus cp_corpus_len(const struct CpCorpus *corpus, size_t *out);

/**
 * Corrupt one piece of source text. Writes the corrupted text (caller
 * frees) and the number of corrupted sites.
 *
 * # Safety
 * `content` must be a valid NUL-terminated string; `out_text` and
 * `out_sites` must be valid pointers.
 */
enum CpStatus cp_corrupt_text(const char *content,
                              enum CpCorruptionKind kind,
                              double rate,
                              uint64_t seed,
                              char **out_text,
                              size_t *out_sites);

/**
 * Embed every corpus document with the built-in trigram embedder.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be a valid pointer. On
 * success `*out` must be released with `cp_embeddings_free`.
 */
enum CpStatus cp_embed_builtin(const struct CpCorpus *corpus,
                               size_t dim,
                               struct CpEmbeddingSet **out);

/**
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` must be valid.
 */
enum CpStatus cp_embeddings_read_path(const char *path, struct CpEmbeddingSet **out);

/**
 * # Safety
 * `set` must be a live handle; `path` a valid NUL-terminated string.
 */
enum CpStatus cp_embeddings_write_path(const struct CpEmbeddingSet *set, const char *path);

/**
 * # Safety
 * `set` and `out` must be valid pointers.
 */
enum CpStatus cp_embeddings_len(const struct CpEmbeddingSet *set, size_t *out);

/**
 * # Safety
 * `set` and `out` must be valid pointers.
 */
enum CpStatus cp_embeddings_dim(const struct CpEmbeddingSet *set, size_t *out);

/**
 * # Safety
 * `set` must be null or an unfreed handle from this library.
 */
void cp_embeddings_free(struct CpEmbeddingSet *set);

/**
 * Fit spherical k-means over an embedding set.
 *
 * # Safety
 * `set` must be a live handle; `out` must be a valid pointer. On success
 * `*out` must be released with `cp_model_free`.
 */
enum CpStatus cp_kmeans(const struct CpEmbeddingSet *set,
                        size_t k,
                        uint64_t seed,
                        size_t max_iters,
                        double tol,
                        struct CpClusterModel **out);

/**
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum CpStatus cp_model_k(const struct CpClusterModel *model, size_t *out);

/**
 * Persist a model under a path prefix (`<prefix>.centroids.emb1` and
 * `<prefix>.assignments.jsonl`).
 *
 * # Safety
 * `model` must be a live handle; `prefix` a valid NUL-terminated string.
 */
enum CpStatus cp_model_save_path(const struct CpClusterModel *model, const char *prefix);

/**
 * # Safety
 * `prefix` must be a valid NUL-terminated string; `out` must be valid.
 */
enum CpStatus cp_model_load_path(const char *prefix, struct CpClusterModel **out);

/**
 * # Safety
 * `model` must be null or an unfreed handle from this library.
 */
void cp_model_free(struct CpClusterModel *model);

/**
 * Prune against a model. `embeddings` may be NULL except for the dedup
 * methods.
 *
 * # Safety
 * `model` must be a live handle; `embeddings` null or a live handle; `out`
 * valid. On success `*out` must be released with `cp_report_free`.
 */
enum CpStatus cp_prune(const struct CpClusterModel *model,
                       const struct CpEmbeddingSet *embeddings,
                       enum CpPruneMethod method,
                       double fraction,
                       double alpha,
                       double tau,
                       uint64_t seed,
                       struct CpPruneReport **out);

/**
 * # Safety
 * `report` and `out` must be valid pointers.
 */
enum CpStatus cp_report_pruned_len(const struct CpPruneReport *report, size_t *out);

/**
 * Pruned document id at `index`, in rank order. The caller frees the
 * string with `cp_string_free`.
 *
 * # Safety
 * `report` must be a live handle; `out` must be a valid pointer.
 */
enum CpStatus cp_report_pruned_id(const struct CpPruneReport *report, size_t index, char **out);

/**
 * # Safety
 * `report` must be null or an unfreed handle from this library.
 */
void cp_report_free(struct CpPruneReport *report);

/**
 * pass@k for one (n, c, k) tally.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum CpStatus cp_pass_at_k(uint64_t n, uint64_t c, uint64_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CODEPRUNE_H */
