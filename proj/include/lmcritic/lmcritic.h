#ifndef LMCRITIC_H
#define LMCRITIC_H

/* C interface to the lmcritic toolkit.
 *
 * Configuration travels as a flat JSON object (see README); structured
 * results come back as JSON strings that the caller releases with
 * lmc_free(). Every call returns an lmc_status; on failure the message is
 * available from lmc_last_error() on the same thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LMC_API __declspec(dllexport)
#else
#define LMC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lmc_status {
  LMC_OK = 0,
  LMC_INVALID_ARGUMENT = 1,
  LMC_IO = 2,
  LMC_EMPTY_CORPUS = 3,
  LMC_CORRUPT_MODEL_FILE = 4,
  LMC_SCORER_UNAVAILABLE = 5,
  LMC_PROTOCOL = 6,
  LMC_EMPTY_EVAL_SET = 7,
  LMC_EMPTY_DATASET = 8,
  LMC_LENGTH_MISMATCH = 9,
  LMC_MALFORMED_DATA = 10,
  LMC_INTERNAL = 11
} lmc_status;

typedef struct lmc_scorer lmc_scorer;

typedef void (*lmc_log_fn)(const char* line, void* user);

LMC_API const char* lmc_version(void);
LMC_API const char* lmc_status_name(lmc_status status);
/* Message of the last failed call on this thread ("" if none). */
LMC_API const char* lmc_last_error(void);
LMC_API void lmc_free(char* p);
/* Progress lines from long pipelines; NULL disables. Process-wide. */
LMC_API void lmc_set_log(lmc_log_fn fn, void* user);

/* Fills defaults, validates and returns the effective config with its
 * "digest". config_json may be NULL for all defaults. */
LMC_API lmc_status lmc_config_resolve(const char* config_json, char** out_json);

/* Trains the n-gram model on a sentence file (.jsonl or plain text). */
LMC_API lmc_status lmc_lm_train(const char* config_json, const char* corpus_path,
                                const char* model_path, char** out_json);

/* Opens the scorer named by the config: "builtin" needs model_path, the
 * external kinds connect (and check the connection) immediately. */
LMC_API lmc_status lmc_scorer_open(const char* config_json, const char* model_path,
                                   lmc_scorer** out);
LMC_API void lmc_scorer_close(lmc_scorer* scorer);

/* sentences_json: array of strings. Result: {"logprobs": [...]}. */
LMC_API lmc_status lmc_score(lmc_scorer* scorer, const char* sentences_json, char** out_json);

/* sentences_json: array of strings or {"id", "text"} objects. Result: array
 * of verdict records. */
LMC_API lmc_status lmc_critic_judge(lmc_scorer* scorer, const char* config_json,
                                    const char* sentences_json, char** out_json);

/* method "lm" or "absthr". For "absthr", delta_json is a number or NULL to
 * calibrate on the same pairs. Result: report with metrics, counts, table. */
LMC_API lmc_status lmc_critic_eval(lmc_scorer* scorer, const char* config_json,
                                   const char* pairs_path, const char* method,
                                   const char* delta_json, char** out_json);

/* Result: {"delta": mean logprob of all bad and good sentences}. */
LMC_API lmc_status lmc_critic_calibrate(lmc_scorer* scorer, const char* pairs_path,
                                        char** out_json);

/* Result: {"center", "space_size", "variants"}. */
LMC_API lmc_status lmc_perturb_sample(const char* config_json, const char* text, char** out_json);

/* Synthetic (bad, good) pairs from clean sentences, written as pair JSONL. */
LMC_API lmc_status lmc_corrupt(const char* config_json, const char* in_path,
                               const char* out_path, char** out_json);

/* Runs the configured fixer over a sentence file; writes sentence JSONL. */
LMC_API lmc_status lmc_fix(lmc_scorer* scorer, const char* config_json, const char* in_path,
                           const char* out_path, char** out_json);

/* BIFI rounds; artifacts under out_dir/round_k. Result: per-round reports. */
LMC_API lmc_status lmc_bifi_run(lmc_scorer* scorer, const char* config_json,
                                const char* unlabeled_path, const char* out_dir,
                                char** out_json);

/* Edit-level P/R/F0.5 over aligned sentence files. */
LMC_API lmc_status lmc_gec_eval(const char* src_path, const char* hyp_path,
                                const char* ref_path, char** out_json);

#ifdef __cplusplus
}
#endif

#endif
