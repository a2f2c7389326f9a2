/* C interface to the road-event tube toolkit.
 *
 * All functions return rt_status; RT_OK is 0. On failure rt_last_error()
 * holds a thread-local message describing the most recent error in the
 * calling thread. Strings returned through char** out-parameters are owned
 * by the caller and must be released with rt_string_free().
 *
 * JSON in and out uses the same road-lite/1 dialect as the data files.
 */

#ifndef ROADTUBES_H
#define ROADTUBES_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rt_status {
  RT_OK = 0,
  RT_ERR_IO = 1,       /* file unreadable/unwritable */
  RT_ERR_PARSE = 2,    /* malformed or wrong-version document */
  RT_ERR_CONFIG = 3,   /* invalid configuration or argument */
  RT_ERR_STATE = 4,    /* call sequence violation (e.g. step after finish) */
  RT_ERR_DATA = 5,     /* well-formed input with inconsistent content */
  RT_ERR_INTERNAL = 6
} rt_status;

/* Library version, static storage. */
const char* rt_version(void);

/* Message for the last failing call in this thread; static until the next
 * failing call. Never NULL. */
const char* rt_last_error(void);

void rt_string_free(char* s);

/* ---- vocabulary ---------------------------------------------------- */

typedef struct rt_vocab rt_vocab;

/* source: "road-v1", an annotation file (composite classes derived from
 * its tubes), or a bare vocab JSON file. */
rt_status rt_vocab_load(const char* source, rt_vocab** out);
rt_status rt_vocab_to_json(const rt_vocab* vocab, char** out_json);
void rt_vocab_free(rt_vocab* vocab);

/* ---- incremental tube building -------------------------------------- */

typedef struct rt_linker rt_linker;

/* config_json: tool-config document ({"version":"road-lite/1",
 * "linker":{...},"trim":{...},"compose":"product"|"joint"}); NULL for
 * defaults. */
rt_status rt_linker_new(const rt_vocab* vocab, const char* config_json,
                        rt_linker** out);

/* frame_json: one detection-stream line. out_report_json (optional) gets
 * {"t","opened","extended","terminated"} describing the update. */
rt_status rt_linker_step(rt_linker* linker, const char* frame_json,
                         char** out_report_json);

/* Finalizes, trims, labels and serializes the tube file. The linker is
 * spent afterwards; only rt_linker_free remains valid. */
rt_status rt_linker_finish(rt_linker* linker, char** out_tubes_json);

void rt_linker_free(rt_linker* linker);

/* ---- one-shot operations -------------------------------------------- */

/* Detection stream -> tube file. out_summary_json (optional) gets counts,
 * bytes written and wall time. */
rt_status rt_build(const char* dets_path, const char* vocab_source,
                   const char* config_json, const char* out_path,
                   char** out_summary_json);

/* Evaluates predictions against ground-truth annotations. config_json uses
 * the tool-config dialect with an "eval" object ({"task","level","delta",
 * "jobs"}); NULL evaluates the default video protocol for the agent task.
 * The AV task is always frame-level. pred_path is a tube file for level
 * "video", a detection stream for level "frame" and the AV task.
 * out_table (optional) gets an aligned-column text rendering. */
rt_status rt_eval(const char* gt_path, const char* pred_path,
                  const char* config_json, char** out_report_json,
                  char** out_table);

/* Semantic checks on an annotation file. Findings are reported in the
 * JSON, not via the status: a readable, parseable file returns RT_OK even
 * when findings are present. */
rt_status rt_validate(const char* ann_path, char** out_report_json);

/* Generates annotations.json, detections.jsonl and meta.json in out_dir.
 * out_paths_json (optional) gets the three paths. */
rt_status rt_synth(const char* config_json, const char* out_dir,
                   char** out_paths_json);

#ifdef __cplusplus
}
#endif

#endif
