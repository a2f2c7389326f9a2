#include "roadtubes.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "json_util.hpp"
#include "roadtubes/errors.hpp"
#include "roadtubes/pipeline.hpp"

using namespace roadtubes;

namespace {

thread_local std::string g_last_error = "no error";

rt_status status_for(const RoadError& e) {
  switch (e.kind()) {
    case ErrorKind::io:
      return RT_ERR_IO;
    case ErrorKind::malformed:
    case ErrorKind::unknown_version:
    case ErrorKind::missing_field:
      return RT_ERR_PARSE;
    case ErrorKind::bad_config:
      return RT_ERR_CONFIG;
    case ErrorKind::bad_state:
      return RT_ERR_STATE;
    default:
      return RT_ERR_DATA;
  }
}

rt_status fail(rt_status status, const char* message) {
  g_last_error = message;
  return status;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

rt_status emit(char** slot, const std::string& value) {
  if (slot == nullptr) return RT_OK;
  *slot = dup_string(value);
  if (*slot == nullptr) return fail(RT_ERR_INTERNAL, "out of memory");
  return RT_OK;
}

// Runs fn, translating exceptions into statuses.
template <typename Fn>
rt_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const RoadError& e) {
    g_last_error = e.what();
    return status_for(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RT_ERR_INTERNAL;
  }
}

}  // namespace

struct rt_vocab {
  VocabContext ctx;
};

struct rt_linker {
  VocabContext ctx;
  BuildOptions options;
  TubeLinker linker;
  bool finished = false;

  rt_linker(VocabContext vc, BuildOptions opt)
      : ctx(std::move(vc)),
        options(opt),
        linker(opt.linker, vocab_sizes(ctx.vocab,
                                       ctx.have_composites ? &ctx.composites
                                                           : nullptr),
               opt.compose,
               ctx.have_composites ? &ctx.composites : nullptr) {}
};

extern "C" {

const char* rt_version(void) { return "1.0.0"; }

const char* rt_last_error(void) { return g_last_error.c_str(); }

void rt_string_free(char* s) { std::free(s); }

rt_status rt_vocab_load(const char* source, rt_vocab** out) {
  if (source == nullptr || out == nullptr) {
    return fail(RT_ERR_CONFIG, "rt_vocab_load: null argument");
  }
  *out = nullptr;
  return guarded([&] {
    auto handle = std::make_unique<rt_vocab>();
    handle->ctx = load_vocab_context(source);
    *out = handle.release();
    return RT_OK;
  });
}

rt_status rt_vocab_to_json(const rt_vocab* vocab, char** out_json) {
  if (vocab == nullptr || out_json == nullptr) {
    return fail(RT_ERR_CONFIG, "rt_vocab_to_json: null argument");
  }
  *out_json = nullptr;
  return guarded([&] {
    using jsonutil::OrderedJson;
    const VocabContext& ctx = vocab->ctx;
    OrderedJson doc;
    doc["version"] = "road-lite/1";
    doc["kind"] = "vocab";
    doc["label_vocab"] = {{"agent", ctx.vocab.agent},
                          {"action", ctx.vocab.action},
                          {"loc", ctx.vocab.loc},
                          {"av_action", ctx.vocab.av_action}};
    if (ctx.have_composites) {
      OrderedJson duplex = OrderedJson::array();
      for (std::size_t i = 0; i < ctx.composites.duplex.size(); ++i) {
        duplex.push_back(
            ctx.composites.duplex_name(ctx.vocab, static_cast<int>(i)));
      }
      OrderedJson event = OrderedJson::array();
      for (std::size_t i = 0; i < ctx.composites.event.size(); ++i) {
        event.push_back(
            ctx.composites.event_name(ctx.vocab, static_cast<int>(i)));
      }
      doc["composites"] = {{"duplex", std::move(duplex)},
                           {"event", std::move(event)}};
    }
    return emit(out_json, doc.dump(2) + "\n");
  });
}

void rt_vocab_free(rt_vocab* vocab) { delete vocab; }

rt_status rt_linker_new(const rt_vocab* vocab, const char* config_json,
                        rt_linker** out) {
  if (vocab == nullptr || out == nullptr) {
    return fail(RT_ERR_CONFIG, "rt_linker_new: null argument");
  }
  *out = nullptr;
  return guarded([&] {
    BuildOptions options;
    if (config_json != nullptr) {
      options = parse_tool_config(config_json).build;
    }
    options.linker.validate();
    options.trim.validate();
    *out = new rt_linker(vocab->ctx, options);
    return RT_OK;
  });
}

rt_status rt_linker_step(rt_linker* linker, const char* frame_json,
                         char** out_report_json) {
  if (linker == nullptr || frame_json == nullptr) {
    return fail(RT_ERR_CONFIG, "rt_linker_step: null argument");
  }
  if (out_report_json != nullptr) *out_report_json = nullptr;
  return guarded([&] {
    if (linker->finished) {
      throw RoadError(ErrorKind::bad_state, "linker already finished");
    }
    const std::vector<FrameDetections> frames = parse_detection_stream(
        frame_json,
        vocab_sizes(linker->ctx.vocab, linker->ctx.have_composites
                                           ? &linker->ctx.composites
                                           : nullptr));
    if (frames.size() != 1) {
      throw RoadError(ErrorKind::malformed,
                      "rt_linker_step expects exactly one frame line");
    }
    const StepReport report = linker->linker.step(frames[0]);
    using jsonutil::OrderedJson;
    OrderedJson doc;
    doc["t"] = report.t;
    doc["opened"] = report.opened;
    doc["extended"] = report.extended;
    doc["terminated"] = report.terminated;
    return emit(out_report_json, doc.dump());
  });
}

rt_status rt_linker_finish(rt_linker* linker, char** out_tubes_json) {
  if (linker == nullptr || out_tubes_json == nullptr) {
    return fail(RT_ERR_CONFIG, "rt_linker_finish: null argument");
  }
  *out_tubes_json = nullptr;
  return guarded([&] {
    if (linker->finished) {
      throw RoadError(ErrorKind::bad_state, "linker already finished");
    }
    linker->finished = true;
    std::vector<ActiveTube> tubes =
        trim_tubes(linker->linker.finalize(), linker->options.trim);
    const std::vector<LabeledTube> labeled =
        label_tubes(tubes, linker->options.linker);
    return emit(out_tubes_json,
                tubes_to_json(labeled, build_config_echo(linker->options)));
  });
}

void rt_linker_free(rt_linker* linker) { delete linker; }

rt_status rt_build(const char* dets_path, const char* vocab_source,
                   const char* config_json, const char* out_path,
                   char** out_summary_json) {
  if (dets_path == nullptr || vocab_source == nullptr || out_path == nullptr) {
    return fail(RT_ERR_CONFIG, "rt_build: null argument");
  }
  if (out_summary_json != nullptr) *out_summary_json = nullptr;
  return guarded([&] {
    BuildOptions options;
    if (config_json != nullptr) {
      options = parse_tool_config(config_json).build;
    }
    options.linker.validate();
    options.trim.validate();
    const VocabContext vc = load_vocab_context(vocab_source);
    const BuildSummary summary =
        build_tubes_file(dets_path, out_path, options, vc);
    using jsonutil::OrderedJson;
    OrderedJson doc;
    doc["frames"] = summary.frames;
    doc["detections"] = summary.detections;
    doc["tubes"] = summary.tubes;
    doc["labeled"] = summary.labeled;
    doc["bytes"] = summary.bytes;
    doc["seconds"] = summary.seconds;
    return emit(out_summary_json, doc.dump());
  });
}

rt_status rt_eval(const char* gt_path, const char* pred_path,
                  const char* config_json, char** out_report_json,
                  char** out_table) {
  if (gt_path == nullptr || pred_path == nullptr || out_report_json == nullptr) {
    return fail(RT_ERR_CONFIG, "rt_eval: null argument");
  }
  *out_report_json = nullptr;
  if (out_table != nullptr) *out_table = nullptr;
  return guarded([&] {
    EvalConfig cfg = EvalConfig::defaults(TaskKind::agent, EvalLevel::video);
    CompositionMode mode = CompositionMode::product_of_marginals;
    if (config_json != nullptr) {
      const ToolConfig tool = parse_tool_config(config_json);
      // Defaults depend on the requested level, so rebuild when the file
      // left the thresholds unset.
      cfg = tool.eval;
      if (cfg.deltas.empty() && cfg.bands.empty()) {
        EvalConfig fresh = EvalConfig::defaults(cfg.task, cfg.level);
        fresh.jobs = cfg.jobs;
        cfg = fresh;
      }
      mode = tool.build.compose;
    }
    if (cfg.task == TaskKind::av_action) cfg.level = EvalLevel::frame;
    const EvalRun run = run_eval(gt_path, pred_path, cfg, mode);
    const rt_status status =
        emit(out_report_json, run_to_json(run, eval_config_echo(cfg, mode)));
    if (status != RT_OK) return status;
    return emit(out_table, render_table(run));
  });
}

rt_status rt_validate(const char* ann_path, char** out_report_json) {
  if (ann_path == nullptr || out_report_json == nullptr) {
    return fail(RT_ERR_CONFIG, "rt_validate: null argument");
  }
  *out_report_json = nullptr;
  return guarded([&] {
    const ValidationReport report =
        validate_annotations(load_annotations(ann_path));
    return emit(out_report_json, validation_to_json(report));
  });
}

rt_status rt_synth(const char* config_json, const char* out_dir,
                   char** out_paths_json) {
  if (config_json == nullptr || out_dir == nullptr) {
    return fail(RT_ERR_CONFIG, "rt_synth: null argument");
  }
  if (out_paths_json != nullptr) *out_paths_json = nullptr;
  return guarded([&] {
    const SynthConfig cfg = parse_synth_config(config_json);
    const SynthPaths paths = run_synth(cfg, out_dir);
    using jsonutil::OrderedJson;
    OrderedJson doc;
    doc["annotations"] = paths.annotations;
    doc["detections"] = paths.detections;
    doc["meta"] = paths.meta;
    return emit(out_paths_json, doc.dump());
  });
}

}  // extern "C"
