#include "roadtubes/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "roadtubes/errors.hpp"
#include "schema_internal.hpp"

namespace roadtubes {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RoadError(ErrorKind::io, "cannot open \"" + path + "\" for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw RoadError(ErrorKind::io, "read failed on \"" + path + "\"");
  }
  return std::move(buf).str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw RoadError(ErrorKind::io, "cannot open \"" + path + "\" for writing");
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) {
    throw RoadError(ErrorKind::io, "write failed on \"" + path + "\"");
  }
}

VocabContext load_vocab_context(const std::string& source) {
  VocabContext vc;
  if (source == "road-v1") {
    vc.vocab = road_v1_vocab();
    return vc;
  }
  const std::string text = read_text_file(source);
  const jsonutil::Json doc = jsonutil::parse_document(text, source);
  if (doc.contains("tubes")) {
    const AnnotationSet ann = parse_annotations(text);
    vc.vocab = ann.vocab;
    vc.composites = derive_composite_vocabs(ann);
    vc.have_composites = true;
    return vc;
  }
  vc.vocab = parse_vocab_object(
      jsonutil::require_object(doc, "label_vocab", source));
  return vc;
}

void parse_delta_token(const std::string& token, EvalConfig& cfg) {
  const std::size_t colon = token.find(':');
  try {
    if (colon == std::string::npos) {
      cfg.deltas.push_back(std::stod(token));
    } else {
      DeltaBand band;
      band.lo = std::stod(token.substr(0, colon));
      band.hi = std::stod(token.substr(colon + 1));
      cfg.bands.push_back(band);
    }
  } catch (const std::exception&) {
    throw RoadError(ErrorKind::bad_config,
                    "cannot parse threshold \"" + token + "\"");
  }
}

ToolConfig parse_tool_config(std::string_view json_text) {
  using jsonutil::Json;
  const Json doc = jsonutil::parse_document(json_text, "config");
  const std::string version = jsonutil::require_string(doc, "version", "config");
  if (version != "road-lite/1") {
    throw RoadError(ErrorKind::unknown_version,
                    "unsupported config version \"" + version + "\"");
  }
  ToolConfig cfg;
  auto opt_number = [](const Json& obj, const char* key, double fallback) {
    return obj.contains(key) ? jsonutil::require_number(obj, key, "config") : fallback;
  };
  auto opt_int = [](const Json& obj, const char* key, int fallback) {
    return obj.contains(key)
               ? static_cast<int>(jsonutil::require_int(obj, key, "config"))
               : fallback;
  };
  if (doc.contains("linker")) {
    const Json& lj = jsonutil::require_object(doc, "linker", "config");
    LinkerConfig& lc = cfg.build.linker;
    lc.lambda = opt_number(lj, "lambda", lc.lambda);
    lc.k = opt_int(lj, "k", lc.k);
    lc.patience = opt_int(lj, "patience", lc.patience);
    lc.min_score = opt_number(lj, "min_score", lc.min_score);
    lc.nms_iou = opt_number(lj, "nms_iou", lc.nms_iou);
    lc.min_len = opt_int(lj, "min_len", lc.min_len);
  }
  if (doc.contains("trim")) {
    const Json& tj = jsonutil::require_object(doc, "trim", "config");
    TrimConfig& tc = cfg.build.trim;
    if (tj.contains("enabled")) {
      if (!tj["enabled"].is_boolean()) {
        throw RoadError(ErrorKind::malformed, "config: trim.enabled must be a boolean");
      }
      tc.enabled = tj["enabled"].get<bool>();
    }
    tc.theta = opt_number(tj, "theta", tc.theta);
    tc.alpha = opt_number(tj, "alpha", tc.alpha);
  }
  if (doc.contains("compose")) {
    const std::string name = jsonutil::require_string(doc, "compose", "config");
    const auto mode = composition_mode_from_name(name);
    if (!mode) {
      throw RoadError(ErrorKind::bad_config, "unknown composition mode \"" + name + "\"");
    }
    cfg.build.compose = *mode;
  }
  if (doc.contains("eval")) {
    const Json& ej = jsonutil::require_object(doc, "eval", "config");
    if (ej.contains("task")) {
      const std::string name = jsonutil::require_string(ej, "task", "config");
      const auto task = task_from_name(name);
      if (!task) {
        throw RoadError(ErrorKind::bad_config, "unknown task \"" + name + "\"");
      }
      cfg.eval.task = *task;
    }
    if (ej.contains("level")) {
      const std::string name = jsonutil::require_string(ej, "level", "config");
      const auto level = eval_level_from_name(name);
      if (!level) {
        throw RoadError(ErrorKind::bad_config, "unknown level \"" + name + "\"");
      }
      cfg.eval.level = *level;
    }
    if (ej.contains("delta")) {
      cfg.eval.deltas.clear();
      cfg.eval.bands.clear();
      const Json& dj = ej["delta"];
      auto add = [&](const Json& v) {
        if (v.is_number()) {
          cfg.eval.deltas.push_back(v.get<double>());
        } else if (v.is_string()) {
          parse_delta_token(v.get<std::string>(), cfg.eval);
        } else {
          throw RoadError(ErrorKind::malformed,
                          "config: delta entries must be numbers or \"lo:hi\" strings");
        }
      };
      if (dj.is_array()) {
        for (const Json& v : dj) add(v);
      } else {
        add(dj);
      }
    }
    cfg.eval.jobs = opt_int(ej, "jobs", cfg.eval.jobs);
  }
  return cfg;
}

std::string build_config_echo(const BuildOptions& opt) {
  using jsonutil::OrderedJson;
  OrderedJson doc;
  doc["linker"] = {{"lambda", opt.linker.lambda},
                   {"k", opt.linker.k},
                   {"patience", opt.linker.patience},
                   {"min_score", opt.linker.min_score},
                   {"nms_iou", opt.linker.nms_iou},
                   {"min_len", opt.linker.min_len}};
  doc["trim"] = {{"enabled", opt.trim.enabled},
                 {"theta", opt.trim.theta},
                 {"alpha", opt.trim.alpha}};
  doc["compose"] = composition_mode_name(opt.compose);
  return doc.dump();
}

std::string eval_config_echo(const EvalConfig& cfg, CompositionMode mode) {
  using jsonutil::OrderedJson;
  OrderedJson doc;
  doc["task"] = task_name(cfg.task);
  doc["level"] = eval_level_name(cfg.level);
  doc["deltas"] = cfg.deltas;
  OrderedJson bands = OrderedJson::array();
  for (const DeltaBand& band : cfg.bands) {
    bands.push_back({{"lo", band.lo}, {"hi", band.hi}});
  }
  doc["bands"] = std::move(bands);
  doc["jobs"] = cfg.jobs;
  doc["compose"] = composition_mode_name(mode);
  return doc.dump();
}

std::vector<LabeledTube> build_tubes(const std::vector<FrameDetections>& frames,
                                     const BuildOptions& opt,
                                     const VocabContext& vc) {
  const CompositeVocab* cv = vc.have_composites ? &vc.composites : nullptr;
  TubeLinker linker(opt.linker, vocab_sizes(vc.vocab, cv), opt.compose, cv);
  for (const FrameDetections& frame : frames) linker.step(frame);
  std::vector<ActiveTube> tubes = trim_tubes(linker.finalize(), opt.trim);
  return label_tubes(tubes, opt.linker);
}

BuildSummary build_tubes_file(const std::string& dets_path,
                              const std::string& out_path,
                              const BuildOptions& opt, const VocabContext& vc) {
  const auto start = std::chrono::steady_clock::now();
  BuildSummary summary;
  const std::vector<FrameDetections> frames =
      read_detection_file(dets_path,
                          vocab_sizes(vc.vocab, vc.have_composites
                                                    ? &vc.composites
                                                    : nullptr));
  summary.frames = static_cast<int>(frames.size());
  for (const FrameDetections& frame : frames) {
    summary.detections += static_cast<int>(frame.dets.size());
  }
  const std::vector<LabeledTube> labeled = build_tubes(frames, opt, vc);
  summary.labeled = static_cast<int>(labeled.size());
  std::int64_t last_uid = -1;
  for (const LabeledTube& tube : labeled) {
    if (tube.uid != last_uid) {
      ++summary.tubes;
      last_uid = tube.uid;
    }
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw RoadError(ErrorKind::io, "cannot open \"" + out_path + "\" for writing");
  }
  summary.bytes = write_tubes(labeled, out, build_config_echo(opt));
  out.flush();
  if (!out) {
    throw RoadError(ErrorKind::io, "write failed on \"" + out_path + "\"");
  }
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return summary;
}

EvalRun run_eval(const std::string& gt_path, const std::string& pred_path,
                 const EvalConfig& cfg, CompositionMode mode) {
  const AnnotationSet gt = load_annotations(gt_path);
  const CompositeVocab cv = derive_composite_vocabs(gt);

  if (cfg.task == TaskKind::av_action) {
    const std::vector<FrameDetections> frames =
        read_detection_file(pred_path, vocab_sizes(gt.vocab, &cv));
    std::vector<AvScores> scores;
    for (const FrameDetections& frame : frames) {
      if (!frame.av.empty()) scores.push_back({frame.t, frame.av});
    }
    return av_action_map(gt, scores);
  }
  if (cfg.level == EvalLevel::frame) {
    const std::vector<FrameDetections> frames =
        read_detection_file(pred_path, vocab_sizes(gt.vocab, &cv));
    return frame_map(gt, frames, cfg, cv, mode);
  }
  return video_map(gt, load_tubes(pred_path), cfg, cv);
}

std::string validation_to_json(const ValidationReport& report) {
  using jsonutil::OrderedJson;
  OrderedJson doc;
  doc["version"] = "road-lite/1";
  doc["kind"] = "validation";
  doc["errors"] = report.error_count();
  doc["warnings"] = report.warning_count();
  OrderedJson findings = OrderedJson::array();
  for (const Finding& finding : report.findings) {
    OrderedJson fj;
    fj["severity"] = finding.is_error ? "error" : "warning";
    if (finding.uid >= 0) fj["uid"] = finding.uid;
    if (finding.t >= 0) fj["t"] = finding.t;
    fj["message"] = finding.message;
    findings.push_back(std::move(fj));
  }
  doc["findings"] = std::move(findings);
  return doc.dump(2) + "\n";
}

std::string render_validation(const ValidationReport& report) {
  std::string out;
  for (const Finding& finding : report.findings) {
    out += finding.is_error ? "error: " : "warning: ";
    out += finding.message;
    out += '\n';
  }
  char tail[80];
  std::snprintf(tail, sizeof(tail), "%d error(s), %d warning(s)\n",
                report.error_count(), report.warning_count());
  out += tail;
  return out;
}

SynthPaths run_synth(const SynthConfig& cfg, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw RoadError(ErrorKind::io, "cannot create \"" + out_dir + "\": " + ec.message());
  }
  const SynthOutput generated = synth_generate(cfg);
  const NoiseConfig& noise = cfg.noise;
  const bool noisy = noise.jitter > 0.0 || noise.dropout > 0.0 ||
                     noise.distractor_rate > 0.0 || noise.score_noise > 0.0;
  const std::vector<FrameDetections> stream =
      noisy ? synth_perturb(generated.noiseless, noise, cfg.video, cfg.seed)
            : generated.noiseless;

  SynthPaths paths;
  paths.annotations = (std::filesystem::path(out_dir) / "annotations.json").string();
  paths.detections = (std::filesystem::path(out_dir) / "detections.jsonl").string();
  paths.meta = (std::filesystem::path(out_dir) / "meta.json").string();

  write_text_file(paths.annotations, serialize_annotations(generated.annotations));
  std::string lines;
  for (const FrameDetections& frame : stream) {
    lines += serialize_frame(frame);
    lines += '\n';
  }
  write_text_file(paths.detections, lines);

  using jsonutil::OrderedJson;
  OrderedJson meta;
  meta["version"] = "road-lite/1";
  meta["kind"] = "synth-meta";
  meta["rng"] = "mt19937_64";
  meta["seed"] = cfg.seed;
  meta["config"] = OrderedJson::parse(serialize_synth_config(cfg));
  write_text_file(paths.meta, meta.dump(2) + "\n");
  return paths;
}

}  // namespace roadtubes
