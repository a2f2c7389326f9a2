// roadtubes: build, evaluate, validate and synthesize road-event tubes.
// All domain work goes through the C API; this file only does argument and
// config plumbing.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "roadtubes.h"

namespace {

using nlohmann::json;

// 0 ok, 1 failure/findings, 2 usage, 3 I/O
int exit_code_for(rt_status status) {
  switch (status) {
    case RT_OK:
      return 0;
    case RT_ERR_IO:
      return 3;
    case RT_ERR_CONFIG:
      return 2;
    default:
      return 1;
  }
}

int report_failure(rt_status status) {
  std::fprintf(stderr, "roadtubes: %s\n", rt_last_error());
  return exit_code_for(status);
}

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { rt_string_free(ptr); }
  char** slot() { return &ptr; }
  const char* get() const { return ptr != nullptr ? ptr : ""; }
};

// Loads --config when given, otherwise starts from an empty document.
// Returns false (and sets code) on unreadable or unparseable files.
bool load_config_base(const std::string& path, json& doc, int& code) {
  doc = json{{"version", "road-lite/1"}};
  if (path.empty()) return true;
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "roadtubes: cannot open config \"%s\"\n", path.c_str());
    code = 3;
    return false;
  }
  doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    std::fprintf(stderr, "roadtubes: config \"%s\" is not valid JSON\n", path.c_str());
    code = 2;
    return false;
  }
  if (!doc.contains("version")) doc["version"] = "road-lite/1";
  return true;
}

bool jobs_from_env(json& doc) {
  const char* env = std::getenv("ROAD_TUBES_JOBS");
  if (env == nullptr || *env == '\0') return true;
  char* end = nullptr;
  const long jobs = std::strtol(env, &end, 10);
  if (end == nullptr || *end != '\0' || jobs < 0) {
    std::fprintf(stderr, "roadtubes: ROAD_TUBES_JOBS must be a non-negative integer\n");
    return false;
  }
  doc["eval"]["jobs"] = jobs;
  return true;
}

int run_build(const std::string& dets, const std::string& vocab,
              const std::string& out, const std::string& config_path,
              const CLI::App& cmd, double lambda, int k, int patience,
              double min_score, double nms_iou, int min_len, bool trim,
              double theta, double alpha, const std::string& compose) {
  int code = 0;
  json doc;
  if (!load_config_base(config_path, doc, code)) return code;
  if (cmd.count("--lambda")) doc["linker"]["lambda"] = lambda;
  if (cmd.count("--k")) doc["linker"]["k"] = k;
  if (cmd.count("--patience")) doc["linker"]["patience"] = patience;
  if (cmd.count("--min-score")) doc["linker"]["min_score"] = min_score;
  if (cmd.count("--nms-iou")) doc["linker"]["nms_iou"] = nms_iou;
  if (cmd.count("--min-len")) doc["linker"]["min_len"] = min_len;
  if (cmd.count("--trim")) doc["trim"]["enabled"] = trim;
  if (cmd.count("--theta")) doc["trim"]["theta"] = theta;
  if (cmd.count("--alpha")) doc["trim"]["alpha"] = alpha;
  if (cmd.count("--compose")) doc["compose"] = compose;

  const std::string config = doc.dump();
  OwnedString summary;
  const rt_status status =
      rt_build(dets.c_str(), vocab.c_str(), config.c_str(), out.c_str(),
               summary.slot());
  if (status != RT_OK) return report_failure(status);
  const json s = json::parse(summary.get());
  std::printf("linked %d tube(s), %d label entr%s from %d frame(s) / %d detection(s)\n",
              s["tubes"].get<int>(), s["labeled"].get<int>(),
              s["labeled"].get<int>() == 1 ? "y" : "ies",
              s["frames"].get<int>(), s["detections"].get<int>());
  std::printf("wrote %zu bytes to %s in %.3f s\n", s["bytes"].get<std::size_t>(),
              out.c_str(), s["seconds"].get<double>());
  return 0;
}

int run_eval(const std::string& gt, const std::string& pred,
             const std::string& config_path, const CLI::App& cmd,
             const std::string& task, const std::string& level,
             const std::vector<std::string>& deltas, int jobs,
             const std::string& compose, bool print_json,
             const std::string& out_path) {
  int code = 0;
  json doc;
  if (!load_config_base(config_path, doc, code)) return code;
  if (cmd.count("--jobs")) {
    doc["eval"]["jobs"] = jobs;
  } else if (!jobs_from_env(doc)) {
    return 2;
  }
  if (cmd.count("--task")) doc["eval"]["task"] = task;
  if (cmd.count("--level")) doc["eval"]["level"] = level;
  if (cmd.count("--compose")) doc["compose"] = compose;
  if (!deltas.empty()) {
    json arr = json::array();
    for (const std::string& token : deltas) arr.push_back(token);
    doc["eval"]["delta"] = arr;
  }

  const std::string config = doc.dump();
  OwnedString report;
  OwnedString table;
  const rt_status status = rt_eval(gt.c_str(), pred.c_str(), config.c_str(),
                                   report.slot(), table.slot());
  if (status != RT_OK) return report_failure(status);
  if (print_json) {
    std::fputs(report.get(), stdout);
  } else {
    std::fputs(table.get(), stdout);
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    out << report.get();
    if (!out) {
      std::fprintf(stderr, "roadtubes: write failed on \"%s\"\n", out_path.c_str());
      return 3;
    }
  }
  return 0;
}

int run_synth(const std::string& config_path, const CLI::App& cmd,
              unsigned long long seed, const std::string& out_dir) {
  int code = 0;
  json doc;
  if (!load_config_base(config_path, doc, code)) return code;
  if (cmd.count("--seed")) doc["seed"] = seed;
  const std::string config = doc.dump();
  OwnedString paths;
  const rt_status status = rt_synth(config.c_str(), out_dir.c_str(), paths.slot());
  if (status != RT_OK) return report_failure(status);
  const json p = json::parse(paths.get());
  std::printf("wrote %s\n", p["annotations"].get<std::string>().c_str());
  std::printf("wrote %s\n", p["detections"].get<std::string>().c_str());
  std::printf("wrote %s\n", p["meta"].get<std::string>().c_str());
  return 0;
}

int run_validate(const std::string& ann, bool print_json) {
  OwnedString report;
  const rt_status status = rt_validate(ann.c_str(), report.slot());
  if (status != RT_OK) return report_failure(status);
  const json r = json::parse(report.get());
  if (print_json) {
    std::fputs(report.get(), stdout);
  } else {
    for (const json& finding : r["findings"]) {
      std::printf("%s: %s\n", finding["severity"].get<std::string>().c_str(),
                  finding["message"].get<std::string>().c_str());
    }
    std::printf("%d error(s), %d warning(s)\n", r["errors"].get<int>(),
                r["warnings"].get<int>());
  }
  return r["errors"].get<int>() > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"road-event tube toolkit"};
  app.set_version_flag("--version", std::string(rt_version()));
  app.require_subcommand(1);

  // build
  auto* build = app.add_subcommand("build", "link a detection stream into labeled tubes");
  std::string dets, vocab = "road-v1", out, config_path, compose = "product";
  double lambda = 0.5, min_score = 0.025, nms_iou = 0.45, theta = 0.5, alpha = 1.0;
  int k = 4, patience = 5, min_len = 0;
  bool trim = false;
  build->add_option("--dets", dets, "detection stream (JSONL)")->required();
  build->add_option("--vocab", vocab, "road-v1 | annotation file | vocab file");
  build->add_option("--out", out, "output tube file")->required();
  build->add_option("--config", config_path, "config file (flags win)");
  build->add_option("--lambda", lambda, "association IoU threshold");
  build->add_option("--k", k, "labels per task per tube");
  build->add_option("--patience", patience, "missed frames before termination");
  build->add_option("--min-score", min_score, "agentness floor");
  build->add_option("--nms-iou", nms_iou, "NMS overlap threshold");
  build->add_option("--min-len", min_len, "drop shorter tubes (frames)");
  build->add_flag("--trim,!--no-trim", trim, "temporal trimming");
  build->add_option("--theta", theta, "trim agentness level");
  build->add_option("--alpha", alpha, "trim transition cost");
  build->add_option("--compose", compose, "composite scores: product | joint")
      ->check(CLI::IsMember({"product", "joint"}));

  // eval
  auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
  std::string gt, pred, task = "agent", level = "video", eval_out;
  std::vector<std::string> deltas;
  int jobs = 0;
  bool eval_json = false;
  eval->add_option("--gt", gt, "annotation file")->required();
  eval->add_option("--pred", pred, "tube file (video) or detection stream (frame, av)")
      ->required();
  eval->add_option("--task", task, "agent | action | loc | duplex | event | av")
      ->check(CLI::IsMember({"agent", "action", "loc", "duplex", "event", "av"}));
  eval->add_option("--level", level, "frame | video")
      ->check(CLI::IsMember({"frame", "video"}));
  eval->add_option("--delta", deltas,
                   "IoU threshold(s); N or lo:hi band (step 0.05)");
  eval->add_option("--jobs", jobs, "worker threads (0 = all cores)");
  eval->add_option("--config", config_path, "config file (flags win)");
  eval->add_option("--compose", compose, "composite scores: product | joint")
      ->check(CLI::IsMember({"product", "joint"}));
  eval->add_flag("--json", eval_json, "print the JSON report instead of the table");
  eval->add_option("--out", eval_out, "also write the JSON report here");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  unsigned long long seed = 0;
  std::string out_dir;
  synth->add_option("--config", config_path, "synth config file")->required();
  synth->add_option("--seed", seed, "override the config seed");
  synth->add_option("--out-dir", out_dir, "output directory")->required();

  // validate
  auto* validate = app.add_subcommand("validate", "check an annotation file");
  std::string ann;
  bool validate_json = false;
  validate->add_option("--ann", ann, "annotation file")->required();
  validate->add_flag("--json", validate_json, "print the JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (build->parsed()) {
    return run_build(dets, vocab, out, config_path, *build, lambda, k, patience,
                     min_score, nms_iou, min_len, trim, theta, alpha, compose);
  }
  if (eval->parsed()) {
    return run_eval(gt, pred, config_path, *eval, task, level, deltas, jobs,
                    compose, eval_json, eval_out);
  }
  if (synth->parsed()) {
    return run_synth(config_path, *synth, seed, out_dir);
  }
  return run_validate(ann, validate_json);
}
