#ifndef ROADTUBES_PIPELINE_HPP
#define ROADTUBES_PIPELINE_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "roadtubes/composition.hpp"
#include "roadtubes/detections.hpp"
#include "roadtubes/eval.hpp"
#include "roadtubes/linker.hpp"
#include "roadtubes/schema.hpp"
#include "roadtubes/synth.hpp"
#include "roadtubes/trimming.hpp"

namespace roadtubes {

struct BuildOptions {
  LinkerConfig linker;
  TrimConfig trim;
  CompositionMode compose = CompositionMode::product_of_marginals;
};

// Label names plus, when the source can provide them, composite classes.
struct VocabContext {
  LabelVocab vocab;
  CompositeVocab composites;
  bool have_composites = false;
};

// Accepts the builtin name "road-v1", a path to an annotation document
// (composites derived from its tubes), or a path to a bare vocab JSON
// ({"label_vocab": {...}}, no composites).
VocabContext load_vocab_context(const std::string& source);

// Settings shared by the config file and the command line; the file uses
// the same schema-versioned JSON dialect as the data files.
struct ToolConfig {
  BuildOptions build;
  EvalConfig eval;
};

ToolConfig parse_tool_config(std::string_view json_text);

// "0.35" adds a threshold, "0.5:0.95" adds a band.
void parse_delta_token(const std::string& token, EvalConfig& cfg);

std::string build_config_echo(const BuildOptions& opt);
std::string eval_config_echo(const EvalConfig& cfg, CompositionMode mode);

// link -> finalize -> trim -> top-k labeling
std::vector<LabeledTube> build_tubes(const std::vector<FrameDetections>& frames,
                                     const BuildOptions& opt,
                                     const VocabContext& vc);

struct BuildSummary {
  int frames = 0;
  int detections = 0;
  int tubes = 0;    // distinct tube instances after trimming
  int labeled = 0;  // (tube, task, class) entries written
  std::size_t bytes = 0;
  double seconds = 0.0;
};

BuildSummary build_tubes_file(const std::string& dets_path,
                              const std::string& out_path,
                              const BuildOptions& opt, const VocabContext& vc);

// Evaluation against a ground-truth annotation file. Composite classes are
// derived from the ground truth; predicted composite ids must refer to the
// same derived ordering. Video level reads a tube file, frame level and the
// AV task read a detection stream.
EvalRun run_eval(const std::string& gt_path, const std::string& pred_path,
                 const EvalConfig& cfg, CompositionMode mode);

std::string validation_to_json(const ValidationReport& report);
std::string render_validation(const ValidationReport& report);

struct SynthPaths {
  std::string annotations;
  std::string detections;
  std::string meta;
};

// Writes annotations.json, detections.jsonl (perturbed when any noise
// parameter is nonzero) and meta.json into out_dir.
SynthPaths run_synth(const SynthConfig& cfg, const std::string& out_dir);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace roadtubes

#endif
