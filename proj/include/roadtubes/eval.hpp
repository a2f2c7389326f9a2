#ifndef ROADTUBES_EVAL_HPP
#define ROADTUBES_EVAL_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roadtubes/composition.hpp"
#include "roadtubes/detections.hpp"
#include "roadtubes/schema.hpp"

namespace roadtubes {

enum class EvalLevel { frame, video };

const char* eval_level_name(EvalLevel level);
std::optional<EvalLevel> eval_level_from_name(std::string_view name);

// Inclusive threshold band stepped by 0.05, e.g. 0.5:0.95.
struct DeltaBand {
  double lo = 0.5;
  double hi = 0.95;

  std::vector<double> thresholds() const;
};

struct EvalConfig {
  TaskKind task = TaskKind::agent;
  EvalLevel level = EvalLevel::video;
  std::vector<double> deltas;
  std::vector<DeltaBand> bands;
  int jobs = 0;  // 0 = all available cores

  void validate() const;

  // frame: delta 0.5; video: deltas {0.2, 0.5, 0.75} plus the 0.5:0.95 band.
  static EvalConfig defaults(TaskKind task, EvalLevel level);
};

struct MatchedPred {
  double score = 0.0;
  bool matched = false;
};

// All-point interpolated AP: area under the monotone precision envelope.
// Ranking is score descending; ties put matched predictions first and
// otherwise keep input order. Requires gt_count >= 1.
double average_precision(std::vector<MatchedPred> preds, int gt_count);

struct ClassReport {
  int class_id = 0;
  std::string name;
  int gt_count = 0;
  int pred_count = 0;
  double ap = 0.0;  // meaningful only when gt_count > 0
};

struct EvalReport {
  double delta = 0.5;
  std::vector<ClassReport> classes;  // ascending class id
  double mean_ap = 0.0;              // over classes with at least one GT
  int classes_with_gt = 0;
};

struct BandReport {
  DeltaBand band;
  double mean_ap = 0.0;  // mean of the member thresholds' mAPs
};

struct EvalRun {
  TaskKind task = TaskKind::agent;
  EvalLevel level = EvalLevel::video;
  std::vector<EvalReport> reports;  // one per explicit delta
  std::vector<BandReport> bands;
};

// Frame-level mAP of a raw detection stream against the annotations.
// Predictions of one class are all detections, ranked by that class's score
// (composite scores via `mode`); a prediction matches the highest-overlap
// unmatched same-frame GT box with box_iou >= delta.
EvalRun frame_map(const AnnotationSet& gt,
                  const std::vector<FrameDetections>& frames,
                  const EvalConfig& cfg, const CompositeVocab& cv,
                  CompositionMode mode);

// Tube-level mAP of labeled predicted tubes, matched by tube_iou >= delta
// against the ground-truth tubes of the same class.
EvalRun video_map(const AnnotationSet& gt,
                  const std::vector<LabeledTube>& tubes,
                  const EvalConfig& cfg, const CompositeVocab& cv);

struct AvScores {
  int t = 0;
  std::vector<double> scores;
};

// Frame-classification mAP for the AV's own action. Every annotated frame
// must carry exactly one score vector; frames are ranked per class by that
// class's score. Classes never labeled in the ground truth are excluded.
EvalRun av_action_map(const AnnotationSet& gt,
                      const std::vector<AvScores>& frame_scores);

std::string run_to_json(const EvalRun& run,
                        const std::string& config_echo_json);
std::string render_table(const EvalRun& run);

}  // namespace roadtubes

#endif
