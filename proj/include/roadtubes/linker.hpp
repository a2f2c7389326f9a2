#ifndef ROADTUBES_LINKER_HPP
#define ROADTUBES_LINKER_HPP

#include <cstdint>
#include <vector>

#include "roadtubes/composition.hpp"
#include "roadtubes/detections.hpp"
#include "roadtubes/geometry.hpp"
#include "roadtubes/schema.hpp"

namespace roadtubes {

struct LinkerConfig {
  double lambda = 0.5;     // min IoU between a tube's last box and a detection
  int k = 4;               // labels kept per task per tube
  int patience = 5;        // consecutive missed frames before termination
  double min_score = 0.025;  // agentness floor
  double nms_iou = 0.45;
  int min_len = 0;         // 0 disables the length filter

  void validate() const;
};

struct LinkedFrame {
  int t = 0;
  BBox box;
  double agentness = 0.0;
  bool interpolated = false;
};

// Tube under construction. Per-class score sums cover matched frames only;
// interpolated gap frames contribute nothing to label means.
struct ActiveTube {
  std::int64_t uid = 0;
  std::vector<LinkedFrame> frames;
  double agentness_sum = 0.0;
  int matched_count = 0;
  int missed = 0;
  bool terminated = false;
  int last_matched_t = -1;
  std::vector<double> agent_sum;
  std::vector<double> action_sum;
  std::vector<double> loc_sum;
  std::vector<double> duplex_sum;
  std::vector<double> event_sum;

  double mean_agentness() const {
    return matched_count > 0 ? agentness_sum / matched_count : 0.0;
  }
  const std::vector<double>& task_sums(TaskKind task) const;
};

struct StepReport {
  int t = 0;
  std::vector<std::int64_t> opened;
  std::vector<std::int64_t> extended;
  std::vector<std::int64_t> terminated;
};

// Online agentness-based tube builder. Per frame: drop detections below the
// agentness floor, apply NMS, hand detections to existing tubes in order of
// mean agentness, terminate tubes unmatched for more than `patience`
// consecutive frames, open new tubes from unclaimed detections. Frames may
// skip indices; skipped indices count as misses.
class TubeLinker {
 public:
  TubeLinker(LinkerConfig cfg, VocabSizes sizes, CompositionMode mode,
             const CompositeVocab* cv);

  StepReport step(const FrameDetections& frame);

  // Terminates every tube and returns them ordered by uid. The linker is
  // spent afterwards.
  std::vector<ActiveTube> finalize();

  const LinkerConfig& config() const { return cfg_; }
  int last_t() const { return last_t_; }

 private:
  void apply_gap_misses(int t, StepReport& report);
  void claim(ActiveTube& tube, const Detection& det, int t);
  ActiveTube open_tube(const Detection& det, int t);
  ComposedScores composite_for(const Detection& det) const;

  LinkerConfig cfg_;
  VocabSizes sizes_;
  CompositionMode mode_;
  CompositeVocab cv_;
  bool have_cv_ = false;
  std::vector<ActiveTube> tubes_;  // active and terminated, in uid order
  std::int64_t next_uid_ = 0;
  int last_t_ = -1;
  bool finalized_ = false;
};

// The k classes with the highest mean score over the tube's matched frames,
// descending; equal means break toward the lower class id.
std::vector<std::pair<int, double>> tube_top_k_labels(const ActiveTube& tube,
                                                      TaskKind task, int k);

// Top-k labeling of finalized tubes for every task the accumulated sums
// support. Tubes shorter than min_len frames are dropped first.
std::vector<LabeledTube> label_tubes(const std::vector<ActiveTube>& tubes,
                                     const LinkerConfig& cfg);

}  // namespace roadtubes

#endif
