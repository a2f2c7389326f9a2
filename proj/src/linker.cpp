#include "roadtubes/linker.hpp"

#include <algorithm>
#include <cmath>

#include "roadtubes/errors.hpp"

namespace roadtubes {

void LinkerConfig::validate() const {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw RoadError(ErrorKind::bad_config, "lambda must be in (0,1]");
  }
  if (k < 1) throw RoadError(ErrorKind::bad_config, "k must be >= 1");
  if (patience < 0) throw RoadError(ErrorKind::bad_config, "patience must be >= 0");
  if (!(min_score >= 0.0 && min_score < 1.0)) {
    throw RoadError(ErrorKind::bad_config, "min_score must be in [0,1)");
  }
  if (!(nms_iou > 0.0 && nms_iou <= 1.0)) {
    throw RoadError(ErrorKind::bad_config, "nms_iou must be in (0,1]");
  }
  if (min_len < 0) throw RoadError(ErrorKind::bad_config, "min_len must be >= 0");
}

const std::vector<double>& ActiveTube::task_sums(TaskKind task) const {
  switch (task) {
    case TaskKind::agent: return agent_sum;
    case TaskKind::action: return action_sum;
    case TaskKind::location: return loc_sum;
    case TaskKind::duplex: return duplex_sum;
    case TaskKind::event: return event_sum;
    default:
      throw RoadError(ErrorKind::bad_config, "task carries no tube score sums");
  }
}

TubeLinker::TubeLinker(LinkerConfig cfg, VocabSizes sizes,
                       CompositionMode mode, const CompositeVocab* cv)
    : cfg_(cfg), sizes_(sizes), mode_(mode) {
  cfg_.validate();
  if (cv != nullptr) {
    cv_ = *cv;
    have_cv_ = true;
  }
}

ComposedScores TubeLinker::composite_for(const Detection& det) const {
  if (mode_ == CompositionMode::joint) {
    // Joint heads pass through; absence of both vectors simply disables
    // composite labelling for the whole build.
    if (det.duplex.empty() && det.event.empty()) return {};
    return {det.duplex, det.event};
  }
  if (!have_cv_) return {};
  return compose_scores(det, cv_, CompositionMode::product_of_marginals);
}

static void accumulate(std::vector<double>& sum, const std::vector<double>& add) {
  if (add.empty()) return;
  if (sum.empty()) sum.assign(add.size(), 0.0);
  if (sum.size() != add.size()) {
    throw RoadError(ErrorKind::length_mismatch,
                    "composite score length changed mid-stream");
  }
  for (std::size_t i = 0; i < add.size(); ++i) sum[i] += add[i];
}

void TubeLinker::claim(ActiveTube& tube, const Detection& det, int t) {
  // Copy: push_back below may reallocate the frame vector.
  const LinkedFrame last = tube.frames.back();
  // Fill any gap with linearly interpolated boxes and agentness.
  const int gap = t - last.t;
  for (int i = 1; i < gap; ++i) {
    const double w = static_cast<double>(i) / gap;
    LinkedFrame fill;
    fill.t = last.t + i;
    fill.box = {last.box.x1 + w * (det.box.x1 - last.box.x1),
                last.box.y1 + w * (det.box.y1 - last.box.y1),
                last.box.x2 + w * (det.box.x2 - last.box.x2),
                last.box.y2 + w * (det.box.y2 - last.box.y2)};
    fill.agentness = last.agentness + w * (det.agentness - last.agentness);
    fill.interpolated = true;
    tube.frames.push_back(fill);
  }
  tube.frames.push_back({t, det.box, det.agentness, false});
  tube.agentness_sum += det.agentness;
  tube.matched_count += 1;
  tube.missed = 0;
  tube.last_matched_t = t;
  accumulate(tube.agent_sum, det.agent);
  accumulate(tube.action_sum, det.action);
  accumulate(tube.loc_sum, det.loc);
  const ComposedScores composite = composite_for(det);
  accumulate(tube.duplex_sum, composite.duplex);
  accumulate(tube.event_sum, composite.event);
}

ActiveTube TubeLinker::open_tube(const Detection& det, int t) {
  ActiveTube tube;
  tube.uid = next_uid_++;
  tube.frames.push_back({t, det.box, det.agentness, false});
  tube.agentness_sum = det.agentness;
  tube.matched_count = 1;
  tube.last_matched_t = t;
  accumulate(tube.agent_sum, det.agent);
  accumulate(tube.action_sum, det.action);
  accumulate(tube.loc_sum, det.loc);
  const ComposedScores composite = composite_for(det);
  accumulate(tube.duplex_sum, composite.duplex);
  accumulate(tube.event_sum, composite.event);
  return tube;
}

void TubeLinker::apply_gap_misses(int t, StepReport& report) {
  // Frames between the last processed index and t carry no detections.
  const int gap = t - last_t_ - 1;
  if (gap <= 0) return;
  for (ActiveTube& tube : tubes_) {
    if (tube.terminated) continue;
    tube.missed += gap;
    if (tube.missed > cfg_.patience) {
      tube.terminated = true;
      report.terminated.push_back(tube.uid);
    }
  }
}

StepReport TubeLinker::step(const FrameDetections& frame) {
  if (finalized_) {
    throw RoadError(ErrorKind::bad_state, "linker already finalized");
  }
  if (frame.t <= last_t_) {
    throw RoadError(ErrorKind::non_monotone_time,
                    "frame index " + std::to_string(frame.t) +
                        " does not exceed previous " + std::to_string(last_t_));
  }
  StepReport report;
  report.t = frame.t;
  apply_gap_misses(frame.t, report);

  // Agentness floor, then NMS.
  std::vector<const Detection*> survivors;
  for (const Detection& det : frame.dets) {
    if (static_cast<int>(det.agent.size()) != sizes_.agent ||
        static_cast<int>(det.action.size()) != sizes_.action ||
        static_cast<int>(det.loc.size()) != sizes_.loc) {
      throw RoadError(ErrorKind::length_mismatch,
                      "detection score vectors do not match the vocab");
    }
    if (det.agentness < cfg_.min_score) continue;
    survivors.push_back(&det);
  }
  std::vector<BBox> boxes;
  std::vector<double> scores;
  boxes.reserve(survivors.size());
  scores.reserve(survivors.size());
  for (const Detection* det : survivors) {
    boxes.push_back(det->box);
    scores.push_back(det->agentness);
  }
  const std::vector<std::size_t> kept = nms_agentness(boxes, scores, cfg_.nms_iou);

  // Highest mean-agentness tubes choose first; among the eligible unclaimed
  // detections each takes the highest-agentness one. `kept` is already in
  // descending agentness order with ties at lower input index.
  std::vector<ActiveTube*> order;
  for (ActiveTube& tube : tubes_) {
    if (!tube.terminated) order.push_back(&tube);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const ActiveTube* a, const ActiveTube* b) {
                     if (a->mean_agentness() != b->mean_agentness()) {
                       return a->mean_agentness() > b->mean_agentness();
                     }
                     return a->uid < b->uid;
                   });

  std::vector<bool> claimed(kept.size(), false);
  for (ActiveTube* tube : order) {
    const BBox& last_box = tube->frames.back().box;
    bool matched = false;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (claimed[i]) continue;
      const Detection& det = *survivors[kept[i]];
      if (box_iou(last_box, det.box) >= cfg_.lambda) {
        claimed[i] = true;
        claim(*tube, det, frame.t);
        report.extended.push_back(tube->uid);
        matched = true;
        break;
      }
    }
    if (!matched) {
      tube->missed += 1;
      if (tube->missed > cfg_.patience) {
        tube->terminated = true;
        report.terminated.push_back(tube->uid);
      }
    }
  }

  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (claimed[i]) continue;
    tubes_.push_back(open_tube(*survivors[kept[i]], frame.t));
    report.opened.push_back(tubes_.back().uid);
  }

  last_t_ = frame.t;
  std::sort(report.extended.begin(), report.extended.end());
  std::sort(report.terminated.begin(), report.terminated.end());
  return report;
}

std::vector<ActiveTube> TubeLinker::finalize() {
  if (finalized_) {
    throw RoadError(ErrorKind::bad_state, "linker already finalized");
  }
  finalized_ = true;
  for (ActiveTube& tube : tubes_) tube.terminated = true;
  // tubes_ is already in uid order by construction.
  return std::move(tubes_);
}

std::vector<std::pair<int, double>> tube_top_k_labels(const ActiveTube& tube,
                                                      TaskKind task, int k) {
  if (tube.matched_count <= 0) {
    throw RoadError(ErrorKind::bad_state, "tube has no matched frames");
  }
  const std::vector<double>& sums = tube.task_sums(task);
  std::vector<std::pair<int, double>> means;
  means.reserve(sums.size());
  for (std::size_t c = 0; c < sums.size(); ++c) {
    means.emplace_back(static_cast<int>(c), sums[c] / tube.matched_count);
  }
  std::stable_sort(means.begin(), means.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (static_cast<int>(means.size()) > k) means.resize(k);
  return means;
}

std::vector<LabeledTube> label_tubes(const std::vector<ActiveTube>& tubes,
                                     const LinkerConfig& cfg) {
  static constexpr TaskKind kTasks[] = {TaskKind::agent, TaskKind::action,
                                        TaskKind::location, TaskKind::duplex,
                                        TaskKind::event};
  std::vector<LabeledTube> out;
  for (const ActiveTube& tube : tubes) {
    if (cfg.min_len > 0 && static_cast<int>(tube.frames.size()) < cfg.min_len) {
      continue;
    }
    std::vector<TubeFramePred> frames;
    frames.reserve(tube.frames.size());
    for (const LinkedFrame& f : tube.frames) {
      frames.push_back({f.t, f.box, f.interpolated});
    }
    for (TaskKind task : kTasks) {
      if (tube.task_sums(task).empty()) continue;
      for (const auto& [class_id, mean] : tube_top_k_labels(tube, task, cfg.k)) {
        LabeledTube labeled;
        labeled.uid = tube.uid;
        labeled.task = task;
        labeled.class_id = class_id;
        labeled.score = mean;
        labeled.frames = frames;
        out.push_back(std::move(labeled));
      }
    }
  }
  return out;
}

}  // namespace roadtubes
