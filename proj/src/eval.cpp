#include "roadtubes/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <thread>

#include "json_util.hpp"
#include "roadtubes/errors.hpp"

namespace roadtubes {

const char* eval_level_name(EvalLevel level) {
  return level == EvalLevel::frame ? "frame" : "video";
}

std::optional<EvalLevel> eval_level_from_name(std::string_view name) {
  if (name == "frame") return EvalLevel::frame;
  if (name == "video") return EvalLevel::video;
  return std::nullopt;
}

std::vector<double> DeltaBand::thresholds() const {
  std::vector<double> out;
  const int steps = static_cast<int>(std::llround((hi - lo) / 0.05));
  for (int i = 0; i <= steps; ++i) {
    out.push_back(std::round((lo + 0.05 * i) * 1e6) / 1e6);
  }
  return out;
}

void EvalConfig::validate() const {
  for (double d : deltas) {
    if (!(d > 0.0 && d <= 1.0)) {
      throw RoadError(ErrorKind::bad_config, "delta must be in (0,1]");
    }
  }
  for (const DeltaBand& band : bands) {
    if (!(band.lo > 0.0 && band.lo <= band.hi && band.hi <= 1.0)) {
      throw RoadError(ErrorKind::bad_config, "band bounds must satisfy 0 < lo <= hi <= 1");
    }
    const double span = (band.hi - band.lo) / 0.05;
    if (std::abs(span - std::llround(span)) > 1e-9) {
      throw RoadError(ErrorKind::bad_config, "band width must be a multiple of 0.05");
    }
  }
  if (deltas.empty() && bands.empty()) {
    throw RoadError(ErrorKind::bad_config, "no thresholds configured");
  }
  if (jobs < 0) throw RoadError(ErrorKind::bad_config, "jobs must be >= 0");
}

EvalConfig EvalConfig::defaults(TaskKind task, EvalLevel level) {
  EvalConfig cfg;
  cfg.task = task;
  cfg.level = level;
  if (level == EvalLevel::frame) {
    cfg.deltas = {0.5};
  } else {
    cfg.deltas = {0.2, 0.5, 0.75};
    cfg.bands = {{0.5, 0.95}};
  }
  return cfg;
}

double average_precision(std::vector<MatchedPred> preds, int gt_count) {
  if (gt_count <= 0) {
    throw RoadError(ErrorKind::bad_state, "AP needs at least one GT instance");
  }
  if (preds.empty()) return 0.0;
  std::stable_sort(preds.begin(), preds.end(),
                   [](const MatchedPred& a, const MatchedPred& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.matched && !b.matched;
                   });
  const std::size_t n = preds.size();
  std::vector<double> prec(n);
  int tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (preds[i].matched) ++tp;
    prec[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    prec[i] = std::max(prec[i], prec[i + 1]);
  }
  double ap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (preds[i].matched) ap += prec[i];  // each TP adds 1/gt_count recall
  }
  return ap / gt_count;
}

namespace {

int resolve_jobs(int jobs) {
  if (jobs > 0) return jobs;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

template <typename Fn>
void parallel_classes(int n_classes, int jobs, Fn&& fn) {
  const int workers = std::min(resolve_jobs(jobs), std::max(n_classes, 1));
  if (workers <= 1 || n_classes <= 1) {
    for (int c = 0; c < n_classes; ++c) fn(c);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int c = next.fetch_add(1);
        if (c >= n_classes) break;
        fn(c);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

int duplex_index(const CompositeVocab& cv, int agent_id, int action_id) {
  const DuplexClass key{agent_id, action_id};
  const auto it = std::lower_bound(cv.duplex.begin(), cv.duplex.end(), key);
  if (it == cv.duplex.end() || !(*it == key)) return -1;
  return static_cast<int>(it - cv.duplex.begin());
}

int event_index(const CompositeVocab& cv, int agent_id, int action_id,
                int loc_id) {
  const EventClass key{agent_id, action_id, loc_id};
  const auto it = std::lower_bound(cv.event.begin(), cv.event.end(), key);
  if (it == cv.event.end() || !(*it == key)) return -1;
  return static_cast<int>(it - cv.event.begin());
}

struct GtBox {
  int t = 0;
  BBox box;
};

// Per class, every ground-truth box instance, in annotation order.
std::vector<std::vector<GtBox>> gt_frame_boxes(const AnnotationSet& ann,
                                               TaskKind task,
                                               const CompositeVocab& cv,
                                               int n_classes) {
  std::vector<std::vector<GtBox>> pools(n_classes);
  auto add = [&](int class_id, int t, const BBox& box) {
    if (class_id < 0) {
      throw RoadError(ErrorKind::vocab_mismatch,
                      "annotation uses a composite class missing from the vocab");
    }
    pools[class_id].push_back({t, box});
  };
  for (const AgentTubeGT& tube : ann.tubes) {
    for (const GTFrame& f : tube.frames) {
      switch (task) {
        case TaskKind::agent:
          add(tube.agent_id, f.t, f.box);
          break;
        case TaskKind::action:
          for (int a : f.action_ids) add(a, f.t, f.box);
          break;
        case TaskKind::location:
          for (int l : f.loc_ids) add(l, f.t, f.box);
          break;
        case TaskKind::duplex:
          for (int a : f.action_ids) {
            add(duplex_index(cv, tube.agent_id, a), f.t, f.box);
          }
          break;
        case TaskKind::event:
          for (int a : f.action_ids) {
            for (int l : f.loc_ids) {
              add(event_index(cv, tube.agent_id, a, l), f.t, f.box);
            }
          }
          break;
        default:
          throw RoadError(ErrorKind::bad_config, "task has no box ground truth");
      }
    }
  }
  return pools;
}

struct FramePred {
  double score = 0.0;
  int t = 0;
  BBox box;
};

bool frame_pred_before(const FramePred& a, const FramePred& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.t != b.t) return a.t < b.t;
  if (a.box.x1 != b.box.x1) return a.box.x1 < b.box.x1;
  if (a.box.y1 != b.box.y1) return a.box.y1 < b.box.y1;
  if (a.box.x2 != b.box.x2) return a.box.x2 < b.box.x2;
  return a.box.y2 < b.box.y2;
}

EvalReport finish_report(double delta, std::vector<ClassReport> classes) {
  EvalReport report;
  report.delta = delta;
  double ap_sum = 0.0;
  for (const ClassReport& c : classes) {
    if (c.gt_count > 0) {
      ap_sum += c.ap;
      ++report.classes_with_gt;
    }
  }
  report.mean_ap = report.classes_with_gt > 0 ? ap_sum / report.classes_with_gt : 0.0;
  report.classes = std::move(classes);
  return report;
}

// Evaluates the union of explicit and band thresholds once each, then
// assembles per-delta reports and band means.
template <typename EvalAt>
EvalRun assemble_run(const EvalConfig& cfg, EvalAt&& eval_at) {
  std::vector<double> all = cfg.deltas;
  for (const DeltaBand& band : cfg.bands) {
    const std::vector<double> member = band.thresholds();
    all.insert(all.end(), member.begin(), member.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::map<double, EvalReport> by_delta;
  for (double d : all) by_delta.emplace(d, eval_at(d));

  EvalRun run;
  run.task = cfg.task;
  run.level = cfg.level;
  for (double d : cfg.deltas) run.reports.push_back(by_delta.at(d));
  for (const DeltaBand& band : cfg.bands) {
    double sum = 0.0;
    const std::vector<double> member = band.thresholds();
    for (double d : member) sum += by_delta.at(d).mean_ap;
    run.bands.push_back({band, sum / member.size()});
  }
  return run;
}

}  // namespace

EvalRun frame_map(const AnnotationSet& gt,
                  const std::vector<FrameDetections>& frames,
                  const EvalConfig& cfg, const CompositeVocab& cv,
                  CompositionMode mode) {
  cfg.validate();
  const int n_classes = task_class_count(gt.vocab, cv, cfg.task);
  const std::vector<std::vector<GtBox>> gt_pools =
      gt_frame_boxes(gt, cfg.task, cv, n_classes);

  // One prediction per detection per class, ranked by that class's score.
  std::vector<std::vector<FramePred>> pred_pools(n_classes);
  for (const FrameDetections& frame : frames) {
    for (const Detection& det : frame.dets) {
      const std::vector<double>* scores = nullptr;
      ComposedScores composed;
      switch (cfg.task) {
        case TaskKind::agent: scores = &det.agent; break;
        case TaskKind::action: scores = &det.action; break;
        case TaskKind::location: scores = &det.loc; break;
        case TaskKind::duplex:
        case TaskKind::event:
          composed = compose_scores(det, cv, mode);
          scores = cfg.task == TaskKind::duplex ? &composed.duplex
                                                : &composed.event;
          break;
        default:
          throw RoadError(ErrorKind::bad_config,
                          "frame_map scores boxes; use av_action_map for the AV task");
      }
      if (static_cast<int>(scores->size()) != n_classes) {
        throw RoadError(ErrorKind::vocab_mismatch,
                        "detection score length does not match the vocab");
      }
      for (int c = 0; c < n_classes; ++c) {
        pred_pools[c].push_back({(*scores)[c], frame.t, det.box});
      }
    }
  }
  for (std::vector<FramePred>& pool : pred_pools) {
    std::sort(pool.begin(), pool.end(), frame_pred_before);
  }

  auto eval_at = [&](double delta) {
    std::vector<ClassReport> classes(n_classes);
    parallel_classes(n_classes, cfg.jobs, [&](int c) {
      ClassReport& out = classes[c];
      out.class_id = c;
      out.name = class_display_name(gt.vocab, cv, cfg.task, c);
      out.gt_count = static_cast<int>(gt_pools[c].size());
      out.pred_count = static_cast<int>(pred_pools[c].size());
      if (out.gt_count == 0) return;
      std::vector<bool> used(gt_pools[c].size(), false);
      std::vector<MatchedPred> ranked;
      ranked.reserve(pred_pools[c].size());
      for (const FramePred& pred : pred_pools[c]) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < gt_pools[c].size(); ++g) {
          if (used[g] || gt_pools[c][g].t != pred.t) continue;
          const double iou = box_iou(pred.box, gt_pools[c][g].box);
          if (iou >= delta && iou > best_iou) {
            best = static_cast<int>(g);
            best_iou = iou;
          }
        }
        if (best >= 0) used[best] = true;
        ranked.push_back({pred.score, best >= 0});
      }
      out.ap = average_precision(std::move(ranked), out.gt_count);
    });
    return finish_report(delta, std::move(classes));
  };
  return assemble_run(cfg, eval_at);
}

EvalRun video_map(const AnnotationSet& gt,
                  const std::vector<LabeledTube>& tubes,
                  const EvalConfig& cfg, const CompositeVocab& cv) {
  cfg.validate();
  const int n_classes = task_class_count(gt.vocab, cv, cfg.task);
  std::vector<std::vector<TubeGeometry>> gt_pools(n_classes);
  for (ClassTube& tube : extract_gt_tubes(gt, cfg.task, cv)) {
    gt_pools[tube.class_id].push_back(std::move(tube.geometry));
  }

  struct PredTube {
    double score = 0.0;
    std::int64_t uid = 0;
    TubeGeometry geometry;
  };
  std::vector<std::vector<PredTube>> pred_pools(n_classes);
  for (const LabeledTube& tube : tubes) {
    if (tube.task != cfg.task) continue;
    if (tube.class_id >= n_classes) {
      throw RoadError(ErrorKind::vocab_mismatch,
                      "predicted tube class is outside the vocab");
    }
    pred_pools[tube.class_id].push_back(
        {tube.score, tube.uid, tube_geometry(tube)});
  }
  for (std::vector<PredTube>& pool : pred_pools) {
    std::sort(pool.begin(), pool.end(), [](const PredTube& a, const PredTube& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.uid < b.uid;
    });
  }

  auto eval_at = [&](double delta) {
    std::vector<ClassReport> classes(n_classes);
    parallel_classes(n_classes, cfg.jobs, [&](int c) {
      ClassReport& out = classes[c];
      out.class_id = c;
      out.name = class_display_name(gt.vocab, cv, cfg.task, c);
      out.gt_count = static_cast<int>(gt_pools[c].size());
      out.pred_count = static_cast<int>(pred_pools[c].size());
      if (out.gt_count == 0) return;
      std::vector<bool> used(gt_pools[c].size(), false);
      std::vector<MatchedPred> ranked;
      ranked.reserve(pred_pools[c].size());
      for (const PredTube& pred : pred_pools[c]) {
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t g = 0; g < gt_pools[c].size(); ++g) {
          if (used[g]) continue;
          const double iou = tube_iou(pred.geometry, gt_pools[c][g]);
          if (iou >= delta && iou > best_iou) {
            best = static_cast<int>(g);
            best_iou = iou;
          }
        }
        if (best >= 0) used[best] = true;
        ranked.push_back({pred.score, best >= 0});
      }
      out.ap = average_precision(std::move(ranked), out.gt_count);
    });
    return finish_report(delta, std::move(classes));
  };
  return assemble_run(cfg, eval_at);
}

EvalRun av_action_map(const AnnotationSet& gt,
                      const std::vector<AvScores>& frame_scores) {
  const int n_classes = static_cast<int>(gt.vocab.av_action.size());
  std::map<int, const std::vector<double>*> by_t;
  for (const AvScores& fs : frame_scores) {
    if (static_cast<int>(fs.scores.size()) != n_classes) {
      throw RoadError(ErrorKind::length_mismatch,
                      "AV score vector length does not match the vocab");
    }
    if (!by_t.emplace(fs.t, &fs.scores).second) {
      throw RoadError(ErrorKind::non_monotone_time,
                      "duplicate AV scores for frame " + std::to_string(fs.t));
    }
  }
  if (by_t.size() != gt.av_actions.size()) {
    throw RoadError(ErrorKind::length_mismatch,
                    "AV scores cover " + std::to_string(by_t.size()) +
                        " frames, annotations cover " +
                        std::to_string(gt.av_actions.size()));
  }
  std::vector<AvFrame> annotated = gt.av_actions;
  std::sort(annotated.begin(), annotated.end(),
            [](const AvFrame& a, const AvFrame& b) { return a.t < b.t; });

  std::vector<ClassReport> classes(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    ClassReport& out = classes[c];
    out.class_id = c;
    out.name = gt.vocab.av_action[c];
    std::vector<MatchedPred> ranked;
    ranked.reserve(annotated.size());
    for (const AvFrame& frame : annotated) {
      const auto it = by_t.find(frame.t);
      if (it == by_t.end()) {
        throw RoadError(ErrorKind::length_mismatch,
                        "no AV scores for annotated frame " +
                            std::to_string(frame.t));
      }
      const bool positive = frame.label_id == c;
      ranked.push_back({(*it->second)[c], positive});
      if (positive) ++out.gt_count;
    }
    out.pred_count = static_cast<int>(ranked.size());
    if (out.gt_count > 0) {
      out.ap = average_precision(std::move(ranked), out.gt_count);
    }
  }
  EvalRun run;
  run.task = TaskKind::av_action;
  run.level = EvalLevel::frame;
  run.reports.push_back(finish_report(0.0, std::move(classes)));
  return run;
}

std::string run_to_json(const EvalRun& run,
                        const std::string& config_echo_json) {
  using jsonutil::OrderedJson;
  OrderedJson doc;
  doc["version"] = "road-lite/1";
  doc["kind"] = "eval";
  doc["task"] = task_name(run.task);
  doc["level"] = eval_level_name(run.level);
  if (!config_echo_json.empty()) {
    doc["config"] = OrderedJson::parse(config_echo_json);
  }
  OrderedJson reports = OrderedJson::array();
  for (const EvalReport& report : run.reports) {
    OrderedJson rj;
    if (run.task != TaskKind::av_action) rj["delta"] = report.delta;
    if (report.classes_with_gt > 0) {
      rj["mean_ap"] = report.mean_ap;
    } else {
      rj["mean_ap"] = nullptr;
    }
    rj["classes_with_gt"] = report.classes_with_gt;
    OrderedJson classes = OrderedJson::array();
    for (const ClassReport& c : report.classes) {
      OrderedJson cj;
      cj["id"] = c.class_id;
      cj["name"] = c.name;
      cj["gt"] = c.gt_count;
      cj["preds"] = c.pred_count;
      if (c.gt_count > 0) {
        cj["ap"] = c.ap;
      } else {
        cj["ap"] = nullptr;
      }
      classes.push_back(std::move(cj));
    }
    rj["classes"] = std::move(classes);
    reports.push_back(std::move(rj));
  }
  doc["reports"] = std::move(reports);
  OrderedJson bands = OrderedJson::array();
  for (const BandReport& band : run.bands) {
    OrderedJson bj;
    bj["lo"] = band.band.lo;
    bj["hi"] = band.band.hi;
    bj["mean_ap"] = band.mean_ap;
    bands.push_back(std::move(bj));
  }
  doc["bands"] = std::move(bands);
  return doc.dump(2) + "\n";
}

std::string render_table(const EvalRun& run) {
  std::string out;
  char head[128];
  std::snprintf(head, sizeof(head), "task %s  level %s\n", task_name(run.task),
                eval_level_name(run.level));
  out += head;
  std::size_t name_width = 4;
  for (const EvalReport& report : run.reports) {
    for (const ClassReport& c : report.classes) {
      name_width = std::max(name_width, c.name.size());
    }
  }
  for (const EvalReport& report : run.reports) {
    char map_buf[32];
    if (report.classes_with_gt > 0) {
      std::snprintf(map_buf, sizeof(map_buf), "%.3f", report.mean_ap);
    } else {
      std::snprintf(map_buf, sizeof(map_buf), "-");
    }
    if (run.task == TaskKind::av_action) {
      std::snprintf(head, sizeof(head), "\nmAP %s  (%d/%zu classes with GT)\n",
                    map_buf, report.classes_with_gt, report.classes.size());
    } else {
      std::snprintf(head, sizeof(head),
                    "\ndelta %.2f  mAP %s  (%d/%zu classes with GT)\n",
                    report.delta, map_buf, report.classes_with_gt,
                    report.classes.size());
    }
    out += head;
    std::snprintf(head, sizeof(head), "  %3s  %-*s  %6s  %6s  %6s\n", "id",
                  static_cast<int>(name_width), "name", "gt", "preds", "ap");
    out += head;
    for (const ClassReport& c : report.classes) {
      char ap_buf[32];
      if (c.gt_count > 0) {
        std::snprintf(ap_buf, sizeof(ap_buf), "%.3f", c.ap);
      } else {
        std::snprintf(ap_buf, sizeof(ap_buf), "-");
      }
      char row[192];
      std::snprintf(row, sizeof(row), "  %3d  %-*s  %6d  %6d  %6s\n",
                    c.class_id, static_cast<int>(name_width), c.name.c_str(),
                    c.gt_count, c.pred_count, ap_buf);
      out += row;
    }
  }
  for (const BandReport& band : run.bands) {
    char row[96];
    std::snprintf(row, sizeof(row), "\nband %.2f:%.2f  mAP %.3f\n",
                  band.band.lo, band.band.hi, band.mean_ap);
    out += row;
  }
  return out;
}

}  // namespace roadtubes
