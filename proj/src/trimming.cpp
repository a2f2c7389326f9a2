#include "roadtubes/trimming.hpp"

#include <algorithm>

#include "roadtubes/errors.hpp"

namespace roadtubes {

void TrimConfig::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw RoadError(ErrorKind::bad_config, "theta must be in [0,1]");
  }
  if (alpha < 0.0) {
    throw RoadError(ErrorKind::bad_config, "alpha must be >= 0");
  }
}

std::vector<bool> trim_labels(const std::vector<double>& agentness,
                              double theta, double alpha) {
  const std::size_t n = agentness.size();
  if (n == 0) return {};
  // dp[t][s]: best achievable score of a prefix ending in state s.
  std::vector<double> dp_out(n), dp_in(n);
  std::vector<bool> prev_out(n, false), prev_in(n, false);  // true = "in"
  dp_out[0] = 0.0;
  dp_in[0] = agentness[0] - theta;
  for (std::size_t t = 1; t < n; ++t) {
    const double stay_out = dp_out[t - 1];
    const double from_in = dp_in[t - 1] - alpha;
    if (stay_out >= from_in) {
      dp_out[t] = stay_out;
      prev_out[t] = false;
    } else {
      dp_out[t] = from_in;
      prev_out[t] = true;
    }
    const double stay_in = dp_in[t - 1];
    const double from_out = dp_out[t - 1] - alpha;
    const double unary = agentness[t] - theta;
    if (from_out >= stay_in) {
      dp_in[t] = unary + from_out;
      prev_in[t] = false;
    } else {
      dp_in[t] = unary + stay_in;
      prev_in[t] = true;
    }
  }
  std::vector<bool> labels(n);
  bool state = dp_in[n - 1] > dp_out[n - 1];
  for (std::size_t i = n; i-- > 0;) {
    labels[i] = state;
    state = state ? prev_in[i] : prev_out[i];
  }
  return labels;
}

double trim_objective(const std::vector<bool>& labels,
                      const std::vector<double>& agentness, double theta,
                      double alpha) {
  // Accumulates in the same order as the DP recurrence (transition cost
  // before the unary term) so optima compare exactly.
  double score = 0.0;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (t > 0 && labels[t] != labels[t - 1]) score -= alpha;
    if (labels[t]) score += agentness[t] - theta;
  }
  return score;
}

std::vector<ActiveTube> trim_tube(const ActiveTube& tube,
                                  const TrimConfig& cfg) {
  cfg.validate();
  if (!cfg.enabled) return {tube};
  std::vector<double> agentness;
  agentness.reserve(tube.frames.size());
  for (const LinkedFrame& f : tube.frames) agentness.push_back(f.agentness);
  const std::vector<bool> keep = trim_labels(agentness, cfg.theta, cfg.alpha);

  std::vector<ActiveTube> segments;
  std::size_t i = 0;
  while (i < keep.size()) {
    if (!keep[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < keep.size() && keep[j + 1]) ++j;
    ActiveTube seg = tube;  // segments inherit the parent's label scores
    seg.frames.assign(tube.frames.begin() + i, tube.frames.begin() + j + 1);
    seg.terminated = true;
    segments.push_back(std::move(seg));
    i = j + 1;
  }
  return segments;
}

std::vector<ActiveTube> trim_tubes(std::vector<ActiveTube> tubes,
                                   const TrimConfig& cfg) {
  cfg.validate();
  if (!cfg.enabled) return tubes;
  std::vector<ActiveTube> out;
  for (const ActiveTube& tube : tubes) {
    for (ActiveTube& seg : trim_tube(tube, cfg)) {
      seg.uid = static_cast<std::int64_t>(out.size());
      out.push_back(std::move(seg));
    }
  }
  return out;
}

}  // namespace roadtubes
