#ifndef ROADTUBES_TRIMMING_HPP
#define ROADTUBES_TRIMMING_HPP

#include <vector>

#include "roadtubes/linker.hpp"

namespace roadtubes {

struct TrimConfig {
  bool enabled = false;
  double theta = 0.5;  // agentness level a frame must beat to stay "in"
  double alpha = 1.0;  // cost per in/out transition

  void validate() const;
};

// Per-frame in/out labeling maximizing
//   sum_t u_t(l_t) - alpha * |{t : l_t != l_{t-1}}|
// with u_t(in) = agentness[t] - theta and u_t(out) = 0, solved exactly by a
// two-state DP. Ties fall toward "out". Returns one flag per frame.
std::vector<bool> trim_labels(const std::vector<double>& agentness,
                              double theta, double alpha);

double trim_objective(const std::vector<bool>& labels,
                      const std::vector<double>& agentness, double theta,
                      double alpha);

// Splits a tube into its maximal "in" runs. Each segment keeps the parent's
// accumulated label scores and uid; callers renumber afterwards. Disabled
// config returns the tube unchanged; an all-"out" labeling returns nothing.
std::vector<ActiveTube> trim_tube(const ActiveTube& tube,
                                  const TrimConfig& cfg);

// trim_tube over a whole set, with uids reassigned densely in order.
std::vector<ActiveTube> trim_tubes(std::vector<ActiveTube> tubes,
                                   const TrimConfig& cfg);

}  // namespace roadtubes

#endif
