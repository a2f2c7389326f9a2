#include "roadtubes/composition.hpp"

#include "roadtubes/errors.hpp"

namespace roadtubes {

const char* composition_mode_name(CompositionMode mode) {
  return mode == CompositionMode::joint ? "joint" : "product";
}

std::optional<CompositionMode> composition_mode_from_name(
    std::string_view name) {
  if (name == "joint") return CompositionMode::joint;
  if (name == "product" || name == "product_of_marginals") {
    return CompositionMode::product_of_marginals;
  }
  return std::nullopt;
}

ComposedScores compose_scores(const Detection& det, const CompositeVocab& cv,
                              CompositionMode mode) {
  ComposedScores out;
  if (mode == CompositionMode::joint) {
    if (!cv.duplex.empty() && det.duplex.empty()) {
      throw RoadError(ErrorKind::length_mismatch,
                      "joint composition requires duplex score vectors");
    }
    if (!cv.event.empty() && det.event.empty()) {
      throw RoadError(ErrorKind::length_mismatch,
                      "joint composition requires event score vectors");
    }
    out.duplex = det.duplex;
    out.event = det.event;
    return out;
  }

  out.duplex.reserve(cv.duplex.size());
  for (const DuplexClass& d : cv.duplex) {
    out.duplex.push_back(det.agent.at(d.agent_id) * det.action.at(d.action_id));
  }
  out.event.reserve(cv.event.size());
  for (const EventClass& e : cv.event) {
    out.event.push_back(det.agent.at(e.agent_id) * det.action.at(e.action_id) *
                        det.loc.at(e.loc_id));
  }
  return out;
}

}  // namespace roadtubes
