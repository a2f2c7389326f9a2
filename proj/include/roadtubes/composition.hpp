#ifndef ROADTUBES_COMPOSITION_HPP
#define ROADTUBES_COMPOSITION_HPP

#include <optional>
#include <string_view>
#include <vector>

#include "roadtubes/detections.hpp"
#include "roadtubes/schema.hpp"

namespace roadtubes {

enum class CompositionMode { joint, product_of_marginals };

const char* composition_mode_name(CompositionMode mode);
std::optional<CompositionMode> composition_mode_from_name(std::string_view name);

struct ComposedScores {
  std::vector<double> duplex;
  std::vector<double> event;
};

// Composite class scores for one detection. Product mode multiplies the
// marginal scores along each class tuple in `cv`; joint mode returns the
// detection's own joint vectors and throws when they are absent.
ComposedScores compose_scores(const Detection& det, const CompositeVocab& cv,
                              CompositionMode mode);

}  // namespace roadtubes

#endif
