#include "roadtubes/geometry.hpp"

#include <algorithm>
#include <numeric>

namespace roadtubes {

double box_iou(const BBox& a, const BBox& b) {
  const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

std::vector<std::size_t> nms_agentness(const std::vector<BBox>& boxes,
                                       const std::vector<double>& scores,
                                       double iou_thresh) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&scores](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });

  std::vector<std::size_t> kept;
  kept.reserve(order.size());
  for (std::size_t idx : order) {
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (box_iou(boxes[idx], boxes[k]) >= iou_thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

bool TubeGeometry::dense() const {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].t != frames[i - 1].t + 1) return false;
  }
  return !frames.empty();
}

double tube_iou(const TubeGeometry& a, const TubeGeometry& b) {
  const int is = std::max(a.t_begin(), b.t_begin());
  const int ie = std::min(a.t_end(), b.t_end());
  if (is > ie) return 0.0;

  const int inter_frames = ie - is + 1;
  const int union_frames =
      std::max(a.t_end(), b.t_end()) - std::min(a.t_begin(), b.t_begin()) + 1;
  const double temporal = static_cast<double>(inter_frames) / union_frames;

  double spatial_sum = 0.0;
  for (int t = is; t <= ie; ++t) {
    spatial_sum += box_iou(a.box_at(t), b.box_at(t));
  }
  return temporal * (spatial_sum / inter_frames);
}

}  // namespace roadtubes
