#ifndef ROADTUBES_GEOMETRY_HPP
#define ROADTUBES_GEOMETRY_HPP

#include <cmath>
#include <cstddef>
#include <vector>

namespace roadtubes {

// Axis-aligned box with continuous pixel coordinates.
// Area convention is (x2-x1)*(y2-y1), no +1.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  bool valid() const {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
           std::isfinite(y2) && x2 > x1 && y2 > y1;
  }

  bool operator==(const BBox&) const = default;
};

double box_iou(const BBox& a, const BBox& b);

// Greedy NMS on agentness scores. Returns indices of kept boxes ordered by
// descending score; equal scores keep the lower input index first. A box is
// suppressed when its IoU against an already-kept box is >= iou_thresh.
std::vector<std::size_t> nms_agentness(const std::vector<BBox>& boxes,
                                       const std::vector<double>& scores,
                                       double iou_thresh);

struct TimedBox {
  int t = 0;
  BBox box;

  bool operator==(const TimedBox&) const = default;
};

// Frame-wise box sequence with strictly increasing, consecutive frame
// indices (dense). Lookup by frame index is positional.
struct TubeGeometry {
  std::vector<TimedBox> frames;

  bool empty() const { return frames.empty(); }
  int t_begin() const { return frames.front().t; }
  int t_end() const { return frames.back().t; }
  int span() const { return t_end() - t_begin() + 1; }
  bool dense() const;
  const BBox& box_at(int t) const { return frames[t - t_begin()].box; }
};

// Spatiotemporal overlap: temporal IoU of the frame spans times the mean
// box IoU over frames in the temporal intersection. Zero when the spans do
// not intersect. Both tubes must be dense and non-empty.
double tube_iou(const TubeGeometry& a, const TubeGeometry& b);

}  // namespace roadtubes

#endif
