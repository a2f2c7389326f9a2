#ifndef ROADTUBES_DETECTIONS_HPP
#define ROADTUBES_DETECTIONS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "roadtubes/geometry.hpp"
#include "roadtubes/schema.hpp"

namespace roadtubes {

// One candidate box in one frame. Scores are clamped to [0,1] on ingest.
// Empty duplex/event vectors mean the detector has no joint heads.
struct Detection {
  BBox box;
  double agentness = 0.0;
  std::vector<double> agent;
  std::vector<double> action;
  std::vector<double> loc;
  std::vector<double> duplex;
  std::vector<double> event;
};

struct FrameDetections {
  int t = 0;
  std::vector<Detection> dets;
  std::vector<double> av;  // optional per-frame AV-action scores
};

// Expected vector lengths. Negative means unknown: the first record seen
// pins the length and later records must agree.
struct VocabSizes {
  int agent = 0;
  int action = 0;
  int loc = 0;
  int duplex = -1;
  int event = -1;
  int av = -1;
};

VocabSizes vocab_sizes(const LabelVocab& vocab, const CompositeVocab* cv);

// Line-oriented reader for the detection JSONL stream. Holds one frame at a
// time; frames must arrive with strictly increasing t. Malformed lines and
// length mismatches throw RoadError with the offending line number.
class DetectionStreamReader {
 public:
  DetectionStreamReader(std::istream& in, VocabSizes sizes);

  std::optional<FrameDetections> next();

 private:
  std::istream& in_;
  VocabSizes sizes_;
  long last_t_ = -1;
  std::size_t line_no_ = 0;
};

std::vector<FrameDetections> read_detection_file(const std::string& path,
                                                 VocabSizes sizes);
std::vector<FrameDetections> parse_detection_stream(std::string_view text,
                                                    VocabSizes sizes);

// One JSONL line, no trailing newline.
std::string serialize_frame(const FrameDetections& frame);

struct TubeFramePred {
  int t = 0;
  BBox box;
  bool interpolated = false;
};

// A finalized tube carrying one class label for one task.
struct LabeledTube {
  std::int64_t uid = 0;
  TaskKind task = TaskKind::agent;
  int class_id = 0;
  double score = 0.0;
  std::vector<TubeFramePred> frames;
};

TubeGeometry tube_geometry(const LabeledTube& tube);

// Deterministic serialization of labeled tubes, ordered by
// (uid, task, class_id). `config_echo` is embedded verbatim when non-empty.
std::string tubes_to_json(const std::vector<LabeledTube>& tubes,
                          const std::string& config_echo_json);
std::size_t write_tubes(const std::vector<LabeledTube>& tubes,
                        std::ostream& sink,
                        const std::string& config_echo_json);
std::vector<LabeledTube> parse_tubes(std::string_view json_text);
std::vector<LabeledTube> load_tubes(const std::string& path);

}  // namespace roadtubes

#endif
