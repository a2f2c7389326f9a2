#include "roadtubes/detections.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json_util.hpp"

namespace roadtubes {

using jsonutil::Json;
using jsonutil::OrderedJson;

static constexpr double kClampTolerance = 1e-6;

VocabSizes vocab_sizes(const LabelVocab& vocab, const CompositeVocab* cv) {
  VocabSizes sizes;
  sizes.agent = static_cast<int>(vocab.agent.size());
  sizes.action = static_cast<int>(vocab.action.size());
  sizes.loc = static_cast<int>(vocab.loc.size());
  sizes.av = static_cast<int>(vocab.av_action.size());
  if (cv != nullptr) {
    sizes.duplex = static_cast<int>(cv->duplex.size());
    sizes.event = static_cast<int>(cv->event.size());
  }
  return sizes;
}

namespace {

double clamp_score(double value, const std::string& where) {
  if (!std::isfinite(value) || value < -kClampTolerance ||
      value > 1.0 + kClampTolerance) {
    throw RoadError(ErrorKind::score_range,
                    where + ": score " + std::to_string(value) +
                        " outside [0,1]");
  }
  return std::clamp(value, 0.0, 1.0);
}

std::vector<double> parse_score_vector(const Json& arr, int& expected,
                                       const char* field,
                                       const std::string& where) {
  if (!arr.is_array()) {
    throw RoadError(ErrorKind::malformed,
                    where + ": \"" + field + "\" must be an array");
  }
  if (expected < 0) {
    expected = static_cast<int>(arr.size());  // first record pins the length
  } else if (static_cast<int>(arr.size()) != expected) {
    throw RoadError(ErrorKind::length_mismatch,
                    where + ": \"" + field + "\" has length " +
                        std::to_string(arr.size()) + ", expected " +
                        std::to_string(expected));
  }
  std::vector<double> scores;
  scores.reserve(arr.size());
  for (const Json& item : arr) {
    if (!item.is_number()) {
      throw RoadError(ErrorKind::malformed,
                      where + ": \"" + field + "\" entries must be numbers");
    }
    scores.push_back(clamp_score(item.get<double>(), where));
  }
  return scores;
}

BBox parse_det_box(const Json& arr, const std::string& where) {
  if (!arr.is_array() || arr.size() != 4) {
    throw RoadError(ErrorKind::malformed,
                    where + ": box must be an array [x1,y1,x2,y2]");
  }
  for (const Json& c : arr) {
    if (!c.is_number()) {
      throw RoadError(ErrorKind::malformed, where + ": box coordinates must be numbers");
    }
  }
  BBox box{arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>(),
           arr[3].get<double>()};
  if (!box.valid()) {
    throw RoadError(ErrorKind::invalid_box,
                    where + ": box requires finite coordinates with x2>x1, y2>y1");
  }
  return box;
}

FrameDetections parse_frame_line(const std::string& line, VocabSizes& sizes,
                                 std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no);
  Json doc = Json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw RoadError(ErrorKind::malformed, where + ": invalid JSON record");
  }

  FrameDetections frame;
  frame.t = static_cast<int>(jsonutil::require_int(doc, "t", where));
  if (frame.t < 0) {
    throw RoadError(ErrorKind::malformed, where + ": negative frame index");
  }
  for (const Json& det_json : jsonutil::require_array(doc, "dets", where)) {
    Detection det;
    det.box = parse_det_box(jsonutil::require_field(det_json, "box", where), where);
    det.agentness =
        clamp_score(jsonutil::require_number(det_json, "agentness", where), where);
    det.agent = parse_score_vector(jsonutil::require_field(det_json, "agent", where),
                                   sizes.agent, "agent", where);
    det.action = parse_score_vector(jsonutil::require_field(det_json, "action", where),
                                    sizes.action, "action", where);
    det.loc = parse_score_vector(jsonutil::require_field(det_json, "loc", where),
                                 sizes.loc, "loc", where);
    if (auto it = det_json.find("duplex"); it != det_json.end()) {
      det.duplex = parse_score_vector(*it, sizes.duplex, "duplex", where);
    }
    if (auto it = det_json.find("event"); it != det_json.end()) {
      det.event = parse_score_vector(*it, sizes.event, "event", where);
    }
    frame.dets.push_back(std::move(det));
  }
  if (auto it = doc.find("av"); it != doc.end()) {
    frame.av = parse_score_vector(*it, sizes.av, "av", where);
  }
  return frame;
}

}  // namespace

DetectionStreamReader::DetectionStreamReader(std::istream& in,
                                             VocabSizes sizes)
    : in_(in), sizes_(sizes) {}

std::optional<FrameDetections> DetectionStreamReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.empty()) continue;
    FrameDetections frame = parse_frame_line(line, sizes_, line_no_);
    if (frame.t <= last_t_) {
      throw RoadError(ErrorKind::non_monotone_time,
                      "line " + std::to_string(line_no_) + ": frame index " +
                          std::to_string(frame.t) +
                          " does not exceed previous " +
                          std::to_string(last_t_));
    }
    last_t_ = frame.t;
    return frame;
  }
  return std::nullopt;
}

std::vector<FrameDetections> parse_detection_stream(std::string_view text,
                                                    VocabSizes sizes) {
  std::istringstream in{std::string(text)};
  DetectionStreamReader reader(in, sizes);
  std::vector<FrameDetections> frames;
  while (auto frame = reader.next()) frames.push_back(std::move(*frame));
  return frames;
}

std::vector<FrameDetections> read_detection_file(const std::string& path,
                                                 VocabSizes sizes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RoadError(ErrorKind::io, "cannot open detection file: " + path);
  }
  DetectionStreamReader reader(in, sizes);
  std::vector<FrameDetections> frames;
  while (auto frame = reader.next()) frames.push_back(std::move(*frame));
  return frames;
}

std::string serialize_frame(const FrameDetections& frame) {
  OrderedJson doc;
  doc["t"] = frame.t;
  OrderedJson dets = OrderedJson::array();
  for (const Detection& det : frame.dets) {
    OrderedJson d;
    d["box"] = {det.box.x1, det.box.y1, det.box.x2, det.box.y2};
    d["agentness"] = det.agentness;
    d["agent"] = det.agent;
    d["action"] = det.action;
    d["loc"] = det.loc;
    if (!det.duplex.empty()) d["duplex"] = det.duplex;
    if (!det.event.empty()) d["event"] = det.event;
    dets.push_back(std::move(d));
  }
  doc["dets"] = std::move(dets);
  if (!frame.av.empty()) doc["av"] = frame.av;
  return doc.dump();
}

// ---------------------------------------------------------------------------
// Labeled tube files
// ---------------------------------------------------------------------------

TubeGeometry tube_geometry(const LabeledTube& tube) {
  TubeGeometry geom;
  geom.frames.reserve(tube.frames.size());
  for (const TubeFramePred& f : tube.frames) geom.frames.push_back({f.t, f.box});
  return geom;
}

static int task_rank(TaskKind task) { return static_cast<int>(task); }

std::string tubes_to_json(const std::vector<LabeledTube>& tubes,
                          const std::string& config_echo_json) {
  std::vector<const LabeledTube*> ordered;
  ordered.reserve(tubes.size());
  for (const LabeledTube& t : tubes) ordered.push_back(&t);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const LabeledTube* a, const LabeledTube* b) {
                     if (a->uid != b->uid) return a->uid < b->uid;
                     if (a->task != b->task)
                       return task_rank(a->task) < task_rank(b->task);
                     return a->class_id < b->class_id;
                   });

  OrderedJson doc;
  doc["version"] = "road-lite/1";
  doc["kind"] = "tubes";
  if (!config_echo_json.empty()) {
    doc["config"] = OrderedJson::parse(config_echo_json);
  }
  OrderedJson arr = OrderedJson::array();
  for (const LabeledTube* tube : ordered) {
    OrderedJson frames = OrderedJson::array();
    for (const TubeFramePred& f : tube->frames) {
      OrderedJson frame;
      frame["t"] = f.t;
      frame["box"] = {f.box.x1, f.box.y1, f.box.x2, f.box.y2};
      if (f.interpolated) frame["interp"] = true;
      frames.push_back(std::move(frame));
    }
    arr.push_back({{"uid", tube->uid},
                   {"task", task_name(tube->task)},
                   {"class_id", tube->class_id},
                   {"score", tube->score},
                   {"frames", std::move(frames)}});
  }
  doc["tubes"] = std::move(arr);
  return doc.dump() + "\n";
}

std::size_t write_tubes(const std::vector<LabeledTube>& tubes,
                        std::ostream& sink,
                        const std::string& config_echo_json) {
  const std::string text = tubes_to_json(tubes, config_echo_json);
  sink << text;
  if (!sink) {
    throw RoadError(ErrorKind::io, "failed to write tube document");
  }
  return text.size();
}

std::vector<LabeledTube> parse_tubes(std::string_view json_text) {
  Json doc = jsonutil::parse_document(json_text, "tubes");
  const std::string version = jsonutil::require_string(doc, "version", "tubes");
  if (version != "road-lite/1") {
    throw RoadError(ErrorKind::unknown_version,
                    "tubes: unknown schema version \"" + version + "\"");
  }
  std::vector<LabeledTube> tubes;
  for (const Json& tube_json : jsonutil::require_array(doc, "tubes", "tubes")) {
    LabeledTube tube;
    tube.uid = jsonutil::require_int(tube_json, "uid", "tube");
    const std::string where = "tube " + std::to_string(tube.uid);
    const std::string task = jsonutil::require_string(tube_json, "task", where);
    auto kind = task_from_name(task);
    if (!kind) {
      throw RoadError(ErrorKind::malformed, where + ": unknown task \"" + task + "\"");
    }
    tube.task = *kind;
    tube.class_id = static_cast<int>(jsonutil::require_int(tube_json, "class_id", where));
    if (tube.class_id < 0) {
      throw RoadError(ErrorKind::dangling_label, where + ": negative class id");
    }
    tube.score = jsonutil::require_number(tube_json, "score", where);
    const Json& frames = jsonutil::require_array(tube_json, "frames", where);
    if (frames.empty()) {
      throw RoadError(ErrorKind::malformed, where + ": tube has no frames");
    }
    for (const Json& frame_json : frames) {
      TubeFramePred f;
      f.t = static_cast<int>(jsonutil::require_int(frame_json, "t", where));
      f.box = parse_det_box(jsonutil::require_field(frame_json, "box", where), where);
      if (auto it = frame_json.find("interp"); it != frame_json.end()) {
        f.interpolated = it->is_boolean() && it->get<bool>();
      }
      tube.frames.push_back(f);
    }
    tubes.push_back(std::move(tube));
  }
  return tubes;
}

std::vector<LabeledTube> load_tubes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RoadError(ErrorKind::io, "cannot open tube file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_tubes(buf.str());
}

}  // namespace roadtubes
