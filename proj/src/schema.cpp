#include "roadtubes/schema.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "schema_internal.hpp"

namespace roadtubes {

using jsonutil::Json;
using jsonutil::OrderedJson;

static constexpr const char* kSchemaVersion = "road-lite/1";

const char* task_name(TaskKind task) {
  switch (task) {
    case TaskKind::agent: return "agent";
    case TaskKind::action: return "action";
    case TaskKind::location: return "loc";
    case TaskKind::duplex: return "duplex";
    case TaskKind::event: return "event";
    case TaskKind::av_action: return "av";
  }
  return "?";
}

std::optional<TaskKind> task_from_name(std::string_view name) {
  if (name == "agent") return TaskKind::agent;
  if (name == "action") return TaskKind::action;
  if (name == "loc" || name == "location") return TaskKind::location;
  if (name == "duplex") return TaskKind::duplex;
  if (name == "event") return TaskKind::event;
  if (name == "av" || name == "av_action") return TaskKind::av_action;
  return std::nullopt;
}

const LabelVocab& road_v1_vocab() {
  static const LabelVocab vocab{
      // agents
      {"AV", "Car", "MedVeh", "LarVeh", "Bus", "Mobike", "EmVeh", "Ped",
       "Cyc", "TL", "OthTL"},
      // actions
      {"MovAway", "MovTow", "Mov", "Rev", "Brake", "Stop", "IncatLft",
       "IncatRht", "HazLit", "TurLft", "TurRht", "MovRht", "MovLft", "Ovtak",
       "Wait2X", "XingFmLft", "XingFmRht", "Xing", "PushObj", "Red", "Amber",
       "Green", "Black"},
      // locations
      {"VehLane", "OutgoLane", "IncomLane", "OutgoBusLane", "IncomBusLane",
       "OutgoCycLane", "IncomCycLane", "LftPav", "RhtPav", "Pav", "Jun",
       "Xing", "BusStop", "LftParking", "RhtParking"},
      // AV actions
      {"AvMove", "AvStop", "AvTurRht", "AvTurLft", "AvOvtak", "AvMovLft",
       "AvMovRht"}};
  return vocab;
}

std::string CompositeVocab::duplex_name(const LabelVocab& vocab,
                                        int class_id) const {
  const DuplexClass& d = duplex.at(class_id);
  return vocab.agent.at(d.agent_id) + "-" + vocab.action.at(d.action_id);
}

std::string CompositeVocab::event_name(const LabelVocab& vocab,
                                       int class_id) const {
  const EventClass& e = event.at(class_id);
  return vocab.agent.at(e.agent_id) + "-" + vocab.action.at(e.action_id) +
         "-" + vocab.loc.at(e.loc_id);
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

static std::vector<std::string> parse_name_list(const Json& arr,
                                                const std::string& where) {
  std::vector<std::string> names;
  names.reserve(arr.size());
  std::set<std::string> seen;
  for (const Json& item : arr) {
    if (!item.is_string()) {
      throw RoadError(ErrorKind::malformed, where + ": class names must be strings");
    }
    std::string name = item.get<std::string>();
    if (!seen.insert(name).second) {
      throw RoadError(ErrorKind::malformed,
                      where + ": duplicate class name \"" + name + "\"");
    }
    names.push_back(std::move(name));
  }
  if (names.empty()) {
    throw RoadError(ErrorKind::malformed, where + ": class list is empty");
  }
  return names;
}

LabelVocab parse_vocab_object(const Json& v) {
  LabelVocab vocab;
  vocab.agent = parse_name_list(jsonutil::require_array(v, "agent", "label_vocab"),
                                "label_vocab.agent");
  vocab.action = parse_name_list(jsonutil::require_array(v, "action", "label_vocab"),
                                 "label_vocab.action");
  vocab.loc = parse_name_list(jsonutil::require_array(v, "loc", "label_vocab"),
                              "label_vocab.loc");
  vocab.av_action = parse_name_list(
      jsonutil::require_array(v, "av_action", "label_vocab"), "label_vocab.av_action");
  return vocab;
}

static BBox parse_box(const Json& arr, const std::string& where) {
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

static std::vector<int> parse_id_set(const Json& arr, int vocab_size,
                                     const char* label_kind,
                                     const std::string& where) {
  std::vector<int> ids;
  ids.reserve(arr.size());
  for (const Json& item : arr) {
    if (!item.is_number_integer()) {
      throw RoadError(ErrorKind::malformed, where + ": label ids must be integers");
    }
    const auto id = item.get<std::int64_t>();
    if (id < 0 || id >= vocab_size) {
      throw RoadError(ErrorKind::dangling_label,
                      where + ": " + label_kind + " id " + std::to_string(id) +
                          " outside vocab of size " + std::to_string(vocab_size));
    }
    ids.push_back(static_cast<int>(id));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

AnnotationSet parse_annotations(std::string_view json_text) {
  Json doc = jsonutil::parse_document(json_text, "annotations");

  const std::string version = jsonutil::require_string(doc, "version", "annotations");
  if (version != kSchemaVersion) {
    throw RoadError(ErrorKind::unknown_version,
                    "annotations: unknown schema version \"" + version + "\"");
  }

  AnnotationSet ann;
  const Json& video = jsonutil::require_object(doc, "video", "annotations");
  ann.video.id = jsonutil::require_string(video, "id", "video");
  ann.video.fps = jsonutil::require_number(video, "fps", "video");
  ann.video.width = jsonutil::require_number(video, "width", "video");
  ann.video.height = jsonutil::require_number(video, "height", "video");
  ann.video.num_frames = static_cast<int>(jsonutil::require_int(video, "num_frames", "video"));

  ann.vocab = parse_vocab_object(jsonutil::require_object(doc, "label_vocab", "annotations"));
  const int na = static_cast<int>(ann.vocab.agent.size());
  const int nc = static_cast<int>(ann.vocab.action.size());
  const int nl = static_cast<int>(ann.vocab.loc.size());
  const int nav = static_cast<int>(ann.vocab.av_action.size());

  for (const Json& tube_json : jsonutil::require_array(doc, "tubes", "annotations")) {
    AgentTubeGT tube;
    tube.uid = jsonutil::require_int(tube_json, "uid", "tube");
    const std::string where = "tube " + std::to_string(tube.uid);
    const auto agent_id = jsonutil::require_int(tube_json, "agent_id", where);
    if (agent_id < 0 || agent_id >= na) {
      throw RoadError(ErrorKind::dangling_label,
                      where + ": agent id " + std::to_string(agent_id) +
                          " outside vocab of size " + std::to_string(na));
    }
    tube.agent_id = static_cast<int>(agent_id);
    const Json& frames = jsonutil::require_array(tube_json, "frames", where);
    if (frames.empty()) {
      throw RoadError(ErrorKind::malformed, where + ": tube has no frames");
    }
    for (const Json& frame_json : frames) {
      GTFrame frame;
      frame.t = static_cast<int>(jsonutil::require_int(frame_json, "t", where));
      frame.box = parse_box(jsonutil::require_field(frame_json, "box", where), where);
      frame.action_ids = parse_id_set(
          jsonutil::require_array(frame_json, "action_ids", where), nc, "action", where);
      frame.loc_ids = parse_id_set(
          jsonutil::require_array(frame_json, "loc_ids", where), nl, "location", where);
      tube.frames.push_back(std::move(frame));
    }
    ann.tubes.push_back(std::move(tube));
  }

  for (const Json& av_json : jsonutil::require_array(doc, "av_actions", "annotations")) {
    AvFrame av;
    av.t = static_cast<int>(jsonutil::require_int(av_json, "t", "av_actions"));
    const auto label_id = jsonutil::require_int(av_json, "label_id", "av_actions");
    if (label_id < 0 || label_id >= nav) {
      throw RoadError(ErrorKind::dangling_label,
                      "av_actions: label id " + std::to_string(label_id) +
                          " outside vocab of size " + std::to_string(nav));
    }
    av.label_id = static_cast<int>(label_id);
    ann.av_actions.push_back(av);
  }

  return ann;
}

AnnotationSet load_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw RoadError(ErrorKind::io, "cannot open annotation file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_annotations(buf.str());
}

std::string serialize_annotations(const AnnotationSet& ann) {
  OrderedJson doc;
  doc["version"] = kSchemaVersion;
  doc["video"] = {{"id", ann.video.id},
                  {"fps", ann.video.fps},
                  {"width", ann.video.width},
                  {"height", ann.video.height},
                  {"num_frames", ann.video.num_frames}};
  doc["label_vocab"] = {{"agent", ann.vocab.agent},
                        {"action", ann.vocab.action},
                        {"loc", ann.vocab.loc},
                        {"av_action", ann.vocab.av_action}};
  OrderedJson tubes = OrderedJson::array();
  for (const AgentTubeGT& tube : ann.tubes) {
    OrderedJson frames = OrderedJson::array();
    for (const GTFrame& f : tube.frames) {
      frames.push_back({{"t", f.t},
                        {"box", {f.box.x1, f.box.y1, f.box.x2, f.box.y2}},
                        {"action_ids", f.action_ids},
                        {"loc_ids", f.loc_ids}});
    }
    tubes.push_back({{"uid", tube.uid},
                     {"agent_id", tube.agent_id},
                     {"frames", std::move(frames)}});
  }
  doc["tubes"] = std::move(tubes);
  OrderedJson av = OrderedJson::array();
  for (const AvFrame& f : ann.av_actions) {
    av.push_back({{"t", f.t}, {"label_id", f.label_id}});
  }
  doc["av_actions"] = std::move(av);
  return doc.dump();
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

int ValidationReport::error_count() const {
  int n = 0;
  for (const Finding& f : findings) n += f.is_error ? 1 : 0;
  return n;
}

int ValidationReport::warning_count() const {
  return static_cast<int>(findings.size()) - error_count();
}

ValidationReport validate_annotations(const AnnotationSet& ann) {
  ValidationReport report;
  std::map<std::int64_t, int> uid_count;
  for (const AgentTubeGT& tube : ann.tubes) ++uid_count[tube.uid];
  for (const auto& [uid, count] : uid_count) {
    if (count > 1) {
      report.findings.push_back(
          {FindingKind::duplicate_uid, true, uid, -1,
           "uid " + std::to_string(uid) + " used by " + std::to_string(count) +
               " tubes"});
    }
  }

  for (const AgentTubeGT& tube : ann.tubes) {
    for (std::size_t i = 0; i < tube.frames.size(); ++i) {
      const GTFrame& f = tube.frames[i];
      if (i > 0 && f.t <= tube.frames[i - 1].t) {
        report.findings.push_back(
            {FindingKind::non_monotone_time, true, tube.uid, f.t,
             "tube " + std::to_string(tube.uid) + ": frame time " +
                 std::to_string(f.t) + " does not increase"});
      }
      if (f.action_ids.empty()) {
        report.findings.push_back(
            {FindingKind::empty_action_set, true, tube.uid, f.t,
             "tube " + std::to_string(tube.uid) + " frame " +
                 std::to_string(f.t) + ": no action labels"});
      }
      if (f.box.x1 < 0 || f.box.y1 < 0 || f.box.x2 > ann.video.width ||
          f.box.y2 > ann.video.height) {
        report.findings.push_back(
            {FindingKind::out_of_bounds, false, tube.uid, f.t,
             "tube " + std::to_string(tube.uid) + " frame " +
                 std::to_string(f.t) + ": box exceeds image bounds"});
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Composite vocab derivation and ground-truth tube extraction
// ---------------------------------------------------------------------------

CompositeVocab derive_composite_vocabs(const AnnotationSet& ann) {
  std::set<DuplexClass> duplex;
  std::set<EventClass> event;
  for (const AgentTubeGT& tube : ann.tubes) {
    for (const GTFrame& frame : tube.frames) {
      for (int action_id : frame.action_ids) {
        duplex.insert({tube.agent_id, action_id});
        for (int loc_id : frame.loc_ids) {
          event.insert({tube.agent_id, action_id, loc_id});
        }
      }
    }
  }
  CompositeVocab cv;
  cv.duplex.assign(duplex.begin(), duplex.end());
  cv.event.assign(event.begin(), event.end());
  return cv;
}

int task_class_count(const LabelVocab& vocab, const CompositeVocab& cv,
                     TaskKind task) {
  switch (task) {
    case TaskKind::agent: return static_cast<int>(vocab.agent.size());
    case TaskKind::action: return static_cast<int>(vocab.action.size());
    case TaskKind::location: return static_cast<int>(vocab.loc.size());
    case TaskKind::duplex: return static_cast<int>(cv.duplex.size());
    case TaskKind::event: return static_cast<int>(cv.event.size());
    case TaskKind::av_action: return static_cast<int>(vocab.av_action.size());
  }
  return 0;
}

std::string class_display_name(const LabelVocab& vocab,
                               const CompositeVocab& cv, TaskKind task,
                               int class_id) {
  switch (task) {
    case TaskKind::agent: return vocab.agent.at(class_id);
    case TaskKind::action: return vocab.action.at(class_id);
    case TaskKind::location: return vocab.loc.at(class_id);
    case TaskKind::duplex: return cv.duplex_name(vocab, class_id);
    case TaskKind::event: return cv.event_name(vocab, class_id);
    case TaskKind::av_action: return vocab.av_action.at(class_id);
  }
  return "?";
}

namespace {

bool contains_id(const std::vector<int>& ids, int id) {
  return std::binary_search(ids.begin(), ids.end(), id);
}

// Collect maximal runs of consecutive frames satisfying `present`, one
// ClassTube per run.
template <typename Pred>
void append_runs(const AgentTubeGT& tube, int class_id, Pred present,
                 std::vector<ClassTube>& out) {
  TubeGeometry current;
  for (std::size_t i = 0; i < tube.frames.size(); ++i) {
    const GTFrame& f = tube.frames[i];
    const bool hit = present(f);
    const bool contiguous =
        !current.frames.empty() && f.t == current.frames.back().t + 1;
    if (hit) {
      if (!current.frames.empty() && !contiguous) {
        out.push_back({class_id, std::move(current)});
        current = {};
      }
      current.frames.push_back({f.t, f.box});
    } else if (!current.frames.empty()) {
      out.push_back({class_id, std::move(current)});
      current = {};
    }
  }
  if (!current.frames.empty()) {
    out.push_back({class_id, std::move(current)});
  }
}

}  // namespace

std::vector<ClassTube> extract_gt_tubes(const AnnotationSet& ann,
                                        TaskKind task,
                                        const CompositeVocab& cv) {
  std::vector<ClassTube> out;
  switch (task) {
    case TaskKind::agent:
      for (const AgentTubeGT& tube : ann.tubes) {
        TubeGeometry geom;
        geom.frames.reserve(tube.frames.size());
        for (const GTFrame& f : tube.frames) geom.frames.push_back({f.t, f.box});
        out.push_back({tube.agent_id, std::move(geom)});
      }
      break;
    case TaskKind::action:
      for (std::size_t c = 0; c < ann.vocab.action.size(); ++c) {
        for (const AgentTubeGT& tube : ann.tubes) {
          append_runs(tube, static_cast<int>(c),
                      [&](const GTFrame& f) {
                        return contains_id(f.action_ids, static_cast<int>(c));
                      },
                      out);
        }
      }
      break;
    case TaskKind::location:
      for (std::size_t c = 0; c < ann.vocab.loc.size(); ++c) {
        for (const AgentTubeGT& tube : ann.tubes) {
          append_runs(tube, static_cast<int>(c),
                      [&](const GTFrame& f) {
                        return contains_id(f.loc_ids, static_cast<int>(c));
                      },
                      out);
        }
      }
      break;
    case TaskKind::duplex:
      for (std::size_t c = 0; c < cv.duplex.size(); ++c) {
        const DuplexClass& d = cv.duplex[c];
        for (const AgentTubeGT& tube : ann.tubes) {
          if (tube.agent_id != d.agent_id) continue;
          append_runs(tube, static_cast<int>(c),
                      [&](const GTFrame& f) {
                        return contains_id(f.action_ids, d.action_id);
                      },
                      out);
        }
      }
      break;
    case TaskKind::event:
      for (std::size_t c = 0; c < cv.event.size(); ++c) {
        const EventClass& e = cv.event[c];
        for (const AgentTubeGT& tube : ann.tubes) {
          if (tube.agent_id != e.agent_id) continue;
          append_runs(tube, static_cast<int>(c),
                      [&](const GTFrame& f) {
                        return contains_id(f.action_ids, e.action_id) &&
                               contains_id(f.loc_ids, e.loc_id);
                      },
                      out);
        }
      }
      break;
    case TaskKind::av_action:
      throw RoadError(ErrorKind::bad_config,
                      "av task has no spatiotemporal ground-truth tubes");
  }
  return out;
}

}  // namespace roadtubes
