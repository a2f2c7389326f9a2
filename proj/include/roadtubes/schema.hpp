#ifndef ROADTUBES_SCHEMA_HPP
#define ROADTUBES_SCHEMA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "roadtubes/geometry.hpp"

namespace roadtubes {

enum class TaskKind { agent, action, location, duplex, event, av_action };

// Short names used on the CLI and in file payloads.
const char* task_name(TaskKind task);
std::optional<TaskKind> task_from_name(std::string_view name);

struct LabelVocab {
  std::vector<std::string> agent;
  std::vector<std::string> action;
  std::vector<std::string> loc;
  std::vector<std::string> av_action;

  bool operator==(const LabelVocab&) const = default;
};

// Built-in ROAD v1 vocabulary: 11 agent, 23 action, 15 location and
// 7 AV-action classes.
const LabelVocab& road_v1_vocab();

struct GTFrame {
  int t = 0;
  BBox box;
  std::vector<int> action_ids;  // sorted, unique
  std::vector<int> loc_ids;     // sorted, unique

  bool operator==(const GTFrame&) const = default;
};

struct AgentTubeGT {
  std::int64_t uid = 0;
  int agent_id = 0;
  std::vector<GTFrame> frames;

  bool operator==(const AgentTubeGT&) const = default;
};

struct VideoMeta {
  std::string id;
  double fps = 0.0;
  double width = 0.0;
  double height = 0.0;
  int num_frames = 0;

  bool operator==(const VideoMeta&) const = default;
};

struct AvFrame {
  int t = 0;
  int label_id = 0;

  bool operator==(const AvFrame&) const = default;
};

struct AnnotationSet {
  VideoMeta video;
  LabelVocab vocab;
  std::vector<AgentTubeGT> tubes;
  std::vector<AvFrame> av_actions;

  bool operator==(const AnnotationSet&) const = default;
};

struct DuplexClass {
  int agent_id = 0;
  int action_id = 0;

  auto operator<=>(const DuplexClass&) const = default;
};

struct EventClass {
  int agent_id = 0;
  int action_id = 0;
  int loc_id = 0;

  auto operator<=>(const EventClass&) const = default;
};

// Composite classes observed in the annotations, ordered lexicographically
// by their id tuples.
struct CompositeVocab {
  std::vector<DuplexClass> duplex;
  std::vector<EventClass> event;

  bool operator==(const CompositeVocab&) const = default;

  std::string duplex_name(const LabelVocab& vocab, int class_id) const;
  std::string event_name(const LabelVocab& vocab, int class_id) const;
};

// Strict parser for the road-lite/1 annotation document. Any structural
// defect (wrong types, missing fields, dangling label ids, invalid boxes)
// throws RoadError; there are no partial results. Unknown extra keys are
// ignored for forward compatibility.
AnnotationSet parse_annotations(std::string_view json_text);
AnnotationSet load_annotations(const std::string& path);
std::string serialize_annotations(const AnnotationSet& ann);

enum class FindingKind {
  duplicate_uid,
  non_monotone_time,
  empty_action_set,
  out_of_bounds,
};

struct Finding {
  FindingKind kind;
  bool is_error = false;
  std::int64_t uid = -1;
  int t = -1;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  int error_count() const;
  int warning_count() const;
};

// Semantic checks on a parsed annotation set. Findings are data, not
// failures: duplicate uids, non-monotone frame times and empty action sets
// are errors; boxes outside the image bounds are warnings.
ValidationReport validate_annotations(const AnnotationSet& ann);

CompositeVocab derive_composite_vocabs(const AnnotationSet& ann);

struct ClassTube {
  int class_id = 0;
  TubeGeometry geometry;
};

// Ground-truth tubes for one task. The agent task yields one tube per
// annotated tube; the per-label tasks yield one tube per maximal run of
// consecutive frames in which the class is present.
std::vector<ClassTube> extract_gt_tubes(const AnnotationSet& ann,
                                        TaskKind task,
                                        const CompositeVocab& cv);

// Number of classes a task ranges over.
int task_class_count(const LabelVocab& vocab, const CompositeVocab& cv,
                     TaskKind task);
std::string class_display_name(const LabelVocab& vocab,
                               const CompositeVocab& cv, TaskKind task,
                               int class_id);

}  // namespace roadtubes

#endif
