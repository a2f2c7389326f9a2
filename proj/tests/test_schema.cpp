#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "doctest.h"
#include "roadtubes/errors.hpp"
#include "roadtubes/schema.hpp"

using namespace roadtubes;

namespace {

GTFrame frame(int t, BBox box, std::vector<int> actions,
              std::vector<int> locs) {
  GTFrame f;
  f.t = t;
  f.box = box;
  f.action_ids = std::move(actions);
  f.loc_ids = std::move(locs);
  return f;
}

AnnotationSet small_scene() {
  AnnotationSet ann;
  ann.video = {"scene-0", 30.0, 640.0, 480.0, 12};
  ann.vocab = road_v1_vocab();

  AgentTubeGT car;
  car.uid = 0;
  car.agent_id = 1;  // Car
  for (int t = 0; t < 6; ++t) {
    car.frames.push_back(
        frame(t, {100.0 + 4 * t, 200, 160.0 + 4 * t, 240}, {1}, {2}));
  }
  ann.tubes.push_back(car);

  AgentTubeGT ped;
  ped.uid = 1;
  ped.agent_id = 7;  // Ped
  for (int t = 4; t < 12; ++t) {
    ped.frames.push_back(frame(t, {300, 100, 330, 180}, {17}, {7, 8}));
  }
  ann.tubes.push_back(ped);

  for (int t = 0; t < 12; ++t) ann.av_actions.push_back({t, t < 6 ? 0 : 1});
  return ann;
}

// Maximal runs of consecutive frames in which `present` holds.
std::vector<std::pair<int, int>> runs_of(const std::vector<int>& times) {
  std::vector<std::pair<int, int>> runs;
  for (std::size_t i = 0; i < times.size();) {
    std::size_t j = i;
    while (j + 1 < times.size() && times[j + 1] == times[j] + 1) ++j;
    runs.push_back({times[i], times[j]});
    i = j + 1;
  }
  return runs;
}

}  // namespace

TEST_CASE("annotations survive a serialize parse round trip") {
  AnnotationSet ann = small_scene();
  AnnotationSet back = parse_annotations(serialize_annotations(ann));
  CHECK(back == ann);
  // Serialization itself is stable.
  CHECK(serialize_annotations(back) == serialize_annotations(ann));
}

TEST_CASE("parser rejects structural defects") {
  const std::string good = serialize_annotations(small_scene());

  SUBCASE("wrong version") {
    std::string doc = good;
    const std::string needle = "road-lite/1";
    doc.replace(doc.find(needle), needle.size(), "road-lite/9");
    try {
      parse_annotations(doc);
      FAIL("expected a parse error");
    } catch (const RoadError& e) {
      CHECK(e.kind() == ErrorKind::unknown_version);
    }
  }

  SUBCASE("missing vocab") {
    std::string doc = good;
    const auto pos = doc.find("\"label_vocab\"");
    doc.replace(pos, 13, "\"label_vocap\"");
    try {
      parse_annotations(doc);
      FAIL("expected a parse error");
    } catch (const RoadError& e) {
      CHECK(e.kind() == ErrorKind::missing_field);
    }
  }

  SUBCASE("dangling action id") {
    AnnotationSet ann = small_scene();
    ann.tubes[0].frames[0].action_ids = {23};  // one past the vocab
    try {
      parse_annotations(serialize_annotations(ann));
      FAIL("expected a parse error");
    } catch (const RoadError& e) {
      CHECK(e.kind() == ErrorKind::dangling_label);
    }
  }

  SUBCASE("agent id out of range") {
    AnnotationSet ann = small_scene();
    ann.tubes[1].agent_id = 11;
    try {
      parse_annotations(serialize_annotations(ann));
      FAIL("expected a parse error");
    } catch (const RoadError& e) {
      CHECK(e.kind() == ErrorKind::dangling_label);
    }
  }

  SUBCASE("degenerate box") {
    AnnotationSet ann = small_scene();
    ann.tubes[0].frames[2].box = {50, 50, 50, 80};
    try {
      parse_annotations(serialize_annotations(ann));
      FAIL("expected a parse error");
    } catch (const RoadError& e) {
      CHECK(e.kind() == ErrorKind::invalid_box);
    }
  }
}

TEST_CASE("validation passes a clean scene") {
  auto report = validate_annotations(small_scene());
  CHECK(report.findings.empty());
  CHECK(report.error_count() == 0);
  CHECK(report.warning_count() == 0);
}

TEST_CASE("validation flags duplicate uids as an error") {
  AnnotationSet ann = small_scene();
  ann.tubes[1].uid = ann.tubes[0].uid;
  auto report = validate_annotations(ann);
  CHECK(report.error_count() == 1);
  CHECK(report.findings[0].kind == FindingKind::duplicate_uid);
}

TEST_CASE("validation flags non monotone frame times as an error") {
  AnnotationSet ann = small_scene();
  std::swap(ann.tubes[0].frames[2], ann.tubes[0].frames[3]);
  auto report = validate_annotations(ann);
  CHECK(report.error_count() >= 1);
  bool found = false;
  for (const auto& f : report.findings) {
    found = found || f.kind == FindingKind::non_monotone_time;
  }
  CHECK(found);
}

TEST_CASE("validation flags empty action sets as an error") {
  AnnotationSet ann = small_scene();
  ann.tubes[0].frames[1].action_ids.clear();
  auto report = validate_annotations(ann);
  CHECK(report.error_count() == 1);
  CHECK(report.findings[0].kind == FindingKind::empty_action_set);
}

TEST_CASE("validation flags out of bounds boxes as a warning only") {
  AnnotationSet ann = small_scene();
  ann.tubes[0].frames[0].box = {600, 200, 700, 240};  // x2 past width 640
  auto report = validate_annotations(ann);
  CHECK(report.error_count() == 0);
  CHECK(report.warning_count() == 1);
  CHECK(report.findings[0].kind == FindingKind::out_of_bounds);
  CHECK_FALSE(report.findings[0].is_error);
}

TEST_CASE("composite vocab of a single label tube is a single pair") {
  AnnotationSet ann;
  ann.video = {"v", 30.0, 640, 480, 3};
  ann.vocab = road_v1_vocab();
  AgentTubeGT car;
  car.uid = 0;
  car.agent_id = 1;  // Car
  for (int t = 0; t < 3; ++t) {
    car.frames.push_back(frame(t, {10, 10, 50, 40}, {1}, {2}));  // MovTow,
                                                                 // IncomLane
  }
  ann.tubes.push_back(car);

  CompositeVocab cv = derive_composite_vocabs(ann);
  REQUIRE(cv.duplex.size() == 1);
  REQUIRE(cv.event.size() == 1);
  CHECK(cv.duplex[0] == DuplexClass{1, 1});
  CHECK(cv.event[0] == EventClass{1, 1, 2});
  CHECK(cv.duplex_name(ann.vocab, 0) == "Car-MovTow");
  CHECK(cv.event_name(ann.vocab, 0) == "Car-MovTow-IncomLane");
}

TEST_CASE("concurrent labels expand as a cartesian product") {
  AnnotationSet ann;
  ann.video = {"v", 30.0, 640, 480, 1};
  ann.vocab = road_v1_vocab();
  AgentTubeGT tube;
  tube.uid = 0;
  tube.agent_id = 7;
  tube.frames.push_back(frame(0, {10, 10, 40, 80}, {15, 17}, {7, 10}));
  ann.tubes.push_back(tube);

  CompositeVocab cv = derive_composite_vocabs(ann);
  CHECK(cv.duplex.size() == 2);
  CHECK(cv.event.size() == 4);
  std::set<EventClass> expect{{7, 15, 7}, {7, 15, 10}, {7, 17, 7}, {7, 17, 10}};
  CHECK(std::set<EventClass>(cv.event.begin(), cv.event.end()) == expect);
}

TEST_CASE("composite vocab ignores tube order and repeated frames") {
  AnnotationSet ann = small_scene();
  CompositeVocab cv = derive_composite_vocabs(ann);
  CHECK(std::is_sorted(cv.duplex.begin(), cv.duplex.end()));
  CHECK(std::is_sorted(cv.event.begin(), cv.event.end()));

  std::reverse(ann.tubes.begin(), ann.tubes.end());
  CHECK(derive_composite_vocabs(ann) == cv);

  // A duplicate tube adds no new classes.
  ann.tubes.push_back(ann.tubes.front());
  ann.tubes.back().uid = 99;
  CHECK(derive_composite_vocabs(ann) == cv);
}

TEST_CASE("task class counts") {
  AnnotationSet ann = small_scene();
  CompositeVocab cv = derive_composite_vocabs(ann);
  CHECK(task_class_count(ann.vocab, cv, TaskKind::agent) == 11);
  CHECK(task_class_count(ann.vocab, cv, TaskKind::action) == 23);
  CHECK(task_class_count(ann.vocab, cv, TaskKind::location) == 15);
  CHECK(task_class_count(ann.vocab, cv, TaskKind::av_action) == 7);
  CHECK(task_class_count(ann.vocab, cv, TaskKind::duplex) ==
        static_cast<int>(cv.duplex.size()));
  CHECK(task_class_count(ann.vocab, cv, TaskKind::event) ==
        static_cast<int>(cv.event.size()));
}

TEST_CASE("agent tubes come out one per annotated tube") {
  AnnotationSet ann = small_scene();
  CompositeVocab cv = derive_composite_vocabs(ann);
  auto tubes = extract_gt_tubes(ann, TaskKind::agent, cv);
  REQUIRE(tubes.size() == ann.tubes.size());
  for (std::size_t i = 0; i < tubes.size(); ++i) {
    CHECK(tubes[i].class_id == ann.tubes[i].agent_id);
    CHECK(tubes[i].geometry.frames.size() == ann.tubes[i].frames.size());
    CHECK(tubes[i].geometry.t_begin() == ann.tubes[i].frames.front().t);
  }
}

TEST_CASE("label change splits one tube into two duplex tubes") {
  AnnotationSet ann;
  ann.video = {"v", 30.0, 640, 480, 10};
  ann.vocab = road_v1_vocab();
  AgentTubeGT car;
  car.uid = 0;
  car.agent_id = 1;
  for (int t = 0; t < 10; ++t) {
    car.frames.push_back(
        frame(t, {10.0 + t, 10, 60.0 + t, 40}, {t < 5 ? 0 : 9}, {0}));
  }
  ann.tubes.push_back(car);

  CompositeVocab cv = derive_composite_vocabs(ann);
  REQUIRE(cv.duplex.size() == 2);  // Car-MovAway, Car-TurLft
  auto tubes = extract_gt_tubes(ann, TaskKind::duplex, cv);
  REQUIRE(tubes.size() == 2);
  CHECK(tubes[0].geometry.t_begin() == 0);
  CHECK(tubes[0].geometry.t_end() == 4);
  CHECK(tubes[1].geometry.t_begin() == 5);
  CHECK(tubes[1].geometry.t_end() == 9);
  CHECK(tubes[0].class_id != tubes[1].class_id);
}

TEST_CASE("per label tubes are the maximal presence runs") {
  AnnotationSet ann;
  ann.video = {"v", 30.0, 640, 480, 8};
  ann.vocab = road_v1_vocab();
  AgentTubeGT tube;
  tube.uid = 0;
  tube.agent_id = 2;
  // Action 3 present on frames 0,1,2,5,6 of a 0..7 tube.
  std::set<int> active{0, 1, 2, 5, 6};
  for (int t = 0; t < 8; ++t) {
    std::vector<int> acts{4};
    if (active.count(t)) acts.insert(acts.begin(), 3);
    tube.frames.push_back(frame(t, {10, 10, 60, 40}, acts, {0}));
  }
  ann.tubes.push_back(tube);

  CompositeVocab cv = derive_composite_vocabs(ann);
  auto tubes = extract_gt_tubes(ann, TaskKind::action, cv);

  std::vector<std::pair<int, int>> got;
  for (const auto& ct : tubes) {
    if (ct.class_id == 3) {
      got.push_back({ct.geometry.t_begin(), ct.geometry.t_end()});
    }
  }
  std::vector<int> times(active.begin(), active.end());
  CHECK(got == runs_of(times));
  CHECK(got == std::vector<std::pair<int, int>>{{0, 2}, {5, 6}});
}

TEST_CASE("extracted runs match a run scan on random schedules") {
  std::mt19937 eng(31);
  for (int round = 0; round < 60; ++round) {
    AnnotationSet ann;
    ann.video = {"v", 30.0, 640, 480, 24};
    ann.vocab = road_v1_vocab();
    AgentTubeGT tube;
    tube.uid = 0;
    tube.agent_id = 1;
    std::vector<int> active_times;
    for (int t = 0; t < 24; ++t) {
      std::vector<int> acts{22};
      if (eng() % 2 == 0) {
        acts.insert(acts.begin(), 5);
        active_times.push_back(t);
      }
      tube.frames.push_back(frame(t, {10, 10, 60, 40}, acts, {0}));
    }
    ann.tubes.push_back(tube);

    CompositeVocab cv = derive_composite_vocabs(ann);
    auto tubes = extract_gt_tubes(ann, TaskKind::action, cv);
    std::vector<std::pair<int, int>> got;
    for (const auto& ct : tubes) {
      if (ct.class_id == 5) {
        got.push_back({ct.geometry.t_begin(), ct.geometry.t_end()});
        CHECK(ct.geometry.dense());
      }
    }
    CHECK(got == runs_of(active_times));
  }
}
