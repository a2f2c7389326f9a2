#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "roadtubes/errors.hpp"
#include "roadtubes/pipeline.hpp"
#include "roadtubes/synth.hpp"

using namespace roadtubes;

namespace {

VideoMeta video(int frames) { return {"synthvid", 30.0, 640.0, 480.0, frames}; }

AgentSpec agent(int id, int t0, int t1, BBox start, double vx, double vy,
                std::vector<int> acts, std::vector<int> locs) {
  AgentSpec s;
  s.agent_id = id;
  s.t_begin = t0;
  s.t_end = t1;
  s.start = start;
  s.vx = vx;
  s.vy = vy;
  s.actions = {{t0, t1, std::move(acts)}};
  s.locs = {{t0, t1, std::move(locs)}};
  return s;
}

std::string stream_text(const std::vector<FrameDetections>& frames) {
  std::string out;
  for (const auto& f : frames) out += serialize_frame(f) + "\n";
  return out;
}

SynthConfig explicit_config() {
  SynthConfig cfg;
  cfg.seed = 11;
  cfg.video = video(40);
  cfg.agents.push_back(
      agent(1, 0, 39, {50, 100, 130, 160}, 1.5, 0.0, {0}, {0}));
  cfg.agents.push_back(
      agent(7, 5, 30, {300, 200, 330, 280}, 0.0, -1.0, {17}, {7}));
  cfg.agents.push_back(
      agent(9, 10, 39, {500, 50, 530, 120}, -2.0, 0.5, {2, 9}, {10}));
  return cfg;
}

}  // namespace

TEST_CASE("equal seeds give byte identical output") {
  SynthConfig cfg;
  cfg.seed = 99;
  cfg.video = video(80);
  cfg.random_agents = 6;
  cfg.noise.jitter = 1.5;
  cfg.noise.dropout = 0.2;
  cfg.noise.distractor_rate = 1.0;
  cfg.noise.score_noise = 0.05;

  SynthOutput a = synth_generate(cfg);
  SynthOutput b = synth_generate(cfg);
  CHECK(serialize_annotations(a.annotations) ==
        serialize_annotations(b.annotations));
  CHECK(stream_text(a.noiseless) == stream_text(b.noiseless));

  auto na = synth_perturb(a.noiseless, cfg.noise, cfg.video, cfg.seed);
  auto nb = synth_perturb(b.noiseless, cfg.noise, cfg.video, cfg.seed);
  CHECK(stream_text(na) == stream_text(nb));
  // A different seed actually changes the corruption.
  auto nc = synth_perturb(a.noiseless, cfg.noise, cfg.video, cfg.seed + 1);
  CHECK(stream_text(na) != stream_text(nc));
}

TEST_CASE("explicit agents become exactly their tubes") {
  SynthConfig cfg = explicit_config();
  SynthOutput out = synth_generate(cfg);
  REQUIRE(out.annotations.tubes.size() == 3);
  CHECK(out.annotations.video.num_frames == 40);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& tube = out.annotations.tubes[i];
    const auto& spec = cfg.agents[i];
    CHECK(tube.agent_id == spec.agent_id);
    CHECK(tube.frames.front().t == spec.t_begin);
    CHECK(tube.frames.back().t == spec.t_end);
    CHECK(static_cast<int>(tube.frames.size()) ==
          spec.t_end - spec.t_begin + 1);
    CHECK(tube.frames.front().box == spec.start);
  }
  // The multi-action schedule lands on every frame.
  CHECK(out.annotations.tubes[2].frames[0].action_ids ==
        std::vector<int>{2, 9});
  // One AV label per frame.
  CHECK(out.annotations.av_actions.size() == 40);
  // The annotations validate cleanly.
  CHECK(validate_annotations(out.annotations).findings.empty());
}

TEST_CASE("the noiseless stream mirrors the ground truth") {
  SynthConfig cfg = explicit_config();
  SynthOutput out = synth_generate(cfg);
  REQUIRE(out.noiseless.size() == 40);
  int dets = 0;
  for (const auto& f : out.noiseless) {
    for (const auto& d : f.dets) {
      CHECK(d.agentness == 1.0);
      // One-hot agent vector.
      double sum = 0.0;
      for (double s : d.agent) sum += s;
      CHECK(sum == 1.0);
      CHECK(d.agent.size() == 11);
      CHECK(d.action.size() == 23);
      CHECK(d.loc.size() == 15);
      ++dets;
    }
    REQUIRE(f.av.size() == 7);
    double av_sum = 0.0;
    for (double s : f.av) av_sum += s;
    CHECK(av_sum == 1.0);
  }
  CHECK(dets == 40 + 26 + 30);
}

TEST_CASE("random agents never overlap and move smoothly") {
  SynthConfig cfg;
  cfg.seed = 4;
  cfg.video = video(120);
  cfg.random_agents = 9;
  SynthOutput out = synth_generate(cfg);
  REQUIRE(out.annotations.tubes.size() == 9);
  CHECK(validate_annotations(out.annotations).error_count() == 0);

  for (const auto& f : out.noiseless) {
    for (std::size_t i = 0; i < f.dets.size(); ++i) {
      for (std::size_t j = i + 1; j < f.dets.size(); ++j) {
        CHECK(box_iou(f.dets[i].box, f.dets[j].box) == 0.0);
      }
    }
  }
  for (const auto& tube : out.annotations.tubes) {
    for (std::size_t i = 1; i < tube.frames.size(); ++i) {
      CHECK(tube.frames[i].t == tube.frames[i - 1].t + 1);
      CHECK(box_iou(tube.frames[i].box, tube.frames[i - 1].box) > 0.5);
    }
  }
}

TEST_CASE("zero agents still yields a full stream of empty frames") {
  SynthConfig cfg;
  cfg.seed = 1;
  cfg.video = video(25);
  SynthOutput out = synth_generate(cfg);
  CHECK(out.annotations.tubes.empty());
  REQUIRE(out.noiseless.size() == 25);
  for (const auto& f : out.noiseless) CHECK(f.dets.empty());
  // Still round-trips through the strict parser.
  CHECK(parse_annotations(serialize_annotations(out.annotations)) ==
        out.annotations);
}

TEST_CASE("zero noise perturbation is the identity") {
  SynthConfig cfg = explicit_config();
  SynthOutput out = synth_generate(cfg);
  auto same = synth_perturb(out.noiseless, NoiseConfig{}, cfg.video, 5);
  CHECK(stream_text(same) == stream_text(out.noiseless));
}

TEST_CASE("full dropout erases every detection") {
  SynthConfig cfg = explicit_config();
  SynthOutput out = synth_generate(cfg);
  NoiseConfig noise;
  noise.dropout = 1.0;
  auto gone = synth_perturb(out.noiseless, noise, cfg.video, 5);
  for (const auto& f : gone) CHECK(f.dets.empty());
}

TEST_CASE("dropout keeps a binomially plausible share") {
  SynthConfig cfg;
  cfg.seed = 13;
  cfg.video = video(300);
  for (int i = 0; i < 4; ++i) {
    cfg.agents.push_back(agent(i + 1, 0, 299,
                               {20.0 + 150 * i, 50, 80.0 + 150 * i, 120}, 0.5,
                               0.25, {0}, {0}));
  }
  SynthOutput out = synth_generate(cfg);
  int total = 0;
  for (const auto& f : out.noiseless) total += static_cast<int>(f.dets.size());
  REQUIRE(total == 1200);

  NoiseConfig noise;
  noise.dropout = 0.3;
  auto noisy = synth_perturb(out.noiseless, noise, cfg.video, 77);
  int kept = 0;
  for (const auto& f : noisy) kept += static_cast<int>(f.dets.size());
  const double mean = total * 0.7;
  const double sigma = std::sqrt(total * 0.3 * 0.7);
  CHECK(std::abs(kept - mean) <= 3.0 * sigma);
}

TEST_CASE("distractors and jitter stay inside the image and the unit interval") {
  SynthConfig cfg = explicit_config();
  SynthOutput out = synth_generate(cfg);
  NoiseConfig noise;
  noise.jitter = 4.0;
  noise.distractor_rate = 2.0;
  noise.score_noise = 0.2;
  auto noisy = synth_perturb(out.noiseless, noise, cfg.video, 21);
  int total = 0;
  for (const auto& f : noisy) {
    for (const auto& d : f.dets) {
      ++total;
      CHECK(d.box.valid());
      CHECK(d.box.x1 >= 0.0);
      CHECK(d.box.y1 >= 0.0);
      CHECK(d.box.x2 <= cfg.video.width);
      CHECK(d.box.y2 <= cfg.video.height);
      CHECK(d.agentness >= 0.0);
      CHECK(d.agentness <= 1.0);
      for (double s : d.agent) {
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
      }
    }
  }
  // Poisson rate 2 over 40 frames must have produced extra boxes.
  CHECK(total > 96);
}

TEST_CASE("synth configs parse, echo and reject bad input") {
  SynthConfig cfg = explicit_config();
  cfg.random_agents = 2;
  const std::string text = serialize_synth_config(cfg);
  SynthConfig back = parse_synth_config(text);
  CHECK(back.seed == cfg.seed);
  CHECK(back.agents.size() == cfg.agents.size());
  CHECK(back.random_agents == 2);
  CHECK(serialize_synth_config(back) == text);

  SUBCASE("dangling agent id") {
    SynthConfig bad = explicit_config();
    bad.agents[0].agent_id = 42;
    CHECK_THROWS_AS(bad.validate(), RoadError);
  }
  SUBCASE("schedule must tile the lifespan") {
    SynthConfig bad = explicit_config();
    bad.agents[0].actions = {{0, 20, {0}}};  // stops short of t_end 39
    CHECK_THROWS_AS(bad.validate(), RoadError);
  }
  SUBCASE("noise parameters are bounded") {
    SynthConfig bad = explicit_config();
    bad.noise.dropout = 1.5;
    CHECK_THROWS_AS(bad.validate(), RoadError);
    bad = explicit_config();
    bad.noise.jitter = -1.0;
    CHECK_THROWS_AS(bad.validate(), RoadError);
  }
  SUBCASE("lifespan must fit the video") {
    SynthConfig bad = explicit_config();
    bad.agents[0].t_end = 40;  // num_frames is 40
    CHECK_THROWS_AS(bad.validate(), RoadError);
  }
}

TEST_CASE("a noiseless scene closes the loop at mAP one") {
  SynthConfig cfg;
  cfg.seed = 3;
  cfg.video = video(60);
  cfg.random_agents = 4;
  SynthOutput out = synth_generate(cfg);

  VocabContext vc;
  vc.vocab = out.annotations.vocab;
  vc.composites = derive_composite_vocabs(out.annotations);
  vc.have_composites = true;

  BuildOptions opt;
  auto tubes = build_tubes(out.noiseless, opt, vc);
  CHECK_FALSE(tubes.empty());

  EvalConfig cfg_eval;
  cfg_eval.task = TaskKind::event;
  cfg_eval.level = EvalLevel::video;
  cfg_eval.deltas = {0.5};
  cfg_eval.jobs = 1;
  auto run = video_map(out.annotations, tubes, cfg_eval, vc.composites);
  CHECK(run.reports[0].mean_ap == doctest::Approx(1.0).epsilon(1e-12));
}
