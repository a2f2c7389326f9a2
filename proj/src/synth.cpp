#include "roadtubes/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "json_util.hpp"
#include "roadtubes/errors.hpp"

namespace roadtubes {

double Rng::uniform01() {
  return (eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

int Rng::uniform_int(int lo, int hi) {
  const int span = hi - lo + 1;
  int v = lo + static_cast<int>(uniform01() * span);
  return std::min(v, hi);
}

double Rng::normal(double mu, double sigma) {
  if (have_spare_) {
    have_spare_ = false;
    return mu + sigma * spare_;
  }
  double u1 = uniform01();
  while (u1 == 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  have_spare_ = true;
  return mu + sigma * r * std::cos(angle);
}

int Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  const double limit = std::exp(-mean);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform01();
  } while (p > limit);
  return k - 1;
}

bool Rng::bernoulli(double p) {
  return uniform01() < p;
}

void NoiseConfig::validate() const {
  if (!(dropout >= 0.0 && dropout <= 1.0)) {
    throw RoadError(ErrorKind::bad_config, "dropout must be in [0,1]");
  }
  if (jitter < 0.0 || distractor_rate < 0.0 || score_noise < 0.0) {
    throw RoadError(ErrorKind::bad_config, "noise sigmas and rates must be >= 0");
  }
}

namespace {

void validate_schedule(const std::vector<LabelSpan>& spans, int t_begin,
                       int t_end, int n_classes, const char* what) {
  int expect = t_begin;
  for (const LabelSpan& span : spans) {
    if (span.t_begin != expect || span.t_end < span.t_begin) {
      throw RoadError(ErrorKind::bad_config,
                      std::string(what) + " schedule must tile the lifespan");
    }
    if (span.ids.empty()) {
      throw RoadError(ErrorKind::bad_config,
                      std::string(what) + " schedule span has no labels");
    }
    for (int id : span.ids) {
      if (id < 0 || id >= n_classes) {
        throw RoadError(ErrorKind::dangling_label,
                        std::string(what) + " schedule label out of range");
      }
    }
    expect = span.t_end + 1;
  }
  if (expect != t_end + 1) {
    throw RoadError(ErrorKind::bad_config,
                    std::string(what) + " schedule must tile the lifespan");
  }
}

const std::vector<int>& schedule_at(const std::vector<LabelSpan>& spans, int t) {
  for (const LabelSpan& span : spans) {
    if (t >= span.t_begin && t <= span.t_end) return span.ids;
  }
  throw RoadError(ErrorKind::bad_state, "schedule gap");  // ruled out by validate
}

}  // namespace

void SynthConfig::validate() const {
  const LabelVocab& vocab = road_v1_vocab();
  if (video.num_frames < 1) {
    throw RoadError(ErrorKind::bad_config, "num_frames must be >= 1");
  }
  if (!(video.width > 0.0 && video.height > 0.0 && video.fps > 0.0)) {
    throw RoadError(ErrorKind::bad_config, "video dimensions and fps must be positive");
  }
  if (random_agents < 0) {
    throw RoadError(ErrorKind::bad_config, "random_agents must be >= 0");
  }
  for (const AgentSpec& agent : agents) {
    if (agent.agent_id < 0 ||
        agent.agent_id >= static_cast<int>(vocab.agent.size())) {
      throw RoadError(ErrorKind::dangling_label, "agent class out of range");
    }
    if (agent.t_begin < 0 || agent.t_end < agent.t_begin ||
        agent.t_end >= video.num_frames) {
      throw RoadError(ErrorKind::bad_config, "agent lifespan outside the video");
    }
    if (!agent.start.valid()) {
      throw RoadError(ErrorKind::invalid_box, "agent start box is degenerate");
    }
    validate_schedule(agent.actions, agent.t_begin, agent.t_end,
                      static_cast<int>(vocab.action.size()), "action");
    validate_schedule(agent.locs, agent.t_begin, agent.t_end,
                      static_cast<int>(vocab.loc.size()), "location");
  }
  noise.validate();
}

namespace {

// Rectangle an agent's box may move inside.
struct MotionBounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
};

// One agent per grid cell, boxes confined to the cell interior, speed kept
// under an eighth of the box side so consecutive frames overlap well above
// any sane association threshold.
std::vector<AgentSpec> make_random_agents(const SynthConfig& cfg, Rng& rng,
                                          std::vector<MotionBounds>& bounds) {
  const LabelVocab& vocab = road_v1_vocab();
  const int n = cfg.random_agents;
  std::vector<AgentSpec> agents;
  if (n == 0) return agents;
  const int cols = static_cast<int>(std::ceil(std::sqrt(double(n))));
  const int rows = (n + cols - 1) / cols;
  const double cell_w = cfg.video.width / cols;
  const double cell_h = cfg.video.height / rows;
  const int nf = cfg.video.num_frames;
  for (int i = 0; i < n; ++i) {
    MotionBounds cell;
    cell.min_x = (i % cols) * cell_w + 1.0;
    cell.min_y = (i / cols) * cell_h + 1.0;
    cell.max_x = (i % cols) * cell_w + cell_w - 1.0;
    cell.max_y = (i / cols) * cell_h + cell_h - 1.0;
    const double free_w = cell.max_x - cell.min_x;
    const double free_h = cell.max_y - cell.min_y;
    AgentSpec agent;
    agent.agent_id = rng.uniform_int(0, static_cast<int>(vocab.agent.size()) - 1);
    const double w = free_w * rng.uniform(0.3, 0.5);
    const double h = free_h * rng.uniform(0.3, 0.5);
    const double x = cell.min_x + rng.uniform01() * (free_w - w);
    const double y = cell.min_y + rng.uniform01() * (free_h - h);
    agent.start = {x, y, x + w, y + h};
    const double speed = std::min(w, h) / 8.0;
    agent.vx = rng.uniform(-speed, speed);
    agent.vy = rng.uniform(-speed, speed);
    agent.t_begin = rng.uniform_int(0, std::max(0, nf / 5));
    agent.t_end = rng.uniform_int(std::min(nf - 1, agent.t_begin + nf / 2), nf - 1);

    auto pick_ids = [&](int n_classes) {
      std::set<int> ids;
      const int want = 1 + (rng.bernoulli(0.5) ? 1 : 0);
      while (static_cast<int>(ids.size()) < want) {
        ids.insert(rng.uniform_int(0, n_classes - 1));
      }
      return std::vector<int>(ids.begin(), ids.end());
    };
    agent.actions = {{agent.t_begin, agent.t_end,
                      pick_ids(static_cast<int>(vocab.action.size()))}};
    agent.locs = {{agent.t_begin, agent.t_end,
                   pick_ids(static_cast<int>(vocab.loc.size()))}};
    agents.push_back(std::move(agent));
    bounds.push_back(cell);
  }
  return agents;
}

// Position at t: linear motion from the start box, clamped to the agent's
// motion bounds.
BBox box_at(const AgentSpec& agent, int t, const MotionBounds& bounds) {
  const double dt = t - agent.t_begin;
  const double w = agent.start.width();
  const double h = agent.start.height();
  double x = agent.start.x1 + agent.vx * dt;
  double y = agent.start.y1 + agent.vy * dt;
  x = std::clamp(x, bounds.min_x, bounds.max_x - w);
  y = std::clamp(y, bounds.min_y, bounds.max_y - h);
  return {x, y, x + w, y + h};
}

std::vector<AvFrame> make_av_schedule(int num_frames, int n_classes, Rng& rng) {
  std::vector<AvFrame> av;
  av.reserve(num_frames);
  int t = 0;
  while (t < num_frames) {
    const int label = rng.uniform_int(0, n_classes - 1);
    const int len = rng.uniform_int(20, 60);
    for (int i = 0; i < len && t < num_frames; ++i, ++t) {
      av.push_back({t, label});
    }
  }
  return av;
}

}  // namespace

SynthOutput synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const LabelVocab& vocab = road_v1_vocab();
  Rng rng(cfg.seed);

  // Explicit agents roam the whole image; random agents get their cell.
  std::vector<AgentSpec> agents = cfg.agents;
  std::vector<MotionBounds> bounds(
      agents.size(), {0.0, 0.0, cfg.video.width, cfg.video.height});
  std::vector<AgentSpec> random_agents = make_random_agents(cfg, rng, bounds);
  agents.insert(agents.end(), random_agents.begin(), random_agents.end());

  SynthOutput out;
  out.annotations.video = cfg.video;
  out.annotations.vocab = vocab;
  out.annotations.av_actions = make_av_schedule(
      cfg.video.num_frames, static_cast<int>(vocab.av_action.size()), rng);

  for (std::size_t i = 0; i < agents.size(); ++i) {
    const AgentSpec& agent = agents[i];
    AgentTubeGT tube;
    tube.uid = static_cast<std::int64_t>(i);
    tube.agent_id = agent.agent_id;
    for (int t = agent.t_begin; t <= agent.t_end; ++t) {
      GTFrame frame;
      frame.t = t;
      frame.box = box_at(agent, t, bounds[i]);
      frame.action_ids = schedule_at(agent.actions, t);
      frame.loc_ids = schedule_at(agent.locs, t);
      tube.frames.push_back(std::move(frame));
    }
    out.annotations.tubes.push_back(std::move(tube));
  }

  out.noiseless.reserve(cfg.video.num_frames);
  for (int t = 0; t < cfg.video.num_frames; ++t) {
    FrameDetections frame;
    frame.t = t;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const AgentSpec& agent = agents[i];
      if (t < agent.t_begin || t > agent.t_end) continue;
      Detection det;
      det.box = out.annotations.tubes[i].frames[t - agent.t_begin].box;
      det.agentness = 1.0;
      det.agent.assign(vocab.agent.size(), 0.0);
      det.agent[agent.agent_id] = 1.0;
      det.action.assign(vocab.action.size(), 0.0);
      for (int id : schedule_at(agent.actions, t)) det.action[id] = 1.0;
      det.loc.assign(vocab.loc.size(), 0.0);
      for (int id : schedule_at(agent.locs, t)) det.loc[id] = 1.0;
      frame.dets.push_back(std::move(det));
    }
    frame.av.assign(vocab.av_action.size(), 0.0);
    frame.av[out.annotations.av_actions[t].label_id] = 1.0;
    out.noiseless.push_back(std::move(frame));
  }
  return out;
}

std::vector<FrameDetections> synth_perturb(
    const std::vector<FrameDetections>& stream, const NoiseConfig& noise,
    const VideoMeta& video, std::uint64_t seed) {
  noise.validate();
  const LabelVocab& vocab = road_v1_vocab();
  Rng rng(seed);

  auto clamp_score = [](double v) { return std::clamp(v, 0.0, 1.0); };
  auto jitter_box = [&](BBox box) {
    if (noise.jitter > 0.0) {
      box.x1 += rng.normal(0.0, noise.jitter);
      box.y1 += rng.normal(0.0, noise.jitter);
      box.x2 += rng.normal(0.0, noise.jitter);
      box.y2 += rng.normal(0.0, noise.jitter);
      if (box.x2 < box.x1) std::swap(box.x1, box.x2);
      if (box.y2 < box.y1) std::swap(box.y1, box.y2);
    }
    box.x1 = std::clamp(box.x1, 0.0, video.width - 1.0);
    box.y1 = std::clamp(box.y1, 0.0, video.height - 1.0);
    box.x2 = std::clamp(box.x2, box.x1 + 0.5, video.width);
    box.y2 = std::clamp(box.y2, box.y1 + 0.5, video.height);
    return box;
  };
  auto noisy_scores = [&](std::vector<double>& scores) {
    if (noise.score_noise <= 0.0) return;
    for (double& v : scores) v = clamp_score(v + rng.normal(0.0, noise.score_noise));
  };

  std::vector<FrameDetections> out;
  out.reserve(stream.size());
  for (const FrameDetections& frame : stream) {
    FrameDetections corrupted;
    corrupted.t = frame.t;
    corrupted.av = frame.av;
    for (const Detection& det : frame.dets) {
      if (noise.dropout > 0.0 && rng.bernoulli(noise.dropout)) continue;
      Detection kept = det;
      kept.box = jitter_box(kept.box);
      if (noise.score_noise > 0.0) {
        kept.agentness = clamp_score(kept.agentness + rng.normal(0.0, noise.score_noise));
        noisy_scores(kept.agent);
        noisy_scores(kept.action);
        noisy_scores(kept.loc);
        noisy_scores(kept.duplex);
        noisy_scores(kept.event);
      }
      corrupted.dets.push_back(std::move(kept));
    }
    const int extras = noise.distractor_rate > 0.0 ? rng.poisson(noise.distractor_rate) : 0;
    for (int e = 0; e < extras; ++e) {
      Detection fake;
      const double w = rng.uniform(8.0, std::max(9.0, video.width / 8.0));
      const double h = rng.uniform(8.0, std::max(9.0, video.height / 8.0));
      const double x = rng.uniform01() * (video.width - w);
      const double y = rng.uniform01() * (video.height - h);
      fake.box = {x, y, x + w, y + h};
      fake.agentness = rng.uniform(0.05, 1.0);
      fake.agent.assign(vocab.agent.size(), 0.0);
      fake.agent[rng.uniform_int(0, static_cast<int>(vocab.agent.size()) - 1)] =
          rng.uniform(0.5, 1.0);
      fake.action.assign(vocab.action.size(), 0.0);
      fake.action[rng.uniform_int(0, static_cast<int>(vocab.action.size()) - 1)] =
          rng.uniform(0.5, 1.0);
      fake.loc.assign(vocab.loc.size(), 0.0);
      fake.loc[rng.uniform_int(0, static_cast<int>(vocab.loc.size()) - 1)] =
          rng.uniform(0.5, 1.0);
      corrupted.dets.push_back(std::move(fake));
    }
    out.push_back(std::move(corrupted));
  }
  return out;
}

SynthConfig parse_synth_config(std::string_view json_text) {
  using jsonutil::Json;
  const Json doc = jsonutil::parse_document(json_text, "synth config");
  const std::string version = jsonutil::require_string(doc, "version", "synth config");
  if (version != "road-lite/1") {
    throw RoadError(ErrorKind::unknown_version,
                    "unsupported config version \"" + version + "\"");
  }
  SynthConfig cfg;
  if (doc.contains("seed")) {
    const Json& seed = doc["seed"];
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
      throw RoadError(ErrorKind::malformed, "synth config: seed must be an integer");
    }
    cfg.seed = seed.get<std::uint64_t>();
  }
  const Json& video = jsonutil::require_object(doc, "video", "synth config");
  cfg.video.id = jsonutil::require_string(video, "id", "video");
  cfg.video.fps = jsonutil::require_number(video, "fps", "video");
  cfg.video.width = jsonutil::require_number(video, "width", "video");
  cfg.video.height = jsonutil::require_number(video, "height", "video");
  cfg.video.num_frames = static_cast<int>(jsonutil::require_int(video, "num_frames", "video"));

  auto parse_spans = [](const Json& arr, const char* what) {
    std::vector<LabelSpan> spans;
    for (const Json& sj : arr) {
      LabelSpan span;
      span.t_begin = static_cast<int>(jsonutil::require_int(sj, "t_begin", what));
      span.t_end = static_cast<int>(jsonutil::require_int(sj, "t_end", what));
      for (const Json& id : jsonutil::require_array(sj, "ids", what)) {
        if (!id.is_number_integer()) {
          throw RoadError(ErrorKind::malformed, std::string(what) + ": ids must be integers");
        }
        span.ids.push_back(id.get<int>());
      }
      spans.push_back(std::move(span));
    }
    return spans;
  };

  if (doc.contains("agents")) {
    if (!doc["agents"].is_array()) {
      throw RoadError(ErrorKind::malformed, "synth config: agents must be an array");
    }
    for (const Json& aj : doc["agents"]) {
      AgentSpec agent;
      agent.agent_id = static_cast<int>(jsonutil::require_int(aj, "agent_id", "agent"));
      agent.t_begin = static_cast<int>(jsonutil::require_int(aj, "t_begin", "agent"));
      agent.t_end = static_cast<int>(jsonutil::require_int(aj, "t_end", "agent"));
      const Json& box = jsonutil::require_array(aj, "box", "agent");
      if (box.size() != 4 ||
          !std::all_of(box.begin(), box.end(),
                       [](const Json& v) { return v.is_number(); })) {
        throw RoadError(ErrorKind::invalid_box, "agent: box must be [x1,y1,x2,y2]");
      }
      agent.start = {box[0].get<double>(), box[1].get<double>(),
                     box[2].get<double>(), box[3].get<double>()};
      agent.vx = jsonutil::require_number(aj, "vx", "agent");
      agent.vy = jsonutil::require_number(aj, "vy", "agent");
      agent.actions = parse_spans(jsonutil::require_array(aj, "actions", "agent"), "actions");
      agent.locs = parse_spans(jsonutil::require_array(aj, "locs", "agent"), "locs");
      cfg.agents.push_back(std::move(agent));
    }
  }
  if (doc.contains("random_agents")) {
    cfg.random_agents = static_cast<int>(
        jsonutil::require_int(doc["random_agents"], "count", "random_agents"));
  }
  if (doc.contains("noise")) {
    const Json& nj = doc["noise"];
    if (!nj.is_object()) {
      throw RoadError(ErrorKind::malformed, "synth config: noise must be an object");
    }
    auto opt = [&](const char* key, double fallback) {
      return nj.contains(key) ? jsonutil::require_number(nj, key, "noise") : fallback;
    };
    cfg.noise.jitter = opt("jitter", 0.0);
    cfg.noise.dropout = opt("dropout", 0.0);
    cfg.noise.distractor_rate = opt("distractor_rate", 0.0);
    cfg.noise.score_noise = opt("score_noise", 0.0);
  }
  cfg.validate();
  return cfg;
}

std::string serialize_synth_config(const SynthConfig& cfg) {
  using jsonutil::OrderedJson;
  OrderedJson doc;
  doc["version"] = "road-lite/1";
  doc["seed"] = cfg.seed;
  doc["video"] = {{"id", cfg.video.id},
                  {"fps", cfg.video.fps},
                  {"width", cfg.video.width},
                  {"height", cfg.video.height},
                  {"num_frames", cfg.video.num_frames}};
  if (!cfg.agents.empty()) {
    OrderedJson agents = OrderedJson::array();
    for (const AgentSpec& agent : cfg.agents) {
      OrderedJson aj;
      aj["agent_id"] = agent.agent_id;
      aj["t_begin"] = agent.t_begin;
      aj["t_end"] = agent.t_end;
      aj["box"] = {agent.start.x1, agent.start.y1, agent.start.x2, agent.start.y2};
      aj["vx"] = agent.vx;
      aj["vy"] = agent.vy;
      auto spans_json = [](const std::vector<LabelSpan>& spans) {
        OrderedJson arr = OrderedJson::array();
        for (const LabelSpan& span : spans) {
          arr.push_back({{"t_begin", span.t_begin},
                         {"t_end", span.t_end},
                         {"ids", span.ids}});
        }
        return arr;
      };
      aj["actions"] = spans_json(agent.actions);
      aj["locs"] = spans_json(agent.locs);
      agents.push_back(std::move(aj));
    }
    doc["agents"] = std::move(agents);
  }
  if (cfg.random_agents > 0) {
    doc["random_agents"] = {{"count", cfg.random_agents}};
  }
  doc["noise"] = {{"jitter", cfg.noise.jitter},
                  {"dropout", cfg.noise.dropout},
                  {"distractor_rate", cfg.noise.distractor_rate},
                  {"score_noise", cfg.noise.score_noise}};
  return doc.dump(2) + "\n";
}

}  // namespace roadtubes
