#ifndef ROADTUBES_SYNTH_HPP
#define ROADTUBES_SYNTH_HPP

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "roadtubes/detections.hpp"
#include "roadtubes/schema.hpp"

namespace roadtubes {

// mt19937_64 with the distribution transforms pinned here, so equal seeds
// give identical output on any standard library (std:: distributions are
// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // (x >> 11) * 2^-53, in [0, 1)
  double uniform01();
  double uniform(double lo, double hi);
  int uniform_int(int lo, int hi);  // inclusive bounds
  double normal(double mu, double sigma);  // Box-Muller with cached spare
  int poisson(double mean);                // inversion by sequential search
  bool bernoulli(double p);

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Label ids active over [t_begin, t_end] inclusive.
struct LabelSpan {
  int t_begin = 0;
  int t_end = 0;
  std::vector<int> ids;
};

struct AgentSpec {
  int agent_id = 0;
  int t_begin = 0;
  int t_end = 0;
  BBox start;       // box at t_begin
  double vx = 0.0;  // px per frame; positions clamped to the motion bounds
  double vy = 0.0;
  std::vector<LabelSpan> actions;  // must tile the lifespan
  std::vector<LabelSpan> locs;
};

struct NoiseConfig {
  double jitter = 0.0;           // per-corner sigma, px
  double dropout = 0.0;          // per-detection drop probability
  double distractor_rate = 0.0;  // Poisson mean per frame
  double score_noise = 0.0;      // additive sigma on every score

  void validate() const;
};

// Scene description. Random agents are laid out on a grid of disjoint
// cells, one per agent, so their boxes never overlap. Explicit agents are
// placed exactly as given; mixing them with random agents forfeits the
// no-overlap guarantee.
struct SynthConfig {
  std::uint64_t seed = 0;
  VideoMeta video;
  std::vector<AgentSpec> agents;
  int random_agents = 0;
  NoiseConfig noise;

  void validate() const;
};

SynthConfig parse_synth_config(std::string_view json_text);
std::string serialize_synth_config(const SynthConfig& cfg);

struct SynthOutput {
  AnnotationSet annotations;
  std::vector<FrameDetections> noiseless;
};

// Ground truth plus the matching noiseless detection stream: one line per
// frame, detections exactly on the GT boxes with agentness 1.0, one-hot
// agent vectors, multi-hot action/location vectors, one-hot AV scores.
// Identical configs give byte-identical serialized output.
SynthOutput synth_generate(const SynthConfig& cfg);

// Seeded corruption: dropout, corner jitter, score noise, Poisson-count
// distractor boxes. Boxes stay inside the image, scores inside [0, 1].
std::vector<FrameDetections> synth_perturb(
    const std::vector<FrameDetections>& stream, const NoiseConfig& noise,
    const VideoMeta& video, std::uint64_t seed);

}  // namespace roadtubes

#endif
