#ifndef POCKETGEN_MODEL_HPP_
#define POCKETGEN_MODEL_HPP_

#include <cstdint>
#include <string_view>

#include "pocketgen/backbone.hpp"
#include "pocketgen/diffusion.hpp"
#include "pocketgen/hybrid_seq.hpp"

namespace pocketgen {

struct ScheduleConfig {
  int T = 100;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  bool operator==(const ScheduleConfig&) const = default;
};

struct ModelConfig {
  BackboneConfig backbone;
  DiffusionConfig diffusion;
  ScheduleConfig schedule;
  double coord_scale = kDefaultCoordScale;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Named size presets:
//   desk  d_model 128, 4 layers, 4 heads, d_ff 512, d_t 64, hidden 256, T 100
//   toy   d_model 32, 2 layers, 2 heads, d_ff 128, d_t 16, hidden 64, T 50
//   tiny  d_model 16, 1 layer, 2 heads, d_ff 32, d_t 8, hidden 16, T 5
ModelConfig model_preset(std::string_view name, int vocab_size);

struct Model {
  ModelConfig cfg;
  Backbone backbone;
  DiffusionHead head;
  NoiseSchedule sched;

  Model() = default;
  explicit Model(const ModelConfig& cfg);
  // Backbone and head get separate derived streams of `seed`.
  void init(std::uint64_t seed);
};

}  // namespace pocketgen

#endif  // POCKETGEN_MODEL_HPP_
