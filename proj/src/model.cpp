#include "pocketgen/model.hpp"

#include <string>

#include "pocketgen/rng.hpp"

namespace pocketgen {

void ModelConfig::validate() const {
  backbone.validate();
  diffusion.validate();
  if (diffusion.d_model != backbone.d_model)
    throw ConfigError("diffusion d_model must match the backbone");
  if (!(coord_scale > 0.0)) throw ConfigError("coord_scale must be positive");
  build_schedule(schedule.T, schedule.beta_start, schedule.beta_end);
}

ModelConfig model_preset(std::string_view name, int vocab_size) {
  ModelConfig c;
  c.backbone.vocab_size = vocab_size;
  if (name == "desk") {
    // defaults
  } else if (name == "toy") {
    c.backbone = {32, 2, 2, 128, 256, vocab_size};
    c.diffusion = {16, 64, 32};
    c.schedule.T = 50;
  } else if (name == "tiny") {
    c.backbone = {16, 1, 2, 32, 128, vocab_size};
    c.diffusion = {8, 16, 16};
    c.schedule.T = 5;
  } else {
    throw ConfigError("unknown model preset '" + std::string(name) + "'");
  }
  return c;
}

Model::Model(const ModelConfig& c)
    : cfg(c),
      backbone(c.backbone),
      head(c.diffusion),
      sched(build_schedule(c.schedule.T, c.schedule.beta_start, c.schedule.beta_end)) {
  cfg.validate();
}

void Model::init(std::uint64_t seed) {
  backbone.init(derive_seed(seed, 0x6262));
  head.init(derive_seed(seed, 0x6466));
}

}  // namespace pocketgen
