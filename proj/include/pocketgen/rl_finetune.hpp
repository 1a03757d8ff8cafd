#ifndef POCKETGEN_RL_FINETUNE_HPP_
#define POCKETGEN_RL_FINETUNE_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pocketgen/sampler.hpp"
#include "pocketgen/smiles.hpp"
#include "pocketgen/trainer.hpp"

namespace pocketgen {

struct RewardInput {
  const smiles::MolGraph& graph;
  std::span<const Vec3> coords;  // Angstrom, same frame as the pocket
  const ProteinPocket& pocket;
};

using RewardFn = std::function<double(const RewardInput&)>;

class UnknownReward : public ConfigError {
 public:
  explicit UnknownReward(const std::string& name)
      : ConfigError("UnknownReward: '" + name + "'") {}
};

// Number of atoms of `element` (aromatic or not), capped. Range [0, cap].
RewardFn atom_count_reward(std::string element, int cap);
// Negative mean distance (Angstrom) from ligand atoms to the pocket
// centroid. Range (-inf, 0].
RewardFn centroid_proximity_reward();
// Always c.
RewardFn constant_reward(double c);

struct RewardSpec {
  std::string name = "atom_count";  // atom_count | centroid_proximity | constant
  std::string element = "N";
  int cap = 5;
  double value = 0.0;
};

RewardFn make_reward(const RewardSpec& spec);
std::vector<std::string> builtin_reward_names();

struct RLConfig {
  double mu = 10.0;
  int batch_size = 16;
  int steps = 200;
  double temperature = 1.0;
  int max_smiles_tokens = 128;
  OptimConfig optim{.lr = 1e-3};  // constant unless decay_steps is set
  void validate() const;
};

// agent.backbone is trained; prior and agent.head stay fixed.
struct AgentPair {
  Model agent;
  Backbone prior;
  AdamMoments moments;
  std::int64_t step = 0;
};

AgentPair make_agent_pair(const Model& pretrained);

// Sum of log-softmax probabilities of context[i + 1] for i from ligand_start
// up to the position before the first EOS after it. With non-empty `grads`,
// grad_scale * d(log p)/d(params) is accumulated.
double sequence_log_prob(const Backbone& backbone, std::span<const HybridElement> context,
                         std::size_t ligand_start, std::span<double> grads = {},
                         double grad_scale = 1.0);

// (log_prior + mu * reward - log_agent)^2
double rl_loss(double log_prior, double mu, double reward, double log_agent);

// Loss of one sampled record under the pair; the agent gradient of the loss,
// times grad_scale, is accumulated into `grads` when non-empty.
double rl_sample_loss(const HybridSequence& context, const AgentPair& pair, double reward,
                      double mu, std::span<double> grads = {}, double grad_scale = 1.0);

struct RLStepMetrics {
  std::int64_t step = 0;
  double mean_reward = 0.0;
  double valid_frac = 0.0;
  double mean_loss = 0.0;
  // mean of log p_agent - log p_prior over the sampled batch
  double mean_log_ratio = 0.0;
  bool skipped = false;
};

// Samples cfg.batch_size ligands with the agent (invalid ones score 0),
// averages the loss and takes one AdamW step on the agent backbone. A batch
// with no valid ligand is skipped without an update.
RLStepMetrics rl_step(const ProteinPocket& pocket, AgentPair& pair, const Vocab& vocab,
                      const RewardFn& reward, const RLConfig& cfg, Rng& rng);

}  // namespace pocketgen

#endif  // POCKETGEN_RL_FINETUNE_HPP_
