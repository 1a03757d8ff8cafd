#include "pocketgen/rl_finetune.hpp"

#include "pocketgen/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace pocketgen {

RewardFn atom_count_reward(std::string element, int cap) {
  return [element = std::move(element), cap](const RewardInput& in) {
    int n = 0;
    for (const auto& a : in.graph.atoms)
      if (a.element == element) ++n;
    return static_cast<double>(std::min(n, cap));
  };
}

RewardFn centroid_proximity_reward() {
  return [](const RewardInput& in) {
    if (in.coords.empty()) return 0.0;
    const Vec3 c = centroid(in.pocket.coords());
    double sum = 0.0;
    for (const auto& x : in.coords) sum += distance(x, c);
    return -sum / static_cast<double>(in.coords.size());
  };
}

RewardFn constant_reward(double c) {
  return [c](const RewardInput&) { return c; };
}

std::vector<std::string> builtin_reward_names() {
  return {"atom_count", "centroid_proximity", "constant"};
}

RewardFn make_reward(const RewardSpec& spec) {
  if (spec.name == "atom_count") {
    if (spec.cap < 0) throw ConfigError("atom_count cap must be >= 0");
    return atom_count_reward(spec.element, spec.cap);
  }
  if (spec.name == "centroid_proximity") return centroid_proximity_reward();
  if (spec.name == "constant") return constant_reward(spec.value);
  throw UnknownReward(spec.name);
}

void RLConfig::validate() const {
  if (!(mu >= 0.0)) throw ConfigError("mu must be nonnegative");
  if (batch_size < 1) throw ConfigError("rl batch_size must be >= 1");
  if (steps < 0) throw ConfigError("rl steps must be >= 0");
  if (!(temperature >= 0.0)) throw ConfigError("rl temperature must be >= 0");
  optim.validate();
}

AgentPair make_agent_pair(const Model& pretrained) {
  AgentPair p;
  p.agent = pretrained;
  p.prior = pretrained.backbone;
  p.moments.reset(pretrained.backbone.num_params());
  return p;
}

double sequence_log_prob(const Backbone& backbone, std::span<const HybridElement> context,
                         std::size_t ligand_start, std::span<double> grads,
                         double grad_scale) {
  std::size_t end = ligand_start + 1;
  while (end < context.size() &&
         !(is_discrete(context[end]) && token_of(context[end]) == special::kEos))
    ++end;
  if (end >= context.size()) throw DataError("sequence_log_prob: no EOS after BOS");
  const auto seq = context.first(end + 1);

  const int C = backbone.config().d_model;
  const int V = backbone.config().vocab_size;
  const int M = static_cast<int>(end - ligand_start);
  BackboneActivations acts;
  backbone.forward(seq, acts);
  std::vector<double> z(static_cast<std::size_t>(M) * C);
  for (int r = 0; r < M; ++r) {
    const auto row = acts.hidden_row(static_cast<int>(ligand_start) + r, C);
    std::copy(row.begin(), row.end(), z.begin() + static_cast<std::ptrdiff_t>(r) * C);
  }
  std::vector<double> logits(static_cast<std::size_t>(M) * V);
  backbone.token_logits(z, logits, M);

  double lp = 0.0;
  std::vector<double> dlogits(grads.empty() ? 0 : logits.size());
  for (int r = 0; r < M; ++r) {
    const double* lg = logits.data() + static_cast<std::size_t>(r) * V;
    const int y = token_of(seq[ligand_start + r + 1]);
    const double mx = *std::max_element(lg, lg + V);
    double se = 0.0;
    for (int v = 0; v < V; ++v) se += std::exp(lg[v] - mx);
    const double lse = mx + std::log(se);
    lp += lg[y] - lse;
    if (!grads.empty()) {
      double* dl = dlogits.data() + static_cast<std::size_t>(r) * V;
      for (int v = 0; v < V; ++v)
        dl[v] = grad_scale * ((v == y ? 1.0 : 0.0) - std::exp(lg[v] - lse));
    }
  }
  if (grads.empty()) return lp;

  std::vector<double> dz(z.size(), 0.0);
  backbone.token_logits_backward(dlogits, z, dz, grads, M);
  std::vector<double> dhidden(seq.size() * C, 0.0);
  std::copy(dz.begin(), dz.end(),
            dhidden.begin() + static_cast<std::ptrdiff_t>(ligand_start) * C);
  backbone.backward(seq, acts, dhidden, grads);
  return lp;
}

double rl_loss(double log_prior, double mu, double reward, double log_agent) {
  const double r = log_prior + mu * reward - log_agent;
  return r * r;
}

double rl_sample_loss(const HybridSequence& context, const AgentPair& pair, double reward,
                      double mu, std::span<double> grads, double grad_scale) {
  const double lp0 = sequence_log_prob(pair.prior, context.elements, context.ligand_start);
  const double lp = sequence_log_prob(pair.agent.backbone, context.elements,
                                      context.ligand_start);
  const double r = lp0 + mu * reward - lp;
  if (!grads.empty())
    sequence_log_prob(pair.agent.backbone, context.elements, context.ligand_start, grads,
                      -2.0 * r * grad_scale);
  return r * r;
}

RLStepMetrics rl_step(const ProteinPocket& pocket, AgentPair& pair, const Vocab& vocab,
                      const RewardFn& reward, const RLConfig& cfg, Rng& rng) {
  const int B = cfg.batch_size;
  SampleConfig sc;
  sc.temperature = cfg.temperature;
  sc.max_smiles_tokens = cfg.max_smiles_tokens;

  std::vector<std::uint64_t> seeds(B);
  for (auto& s : seeds) s = rng.next_u64();
  std::vector<GeneratedLigand> samples(B);
  parallel_for(B, [&](int i) {
    Rng r(seeds[i]);
    samples[i] = sample_ligand(pocket, pair.agent, vocab, sc, r);
  });

  RLStepMetrics m;
  m.step = pair.step;
  std::vector<double> rewards(B, 0.0);
  int n_valid = 0;
  for (int i = 0; i < B; ++i) {
    if (!samples[i].valid) continue;
    ++n_valid;
    const auto graph = smiles::parse(samples[i].smiles);
    rewards[i] = reward({graph, samples[i].coords, pocket});
    m.mean_reward += rewards[i];
  }
  m.mean_reward /= B;
  m.valid_frac = static_cast<double>(n_valid) / B;
  if (n_valid == 0) {
    m.skipped = true;
    return m;
  }

  std::vector<double> grads(pair.agent.backbone.num_params(), 0.0);
  for (int i = 0; i < B; ++i) {
    const auto& ctx = samples[i].context;
    const double lp0 = sequence_log_prob(pair.prior, ctx.elements, ctx.ligand_start);
    const double lp = sequence_log_prob(pair.agent.backbone, ctx.elements, ctx.ligand_start);
    const double r = lp0 + cfg.mu * rewards[i] - lp;
    // d(r^2)/d(theta) = -2 r d(lp)/d(theta), averaged over the batch
    sequence_log_prob(pair.agent.backbone, ctx.elements, ctx.ligand_start, grads,
                      -2.0 * r / B);
    m.mean_loss += r * r / B;
    m.mean_log_ratio += (lp - lp0) / B;
  }
  if (!std::isfinite(m.mean_loss)) throw NumericError("NonFiniteLoss in rl_step");

  const double lr = learning_rate(cfg.optim, pair.step);
  adam_update(pair.agent.backbone.params(), grads, pair.moments, pair.step + 1, lr,
              cfg.optim);
  ++pair.step;
  m.step = pair.step;
  return m;
}

}  // namespace pocketgen
