#include "pocketgen/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pocketgen/parallel.hpp"
#include "pocketgen/smiles.hpp"

namespace pocketgen {

void SampleConfig::validate() const {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (top_k < 0) throw ConfigError("top_k must be >= 0");
  if (max_smiles_tokens < 1) throw ConfigError("max_smiles_tokens must be >= 1");
}

std::vector<bool> sampling_mask(const Vocab& vocab) {
  std::vector<bool> allowed(vocab.size(), false);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    switch (vocab.kind(id)) {
      case VocabKind::SmilesAtom:
      case VocabKind::SmilesRing:
      case VocabKind::SmilesSymbol:
        allowed[i] = true;
        break;
      case VocabKind::Special:
        allowed[i] = id == special::kEos;
        break;
      case VocabKind::Pocket:
        break;
    }
  }
  return allowed;
}

namespace {

std::vector<double> last_logits(std::span<const HybridElement> context,
                                const Backbone& backbone, BackboneActivations& acts) {
  const int C = backbone.config().d_model;
  backbone.forward(context, acts);
  std::vector<double> logits(backbone.config().vocab_size);
  backbone.token_logits(acts.hidden_row(static_cast<int>(context.size()) - 1, C), logits, 1);
  return logits;
}

double log_softmax_at(std::span<const double> logits, int id) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double se = 0.0;
  for (double l : logits) se += std::exp(l - mx);
  return logits[id] - mx - std::log(se);
}

TokenId choose(std::span<const double> logits, const std::vector<bool>& allowed,
               const SampleConfig& cfg, Rng& rng) {
  std::vector<int> ids;
  for (std::size_t i = 0; i < allowed.size(); ++i)
    if (allowed[i]) ids.push_back(static_cast<int>(i));
  // stable sort keeps lower ids first among equal logits
  std::stable_sort(ids.begin(), ids.end(),
                   [&](int a, int b) { return logits[a] > logits[b]; });
  if (cfg.temperature == 0.0 || cfg.top_k == 1) return ids.front();
  if (cfg.top_k > 0 && static_cast<std::size_t>(cfg.top_k) < ids.size())
    ids.resize(cfg.top_k);
  std::sort(ids.begin(), ids.end());
  double mx = -INFINITY;
  for (int i : ids) mx = std::max(mx, logits[i] / cfg.temperature);
  std::vector<double> w;
  double sum = 0.0;
  for (int i : ids) {
    w.push_back(std::exp(logits[i] / cfg.temperature - mx));
    sum += w.back();
  }
  double u = rng.uniform() * sum;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    u -= w[k];
    if (u < 0.0) return ids[k];
  }
  return ids.back();
}

}  // namespace

TokenSample sample_tokens(std::vector<HybridElement>& context, const Backbone& backbone,
                          const Vocab& vocab, const SampleConfig& cfg, Rng& rng) {
  const auto allowed = sampling_mask(vocab);
  const std::size_t max_pos = static_cast<std::size_t>(backbone.config().max_positions);
  BackboneActivations acts;
  TokenSample out;
  std::size_t atoms = 0;
  for (int n = 0;; ++n) {
    const auto logits = last_logits(context, backbone, acts);
    // another atom still needs EOS, BOC, its coordinate and EOC to fit
    const bool no_room = context.size() + atoms + 5 > max_pos;
    TokenId tok;
    if (n == cfg.max_smiles_tokens || no_room) {
      tok = special::kEos;
      out.length_exceeded = true;
    } else {
      tok = choose(logits, allowed, cfg, rng);
    }
    out.log_prob += log_softmax_at(logits, tok);
    out.tokens.push_back(tok);
    context.push_back(Discrete{tok});
    if (vocab.is_smiles_atom(tok)) ++atoms;
    if (tok == special::kEos) break;
  }
  return out;
}

GeneratedLigand sample_from_prefix(const HybridSequence& prefix, const Model& model,
                                   const Vocab& vocab, const SampleConfig& cfg, Rng& rng,
                                   const Vec3& center) {
  GeneratedLigand g;
  std::vector<HybridElement> ctx = prefix.elements;
  const TokenSample ts = sample_tokens(ctx, model.backbone, vocab, cfg, rng);
  g.token_log_prob = ts.log_prob;
  g.length_exceeded = ts.length_exceeded;

  std::vector<smiles::Token> toks;
  for (TokenId id : ts.tokens) {
    if (id == special::kEos) continue;
    const VocabKind k = vocab.kind(id);
    toks.push_back({vocab.token(id), k == VocabKind::SmilesAtom   ? smiles::TokenKind::Atom
                                     : k == VocabKind::SmilesRing ? smiles::TokenKind::RingDigit
                                                                  : smiles::TokenKind::Symbol});
  }
  g.smiles = smiles::detokenize(toks);
  try {
    smiles::parse(g.smiles);
    g.valid = true;
  } catch (const smiles::SmilesError&) {
    g.valid = false;
  }

  ctx.push_back(Discrete{special::kBoc});
  const int C = model.cfg.backbone.d_model;
  BackboneActivations acts;
  for (TokenId id : ts.tokens) {
    if (!vocab.is_smiles_atom(id)) continue;
    model.backbone.forward(ctx, acts);
    const auto z = acts.hidden_row(static_cast<int>(ctx.size()) - 1, C);
    const Vec3 x = sample_coord(z, model.sched, model.head, rng);
    ++g.diffusion_calls;
    ctx.push_back(Continuous{x});
    g.coords.push_back(model.cfg.coord_scale * x + center);
  }
  ctx.push_back(Discrete{special::kEoc});

  g.context.elements = std::move(ctx);
  recompute_layout(g.context, vocab);
  return g;
}

GeneratedLigand sample_ligand(const ProteinPocket& pocket, const Model& model,
                              const Vocab& vocab, const SampleConfig& cfg, Rng& rng) {
  const auto coords = pocket.coords();
  const Vec3 center = centroid(coords);
  ProteinPocket shifted = pocket;
  for (auto& a : shifted.atoms) a.coord = a.coord - center;
  const HybridSequence prefix =
      encode_pocket_prefix(shifted, vocab, model.cfg.coord_scale);
  return sample_from_prefix(prefix, model, vocab, cfg, rng, center);
}

std::vector<GeneratedLigand> batch_generate(const ProteinPocket& pocket, int n,
                                            const Model& model, const Vocab& vocab,
                                            const SampleConfig& cfg) {
  if (n < 1) throw ConfigError("batch_generate needs n >= 1");
  std::vector<GeneratedLigand> out(n);
  parallel_for(n, [&](int i) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    out[i] = sample_ligand(pocket, model, vocab, cfg, rng);
  });
  return out;
}

GeneratedLigand sample_with_retry(const ProteinPocket& pocket, const Model& model,
                                  const Vocab& vocab, const SampleConfig& cfg,
                                  int attempts) {
  GeneratedLigand g;
  for (int i = 0; i < std::max(attempts, 1); ++i) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    g = sample_ligand(pocket, model, vocab, cfg, rng);
    if (g.valid) break;
  }
  return g;
}

}  // namespace pocketgen
