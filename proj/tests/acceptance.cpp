// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "pocketgen/metrics.hpp"
#include "pocketgen/rl_finetune.hpp"
#include "toy_fixture.hpp"

using namespace pocketgen;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report_line(const char* id, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

void guarded(const char* id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report_line(id, false, std::string("exception: ") + e.what());
  }
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const testutil::ToyCorpus& toy() {
  static const testutil::ToyCorpus t = testutil::load_toy();
  return t;
}

// tiny preset trained on the 8 toy complexes, no augmentation
struct Overfit {
  TrainState state;
  std::vector<double> ce;
};

const Overfit& overfit() {
  static const Overfit o = [] {
    Overfit r;
    r.state = make_train_state(testutil::tiny_config(toy()), 0);
    OptimConfig opt;
    opt.decay_steps = 5000;
    const Batch batch = make_batch(toy().records);
    for (int s = 0; s < 5000; ++s) r.ce.push_back(train_step(batch, r.state, {}, opt).ce);
    return r;
  }();
  return o;
}

void ac1() {
  const auto t0 = Clock::now();
  const auto& corpus = testutil::desk_corpus();
  std::size_t tok_ok = 0;
  for (const auto& s : corpus) tok_ok += smiles::detokenize(smiles::tokenize(s)) == s;

  std::vector<std::pair<ProteinPocket, LigandStruct>> pairs;
  Rng rng(1);
  for (const auto& s : corpus) {
    LigandStruct l{s, {}};
    for (std::size_t k = 0; k < smiles::count_atom_tokens(s); ++k)
      l.coords.push_back(Vec3{rng.normal(), rng.normal(), rng.normal()});
    pairs.emplace_back(toy().pockets[pairs.size() % toy().pockets.size()], l);
  }
  const Vocab vocab = build_vocab(pairs);
  const Vocab vocab_back = Vocab::from_text(vocab.to_text());
  std::size_t ser_ok = 0;
  for (const auto& [p, l] : pairs) {
    const HybridSequence rec = encode_complex(p, l, vocab);
    ser_ok += deserialize(serialize(rec, vocab), vocab_back) == rec;
  }
  const double secs = seconds_since(t0);
  const std::size_t n = corpus.size();
  report_line("AC1", n == 1000 && tok_ok == n && ser_ok == n && secs < 10.0,
              fmt("tokenize round trip %.0f/%.0f, serialize round trip %.0f/%.0f", tok_ok, n,
                  ser_ok, n) +
                  fmt(", %.2f s (limit 10 s)", secs));
}

void ac2() {
  const auto& corpus = testutil::desk_corpus();
  int ok = 0, total = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const auto g = smiles::parse(corpus[i]);
    const std::string ref = smiles::canonical_form(g);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto r = smiles::write_random_smiles(g, seed);
      ok += smiles::canonical_form(smiles::parse(r.smiles)) == ref;
      ++total;
    }
  }
  report_line("AC2", ok == total && total == 2000,
              fmt("canonical form invariant in %.0f/%.0f randomized SMILES", ok, total));
}

void ac3() {
  const auto s = build_schedule(100, 1e-4, 0.02);
  const Vec3 x0{1.0, -2.0, 0.5};
  double worst_mean = 0.0, worst_var = 0.0;
  for (int t : {1, s.T / 2, s.T}) {
    Rng rng(31 + t);
    const int n = 100000;
    double sum[3] = {0, 0, 0}, sum2[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
      const Vec3 x = add_noise(x0, t, rng.normal3(), s);
      for (int k = 0; k < 3; ++k) {
        sum[k] += x[k];
        sum2[k] += x[k] * x[k];
      }
    }
    const double ab = s.alpha_bar(t);
    for (int k = 0; k < 3; ++k) {
      const double mean = sum[k] / n;
      const double var = sum2[k] / n - mean * mean;
      worst_mean = std::max(worst_mean, std::abs(mean - std::sqrt(ab) * x0[k]) /
                                            std::abs(std::sqrt(ab) * x0[k]));
      worst_var = std::max(worst_var, std::abs(var - (1.0 - ab)) / (1.0 - ab));
    }
  }
  report_line("AC3", worst_mean < 0.02 && worst_var < 0.02,
              fmt("worst relative error over t in {1, 50, 100}: mean %.4f, variance %.4f "
                  "(limit 0.02)",
                  worst_mean, worst_var));
}

void ac4() {
  const auto t0 = Clock::now();
  const Batch batch = make_batch({toy().records[0], toy().records[1]});
  const TrainState st = make_train_state(testutil::tiny_config(toy()), 4);
  const auto joint = grad_check(batch, st, {});

  AgentPair pair = make_agent_pair(st.model);
  Rng prng(5);
  for (double& p : pair.agent.backbone.params()) p += 0.01 * prng.normal();
  const auto& x = toy().records[0];
  std::vector<double> analytic(pair.agent.backbone.num_params(), 0.0);
  rl_sample_loss(x, pair, 0.5, 10.0, analytic);
  const auto rl = finite_difference_check(
      pair.agent.backbone.params(), analytic,
      [&] { return rl_sample_loss(x, pair, 0.5, 10.0); }, GradCheckOptions{});
  const double secs = seconds_since(t0);
  report_line("AC4", joint.max_rel_error < 1e-4 && rl.max_rel_error < 1e-4 && secs < 120.0,
              fmt("joint %.3g over %.0f params, RL %.3g over %.0f params", joint.max_rel_error,
                  joint.checked, rl.max_rel_error, rl.checked) +
                  fmt(", %.1f s (limits 1e-4, 120 s)", secs));
}

void ac5() {
  const Model& m = overfit().state.model;
  const int C = m.cfg.backbone.d_model;
  double worst = 0.0;
  int positions = 0;
  for (const auto& rec : toy().records) {
    BackboneActivations a0;
    m.backbone.forward(rec.elements, a0);
    for (std::size_t j = 0; j < rec.size(); ++j) {
      auto s = rec.elements;
      if (is_discrete(s[j]))
        s[j] = Discrete{static_cast<TokenId>((token_of(s[j]) + 3) % toy().vocab.size())};
      else
        s[j] = Continuous{coord_of(s[j]) + Vec3{0.3, -0.2, 0.5}};
      BackboneActivations a1;
      m.backbone.forward(s, a1);
      for (std::size_t i = 0; i < j * C; ++i)
        worst = std::max(worst, std::abs(a1.hidden[i] - a0.hidden[i]));
      ++positions;
    }
  }

  int sampled = 0, boc_bad = 0, calls_bad = 0;
  SampleConfig sc;
  sc.seed = 55;
  for (std::size_t p = 0; p < toy().raw_pockets.size(); ++p) {
    sc.seed = derive_seed(55, p);
    for (const auto& g : batch_generate(toy().raw_pockets[p], 125, m, toy().vocab, sc)) {
      ++sampled;
      const auto& e = g.context.elements;
      std::size_t eos = 0, boc = 0, atoms = 0;
      for (std::size_t i = g.context.ligand_start; i < e.size(); ++i) {
        if (!is_discrete(e[i])) continue;
        const TokenId id = token_of(e[i]);
        if (id == special::kBoc) ++boc;
        if (eos == 0 && id == special::kEos) eos = i;
        if (eos == 0 && toy().vocab.is_smiles_atom(id)) ++atoms;
      }
      const bool boc_ok = boc == 1 && eos > 0 && token_of(e[eos + 1]) == special::kBoc;
      boc_bad += !boc_ok;
      calls_bad += static_cast<std::size_t>(g.diffusion_calls) != atoms ||
                   g.coords.size() != atoms;
    }
  }
  report_line("AC5", worst <= 1e-12 && sampled == 1000 && boc_bad == 0 && calls_bad == 0,
              fmt("max earlier-position change %.3g over %.0f perturbations; ", worst,
                  positions) +
                  fmt("%.0f ligands, BOC misplaced %.0f, call count mismatches %.0f", sampled,
                      boc_bad, calls_bad));
}

void ac6() {
  const auto& o = overfit();
  int first_below = -1;
  for (std::size_t i = 0; i < o.ce.size(); ++i)
    if (o.ce[i] < 0.05) {
      first_below = static_cast<int>(i) + 1;
      break;
    }
  const double final_ce = o.ce.back();

  SampleConfig greedy;
  greedy.temperature = 0.0;
  int reproduced = 0;
  double rmsd_sum = 0.0;
  int rmsd_n = 0;
  for (std::size_t k = 0; k < toy().records.size(); ++k) {
    const auto& rec = toy().records[k];
    HybridSequence prefix;
    prefix.elements.assign(rec.elements.begin(),
                           rec.elements.begin() + static_cast<long>(rec.ligand_start) + 1);
    prefix.ligand_start = rec.ligand_start;
    Rng rng(derive_seed(66, k));
    const auto g = sample_from_prefix(prefix, o.state.model, toy().vocab, greedy, rng);
    if (g.smiles != toy().ligands[k].smiles) continue;
    ++reproduced;
    // training frame, scaled units
    const double scale = o.state.model.cfg.coord_scale;
    double sq = 0.0;
    for (std::size_t a = 0; a < g.coords.size(); ++a) {
      const Vec3 d = (1.0 / scale) * (g.coords[a] - toy().ligands[k].coords[a]);
      sq += dot(d, d);
    }
    rmsd_sum += std::sqrt(sq / static_cast<double>(g.coords.size()));
    ++rmsd_n;
  }
  const double frac = static_cast<double>(reproduced) / toy().records.size();
  const double rmsd = rmsd_n ? rmsd_sum / rmsd_n : NAN;
  report_line("AC6", final_ce < 0.05 && frac >= 0.9,
              fmt("CE %.4f after 5000 steps (first below 0.05 at step %.0f), greedy "
                  "reproduces %.0f%% of SMILES; ",
                  final_ce, first_below, 100.0 * frac) +
                  fmt("mean coordinate RMSD %.3f scaled units (soft target 0.5, ", rmsd) +
                  (rmsd < 0.5 ? "met)" : "not met)"));
}

double mean_reward(const ProteinPocket& p, const Model& m, const RewardFn& r) {
  SampleConfig sc;
  sc.seed = 99;
  double s = 0.0;
  const auto gens = batch_generate(p, 512, m, toy().vocab, sc);
  for (const auto& g : gens)
    if (g.valid) s += r({smiles::parse(g.smiles), g.coords, p});
  return s / static_cast<double>(gens.size());
}

void ac7() {
  const Model& pre = overfit().state.model;
  const auto& pocket = toy().raw_pockets[0];
  const RewardFn reward = atom_count_reward("N", 5);
  const double base = mean_reward(pocket, pre, reward);

  AgentPair pair = make_agent_pair(pre);
  RLConfig cfg;  // mu 10, batch 16, lr 1e-3, temperature 1
  Rng rng(5);
  for (int s = 0; s < 200; ++s) rl_step(pocket, pair, toy().vocab, reward, cfg, rng);
  const double tuned = mean_reward(pocket, pair.agent, reward);
  const bool frozen = pair.prior == pre.backbone && pair.agent.head == pre.head;
  report_line("AC7", tuned >= 1.5 * base && frozen,
              fmt("mean N count %.3f -> %.3f (ratio %.2f, need 1.5); ", base, tuned,
                  tuned / base) +
                  (frozen ? "prior and diffusion head bit-identical" : "frozen parts changed"));
}

void ac8() {
  const auto& corpus = testutil::desk_corpus();
  int exact = 0, sets = 0;
  for (std::size_t n = 2; n <= 10; ++n)
    for (std::size_t start : {0ul, 100ul, 500ul}) {
      std::vector<smiles::MolGraph> mols;
      std::vector<Fingerprint> fps;
      for (std::size_t i = 0; i < n; ++i) {
        mols.push_back(smiles::parse(corpus[start + 13 * i]));
        fps.push_back(fingerprint(mols.back()));
      }
      // pair oracle on raw bits
      double sum = 0.0;
      int pairs = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          int inter = 0, uni = 0;
          for (int b = 0; b < fps[i].n_bits; ++b) {
            inter += fps[i].test(b) && fps[j].test(b);
            uni += fps[i].test(b) || fps[j].test(b);
          }
          sum += uni == 0 ? 0.0 : 1.0 - static_cast<double>(inter) / uni;
          ++pairs;
        }
      exact += internal_diversity(mols) == sum / pairs;
      ++sets;
    }
  auto props = [](double v, double q, double s) {
    return std::map<std::string, double>{{"vina_dock", v}, {"qed", q}, {"sa", s}};
  };
  const bool row1 = mpo_success(props(-9.37, 0.48, 0.75));
  const bool row2 = mpo_success(props(-7.6, 0.46, 0.73));
  report_line("AC8", exact == sets && row1 && !row2,
              fmt("diversity exact on %.0f/%.0f sets; gate (-9.37, 0.48, 0.75) -> ", exact,
                  sets) +
                  (row1 ? "true" : "false") + ", (-7.6, 0.46, 0.73) -> " +
                  (row2 ? "true" : "false"));
}

int sh(const std::string& cmd) {
  const int st = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

void ac9() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / "pocketgen_acceptance";
  fs::remove_all(root);
  const std::string bin = POCKETGEN_CLI;
  const std::string common = " -s data_dir=" + (testutil::data_dir() / "toy").string() +
                             " -s pocket=" + (testutil::data_dir() / "toy" / "cplx00.pdb").string() +
                             " -s steps=100 -s n_samples=10 --seed 2024";
  std::string manifests[2];
  int rc = 0;
  for (int r = 0; r < 2; ++r) {
    const fs::path dir = root / ("run" + std::to_string(r));
    for (const char* cmd : {"prep", "pretrain", "sample"})
      rc |= sh(bin + " " + cmd + " -q -o " + dir.string() + common);
    manifests[r] = testutil::read_text(dir / "samples" / "manifest.jsonl");
  }
  const bool same = !manifests[0].empty() && manifests[0] == manifests[1];
  std::size_t lines = 0;
  for (char c : manifests[0]) lines += c == '\n';
  report_line("AC9", rc == 0 && same && lines == 10,
              std::string(rc == 0 ? "all commands exit 0" : "a command failed") +
                  fmt(", %.0f manifest lines, manifests ", lines) +
                  (same ? "identical" : "differ") + fmt(" (%.1f s)", seconds_since(t0)));
}

}  // namespace

int main() {
  guarded("AC1", ac1);
  guarded("AC2", ac2);
  guarded("AC3", ac3);
  guarded("AC4", ac4);
  guarded("AC5", ac5);
  guarded("AC6", ac6);
  guarded("AC7", ac7);
  guarded("AC8", ac8);
  guarded("AC9", ac9);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
