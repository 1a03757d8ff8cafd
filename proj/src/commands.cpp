#include "pocketgen/commands.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pocketgen/checkpoint.hpp"
#include "pocketgen/parallel.hpp"
#include "pocketgen/struct_io.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace pocketgen {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw DataError("cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + p.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw DataError("failed writing " + p.string());
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto end = std::min(s.find(sep, start), s.size());
    if (end > start) out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

void apply_threads(const RunConfig& cfg) {
#if defined(_OPENMP)
  if (cfg.get_int("threads") > 0) omp_set_num_threads(static_cast<int>(cfg.get_int("threads")));
#else
  (void)cfg;
#endif
}

fs::path vocab_path(const RunConfig& c) { return c.path_or("vocab", "vocab.txt"); }
fs::path records_path(const RunConfig& c) { return c.path_or("records", "records.hyb"); }
fs::path checkpoint_path(const RunConfig& c) { return c.path_or("checkpoint", "model.ckpt"); }
fs::path sample_dir(const RunConfig& c) { return c.path_or("sample_dir", "samples"); }

Vocab load_vocab(const RunConfig& cfg) {
  const fs::path p = vocab_path(cfg);
  if (!fs::exists(p)) throw DataError("vocab file does not exist: " + p.string());
  return Vocab::from_text(read_file(p));
}

std::vector<HybridSequence> load_records(const RunConfig& cfg, const Vocab& vocab) {
  const fs::path p = records_path(cfg);
  if (!fs::exists(p)) throw DataError("records file does not exist: " + p.string());
  std::vector<HybridSequence> out;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(deserialize(line, vocab));
  }
  if (out.empty()) throw DataError("no records in " + p.string());
  return out;
}

TrainState load_state(const fs::path& p) {
  if (!fs::exists(p)) throw DataError("checkpoint does not exist: " + p.string());
  return load_checkpoint(p);
}

ProteinPocket load_pocket(const RunConfig& cfg) {
  const fs::path p = cfg.existing_path("pocket");
  return parse_pocket_pdb(read_file(p), p.stem().string());
}

void check_vocab(const TrainState& s, const Vocab& vocab) {
  if (static_cast<std::size_t>(s.model.cfg.backbone.vocab_size) != vocab.size())
    throw ConfigError("checkpoint vocab size " +
                      std::to_string(s.model.cfg.backbone.vocab_size) +
                      " does not match vocab file (" + std::to_string(vocab.size()) + ")");
}

std::string index_name(std::size_t i, std::size_t n) {
  std::string digits = std::to_string(i);
  const std::size_t width = std::max<std::size_t>(3, std::to_string(n ? n - 1 : 0).size());
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return digits;
}

}  // namespace

void cmd_prep(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = cfg.existing_path("data_dir");
  const double scale = cfg.get_double("coord_scale");
  const auto max_len = static_cast<std::size_t>(cfg.get_int("max_len"));

  std::vector<fs::path> pdbs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pdb") pdbs.push_back(e.path());
  std::sort(pdbs.begin(), pdbs.end());
  if (pdbs.empty()) throw DataError("no .pdb files in " + dir.string());

  std::vector<std::pair<ProteinPocket, LigandStruct>> candidates;
  std::vector<std::string> names;
  std::size_t dropped_rare = 0;
  for (const auto& pdb : pdbs) {
    fs::path lig = pdb;
    lig.replace_extension(".lig");
    if (!fs::exists(lig)) throw DataError("missing ligand file " + lig.string());
    ProteinPocket pocket = parse_pocket_pdb(read_file(pdb), pdb.stem().string());
    LigandStruct ligand;
    try {
      ligand = parse_ligand_record(read_file(lig));
      smiles::parse(ligand.smiles);
    } catch (const DataError& e) {
      throw DataError(lig.string() + ": " + e.what());
    }
    if (!filter_rare_elements(ligand)) {
      ++dropped_rare;
      continue;
    }
    const auto moved = center_and_rotate(pocket.coords(), ligand.coords, 0, false);
    for (std::size_t i = 0; i < pocket.atoms.size(); ++i)
      pocket.atoms[i].coord = moved.pocket[i];
    ligand.coords = moved.ligand;
    candidates.emplace_back(std::move(pocket), std::move(ligand));
    names.push_back(pdb.stem().string());
  }

  // record length does not depend on the vocabulary, so filter first
  std::vector<std::pair<ProteinPocket, LigandStruct>> kept;
  std::vector<std::string> kept_names;
  std::size_t dropped_long = 0;
  const Vocab all = build_vocab(candidates);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto seq = encode_complex(candidates[i].first, candidates[i].second, all, scale);
    if (seq.size() > max_len) {
      ++dropped_long;
      continue;
    }
    kept.push_back(candidates[i]);
    kept_names.push_back(names[i]);
  }
  if (kept.empty()) throw DataError("prep kept no records");

  const Vocab vocab = build_vocab(kept);
  std::string records;
  for (const auto& [pocket, ligand] : kept)
    records += serialize(encode_complex(pocket, ligand, vocab, scale), vocab) + "\n";

  write_file(records_path(cfg), records);
  write_file(vocab_path(cfg), vocab.to_text());
  ojson summary = {{"kept", kept.size()},
                   {"dropped_rare", dropped_rare},
                   {"dropped_long", dropped_long},
                   {"vocab_size", vocab.size()},
                   {"coord_scale", scale},
                   {"names", kept_names}};
  write_file(cfg.out_dir() / "prep.json", summary.dump(2) + "\n");
  summary.erase("names");
  out << summary.dump() << "\n";
  spdlog::info("prep: kept {} dropped_rare {} dropped_long {}", kept.size(), dropped_rare,
               dropped_long);
}

void cmd_pretrain(const RunConfig& cfg, std::ostream& out) {
  apply_threads(cfg);
  const Vocab vocab = load_vocab(cfg);
  const auto records = load_records(cfg, vocab);
  const ModelConfig mcfg = cfg.model_config(static_cast<int>(vocab.size()));
  const JointLossConfig loss_cfg = cfg.loss_config();
  const OptimConfig opt = cfg.optim_config();
  const AugmentConfig aug = cfg.augment_config();
  const auto steps = cfg.get_int("steps");
  const auto batch_size = static_cast<std::size_t>(cfg.get_int("batch_size"));
  const auto max_len = static_cast<std::size_t>(cfg.get_int("max_len"));
  const auto ckpt_every = cfg.get_int("checkpoint_every");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (steps < 0) throw ConfigError("steps must be >= 0");

  std::vector<std::pair<ProteinPocket, LigandStruct>> corpus;
  for (const auto& r : records) {
    auto pair = decode_complex(r, vocab, mcfg.coord_scale);
    if (cfg.get_bool("ligand_only")) pair.first.atoms.clear();
    corpus.push_back(std::move(pair));
  }

  const fs::path ckpt = checkpoint_path(cfg);
  TrainState state;
  if (cfg.get_bool("resume")) {
    state = load_state(ckpt);
    check_vocab(state, vocab);
    if (!(state.model.cfg == mcfg))
      throw ConfigError("resume: checkpoint model config differs from the run config");
  } else {
    state = make_train_state(mcfg, cfg.seed());
  }

  const fs::path log_path = cfg.out_dir() / "train_log.jsonl";
  fs::create_directories(cfg.out_dir());
  std::ofstream log(log_path, state.step > 0 ? std::ios::app : std::ios::trunc);
  if (!log) throw DataError("cannot write " + log_path.string());

  const std::size_t n = corpus.size();
  std::vector<std::size_t> perm;
  std::int64_t perm_epoch = -1;
  StepMetrics last;
  while (state.step < steps) {
    const std::int64_t s = state.step;
    std::vector<HybridSequence> seqs;
    for (std::size_t k = 0; k < batch_size; ++k) {
      const std::uint64_t g = static_cast<std::uint64_t>(s) * batch_size + k;
      const auto epoch = static_cast<std::int64_t>(g / n);
      if (epoch != perm_epoch) {
        perm.resize(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        Rng prng(derive_seed(cfg.seed(), 0x70657270, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[prng.uniform_int(i)]);
        perm_epoch = epoch;
      }
      const auto& [pocket, ligand] = corpus[perm[g % n]];
      AugmentConfig a = aug;
      a.seed = derive_seed(cfg.seed(), static_cast<std::uint64_t>(s), k);
      seqs.push_back(augment_record(pocket, ligand, vocab, a));
    }
    const Batch batch = make_batch(std::move(seqs), max_len);
    last = train_step(batch, state, loss_cfg, opt);
    ojson line = {{"step", last.step}, {"ce", last.ce},     {"diff", last.diff},
                  {"total", last.total}, {"grad_norm", last.grad_norm}};
    log << line.dump() << "\n";
    if (ckpt_every > 0 && state.step % ckpt_every == 0) save_checkpoint(state, ckpt);
    if (state.step % 100 == 0 || state.step == steps)
      spdlog::info("pretrain step {} ce {:.4f} diff {:.4f}", state.step, last.ce, last.diff);
  }
  save_checkpoint(state, ckpt);
  ojson summary = {{"step", state.step}, {"ce", last.ce}, {"diff", last.diff},
                   {"total", last.total}, {"checkpoint", ckpt.string()}};
  out << summary.dump() << "\n";
}

void cmd_finetune(const RunConfig& cfg, std::ostream& out) {
  apply_threads(cfg);
  const Vocab vocab = load_vocab(cfg);
  const TrainState pre = load_state(checkpoint_path(cfg));
  check_vocab(pre, vocab);
  const ProteinPocket pocket = load_pocket(cfg);
  RLConfig rl = cfg.rl_config();
  const RewardFn reward = make_reward(cfg.reward_spec());

  AgentPair pair = make_agent_pair(pre.model);
  Rng rng(derive_seed(cfg.seed(), 0x524c));
  const fs::path log_path = cfg.out_dir() / "rl_log.jsonl";
  fs::create_directories(cfg.out_dir());
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw DataError("cannot write " + log_path.string());

  RLStepMetrics m;
  for (int i = 0; i < rl.steps; ++i) {
    m = rl_step(pocket, pair, vocab, reward, rl, rng);
    ojson line = {{"step", i + 1},
                  {"mean_reward", m.mean_reward},
                  {"valid_frac", m.valid_frac},
                  {"loss", m.mean_loss}};
    if (m.skipped) {
      line["skipped"] = true;
      spdlog::warn("finetune step {}: AllInvalidBatch, update skipped", i + 1);
    }
    log << line.dump() << "\n";
  }

  TrainState agent;
  agent.model = pair.agent;
  agent.backbone_moments = pair.moments;
  agent.head_moments.reset(pair.agent.head.num_params());
  agent.step = pair.step;
  agent.rng = rng;
  agent.freeze_head = true;
  const fs::path agent_path = cfg.path_or("agent_checkpoint", "agent.ckpt");
  save_checkpoint(agent, agent_path);
  ojson summary = {{"steps", rl.steps},
                   {"updates", pair.step},
                   {"mean_reward", m.mean_reward},
                   {"valid_frac", m.valid_frac},
                   {"loss", m.mean_loss},
                   {"checkpoint", agent_path.string()}};
  out << summary.dump() << "\n";
}

void cmd_sample(const RunConfig& cfg, std::ostream& out) {
  apply_threads(cfg);
  const Vocab vocab = load_vocab(cfg);
  const fs::path ckpt = cfg.get_string("sample_checkpoint").empty()
                            ? checkpoint_path(cfg)
                            : fs::path(cfg.get_string("sample_checkpoint"));
  const TrainState state = load_state(ckpt);
  check_vocab(state, vocab);
  const ProteinPocket pocket = load_pocket(cfg);
  const SampleConfig sc = cfg.sample_config();
  const auto n = cfg.get_int("n_samples");
  const auto retries = cfg.get_int("retries");
  if (n < 1) throw ConfigError("n_samples must be >= 1");

  std::vector<GeneratedLigand> ligs;
  if (retries > 0) {
    ligs.resize(n);
    parallel_for(static_cast<int>(n), [&](int i) {
      SampleConfig per = sc;
      per.seed = derive_seed(sc.seed, static_cast<std::uint64_t>(i));
      ligs[i] = sample_with_retry(pocket, state.model, vocab, per,
                                  static_cast<int>(retries) + 1);
    });
  } else {
    ligs = batch_generate(pocket, static_cast<int>(n), state.model, vocab, sc);
  }

  const fs::path dir = sample_dir(cfg);
  fs::create_directories(dir);
  std::string manifest;
  std::size_t n_valid = 0;
  for (std::size_t i = 0; i < ligs.size(); ++i) {
    const auto& g = ligs[i];
    std::string text;
    if (g.valid) {
      ++n_valid;
      text = write_ligand(smiles::parse(g.smiles), g.coords);
    } else {
      text = g.smiles;
      for (const auto& c : g.coords)
        text += "\n" + format_coord(c[0]) + " " + format_coord(c[1]) + " " + format_coord(c[2]);
    }
    write_file(dir / (index_name(i, ligs.size()) + ".lig"), text + "\n");
    ojson line = {{"index", i},
                  {"smiles", g.smiles},
                  {"valid", g.valid},
                  {"token_log_prob", g.token_log_prob}};
    manifest += line.dump() + "\n";
  }
  write_file(dir / "manifest.jsonl", manifest);
  ojson summary = {{"n", ligs.size()}, {"valid", n_valid}, {"dir", dir.string()}};
  out << summary.dump() << "\n";
}

void cmd_eval(const RunConfig& cfg, std::ostream& out) {
  std::vector<std::string> manifests = split(cfg.get_string("manifest"), ',');
  if (manifests.empty()) manifests.push_back((sample_dir(cfg) / "manifest.jsonl").string());
  const std::vector<std::string> prop_files = split(cfg.get_string("properties"), ',');
  if (!prop_files.empty() && prop_files.size() != manifests.size())
    throw ConfigError("properties must list one file per manifest");
  const SuccessThresholds thr = cfg.thresholds();

  std::string report_text;
  std::vector<GenerationReport> reports;
  for (std::size_t m = 0; m < manifests.size(); ++m) {
    if (!fs::exists(manifests[m])) throw DataError("manifest does not exist: " + manifests[m]);
    std::vector<std::string> smiles_list;
    std::istringstream in(read_file(manifests[m]));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        const auto idx = j.at("index").get<std::size_t>();
        if (idx != smiles_list.size())
          throw DataError("manifest indices must be 0, 1, 2, ...");
        smiles_list.push_back(j.at("smiles").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw DataError(manifests[m] + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    PropertyTable props;
    if (!prop_files.empty()) props = parse_property_file(read_file(prop_files[m]));
    reports.push_back(report(smiles_list, prop_files.empty() ? nullptr : &props, thr));
    report_text += report_to_jsonl(reports.back());
  }

  // averages across candidate sets, skipping sets where a value is absent
  ojson mean = ojson::object();
  auto average = [&](const char* key, auto get) {
    double sum = 0.0;
    int cnt = 0;
    for (const auto& r : reports)
      if (auto v = get(r)) {
        sum += *v;
        ++cnt;
      }
    mean[key] = cnt ? ojson(sum / cnt) : ojson(nullptr);
  };
  average("valid_fraction",
          [](const GenerationReport& r) { return std::optional<double>(r.valid_fraction); });
  average("unique_fraction", [](const GenerationReport& r) { return r.unique_fraction; });
  average("diversity", [](const GenerationReport& r) { return r.diversity; });
  if (!prop_files.empty())
    average("success_rate", [](const GenerationReport& r) { return r.success_rate; });
  mean["sets"] = reports.size();
  const ojson tail = {{"mean_over_sets", mean}};
  report_text += tail.dump() + "\n";
  write_file(cfg.path_or("report", "report.jsonl"), report_text);
  out << mean.dump() << "\n";
}

bool cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
  apply_threads(cfg);
  const Vocab vocab = load_vocab(cfg);
  auto records = load_records(cfg, vocab);
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(cfg.get_int("gc_records")),
                                       records.size());
  if (n < 1) throw ConfigError("gc_records must be >= 1");
  records.resize(n);

  ModelConfig mcfg = model_preset(cfg.get_string("gc_preset"), static_cast<int>(vocab.size()));
  mcfg.coord_scale = cfg.get_double("coord_scale");
  std::size_t longest = 0;
  for (const auto& r : records) longest = std::max(longest, r.size());
  mcfg.backbone.max_positions =
      std::max(mcfg.backbone.max_positions, static_cast<int>(longest));
  const TrainState state = make_train_state(mcfg, cfg.seed());

  GradCheckOptions opt;
  opt.h = cfg.get_double("gc_h");
  opt.floor = cfg.get_double("gc_floor");
  opt.seed = cfg.seed();
  const Batch batch = make_batch(records, static_cast<std::size_t>(cfg.get_int("max_len")));
  const GradCheckResult joint = grad_check(batch, state, cfg.loss_config(), opt);

  // regularized likelihood loss on the first record's ligand tokens
  AgentPair pair = make_agent_pair(state.model);
  Rng prng(derive_seed(cfg.seed(), 0x7274));
  for (double& p : pair.agent.backbone.params()) p += 0.01 * prng.normal();
  const HybridSequence& x = records.front();
  const double mu = cfg.get_double("rl_mu");
  const double reward = 0.5;
  std::vector<double> analytic(pair.agent.backbone.num_params(), 0.0);
  rl_sample_loss(x, pair, reward, mu, analytic);
  const GradCheckResult rl = finite_difference_check(
      pair.agent.backbone.params(), analytic,
      [&] { return rl_sample_loss(x, pair, reward, mu); }, opt);

  const double worst = std::max(joint.max_rel_error, rl.max_rel_error);
  const double tol = cfg.get_double("gc_tol");
  const bool ok = worst <= tol;
  ojson summary = {{"joint_max_rel_error", joint.max_rel_error},
                   {"joint_checked", joint.checked},
                   {"joint_worst", {{"index", joint.worst_index},
                                    {"analytic", joint.worst_analytic},
                                    {"numeric", joint.worst_numeric}}},
                   {"rl_max_rel_error", rl.max_rel_error},
                   {"rl_checked", rl.checked},
                   {"rl_worst", {{"index", rl.worst_index},
                                 {"analytic", rl.worst_analytic},
                                 {"numeric", rl.worst_numeric}}},
                   {"max_rel_error", worst},
                   {"tolerance", tol},
                   {"pass", ok}};
  out << summary.dump() << "\n";
  return ok;
}

const std::vector<std::string_view>& command_names() {
  static const std::vector<std::string_view> names = {"prep",   "pretrain", "finetune",
                                                      "sample", "eval",     "gradcheck"};
  return names;
}

int exit_code_for(const std::exception& e) {
  if (const auto* pe = dynamic_cast<const Error*>(&e)) {
    switch (pe->error_class()) {
      case ErrorClass::Config: return kExitConfig;
      case ErrorClass::Data: return kExitData;
      case ErrorClass::Numeric: return kExitNumeric;
    }
  }
  return kExitData;
}

int run_command(std::string_view name, const RunConfig& cfg, std::ostream& out,
                std::ostream& err) {
  try {
    if (name == "prep") {
      cmd_prep(cfg, out);
    } else if (name == "pretrain") {
      cmd_pretrain(cfg, out);
    } else if (name == "finetune") {
      cmd_finetune(cfg, out);
    } else if (name == "sample") {
      cmd_sample(cfg, out);
    } else if (name == "eval") {
      cmd_eval(cfg, out);
    } else if (name == "gradcheck") {
      if (!cmd_gradcheck(cfg, out)) {
        err << "gradcheck: relative error above tolerance\n";
        return kExitNumeric;
      }
    } else {
      err << "unknown command '" << name << "'\n";
      return kExitConfig;
    }
  } catch (const std::exception& e) {
    err << name << ": " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}

}  // namespace pocketgen
