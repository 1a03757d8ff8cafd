#include "pocketgen/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pocketgen {

using nlohmann::json;
using I = std::int64_t;
using S = std::string;

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      // general
      {"seed", I{0}, "global seed"},
      {"out_dir", S{"out"}, "directory for every artifact"},
      {"threads", I{0}, "OpenMP threads (0 = runtime default)"},
      // data
      {"data_dir", S{}, "prep input: NAME.pdb + NAME.lig pairs"},
      {"records", S{}, "hybrid records file (default out_dir/records.hyb)"},
      {"vocab", S{}, "vocabulary file (default out_dir/vocab.txt)"},
      {"max_len", I{1024}, "longest hybrid record kept by prep and batching"},
      {"coord_scale", 5.0, "coordinates are divided by this before encoding"},
      {"rotate", true, "random rotation augmentation"},
      {"randomize_smiles", true, "randomized SMILES augmentation"},
      {"ligand_only", false, "drop pocket blocks (small-molecule pretraining)"},
      // model
      {"preset", S{"desk"}, "model size preset: desk | toy | tiny"},
      {"d_model", I{128}, "overrides the preset when set"},
      {"n_layers", I{4}, "overrides the preset when set"},
      {"n_heads", I{4}, "overrides the preset when set"},
      {"d_ff", I{512}, "overrides the preset when set"},
      {"max_positions", I{1024}, "overrides the preset when set"},
      {"d_t", I{64}, "time embedding width; overrides the preset when set"},
      {"diff_hidden", I{256}, "diffusion MLP width; overrides the preset when set"},
      {"T", I{100}, "diffusion steps; overrides the preset when set"},
      {"beta_start", 1e-4, "first beta of the linear schedule"},
      {"beta_end", 0.02, "last beta of the linear schedule"},
      // pretraining
      {"lambda", 1.0, "weight of the diffusion term"},
      {"label_smoothing", 0.0, "cross-entropy label smoothing"},
      {"lr", 3e-4, "peak learning rate"},
      {"min_lr_ratio", 0.1, "cosine floor as a fraction of lr"},
      {"weight_decay", 0.0, "decoupled weight decay"},
      {"grad_clip", 0.0, "global gradient-norm clip (0 = off)"},
      {"steps", I{1000}, "pretraining steps"},
      {"batch_size", I{8}, "records per pretraining step"},
      {"checkpoint", S{}, "pretrained checkpoint (default out_dir/model.ckpt)"},
      {"checkpoint_every", I{0}, "also save every N steps (0 = end only)"},
      {"resume", false, "continue from the checkpoint file"},
      // finetuning
      {"pocket", S{}, "target pocket PDB for finetune and sample"},
      {"rl_mu", 10.0, "reward weight"},
      {"rl_steps", I{200}, "RL steps"},
      {"rl_batch", I{16}, "ligands sampled per RL step"},
      {"rl_lr", 1e-3, "RL learning rate (constant)"},
      {"rl_temperature", 1.0, "sampling temperature during RL"},
      {"reward", S{"atom_count"}, "atom_count | centroid_proximity | constant"},
      {"reward_element", S{"N"}, "element counted by atom_count"},
      {"reward_cap", I{5}, "cap of atom_count"},
      {"reward_value", 0.0, "value of constant"},
      {"agent_checkpoint", S{}, "finetuned checkpoint (default out_dir/agent.ckpt)"},
      // sampling
      {"sample_checkpoint", S{}, "checkpoint used by sample (default: checkpoint)"},
      {"n_samples", I{100}, "ligands generated by sample"},
      {"temperature", 1.0, "sampling temperature (0 = greedy)"},
      {"top_k", I{0}, "top-k filter (0 = off)"},
      {"max_smiles_tokens", I{128}, "SMILES token budget per ligand"},
      {"retries", I{0}, "extra attempts per ligand until a valid SMILES"},
      {"sample_dir", S{}, "sample output (default out_dir/samples)"},
      // evaluation
      {"manifest", S{}, "comma-separated manifests (default sample_dir/manifest.jsonl)"},
      {"properties", S{}, "optional property file, one per manifest, comma-separated"},
      {"report", S{}, "report output (default out_dir/report.jsonl)"},
      {"vina_dock_max", -8.18, "success gate: vina_dock below this"},
      {"qed_min", 0.25, "success gate: qed above this"},
      {"sa_min", 0.59, "success gate: sa above this"},
      // gradient check
      {"gc_preset", S{"tiny"}, "model preset for gradcheck"},
      {"gc_records", I{2}, "records in the gradcheck batch"},
      {"gc_h", 1e-5, "finite-difference step"},
      {"gc_tol", 1e-4, "largest accepted relative error"},
      {"gc_floor", 1e-4, "relative-error denominator floor"},
  };
  return keys;
}

namespace {

ConfigValue parse_as(const ConfigValue& like, std::string_view key, std::string_view text) {
  const std::string where = "config key '" + std::string(key) + "'";
  switch (like.index()) {
    case 0:
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError(where + " expects true/false, got '" + std::string(text) + "'");
    case 1: {
      I v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size())
        throw ConfigError(where + " expects an integer, got '" + std::string(text) + "'");
      return v;
    }
    case 2: {
      double v = 0.0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || p != text.data() + text.size())
        throw ConfigError(where + " expects a number, got '" + std::string(text) + "'");
      return v;
    }
    default:
      return std::string(text);
  }
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

const ConfigValue& RunConfig::value(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return it->second;
}

void RunConfig::set(std::string_view key, std::string_view text) {
  const ConfigValue& like = value(key);
  values_[std::string(key)] = parse_as(like, key, text);
  explicit_.insert(std::string(key));
}

void RunConfig::set_assignment(std::string_view a) {
  const auto eq = a.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("expected key=value, got '" + std::string(a) + "'");
  set(a.substr(0, eq), a.substr(eq + 1));
}

void RunConfig::load_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [k, v] : j.items()) {
    const ConfigValue& like = value(k);
    const std::string where = "config key '" + k + "'";
    ConfigValue parsed;
    switch (like.index()) {
      case 0:
        if (!v.is_boolean()) throw ConfigError(where + " expects a bool");
        parsed = v.get<bool>();
        break;
      case 1:
        if (!v.is_number_integer()) throw ConfigError(where + " expects an integer");
        parsed = v.get<I>();
        break;
      case 2:
        if (!v.is_number()) throw ConfigError(where + " expects a number");
        parsed = v.get<double>();
        break;
      default:
        if (!v.is_string()) throw ConfigError(where + " expects a string");
        parsed = v.get<std::string>();
    }
    values_[k] = parsed;
    explicit_.insert(k);
  }
}

void RunConfig::load_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  load_json(ss.str());
}

bool RunConfig::get_bool(std::string_view k) const { return std::get<bool>(value(k)); }
std::int64_t RunConfig::get_int(std::string_view k) const { return std::get<I>(value(k)); }
double RunConfig::get_double(std::string_view k) const { return std::get<double>(value(k)); }
const std::string& RunConfig::get_string(std::string_view k) const {
  return std::get<S>(value(k));
}

std::filesystem::path RunConfig::path_or(std::string_view key,
                                         std::string_view fallback) const {
  const auto& v = get_string(key);
  if (!v.empty()) return v;
  return out_dir() / fallback;
}

std::filesystem::path RunConfig::existing_path(std::string_view key) const {
  const auto& v = get_string(key);
  if (v.empty()) throw ConfigError("config key '" + std::string(key) + "' must be set");
  if (!std::filesystem::exists(v))
    throw DataError("path for '" + std::string(key) + "' does not exist: " + v);
  return v;
}

ModelConfig RunConfig::model_config(int vocab_size) const {
  ModelConfig c = model_preset(get_string("preset"), vocab_size);
  auto over = [&](const char* key, int& field) {
    if (is_set(key)) field = static_cast<int>(get_int(key));
  };
  over("d_model", c.backbone.d_model);
  over("n_layers", c.backbone.n_layers);
  over("n_heads", c.backbone.n_heads);
  over("d_ff", c.backbone.d_ff);
  over("max_positions", c.backbone.max_positions);
  over("d_t", c.diffusion.d_t);
  over("diff_hidden", c.diffusion.hidden);
  over("T", c.schedule.T);
  c.diffusion.d_model = c.backbone.d_model;
  if (is_set("beta_start")) c.schedule.beta_start = get_double("beta_start");
  if (is_set("beta_end")) c.schedule.beta_end = get_double("beta_end");
  c.coord_scale = get_double("coord_scale");
  c.validate();
  return c;
}

AugmentConfig RunConfig::augment_config() const {
  AugmentConfig a;
  a.scale = get_double("coord_scale");
  a.rotate = get_bool("rotate");
  a.randomize_smiles = get_bool("randomize_smiles");
  a.seed = seed();
  return a;
}

JointLossConfig RunConfig::loss_config() const {
  JointLossConfig c{get_double("lambda"), get_double("label_smoothing")};
  c.validate();
  return c;
}

OptimConfig RunConfig::optim_config() const {
  OptimConfig o;
  o.lr = get_double("lr");
  o.min_lr_ratio = get_double("min_lr_ratio");
  o.weight_decay = get_double("weight_decay");
  o.grad_clip = get_double("grad_clip");
  o.decay_steps = get_int("steps");
  o.validate();
  return o;
}

RLConfig RunConfig::rl_config() const {
  RLConfig r;
  r.mu = get_double("rl_mu");
  r.batch_size = static_cast<int>(get_int("rl_batch"));
  r.steps = static_cast<int>(get_int("rl_steps"));
  r.temperature = get_double("rl_temperature");
  r.max_smiles_tokens = static_cast<int>(get_int("max_smiles_tokens"));
  r.optim.lr = get_double("rl_lr");
  r.validate();
  return r;
}

RewardSpec RunConfig::reward_spec() const {
  RewardSpec s;
  s.name = get_string("reward");
  s.element = get_string("reward_element");
  s.cap = static_cast<int>(get_int("reward_cap"));
  s.value = get_double("reward_value");
  return s;
}

SampleConfig RunConfig::sample_config() const {
  SampleConfig s;
  s.temperature = get_double("temperature");
  s.top_k = static_cast<int>(get_int("top_k"));
  s.max_smiles_tokens = static_cast<int>(get_int("max_smiles_tokens"));
  s.seed = seed();
  s.validate();
  return s;
}

SuccessThresholds RunConfig::thresholds() const {
  return {get_double("vina_dock_max"), get_double("qed_min"), get_double("sa_min")};
}

std::string RunConfig::to_json() const {
  json j = json::object();
  for (const auto& k : config_keys()) {
    std::visit([&](const auto& v) { j[k.name] = v; }, value(k.name));
  }
  return j.dump(2);
}

}  // namespace pocketgen
