#ifndef POCKETGEN_RUN_CONFIG_HPP_
#define POCKETGEN_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pocketgen/data_pipeline.hpp"
#include "pocketgen/metrics.hpp"
#include "pocketgen/model.hpp"
#include "pocketgen/rl_finetune.hpp"
#include "pocketgen/sampler.hpp"
#include "pocketgen/trainer.hpp"

namespace pocketgen {

using ConfigValue = std::variant<bool, std::int64_t, double, std::string>;

struct ConfigKey {
  std::string name;
  ConfigValue default_value;
  std::string doc;
};

// Every recognised key, in documentation order.
const std::vector<ConfigKey>& config_keys();

// Flat typed key/value configuration. Values come from the defaults, then
// a JSON object file, then individual overrides; later sources win.
class RunConfig {
 public:
  RunConfig();

  void load_json(std::string_view text);
  void load_json_file(const std::filesystem::path& path);
  // Parses `value` according to the key's type.
  void set(std::string_view key, std::string_view value);
  // "key=value"
  void set_assignment(std::string_view assignment);

  bool get_bool(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  double get_double(std::string_view key) const;
  const std::string& get_string(std::string_view key) const;
  bool is_set(std::string_view key) const { return explicit_.count(std::string(key)) > 0; }

  std::uint64_t seed() const { return static_cast<std::uint64_t>(get_int("seed")); }
  std::filesystem::path out_dir() const { return get_string("out_dir"); }
  // A path key, falling back to out_dir / fallback when the value is empty.
  std::filesystem::path path_or(std::string_view key, std::string_view fallback) const;
  // Value of a path key that must be set and exist.
  std::filesystem::path existing_path(std::string_view key) const;

  ModelConfig model_config(int vocab_size) const;
  AugmentConfig augment_config() const;
  JointLossConfig loss_config() const;
  OptimConfig optim_config() const;
  RLConfig rl_config() const;
  RewardSpec reward_spec() const;
  SampleConfig sample_config() const;
  SuccessThresholds thresholds() const;

  // Effective values as a JSON object.
  std::string to_json() const;

 private:
  const ConfigValue& value(std::string_view key) const;

  std::map<std::string, ConfigValue, std::less<>> values_;
  std::set<std::string> explicit_;
};

}  // namespace pocketgen

#endif  // POCKETGEN_RUN_CONFIG_HPP_
