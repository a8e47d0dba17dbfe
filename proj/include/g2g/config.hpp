#pragma once

// Run configuration: a line-oriented key=value file with sectioned keys.
//
//   # comment
//   model.variant = sent-tr-g2g
//   train.epochs = 30
//
// Unknown keys and malformed values are rejected with the offending line.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "g2g/evaluation.hpp"
#include "g2g/model.hpp"
#include "g2g/training.hpp"

namespace g2g {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunPaths {
  std::string train;
  std::string dev;
  std::string test;
  std::string model = "model.ckpt";
  std::string output = "out";
};

struct RunConfig {
  RunPaths paths;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  PunctRule punct_rule = PunctRule::Upos;
  std::size_t min_freq = 1;
  std::uint64_t seed = 1;

  RunConfig();
  // Sets one key from its textual value; throws ConfigError.
  void set(const std::string& key, const std::string& value);
  // Pushes `seed` into the model and trainer and validates cross-field constraints.
  void finalize();
  // Canonical key=value listing of every field.
  std::string dump() const;
};

struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string help;
};

// Every accepted key with its default, in file order.
const std::vector<ConfigKey>& config_keys();

// The result is not finalized; call finalize() after any overrides.
RunConfig parse_run_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

}  // namespace g2g
