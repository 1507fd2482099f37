#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "udrl/agent.hpp"
#include "udrl/envs.hpp"
#include "udrl/nn.hpp"
#include "udrl/optimizer.hpp"

namespace udrl {

struct ExperimentConfig {
  EnvKind env_kind = EnvKind::bandit;
  std::size_t total_env_steps = 25'000;
  std::optional<std::size_t> buffer_capacity = 100;  // nullopt: unbounded
  std::size_t episodes_per_iteration = 16;
  std::size_t batches_per_iteration = 16;
  std::size_t batch_size = 16;
  std::size_t permutations_per_batch = 2;  // includes the identity pairing
  OptimizerKind optimizer = OptimizerKind::sgd;
  double step_size = 0.01;
  Architecture architecture = Architecture::plain_mlp;
  Activation hidden_activation = Activation::relu;
  BanditEncoding bandit_encoding = BanditEncoding::joint;
  SegmentHorizon segment_horizon = SegmentHorizon::remaining;
  std::size_t hidden_width = 32;
  std::size_t best_k = 20;
  std::uint64_t seed = 0;
  std::string output_dir = "runs/bandit";

  // Throws udrl::Error naming the offending key.
  void validate() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

std::vector<std::string> preset_names();
// "bandit-paper" or "cartpole-paper"; throws for unknown names.
ExperimentConfig preset(const std::string& name);

// Applies one `key = value` assignment, validating the value.
void apply_config_value(ExperimentConfig& config, const std::string& key, const std::string& value);

// Flat `key = value` text with '#' comments. A `preset` key, if present, must
// come first and resets every field to that preset. Unknown keys are errors.
void apply_config_text(ExperimentConfig& config, const std::string& text);
ExperimentConfig load_config_file(const std::string& path, std::optional<ExperimentConfig> base = std::nullopt);

// Writes every field so that apply_config_text reproduces the config exactly.
std::string to_config_text(const ExperimentConfig& config);

NetShape net_shape(const ExperimentConfig& config);

}  // namespace udrl
