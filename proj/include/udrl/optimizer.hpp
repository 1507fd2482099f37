#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "udrl/nn.hpp"

namespace udrl {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::sgd;
  double step_size = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // One moment vector per parameter block (adam only; empty for sgd).
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step_count = 0;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

OptimizerState make_sgd(double step_size);
OptimizerState make_adam(double step_size, const GatedPolicyNet& net);

// In-place update of the parameter blocks. Moments are allocated lazily on the
// first adam step if the state was created without a network.
void optimizer_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                    OptimizerState& state);

// Applies the update to every parameter of net and bumps net.version.
void optimizer_step(GatedPolicyNet& net, const NetGradients& grads, OptimizerState& state);

}  // namespace udrl
