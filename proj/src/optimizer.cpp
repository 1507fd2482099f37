#include "udrl/optimizer.hpp"

#include <cmath>

#include "udrl/error.hpp"

namespace udrl {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw Error("unknown optimizer '" + name + "'");
}

OptimizerState make_sgd(double step_size) {
  if (!(step_size > 0.0)) throw Error("optimizer step size must be positive");
  OptimizerState state;
  state.kind = OptimizerKind::sgd;
  state.step_size = step_size;
  return state;
}

OptimizerState make_adam(double step_size, const GatedPolicyNet& net) {
  if (!(step_size > 0.0)) throw Error("optimizer step size must be positive");
  OptimizerState state;
  state.kind = OptimizerKind::adam;
  state.step_size = step_size;
  for (auto block : net.parameter_blocks()) {
    state.first_moment.emplace_back(block.size(), 0.0);
    state.second_moment.emplace_back(block.size(), 0.0);
  }
  return state;
}

void optimizer_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                    OptimizerState& state) {
  if (params.size() != grads.size()) throw Error("optimizer_step: parameter/gradient block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b)
    if (params[b].size() != grads[b].size()) throw Error("optimizer_step: parameter/gradient shape mismatch");

  if (state.kind == OptimizerKind::sgd) {
    for (std::size_t b = 0; b < params.size(); ++b)
      for (std::size_t i = 0; i < params[b].size(); ++i) params[b][i] -= state.step_size * grads[b][i];
    ++state.step_count;
    return;
  }

  if (state.first_moment.empty()) {
    for (const auto& block : params) {
      state.first_moment.emplace_back(block.size(), 0.0);
      state.second_moment.emplace_back(block.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw Error("optimizer_step: adam moments do not mirror the parameters");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double b1 = state.adam_beta1;
  const double b2 = state.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    if (m.size() != params[b].size() || v.size() != params[b].size())
      throw Error("optimizer_step: adam moment shape mismatch");
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double g = grads[b][i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      params[b][i] -= state.step_size * m_hat / (std::sqrt(v_hat) + state.adam_epsilon);
    }
  }
}

void optimizer_step(GatedPolicyNet& net, const NetGradients& grads, OptimizerState& state) {
  const auto params = net.parameter_blocks();
  const auto grad_blocks = grads.blocks();
  optimizer_step(params, grad_blocks, state);
  ++net.version;
}

}  // namespace udrl
