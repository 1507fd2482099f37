#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <span>
#include <vector>

#include "udrl/envs.hpp"
#include "udrl/nn.hpp"
#include "udrl/replay.hpp"
#include "udrl/rng.hpp"

namespace udrl {

// (desired return, horizon, morethan unit)
struct Command {
  double desired = 0.0;
  std::size_t horizon = 1;
  Morethan morethan = Morethan::more;

  friend bool operator==(const Command&, const Command&) = default;
};

namespace encoding {
inline constexpr std::size_t kBanditDesireBins = 7;  // d in 0..6
inline constexpr std::size_t kMorethanSlots = 3;     // ordered (-1, 0, +1)
inline constexpr double kCartPoleDesireScale = 0.02;
inline constexpr double kCartPoleHorizonScale = 0.01;
}  // namespace encoding

// Bandit command layouts. joint: one slot per (d, m) pair, index 3 d + m + 1.
// factored: one-hot(d) ++ one-hot(m).
enum class BanditEncoding { joint, factored };

std::string to_string(BanditEncoding encoding);
BanditEncoding bandit_encoding_from_string(const std::string& name);

std::size_t command_width(EnvKind kind, BanditEncoding bandit = BanditEncoding::joint);

// bandit:   d is clip(round(d), 0, 6); h is constant 1 and not encoded
// cartpole: [0.02 d, 0.01 h] ++ one-hot(m)
std::vector<double> encode_command(EnvKind kind, const Command& cmd, BanditEncoding bandit = BanditEncoding::joint);
void encode_command(EnvKind kind, const Command& cmd, std::span<double> out,
                    BanditEncoding bandit = BanditEncoding::joint);

// Inverse of the bandit encoding (returns the clipped command).
Command decode_bandit_command(std::span<const double> encoded, BanditEncoding bandit = BanditEncoding::joint);

struct Policy {
  GatedPolicyNet net;
  EnvKind env_kind = EnvKind::bandit;
  BanditEncoding bandit_encoding = BanditEncoding::joint;

  std::size_t action_count() const { return net.action_count(); }
  std::vector<double> action_probabilities(std::span<const double> observation, const Command& cmd) const;
};

std::size_t act(const Policy& policy, std::span<const double> observation, const Command& cmd, Rng& rng);

// Bookkeeping after receiving reward: d -= reward, h = max(1, h - 1).
Command update_command(const Command& cmd, double reward);

Command default_exploratory_command(EnvKind kind);

// m = +1 always. With fewer than best_k stored episodes the default command is
// returned; otherwise d ~ U(M, M + S) over the best_k returns.
Command exploratory_command(const ReplayBuffer& buffer, EnvKind kind, Rng& rng, std::size_t best_k);

using ActionSelector = std::function<std::size_t(std::span<const double> observation, const Command& cmd, Rng& rng)>;

ActionSelector policy_selector(const Policy& policy);
ActionSelector uniform_selector(std::size_t action_count);

// Runs one episode, updating the command after every reward. Stops at a
// terminal step or after step_cap steps.
Episode rollout(Environment& env, const ActionSelector& select, Command cmd, Rng& rng, std::size_t step_cap);
Episode rollout(Environment& env, const Policy& policy, const Command& cmd, Rng& rng, std::size_t step_cap);

// probs[d][m + 1] is the action distribution for command (d, 1, m).
using BanditTable = std::array<std::array<std::vector<double>, 3>, encoding::kBanditDesireBins>;

BanditTable evaluate_bandit(const Policy& policy);

// Observed returns of episodes_per_cell rollouts from command (d, 200, m).
std::vector<double> evaluate_cartpole(const Policy& policy, double desired, Morethan morethan,
                                      std::size_t episodes_per_cell, Rng& rng);

}  // namespace udrl
