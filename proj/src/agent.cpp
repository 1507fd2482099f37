#include "udrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "udrl/error.hpp"

namespace udrl {

std::string to_string(BanditEncoding encoding) { return encoding == BanditEncoding::joint ? "joint" : "factored"; }

BanditEncoding bandit_encoding_from_string(const std::string& name) {
  if (name == "joint") return BanditEncoding::joint;
  if (name == "factored") return BanditEncoding::factored;
  throw Error("unknown bandit encoding '" + name + "'");
}

std::size_t command_width(EnvKind kind, BanditEncoding bandit) {
  if (kind == EnvKind::cartpole) return 2 + encoding::kMorethanSlots;
  return bandit == BanditEncoding::joint ? encoding::kBanditDesireBins * encoding::kMorethanSlots
                                         : encoding::kBanditDesireBins + encoding::kMorethanSlots;
}

namespace {

std::size_t bandit_bin(double desired) {
  const double max_bin = static_cast<double>(encoding::kBanditDesireBins - 1);
  return static_cast<std::size_t>(std::lround(std::clamp(desired, 0.0, max_bin)));
}

}  // namespace

void encode_command(EnvKind kind, const Command& cmd, std::span<double> out, BanditEncoding bandit) {
  if (out.size() != command_width(kind, bandit)) throw Error("encode_command: output width mismatch");
  std::fill(out.begin(), out.end(), 0.0);
  const auto m_slot = static_cast<std::size_t>(to_int(cmd.morethan) + 1);
  if (kind == EnvKind::bandit && bandit == BanditEncoding::joint) {
    out[bandit_bin(cmd.desired) * encoding::kMorethanSlots + m_slot] = 1.0;
  } else if (kind == EnvKind::bandit) {
    out[bandit_bin(cmd.desired)] = 1.0;
    out[encoding::kBanditDesireBins + m_slot] = 1.0;
  } else {
    out[0] = cmd.desired * encoding::kCartPoleDesireScale;
    out[1] = static_cast<double>(cmd.horizon) * encoding::kCartPoleHorizonScale;
    out[2 + m_slot] = 1.0;
  }
}

std::vector<double> encode_command(EnvKind kind, const Command& cmd, BanditEncoding bandit) {
  std::vector<double> out(command_width(kind, bandit));
  encode_command(kind, cmd, out, bandit);
  return out;
}

Command decode_bandit_command(std::span<const double> encoded, BanditEncoding bandit) {
  if (encoded.size() != command_width(EnvKind::bandit, bandit)) throw Error("decode_bandit_command: width mismatch");
  if (bandit == BanditEncoding::joint) {
    const auto hot = std::find(encoded.begin(), encoded.end(), 1.0);
    if (hot == encoded.end()) throw Error("decode_bandit_command: missing one-hot entry");
    const auto index = static_cast<std::size_t>(hot - encoded.begin());
    return Command{static_cast<double>(index / encoding::kMorethanSlots), 1,
                   morethan_from_int(static_cast<int>(index % encoding::kMorethanSlots) - 1)};
  }
  const auto d_end = encoded.begin() + encoding::kBanditDesireBins;
  const auto d = std::find(encoded.begin(), d_end, 1.0);
  const auto m = std::find(d_end, encoded.end(), 1.0);
  if (d == d_end || m == encoded.end()) throw Error("decode_bandit_command: missing one-hot entry");
  return Command{static_cast<double>(d - encoded.begin()), 1, morethan_from_int(static_cast<int>(m - d_end) - 1)};
}

std::vector<double> Policy::action_probabilities(std::span<const double> observation, const Command& cmd) const {
  const std::vector<double> enc = encode_command(env_kind, cmd, bandit_encoding);
  return softmax(forward(net, observation, enc).logits);
}

std::size_t act(const Policy& policy, std::span<const double> observation, const Command& cmd, Rng& rng) {
  const std::vector<double> probs = policy.action_probabilities(observation, cmd);
  return rng.categorical(probs);
}

Command update_command(const Command& cmd, double reward) {
  return Command{cmd.desired - reward, cmd.horizon > 1 ? cmd.horizon - 1 : 1, cmd.morethan};
}

Command default_exploratory_command(EnvKind kind) {
  if (kind == EnvKind::bandit) return Command{0.0, 1, Morethan::more};
  return Command{1.0, cartpole::kStepCap, Morethan::more};
}

Command exploratory_command(const ReplayBuffer& buffer, EnvKind kind, Rng& rng, std::size_t best_k) {
  if (best_k == 0) throw Error("exploratory_command: best_k must be positive");
  if (buffer.size() < best_k) return default_exploratory_command(kind);

  // Highest returns first; ties keep buffer order so the choice is deterministic.
  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(best_k), order.end(),
                    [&buffer](std::size_t a, std::size_t b) {
                      const double ra = buffer[a].total_return();
                      const double rb = buffer[b].total_return();
                      return ra != rb ? ra > rb : a < b;
                    });

  double sum = 0.0;
  double length_sum = 0.0;
  for (std::size_t i = 0; i < best_k; ++i) {
    sum += buffer[order[i]].total_return();
    length_sum += static_cast<double>(buffer[order[i]].length());
  }
  const double k = static_cast<double>(best_k);
  const double mean = sum / k;
  double sq = 0.0;
  for (std::size_t i = 0; i < best_k; ++i) {
    const double dev = buffer[order[i]].total_return() - mean;
    sq += dev * dev;
  }
  const double stddev = std::sqrt(sq / k);

  Command cmd;
  cmd.morethan = Morethan::more;
  cmd.desired = rng.uniform(mean, mean + stddev);
  if (kind == EnvKind::bandit) {
    cmd.desired = static_cast<double>(bandit_bin(cmd.desired));
    cmd.horizon = 1;
  } else {
    cmd.horizon = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(length_sum / k)));
  }
  return cmd;
}

ActionSelector policy_selector(const Policy& policy) {
  return [&policy](std::span<const double> obs, const Command& cmd, Rng& rng) { return act(policy, obs, cmd, rng); };
}

ActionSelector uniform_selector(std::size_t action_count) {
  return [action_count](std::span<const double>, const Command&, Rng& rng) { return rng.uniform_index(action_count); };
}

Episode rollout(Environment& env, const ActionSelector& select, Command cmd, Rng& rng, std::size_t step_cap) {
  if (step_cap == 0) throw Error("rollout: step cap must be positive");
  Episode episode;
  std::vector<double> obs = env.reset(rng);
  for (std::size_t t = 0; t < step_cap; ++t) {
    const std::size_t action = select(obs, cmd, rng);
    StepResult res = env.step(action);
    episode.append(std::move(obs), action, res.reward);
    cmd = update_command(cmd, res.reward);
    if (res.terminal) break;
    obs = std::move(res.observation);
  }
  return episode;
}

Episode rollout(Environment& env, const Policy& policy, const Command& cmd, Rng& rng, std::size_t step_cap) {
  if (env.action_count() != policy.action_count()) throw Error("rollout: policy and environment action counts differ");
  return rollout(env, policy_selector(policy), cmd, rng, step_cap);
}

BanditTable evaluate_bandit(const Policy& policy) {
  if (policy.env_kind != EnvKind::bandit) throw Error("evaluate_bandit: policy is not a bandit policy");
  BanditTable table;
  for (std::size_t d = 0; d < encoding::kBanditDesireBins; ++d)
    for (int m = -1; m <= 1; ++m)
      table[d][static_cast<std::size_t>(m + 1)] =
          policy.action_probabilities({}, Command{static_cast<double>(d), 1, morethan_from_int(m)});
  return table;
}

std::vector<double> evaluate_cartpole(const Policy& policy, double desired, Morethan morethan,
                                      std::size_t episodes_per_cell, Rng& rng) {
  if (policy.env_kind != EnvKind::cartpole) throw Error("evaluate_cartpole: policy is not a CartPole policy");
  if (desired < 0.0) throw Error("evaluate_cartpole: desired return must be nonnegative");
  CartPoleEnv env;
  std::vector<double> returns;
  returns.reserve(episodes_per_cell);
  const Command start{desired, cartpole::kStepCap, morethan};
  for (std::size_t e = 0; e < episodes_per_cell; ++e)
    returns.push_back(rollout(env, policy, start, rng, cartpole::kStepCap).total_return());
  return returns;
}

}  // namespace udrl
