#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "udrl/rng.hpp"

namespace udrl {

enum class EnvKind { bandit, cartpole };

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool terminal = false;
};

// Episodic environment with a discrete action space. Actions are 0-indexed.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual EnvKind kind() const = 0;
  virtual std::size_t action_count() const = 0;
  virtual std::size_t observation_width() const = 0;
  // Maximum number of steps in one episode.
  virtual std::size_t step_cap() const = 0;
  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual StepResult step(std::size_t action) = 0;
};

// Deterministic single-state bandit: pulling arm i (1-indexed) pays exactly i.
class BanditEnv final : public Environment {
 public:
  static constexpr std::size_t kDefaultArms = 6;

  explicit BanditEnv(std::size_t arm_count = kDefaultArms);

  EnvKind kind() const override { return EnvKind::bandit; }
  std::size_t action_count() const override { return arm_count_; }
  std::size_t observation_width() const override { return 0; }
  std::size_t step_cap() const override { return 1; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::size_t action) override;

 private:
  std::size_t arm_count_;
  bool done_ = true;
};

// Pays arm + 1 for the 0-indexed arm; every pull ends the episode.
StepResult bandit_step(std::size_t arm, std::size_t arm_count = BanditEnv::kDefaultArms);

struct CartPoleState {
  double cart_position = 0.0;
  double cart_velocity = 0.0;
  double pole_angle = 0.0;
  double pole_angular_velocity = 0.0;

  std::vector<double> observation() const {
    return {cart_position, cart_velocity, pole_angle, pole_angular_velocity};
  }
  friend bool operator==(const CartPoleState&, const CartPoleState&) = default;
};

enum class CartPoleAction : std::size_t { left = 0, right = 1 };

namespace cartpole {
inline constexpr double kGravity = 9.8;
inline constexpr double kCartMass = 1.0;
inline constexpr double kPoleMass = 0.1;
inline constexpr double kHalfPoleLength = 0.5;
inline constexpr double kForce = 10.0;
inline constexpr double kDt = 0.02;
inline constexpr double kPositionLimit = 2.4;
inline constexpr double kAngleLimit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
inline constexpr std::size_t kStepCap = 200;
}  // namespace cartpole

bool cartpole_is_terminal(const CartPoleState& state);
CartPoleState cartpole_reset(Rng& rng);
// Explicit Euler step of the classical cart-pole equations. Throws if the
// input state is already terminal.
std::pair<CartPoleState, StepResult> cartpole_step(const CartPoleState& state, CartPoleAction action);

class CartPoleEnv final : public Environment {
 public:
  EnvKind kind() const override { return EnvKind::cartpole; }
  std::size_t action_count() const override { return 2; }
  std::size_t observation_width() const override { return 4; }
  std::size_t step_cap() const override { return cartpole::kStepCap; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::size_t action) override;

  const CartPoleState& state() const { return state_; }

 private:
  CartPoleState state_;
  bool done_ = true;
};

}  // namespace udrl
