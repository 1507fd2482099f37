#include "udrl/envs.hpp"

#include <cmath>

#include "udrl/error.hpp"

namespace udrl {

std::string to_string(EnvKind kind) { return kind == EnvKind::bandit ? "bandit" : "cartpole"; }

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "bandit") return EnvKind::bandit;
  if (name == "cartpole") return EnvKind::cartpole;
  throw Error("unknown env_kind '" + name + "'");
}

StepResult bandit_step(std::size_t arm, std::size_t arm_count) {
  if (arm >= arm_count) throw Error("bandit_step: arm index out of range");
  return StepResult{{}, static_cast<double>(arm + 1), true};
}

BanditEnv::BanditEnv(std::size_t arm_count) : arm_count_(arm_count) {
  if (arm_count == 0) throw Error("BanditEnv: arm_count must be positive");
}

std::vector<double> BanditEnv::reset(Rng&) {
  done_ = false;
  return {};
}

StepResult BanditEnv::step(std::size_t action) {
  if (done_) throw Error("BanditEnv: step called on a finished episode");
  done_ = true;
  return bandit_step(action, arm_count_);
}

bool cartpole_is_terminal(const CartPoleState& s) {
  return std::abs(s.cart_position) > cartpole::kPositionLimit || std::abs(s.pole_angle) > cartpole::kAngleLimit;
}

CartPoleState cartpole_reset(Rng& rng) {
  CartPoleState s;
  s.cart_position = rng.uniform(-0.05, 0.05);
  s.cart_velocity = rng.uniform(-0.05, 0.05);
  s.pole_angle = rng.uniform(-0.05, 0.05);
  s.pole_angular_velocity = rng.uniform(-0.05, 0.05);
  return s;
}

std::pair<CartPoleState, StepResult> cartpole_step(const CartPoleState& s, CartPoleAction action) {
  using namespace cartpole;
  if (cartpole_is_terminal(s)) throw Error("cartpole_step: state is already terminal");
  constexpr double total_mass = kCartMass + kPoleMass;
  constexpr double pole_mass_length = kPoleMass * kHalfPoleLength;

  const double force = action == CartPoleAction::right ? kForce : -kForce;
  const double cos_t = std::cos(s.pole_angle);
  const double sin_t = std::sin(s.pole_angle);
  const double temp =
      (force + pole_mass_length * s.pole_angular_velocity * s.pole_angular_velocity * sin_t) / total_mass;
  const double angular_acc = (kGravity * sin_t - cos_t * temp) /
                             (kHalfPoleLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  const double cart_acc = temp - pole_mass_length * angular_acc * cos_t / total_mass;

  CartPoleState next;
  next.cart_position = s.cart_position + kDt * s.cart_velocity;
  next.cart_velocity = s.cart_velocity + kDt * cart_acc;
  next.pole_angle = s.pole_angle + kDt * s.pole_angular_velocity;
  next.pole_angular_velocity = s.pole_angular_velocity + kDt * angular_acc;

  StepResult result{next.observation(), 1.0, cartpole_is_terminal(next)};
  return {next, std::move(result)};
}

std::vector<double> CartPoleEnv::reset(Rng& rng) {
  state_ = cartpole_reset(rng);
  done_ = false;
  return state_.observation();
}

StepResult CartPoleEnv::step(std::size_t action) {
  if (done_) throw Error("CartPoleEnv: step called on a finished episode");
  if (action > 1) throw Error("CartPoleEnv: action must be 0 (left) or 1 (right)");
  auto [next, result] = cartpole_step(state_, static_cast<CartPoleAction>(action));
  state_ = next;
  done_ = result.terminal;
  return result;
}

}  // namespace udrl
