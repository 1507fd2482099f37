#include <cmath>

#include "doctest.h"
#include "udrl/envs.hpp"
#include "udrl/error.hpp"
#include "udrl/selftest.hpp"

using namespace udrl;

namespace {

// Textbook cart-pole equations written out independently of envs.cpp.
CartPoleState oracle_step(const CartPoleState& s, int direction) {
  const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, dt = 0.02;
  const double f = 10.0 * direction;
  const double c = std::cos(s.pole_angle), sn = std::sin(s.pole_angle);
  const double total = mc + mp;
  const double tmp = (f + mp * l * s.pole_angular_velocity * s.pole_angular_velocity * sn) / total;
  const double alpha = (g * sn - c * tmp) / (l * (4.0 / 3.0 - mp * c * c / total));
  const double acc = tmp - mp * l * alpha * c / total;
  CartPoleState n;
  n.cart_position = s.cart_position + dt * s.cart_velocity;
  n.cart_velocity = s.cart_velocity + dt * acc;
  n.pole_angle = s.pole_angle + dt * s.pole_angular_velocity;
  n.pole_angular_velocity = s.pole_angular_velocity + dt * alpha;
  return n;
}

}  // namespace

TEST_CASE("bandit pays the 1-indexed arm and ends the episode") {
  CHECK(bandit_step(3).reward == 4.0);
  CHECK(bandit_step(0).reward == 1.0);
  CHECK(bandit_step(5).reward == 6.0);
  CHECK(bandit_step(5).terminal);
  CHECK_THROWS_AS(bandit_step(6), Error);

  BanditEnv env;
  Rng rng(0);
  CHECK(env.reset(rng).empty());
  const auto r = env.step(2);
  CHECK(r.reward == 3.0);
  CHECK(r.terminal);
  CHECK_THROWS_AS(env.step(2), Error);
  env.reset(rng);
  CHECK(env.step(5).reward == 6.0);
}

TEST_CASE("cartpole reset stays within +-0.05 and is seed-deterministic") {
  Rng rng(123);
  for (int i = 0; i < 2000; ++i) {
    const auto s = cartpole_reset(rng);
    for (double v : s.observation()) {
      CHECK(v >= -0.05);
      CHECK(v < 0.05);
    }
  }
  Rng a(9), b(9);
  CHECK(cartpole_reset(a) == cartpole_reset(b));
}

TEST_CASE("cartpole step from rest pushing right") {
  const auto [next, res] = cartpole_step(CartPoleState{}, CartPoleAction::right);
  CHECK(next.cart_position == 0.0);
  CHECK(next.cart_velocity == doctest::Approx(0.19512).epsilon(1e-4));
  CHECK(next.pole_angle == 0.0);
  CHECK(next.pole_angular_velocity == doctest::Approx(-0.29268).epsilon(1e-4));
  CHECK(res.reward == 1.0);
  CHECK_FALSE(res.terminal);
  CHECK(res.observation == next.observation());
}

TEST_CASE("cartpole step agrees with the independent oracle") {
  Rng rng(55);
  for (int i = 0; i < 1000; ++i) {
    CartPoleState s{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-0.2, 0.2), rng.uniform(-2.0, 2.0)};
    const int dir = rng.uniform_index(2) == 0 ? -1 : 1;
    const auto got = cartpole_step(s, dir < 0 ? CartPoleAction::left : CartPoleAction::right).first;
    const auto want = oracle_step(s, dir);
    CHECK(std::abs(got.cart_position - want.cart_position) < 1e-12);
    CHECK(std::abs(got.cart_velocity - want.cart_velocity) < 1e-12);
    CHECK(std::abs(got.pole_angle - want.pole_angle) < 1e-12);
    CHECK(std::abs(got.pole_angular_velocity - want.pole_angular_velocity) < 1e-12);
  }
}

TEST_CASE("cartpole mirror symmetry") {
  const auto r = selftest::check_cartpole_symmetry(10000, 8);
  INFO(selftest::format_report(r));
  CHECK(r.passed);
}

TEST_CASE("cartpole terminal conditions") {
  CHECK(cartpole_is_terminal(CartPoleState{0.0, 0.0, 0.22, 0.0}));
  CHECK(cartpole_is_terminal(CartPoleState{0.0, 0.0, -0.22, 0.0}));
  CHECK(cartpole_is_terminal(CartPoleState{2.41, 0.0, 0.0, 0.0}));
  CHECK(cartpole_is_terminal(CartPoleState{-2.41, 0.0, 0.0, 0.0}));
  CHECK_FALSE(cartpole_is_terminal(CartPoleState{2.39, 0.0, 0.2, 0.0}));
  CHECK_THROWS_AS(cartpole_step(CartPoleState{0.0, 0.0, 0.22, 0.0}, CartPoleAction::left), Error);

  // A step that crosses the angle limit is reported as terminal but still pays.
  const auto [next, res] = cartpole_step(CartPoleState{0.0, 0.0, 0.2, 2.0}, CartPoleAction::left);
  CHECK(next.pole_angle > cartpole::kAngleLimit);
  CHECK(res.terminal);
  CHECK(res.reward == 1.0);
}

TEST_CASE("pushing the cart away from the lean makes the pole fall faster") {
  const CartPoleState lean{0.0, 0.0, 0.05, 0.0};
  const auto left = cartpole_step(lean, CartPoleAction::left).first;
  const auto right = cartpole_step(lean, CartPoleAction::right).first;
  CHECK(left.pole_angular_velocity > 0.0);
  CHECK(left.pole_angular_velocity > right.pole_angular_velocity);
  CHECK(left.cart_velocity < 0.0);
  CHECK(right.cart_velocity > 0.0);
}

TEST_CASE("constant action always terminates well before the cap") {
  CartPoleEnv env;
  Rng rng(4);
  for (std::size_t action : {0u, 1u}) {
    for (int ep = 0; ep < 50; ++ep) {
      env.reset(rng);
      std::size_t steps = 0;
      bool done = false;
      while (!done && steps < env.step_cap()) {
        done = env.step(action).terminal;
        ++steps;
      }
      CHECK(done);
      CHECK(steps >= 5);
      CHECK(steps <= 20);
    }
  }
}

TEST_CASE("env kind names round-trip") {
  CHECK(env_kind_from_string("bandit") == EnvKind::bandit);
  CHECK(env_kind_from_string(to_string(EnvKind::cartpole)) == EnvKind::cartpole);
  CHECK_THROWS_AS(env_kind_from_string("mountaincar"), Error);
}
