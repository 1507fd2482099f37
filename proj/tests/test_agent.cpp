#include <cmath>
#include <numeric>

#include "doctest.h"
#include "udrl/agent.hpp"
#include "udrl/error.hpp"

using namespace udrl;

namespace {

Episode bandit_episode(double reward) {
  Episode ep;
  ep.append({}, static_cast<std::size_t>(reward) - 1, reward);
  return ep;
}

Policy biased_cartpole_policy(double p_left, double p_right) {
  GatedPolicyNet net = make_zero_net({Architecture::gated, 4, 5, 8, 2, Activation::tanh});
  net.out_layer.bias = {std::log(p_left), std::log(p_right)};
  return Policy{net, EnvKind::cartpole, BanditEncoding::joint};
}

Policy zero_bandit_policy(BanditEncoding enc) {
  return Policy{make_zero_net({Architecture::plain_mlp, 0, command_width(EnvKind::bandit, enc), 32, 6, Activation::relu}),
                EnvKind::bandit, enc};
}

}  // namespace

TEST_CASE("command widths") {
  CHECK(command_width(EnvKind::bandit, BanditEncoding::joint) == 21);
  CHECK(command_width(EnvKind::bandit, BanditEncoding::factored) == 10);
  CHECK(command_width(EnvKind::cartpole) == 5);
}

TEST_CASE("factored bandit encoding") {
  const auto v = encode_command(EnvKind::bandit, {3.0, 1, Morethan::more}, BanditEncoding::factored);
  CHECK(v == std::vector<double>{0, 0, 0, 1, 0, 0, 0, 0, 0, 1});
  const auto clipped = encode_command(EnvKind::bandit, {9.0, 1, Morethan::less}, BanditEncoding::factored);
  CHECK(clipped == std::vector<double>{0, 0, 0, 0, 0, 0, 1, 1, 0, 0});
  const auto neg = encode_command(EnvKind::bandit, {-2.0, 1, Morethan::equal}, BanditEncoding::factored);
  CHECK(neg == std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0, 1, 0});
}

TEST_CASE("joint bandit encoding puts one hot slot at 3d + m + 1") {
  for (int d = 0; d <= 6; ++d)
    for (int m = -1; m <= 1; ++m) {
      const auto v = encode_command(EnvKind::bandit, {static_cast<double>(d), 1, morethan_from_int(m)});
      CHECK(std::accumulate(v.begin(), v.end(), 0.0) == 1.0);
      CHECK(v[static_cast<std::size_t>(3 * d + m + 1)] == 1.0);
    }
  const auto clipped = encode_command(EnvKind::bandit, {9.0, 1, Morethan::more});
  CHECK(clipped[20] == 1.0);
  const auto rounded = encode_command(EnvKind::bandit, {2.6, 1, Morethan::less});
  CHECK(rounded[9] == 1.0);
}

TEST_CASE("bandit encodings decode back to the 21 commands") {
  for (BanditEncoding enc : {BanditEncoding::joint, BanditEncoding::factored})
    for (int d = 0; d <= 6; ++d)
      for (int m = -1; m <= 1; ++m) {
        const Command c{static_cast<double>(d), 1, morethan_from_int(m)};
        CHECK(decode_bandit_command(encode_command(EnvKind::bandit, c, enc), enc) == c);
      }
  CHECK_THROWS_AS(decode_bandit_command(std::vector<double>(21, 0.0)), Error);
  CHECK_THROWS_AS(decode_bandit_command(std::vector<double>(10, 0.0)), Error);
}

TEST_CASE("cartpole encoding") {
  const auto v = encode_command(EnvKind::cartpole, {100.0, 200, Morethan::equal});
  REQUIRE(v.size() == 5);
  CHECK(v[0] == doctest::Approx(2.0));
  CHECK(v[1] == doctest::Approx(2.0));
  CHECK(v[2] == 0.0);
  CHECK(v[3] == 1.0);
  CHECK(v[4] == 0.0);
  const auto w = encode_command(EnvKind::cartpole, {-3.5, 7, Morethan::less});
  CHECK(w[0] == doctest::Approx(-0.07));
  CHECK(w[1] == doctest::Approx(0.07));
  CHECK(w[2] == 1.0);
  std::vector<double> small(4);
  CHECK_THROWS_AS(encode_command(EnvKind::cartpole, {1.0, 1, Morethan::more}, std::span<double>(small)), Error);
}

TEST_CASE("act with a degenerate distribution") {
  GatedPolicyNet net = make_zero_net({Architecture::gated, 4, 5, 8, 2, Activation::tanh});
  net.out_layer.bias = {0.0, 800.0};
  const Policy policy{net, EnvKind::cartpole, BanditEncoding::joint};
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(act(policy, std::vector<double>(4, 0.0), {10.0, 5, Morethan::more}, rng) == 1);
}

TEST_CASE("act samples the softmax distribution") {
  const Policy policy = biased_cartpole_policy(0.3, 0.7);
  const auto probs = policy.action_probabilities(std::vector<double>(4, 0.01), {20.0, 30, Morethan::equal});
  CHECK(probs[0] == doctest::Approx(0.3).epsilon(1e-12));
  Rng rng(2024);
  const int n = 10000;
  int counts[2] = {0, 0};
  for (int i = 0; i < n; ++i) ++counts[act(policy, std::vector<double>(4, 0.01), {20.0, 30, Morethan::equal}, rng)];
  const double e0 = 0.3 * n, e1 = 0.7 * n;
  const double chi2 = (counts[0] - e0) * (counts[0] - e0) / e0 + (counts[1] - e1) * (counts[1] - e1) / e1;
  // 1 degree of freedom, p = 0.001.
  CHECK(chi2 < 10.83);
}

TEST_CASE("act is reproducible for a fixed seed") {
  const Policy policy = biased_cartpole_policy(0.5, 0.5);
  Rng a(77), b(77);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> obs(4, 0.0);
    CHECK(act(policy, obs, {}, a) == act(policy, obs, {}, b));
  }
}

TEST_CASE("update_command examples") {
  const Command c = update_command({10.0, 5, Morethan::more}, 1.0);
  CHECK(c.desired == 9.0);
  CHECK(c.horizon == 4);
  CHECK(c.morethan == Morethan::more);
  const Command floor = update_command({0.0, 1, Morethan::less}, 1.0);
  CHECK(floor.desired == -1.0);
  CHECK(floor.horizon == 1);
}

TEST_CASE("update_command conserves desired plus accumulated reward") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Command c{rng.uniform(0.0, 200.0), 1 + rng.uniform_index(200), Morethan::more};
    const double d0 = c.desired;
    double earned = 0.0;
    for (int t = 0; t < 300; ++t) {
      const double r = rng.uniform(-1.0, 2.0);
      c = update_command(c, r);
      earned += r;
      CHECK(std::abs(c.desired + earned - d0) < 1e-9);
      CHECK(c.horizon >= 1);
    }
  }
}

TEST_CASE("exploratory command statistics over the top returns") {
  ReplayBuffer buf;
  for (int r = 1; r <= 6; ++r) buf.push(bandit_episode(r));
  Rng rng(5);
  // Top 3 returns {6, 5, 4}: mean 5, population std sqrt(2/3).
  const double s = std::sqrt(2.0 / 3.0);
  CHECK(s == doctest::Approx(0.8165).epsilon(1e-4));
  for (int i = 0; i < 200; ++i) {
    const Command c = exploratory_command(buf, EnvKind::bandit, rng, 3);
    CHECK(c.horizon == 1);
    CHECK(c.morethan == Morethan::more);
    CHECK((c.desired == 5.0 || c.desired == 6.0));
  }

  ReplayBuffer cp;
  for (int len : {10, 50, 30, 20}) {
    Episode ep;
    for (int t = 0; t < len; ++t) ep.append({0, 0, 0, 0}, 0, 1.0);
    cp.push(ep);
  }
  for (int i = 0; i < 200; ++i) {
    const Command c = exploratory_command(cp, EnvKind::cartpole, rng, 2);
    CHECK(c.desired >= 40.0);
    CHECK(c.desired < 50.0);
    CHECK(c.horizon == 40);
    CHECK(c.morethan == Morethan::more);
  }
}

TEST_CASE("exploratory command falls back to the default with too few episodes") {
  ReplayBuffer empty;
  Rng rng(1);
  CHECK(exploratory_command(empty, EnvKind::bandit, rng, 20) == Command{0.0, 1, Morethan::more});
  CHECK(exploratory_command(empty, EnvKind::cartpole, rng, 20) == Command{1.0, 200, Morethan::more});
  CHECK(default_exploratory_command(EnvKind::bandit) == Command{0.0, 1, Morethan::more});
  ReplayBuffer few;
  for (int i = 0; i < 19; ++i) few.push(bandit_episode(6));
  CHECK(exploratory_command(few, EnvKind::bandit, rng, 20) == default_exploratory_command(EnvKind::bandit));
  CHECK_THROWS_AS(exploratory_command(few, EnvKind::bandit, rng, 0), Error);
}

TEST_CASE("rollout updates the command after every reward") {
  CartPoleEnv env;
  Rng rng(8);
  std::vector<Command> seen;
  const ActionSelector record = [&seen](std::span<const double>, const Command& c, Rng& r) {
    seen.push_back(c);
    return r.uniform_index(2);
  };
  const Episode ep = rollout(env, record, {50.0, 200, Morethan::equal}, rng, 200);
  REQUIRE(seen.size() == ep.length());
  for (std::size_t t = 0; t < seen.size(); ++t) {
    CHECK(seen[t].desired == 50.0 - static_cast<double>(t));
    CHECK(seen[t].horizon == 200 - t);
    CHECK(seen[t].morethan == Morethan::equal);
  }
  CHECK(ep.total_return() == static_cast<double>(ep.length()));
}

TEST_CASE("rollout respects the step cap") {
  CartPoleEnv env;
  Rng rng(2);
  // Alternating actions keep the pole up for a long time.
  std::size_t calls = 0;
  const ActionSelector alternate = [&calls](std::span<const double>, const Command&, Rng&) { return calls++ % 2; };
  const Episode ep = rollout(env, alternate, {}, rng, 5);
  CHECK(ep.length() == 5);
  CHECK_THROWS_AS(rollout(env, alternate, {}, rng, 0), Error);

  BanditEnv bandit;
  const Episode b = rollout(bandit, uniform_selector(6), {}, rng, 1);
  CHECK(b.length() == 1);
  CHECK(b.total_return() == static_cast<double>(b[0].action + 1));
}

TEST_CASE("evaluate_bandit on a zero network is uniform") {
  for (BanditEncoding enc : {BanditEncoding::joint, BanditEncoding::factored}) {
    const BanditTable table = evaluate_bandit(zero_bandit_policy(enc));
    for (const auto& row : table)
      for (const auto& probs : row) {
        REQUIRE(probs.size() == 6);
        for (double p : probs) CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
      }
  }
}

TEST_CASE("evaluate_bandit rows are distributions for trained-looking nets") {
  Rng rng(10);
  const Policy policy{make_policy_net({Architecture::plain_mlp, 0, 21, 32, 6, Activation::relu}, rng), EnvKind::bandit,
                      BanditEncoding::joint};
  const BanditTable table = evaluate_bandit(policy);
  for (const auto& row : table)
    for (const auto& probs : row) CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(evaluate_cartpole(policy, 10.0, Morethan::equal, 1, rng), Error);
}

TEST_CASE("evaluate_cartpole returns one observed return per episode") {
  const Policy policy = biased_cartpole_policy(0.5, 0.5);
  Rng rng(12);
  const auto returns = evaluate_cartpole(policy, 100.0, Morethan::equal, 25, rng);
  CHECK(returns.size() == 25);
  for (double r : returns) {
    CHECK(r >= 1.0);
    CHECK(r <= 200.0);
    CHECK(r == std::floor(r));
  }
  CHECK_THROWS_AS(evaluate_cartpole(policy, -1.0, Morethan::equal, 1, rng), Error);
}
