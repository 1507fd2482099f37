#include "udrl/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "udrl/batch_kernels.hpp"
#include "udrl/envs.hpp"
#include "udrl/nn.hpp"
#include "udrl/replay.hpp"

namespace udrl::selftest {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

NetShape random_shape(Rng& rng, bool gated) {
  NetShape s;
  s.arch = gated ? Architecture::gated : Architecture::plain_mlp;
  s.obs_width = gated ? 1 + rng.uniform_index(5) : 0;
  s.cmd_width = 1 + rng.uniform_index(8);
  s.hidden_width = 1 + rng.uniform_index(12);
  s.action_count = 2 + rng.uniform_index(5);
  s.hidden_activation = gated ? (rng.uniform() < 0.5 ? Activation::tanh : Activation::relu) : Activation::relu;
  return s;
}

// Random net with nonzero biases so every code path is exercised.
GatedPolicyNet random_net(Rng& rng, bool gated) {
  GatedPolicyNet net = make_policy_net(random_shape(rng, gated), rng);
  for (auto block : net.parameter_blocks())
    for (double& v : block) v += 0.3 * rng.normal();
  return net;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

double loss_of(const GatedPolicyNet& net, const std::vector<double>& obs, const std::vector<double>& cmd,
               std::size_t target) {
  return cross_entropy(softmax(forward(net, obs, cmd).logits), target);
}

}  // namespace

CheckReport check_gradients(std::size_t nets, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckReport r{"gradient_finite_difference", true, 0.0, 1e-4, 0.0, ""};
  Rng rng(seed);
  constexpr double h = 1e-5;
  for (std::size_t n = 0; n < nets; ++n) {
    GatedPolicyNet net = random_net(rng, n % 2 == 0);
    const auto obs = random_vector(rng, net.observation_width());
    auto cmd = random_vector(rng, net.command_width());
    const std::size_t target = rng.uniform_index(net.action_count());
    const NetGradients analytic = backward(net, forward(net, obs, cmd), target);

    const auto grad_blocks = analytic.blocks();
    auto params = net.parameter_blocks();
    for (std::size_t b = 0; b < params.size(); ++b) {
      for (std::size_t i = 0; i < params[b].size(); ++i) {
        const double saved = params[b][i];
        params[b][i] = saved + h;
        const double up = loss_of(net, obs, cmd, target);
        params[b][i] = saved - h;
        const double down = loss_of(net, obs, cmd, target);
        params[b][i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = grad_blocks[b][i];
        // Relative error with a small floor so vanishing gradients are
        // compared on an absolute scale.
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        r.worst = std::max(r.worst, rel);
      }
    }
  }
  r.passed = r.worst < r.threshold;
  r.detail = std::to_string(nets) + " nets";
  r.seconds = seconds_since(start);
  return r;
}

CheckReport check_orthogonality(std::size_t shapes, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckReport r{"orthogonal_init", true, 0.0, 1e-5, 0.0, ""};
  Rng rng(seed);
  for (std::size_t s = 0; s < shapes; ++s) {
    const std::size_t rows = 1 + rng.uniform_index(64);
    const std::size_t cols = 1 + rng.uniform_index(64);
    const Matrix w = orthogonal_init(rows, cols, rng);
    const Matrix gram = rows <= cols ? w * w.transposed() : w.transposed() * w;
    r.worst = std::max(r.worst, max_abs_diff(gram, Matrix::identity(gram.rows())));
  }
  r.passed = r.worst < r.threshold;
  r.detail = std::to_string(shapes) + " shapes";
  r.seconds = seconds_since(start);
  return r;
}

namespace {

struct TaggedSegment {
  Segment segment;
  std::size_t episode = 0;
  std::size_t start = 0;
};

// Written without relabel_pair: scans every candidate achiever j and keeps the
// one the permutation names.
std::vector<TrainingSample> brute_force_pairing(const std::vector<Segment>& segs, const std::vector<std::size_t>& perm) {
  std::vector<TrainingSample> out;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (std::size_t j = 0; j < segs.size(); ++j) {
      if (perm[i] != j) continue;
      TrainingSample s;
      s.observation = segs[j].observation;
      s.desired = segs[i].return_to_go;
      s.horizon = segs[j].horizon;
      const double gi = segs[i].return_to_go;
      const double gj = segs[j].return_to_go;
      s.morethan = static_cast<Morethan>((gj > gi) - (gj < gi));
      s.target_action = segs[j].action;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

CheckReport check_relabeling(std::size_t instances, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckReport r{"relabeling_oracle", true, 0.0, 0.0, 0.0, ""};
  Rng rng(seed);
  std::size_t mismatches = 0;
  std::size_t unsound = 0;
  std::size_t samples_checked = 0;
  for (std::size_t inst = 0; inst < instances; ++inst) {
    // Random episodes with integer rewards so ties (m = 0) occur often.
    const std::size_t n_episodes = 1 + rng.uniform_index(8);
    std::vector<Episode> episodes(n_episodes);
    for (auto& ep : episodes) {
      const std::size_t len = 1 + rng.uniform_index(6);
      for (std::size_t t = 0; t < len; ++t)
        ep.append({rng.normal()}, rng.uniform_index(4), static_cast<double>(rng.uniform_index(4)));
    }
    const std::size_t n = 1 + rng.uniform_index(24);
    std::vector<TaggedSegment> tagged;
    std::vector<Segment> segs;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t e = rng.uniform_index(n_episodes);
      const std::size_t t = rng.uniform_index(episodes[e].length());
      tagged.push_back({extract_segment(episodes[e], t), e, t});
      segs.push_back(tagged.back().segment);
    }
    const auto perm = rng.permutation(n);
    const auto produced = make_training_batch(segs, perm);
    if (produced != brute_force_pairing(segs, perm)) ++mismatches;

    for (std::size_t i = 0; i < n; ++i) {
      const auto& ach = tagged[perm[i]];
      const Episode& ep = episodes[ach.episode];
      double achieved = 0.0;
      for (std::size_t t = ach.start; t < ep.length(); ++t) achieved += ep[t].reward;
      const auto& s = produced[i];
      const bool holds = (s.morethan == Morethan::more && achieved > s.desired) ||
                         (s.morethan == Morethan::equal && achieved == s.desired) ||
                         (s.morethan == Morethan::less && achieved < s.desired);
      const bool within_horizon = s.horizon == ep.length() - ach.start;
      if (!holds || !within_horizon || s.target_action != ep[ach.start].action) ++unsound;
      ++samples_checked;
    }
  }
  r.worst = static_cast<double>(mismatches + unsound);
  r.passed = mismatches == 0 && unsound == 0;
  r.detail = std::to_string(instances) + " instances, " + std::to_string(samples_checked) + " samples, " +
             std::to_string(mismatches) + " oracle mismatches, " + std::to_string(unsound) + " unsound samples";
  r.seconds = seconds_since(start);
  return r;
}

namespace {

std::vector<double> naive_layer(const DenseLayer& layer, const std::vector<double>& in) {
  std::vector<double> out;
  for (std::size_t r = 0; r < layer.weights.rows(); ++r) {
    double z = 0.0;
    for (std::size_t c = 0; c < layer.weights.cols(); ++c) z += layer.weights(r, c) * in[c];
    z += layer.bias[r];
    switch (layer.activation) {
      case Activation::identity: break;
      case Activation::relu: z = std::max(0.0, z); break;
      case Activation::tanh: z = (std::exp(z) - std::exp(-z)) / (std::exp(z) + std::exp(-z)); break;
      case Activation::sigmoid: z = std::exp(z) / (1.0 + std::exp(z)); break;
    }
    out.push_back(z);
  }
  return out;
}

}  // namespace

CheckReport check_forward_oracle(std::size_t nets, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckReport r{"forward_oracle", true, 0.0, 1e-10, 0.0, ""};
  Rng rng(seed);
  for (std::size_t n = 0; n < nets; ++n) {
    const GatedPolicyNet net = random_net(rng, n % 2 == 0);
    const auto obs = random_vector(rng, net.observation_width());
    const auto cmd = random_vector(rng, net.command_width());
    std::vector<double> hidden;
    if (net.arch == Architecture::gated) {
      const auto f = naive_layer(net.obs_layer, obs);
      const auto g = naive_layer(*net.gate_layer, cmd);
      for (std::size_t j = 0; j < f.size(); ++j) hidden.push_back(f[j] * g[j]);
    } else {
      hidden = naive_layer(net.obs_layer, cmd);
    }
    const auto expected = naive_layer(net.out_layer, hidden);
    const auto got = forward(net, obs, cmd).logits;
    for (std::size_t a = 0; a < got.size(); ++a) r.worst = std::max(r.worst, std::abs(got[a] - expected[a]));
  }
  r.passed = r.worst < r.threshold;
  r.detail = std::to_string(nets) + " nets";
  r.seconds = seconds_since(start);
  return r;
}

CheckReport check_batch_kernel(std::size_t batches, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckReport r{"batch_kernel_vs_reference", true, 0.0, 1e-10, 0.0, ""};
  Rng rng(seed);
  GradientWorkspace ws;
  for (std::size_t b = 0; b < batches; ++b) {
    const GatedPolicyNet net = random_net(rng, b % 2 == 0);
    PackedBatch batch;
    batch.obs_width = net.observation_width();
    batch.cmd_width = net.command_width();
    const std::size_t n = 1 + rng.uniform_index(70);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < batch.obs_width; ++k) batch.obs.push_back(rng.normal());
      for (std::size_t k = 0; k < batch.cmd_width; ++k) batch.cmd.push_back(rng.normal());
      batch.targets.push_back(rng.uniform_index(net.action_count()));
    }
    NetGradients fast;
    NetGradients slow;
    const double loss_fast = batch_gradient(net, batch, fast, ws);
    const double loss_slow = reference::batch_gradient(net, batch, slow);
    r.worst = std::max(r.worst, std::abs(loss_fast - loss_slow));
    const auto fb = fast.blocks();
    const auto sb = slow.blocks();
    for (std::size_t k = 0; k < fb.size(); ++k)
      for (std::size_t i = 0; i < fb[k].size(); ++i) r.worst = std::max(r.worst, std::abs(fb[k][i] - sb[k][i]));
  }
  r.passed = r.worst < r.threshold;
  r.detail = std::to_string(batches) + " batches";
  r.seconds = seconds_since(start);
  return r;
}

CheckReport check_cartpole_symmetry(std::size_t pairs, std::uint64_t seed) {
  const auto start = Clock::now();
  CheckReport r{"cartpole_mirror_symmetry", true, 0.0, 1e-12, 0.0, ""};
  Rng rng(seed);
  for (std::size_t p = 0; p < pairs; ++p) {
    CartPoleState s;
    s.cart_position = rng.uniform(-2.4, 2.4);
    s.cart_velocity = rng.uniform(-3.0, 3.0);
    s.pole_angle = rng.uniform(-0.2, 0.2);
    s.pole_angular_velocity = rng.uniform(-3.0, 3.0);
    const CartPoleState mirrored{-s.cart_position, -s.cart_velocity, -s.pole_angle, -s.pole_angular_velocity};
    const bool right = rng.uniform() < 0.5;
    const auto a = cartpole_step(s, right ? CartPoleAction::right : CartPoleAction::left).first;
    const auto b = cartpole_step(mirrored, right ? CartPoleAction::left : CartPoleAction::right).first;
    r.worst = std::max({r.worst, std::abs(a.cart_position + b.cart_position),
                        std::abs(a.cart_velocity + b.cart_velocity), std::abs(a.pole_angle + b.pole_angle),
                        std::abs(a.pole_angular_velocity + b.pole_angular_velocity)});
  }
  r.passed = r.worst <= r.threshold;
  r.detail = std::to_string(pairs) + " pairs";
  r.seconds = seconds_since(start);
  return r;
}

std::vector<CheckReport> run_all(std::uint64_t seed) {
  return {check_gradients(50, seed),        check_orthogonality(100, seed + 1), check_relabeling(1000, seed + 2),
          check_forward_oracle(50, seed + 3), check_batch_kernel(50, seed + 4),  check_cartpole_symmetry(1000, seed + 5)};
}

std::string format_report(const CheckReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "[%s] %-28s worst=%.3g threshold=%.3g time=%.2fs (%s)", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.worst, r.threshold, r.seconds, r.detail.c_str());
  return buf;
}

}  // namespace udrl::selftest
