#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "udrl/matrix.hpp"
#include "udrl/rng.hpp"

namespace udrl {

enum class Activation { identity, relu, tanh, sigmoid };

double activate(Activation act, double x);
// Derivative expressed through the activation's output y = act(x). For relu
// this is 1 when y > 0, matching the subgradient convention at x = 0.
double activation_slope(Activation act, double y);

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Matrix weights;  // out x in
  std::vector<double> bias;
  Activation activation = Activation::identity;

  std::size_t in_width() const { return weights.cols(); }
  std::size_t out_width() const { return weights.rows(); }
};

// plain_mlp: the command encoding is the whole input (obs_layer consumes it).
// gated: hidden = act(W_o obs + b_o) * sigmoid(W_g cmd + b_g), elementwise.
enum class Architecture { plain_mlp, gated };

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

struct NetShape {
  Architecture arch = Architecture::gated;
  std::size_t obs_width = 0;  // ignored for plain_mlp
  std::size_t cmd_width = 0;
  std::size_t hidden_width = 32;
  std::size_t action_count = 2;
  Activation hidden_activation = Activation::tanh;
};

struct GatedPolicyNet {
  Architecture arch = Architecture::gated;
  DenseLayer obs_layer;
  std::optional<DenseLayer> gate_layer;
  DenseLayer out_layer;
  // Bumped on every parameter update so stale forward caches can be detected.
  std::uint64_t version = 0;

  std::size_t observation_width() const { return arch == Architecture::gated ? obs_layer.in_width() : 0; }
  std::size_t command_width() const {
    return arch == Architecture::gated ? gate_layer->in_width() : obs_layer.in_width();
  }
  std::size_t hidden_width() const { return obs_layer.out_width(); }
  std::size_t action_count() const { return out_layer.out_width(); }

  // Throws udrl::Error if the layer shapes are inconsistent.
  void validate() const;

  // Parameter blocks in a fixed order: obs W, obs b, [gate W, gate b,] out W, out b.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;
  std::vector<std::string> parameter_labels() const;
  std::size_t parameter_count() const;
};

// Orthogonally initialized weights (gain 1), zero biases.
GatedPolicyNet make_policy_net(const NetShape& shape, Rng& rng);
GatedPolicyNet make_zero_net(const NetShape& shape);

// Orthogonal (rows <= cols: orthonormal rows) or semi-orthogonal (rows > cols:
// orthonormal columns) matrix from the QR factorization of a Gaussian draw.
Matrix orthogonal_init(std::size_t rows, std::size_t cols, Rng& rng, double gain = 1.0);

struct ForwardCache {
  std::uint64_t net_version = 0;
  Architecture arch = Architecture::gated;
  std::vector<double> obs;
  std::vector<double> cmd;
  std::vector<double> features;  // activated obs pathway
  std::vector<double> gate;      // gated only
  std::vector<double> hidden;
  std::vector<double> logits;
};

ForwardCache forward(const GatedPolicyNet& net, std::span<const double> obs, std::span<const double> cmd);

std::vector<double> softmax(std::span<const double> logits);
double cross_entropy(std::span<const double> probs, std::size_t target);

struct LayerGradient {
  Matrix weights;
  std::vector<double> bias;
};

struct NetGradients {
  LayerGradient obs;
  std::optional<LayerGradient> gate;
  LayerGradient out;

  static NetGradients zeros_like(const GatedPolicyNet& net);

  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  NetGradients& operator+=(const NetGradients& other);
  NetGradients& operator*=(double factor);
  void set_zero();
  bool all_finite() const;
};

// Gradient of cross_entropy(softmax(logits), target) with respect to every
// parameter, for the sample recorded in cache.
NetGradients backward(const GatedPolicyNet& net, const ForwardCache& cache, std::size_t target);

}  // namespace udrl
