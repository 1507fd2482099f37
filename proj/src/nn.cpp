#include "udrl/nn.hpp"

#include <algorithm>
#include <cmath>

#include "udrl/error.hpp"

namespace udrl {

double activate(Activation act, double x) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

double activation_slope(Activation act, double y) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: return 1.0 - y * y;
    case Activation::sigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  throw Error("unknown activation '" + name + "'");
}

std::string to_string(Architecture arch) { return arch == Architecture::gated ? "gated" : "plain_mlp"; }

Architecture architecture_from_string(const std::string& name) {
  if (name == "gated") return Architecture::gated;
  if (name == "plain_mlp") return Architecture::plain_mlp;
  throw Error("unknown architecture '" + name + "'");
}

namespace {

void check_layer(const DenseLayer& layer, const char* name) {
  if (layer.weights.rows() == 0 || layer.weights.cols() == 0)
    throw Error(std::string(name) + ": weights must be non-empty");
  if (layer.bias.size() != layer.weights.rows())
    throw Error(std::string(name) + ": bias length differs from weight rows");
}

template <typename Layer, typename Span>
void append_layer_blocks(Layer& layer, std::vector<Span>& out) {
  out.emplace_back(layer.weights.values());
  out.emplace_back(layer.bias);
}

DenseLayer make_layer(std::size_t out, std::size_t in, Activation act) {
  return DenseLayer{Matrix(out, in), std::vector<double>(out, 0.0), act};
}

}  // namespace

void GatedPolicyNet::validate() const {
  check_layer(obs_layer, "obs_layer");
  check_layer(out_layer, "out_layer");
  if (out_layer.in_width() != hidden_width()) throw Error("out_layer input width differs from hidden width");
  if (arch == Architecture::gated) {
    if (!gate_layer) throw Error("gated net is missing its gate layer");
    check_layer(*gate_layer, "gate_layer");
    if (gate_layer->out_width() != obs_layer.out_width())
      throw Error("gate_layer and obs_layer hidden widths differ");
    if (gate_layer->activation != Activation::sigmoid) throw Error("gate_layer must use sigmoid");
  } else if (gate_layer) {
    throw Error("plain_mlp net must not carry a gate layer");
  }
}

std::vector<std::span<double>> GatedPolicyNet::parameter_blocks() {
  std::vector<std::span<double>> blocks;
  append_layer_blocks(obs_layer, blocks);
  if (gate_layer) append_layer_blocks(*gate_layer, blocks);
  append_layer_blocks(out_layer, blocks);
  return blocks;
}

std::vector<std::span<const double>> GatedPolicyNet::parameter_blocks() const {
  std::vector<std::span<const double>> blocks;
  append_layer_blocks(obs_layer, blocks);
  if (gate_layer) append_layer_blocks(*gate_layer, blocks);
  append_layer_blocks(out_layer, blocks);
  return blocks;
}

std::vector<std::string> GatedPolicyNet::parameter_labels() const {
  std::vector<std::string> labels{"obs_layer.weights", "obs_layer.bias"};
  if (gate_layer) {
    labels.emplace_back("gate_layer.weights");
    labels.emplace_back("gate_layer.bias");
  }
  labels.emplace_back("out_layer.weights");
  labels.emplace_back("out_layer.bias");
  return labels;
}

std::size_t GatedPolicyNet::parameter_count() const {
  std::size_t n = 0;
  for (auto block : parameter_blocks()) n += block.size();
  return n;
}

GatedPolicyNet make_zero_net(const NetShape& shape) {
  if (shape.cmd_width == 0 || shape.hidden_width == 0 || shape.action_count == 0)
    throw Error("net shape widths must be positive");
  GatedPolicyNet net;
  net.arch = shape.arch;
  if (shape.arch == Architecture::gated) {
    if (shape.obs_width == 0) throw Error("gated net needs a positive observation width");
    net.obs_layer = make_layer(shape.hidden_width, shape.obs_width, shape.hidden_activation);
    net.gate_layer = make_layer(shape.hidden_width, shape.cmd_width, Activation::sigmoid);
  } else {
    net.obs_layer = make_layer(shape.hidden_width, shape.cmd_width, shape.hidden_activation);
  }
  net.out_layer = make_layer(shape.action_count, shape.hidden_width, Activation::identity);
  return net;
}

GatedPolicyNet make_policy_net(const NetShape& shape, Rng& rng) {
  GatedPolicyNet net = make_zero_net(shape);
  auto init = [&rng](DenseLayer& layer) {
    layer.weights = orthogonal_init(layer.out_width(), layer.in_width(), rng);
  };
  init(net.obs_layer);
  if (net.gate_layer) init(*net.gate_layer);
  init(net.out_layer);
  return net;
}

Matrix orthogonal_init(std::size_t rows, std::size_t cols, Rng& rng, double gain) {
  if (rows == 0 || cols == 0) throw Error("orthogonal_init: dimensions must be positive");
  // Work on a tall n x k matrix (n >= k) and orthonormalize its columns.
  const bool wide = rows < cols;
  const std::size_t n = wide ? cols : rows;
  const std::size_t k = wide ? rows : cols;
  Matrix q(n, k);
  for (double& v : q.values()) v = rng.normal();

  // Modified Gram-Schmidt with one re-orthogonalization pass. The resulting R
  // has a positive diagonal, which is the sign convention that makes Q
  // Haar-distributed.
  for (std::size_t j = 0; j < k; ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < j; ++p) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += q(i, p) * q(i, j);
        for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, p);
      }
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    if (norm < 1e-10) {
      // Degenerate draw; resample this column and retry.
      for (std::size_t i = 0; i < n; ++i) q(i, j) = rng.normal();
      --j;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
  }
  if (gain != 1.0)
    for (double& v : q.values()) v *= gain;
  return wide ? q.transposed() : q;
}

namespace {

void dense(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
  out.resize(layer.out_width());
  for (std::size_t r = 0; r < layer.out_width(); ++r) {
    double acc = layer.bias[r];
    const auto w = layer.weights.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) acc += w[c] * in[c];
    out[r] = activate(layer.activation, acc);
  }
}

}  // namespace

ForwardCache forward(const GatedPolicyNet& net, std::span<const double> obs, std::span<const double> cmd) {
  ForwardCache cache;
  cache.net_version = net.version;
  cache.arch = net.arch;
  cache.obs.assign(obs.begin(), obs.end());
  cache.cmd.assign(cmd.begin(), cmd.end());
  if (net.arch == Architecture::gated) {
    if (obs.size() != net.obs_layer.in_width()) throw Error("forward: observation width mismatch");
    if (cmd.size() != net.gate_layer->in_width()) throw Error("forward: command width mismatch");
    dense(net.obs_layer, obs, cache.features);
    dense(*net.gate_layer, cmd, cache.gate);
    cache.hidden.resize(cache.features.size());
    for (std::size_t j = 0; j < cache.hidden.size(); ++j) cache.hidden[j] = cache.features[j] * cache.gate[j];
  } else {
    if (!obs.empty()) throw Error("forward: plain_mlp takes no observation");
    if (cmd.size() != net.obs_layer.in_width()) throw Error("forward: command width mismatch");
    dense(net.obs_layer, cmd, cache.features);
    cache.hidden = cache.features;
  }
  dense(net.out_layer, cache.hidden, cache.logits);
  return cache;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double cross_entropy(std::span<const double> probs, std::size_t target) {
  if (target >= probs.size()) throw Error("cross_entropy: target index out of range");
  return -std::log(std::max(probs[target], 1e-12));
}

NetGradients NetGradients::zeros_like(const GatedPolicyNet& net) {
  auto zeros = [](const DenseLayer& layer) {
    return LayerGradient{Matrix(layer.out_width(), layer.in_width()), std::vector<double>(layer.out_width(), 0.0)};
  };
  NetGradients g;
  g.obs = zeros(net.obs_layer);
  if (net.gate_layer) g.gate = zeros(*net.gate_layer);
  g.out = zeros(net.out_layer);
  return g;
}

std::vector<std::span<double>> NetGradients::blocks() {
  std::vector<std::span<double>> out;
  append_layer_blocks(obs, out);
  if (gate) append_layer_blocks(*gate, out);
  append_layer_blocks(this->out, out);
  return out;
}

std::vector<std::span<const double>> NetGradients::blocks() const {
  std::vector<std::span<const double>> out;
  append_layer_blocks(obs, out);
  if (gate) append_layer_blocks(*gate, out);
  append_layer_blocks(this->out, out);
  return out;
}

NetGradients& NetGradients::operator+=(const NetGradients& other) {
  auto mine = blocks();
  const auto theirs = other.blocks();
  if (mine.size() != theirs.size()) throw Error("NetGradients: block count mismatch");
  for (std::size_t b = 0; b < mine.size(); ++b) {
    if (mine[b].size() != theirs[b].size()) throw Error("NetGradients: block shape mismatch");
    for (std::size_t i = 0; i < mine[b].size(); ++i) mine[b][i] += theirs[b][i];
  }
  return *this;
}

NetGradients& NetGradients::operator*=(double factor) {
  for (auto block : blocks())
    for (double& v : block) v *= factor;
  return *this;
}

void NetGradients::set_zero() {
  for (auto block : blocks()) std::fill(block.begin(), block.end(), 0.0);
}

bool NetGradients::all_finite() const {
  for (auto block : blocks())
    for (double v : block)
      if (!std::isfinite(v)) return false;
  return true;
}

NetGradients backward(const GatedPolicyNet& net, const ForwardCache& cache, std::size_t target) {
  if (cache.net_version != net.version || cache.arch != net.arch ||
      cache.logits.size() != net.action_count() || cache.hidden.size() != net.hidden_width())
    throw Error("backward: forward cache does not belong to this network state");
  if (target >= net.action_count()) throw Error("backward: target index out of range");

  NetGradients g = NetGradients::zeros_like(net);
  const std::size_t hidden = net.hidden_width();
  const std::size_t actions = net.action_count();

  // d loss / d logits = softmax - onehot
  std::vector<double> dz = softmax(cache.logits);
  dz[target] -= 1.0;

  std::vector<double> dh(hidden, 0.0);
  for (std::size_t a = 0; a < actions; ++a) {
    g.out.bias[a] = dz[a];
    const auto w = net.out_layer.weights.row(a);
    auto gw = g.out.weights.row(a);
    for (std::size_t j = 0; j < hidden; ++j) {
      gw[j] = dz[a] * cache.hidden[j];
      dh[j] += w[j] * dz[a];
    }
  }

  const bool gated = net.arch == Architecture::gated;
  const std::span<const double> obs_input = gated ? std::span<const double>(cache.obs) : std::span<const double>(cache.cmd);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double gate = gated ? cache.gate[j] : 1.0;
    const double da = dh[j] * gate * activation_slope(net.obs_layer.activation, cache.features[j]);
    g.obs.bias[j] = da;
    auto gw = g.obs.weights.row(j);
    for (std::size_t k = 0; k < obs_input.size(); ++k) gw[k] = da * obs_input[k];
    if (gated) {
      const double dg = dh[j] * cache.features[j] * activation_slope(Activation::sigmoid, cache.gate[j]);
      g.gate->bias[j] = dg;
      auto gg = g.gate->weights.row(j);
      for (std::size_t k = 0; k < cache.cmd.size(); ++k) gg[k] = dg * cache.cmd[k];
    }
  }
  return g;
}

}  // namespace udrl
