#include "udrl/batch_kernels.hpp"

#include <algorithm>
#include <cmath>

#include "udrl/error.hpp"

namespace udrl {

namespace {

void check_batch(const GatedPolicyNet& net, const PackedBatch& batch) {
  if (batch.size() == 0) throw Error("batch_gradient: empty batch");
  const bool gated = net.arch == Architecture::gated;
  if (batch.obs_width != net.observation_width() || batch.cmd_width != net.command_width())
    throw Error("batch_gradient: batch widths do not match the network");
  if (batch.obs.size() != batch.size() * batch.obs_width || batch.cmd.size() != batch.size() * batch.cmd_width)
    throw Error("batch_gradient: packed buffer lengths are inconsistent");
  if (!gated && batch.obs_width != 0) throw Error("batch_gradient: plain_mlp batches carry no observations");
  for (std::size_t t : batch.targets)
    if (t >= net.action_count()) throw Error("batch_gradient: target index out of range");
}

void transpose_into(const Matrix& m, std::vector<double>& out) {
  out.resize(m.size());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[c * m.rows() + r] = m(r, c);
}

inline void apply_activation(Activation act, double* v, std::size_t n) {
  switch (act) {
    case Activation::identity: break;
    case Activation::relu:
      for (std::size_t j = 0; j < n; ++j) v[j] = v[j] > 0.0 ? v[j] : 0.0;
      break;
    case Activation::tanh:
      for (std::size_t j = 0; j < n; ++j) v[j] = std::tanh(v[j]);
      break;
    case Activation::sigmoid:
      for (std::size_t j = 0; j < n; ++j) v[j] = 1.0 / (1.0 + std::exp(-v[j]));
      break;
  }
}

// Flat layout of one gradient accumulator; weight blocks of the input layers
// are stored transposed (input-major) so the hidden index is contiguous.
struct Layout {
  std::size_t in, cmd, hidden, actions;
  bool gated;
  std::size_t obs_w() const { return 0; }
  std::size_t obs_b() const { return in * hidden; }
  std::size_t gate_w() const { return obs_b() + hidden; }
  std::size_t gate_b() const { return gate_w() + (gated ? cmd * hidden : 0); }
  std::size_t out_w() const { return gate_b() + (gated ? hidden : 0); }
  std::size_t out_b() const { return out_w() + actions * hidden; }
  std::size_t total() const { return out_b() + actions; }
};

}  // namespace

double batch_gradient(const GatedPolicyNet& net, const PackedBatch& batch, NetGradients& grads,
                      GradientWorkspace& ws) {
  check_batch(net, batch);
  const bool gated = net.arch == Architecture::gated;
  const Layout lay{gated ? batch.obs_width : batch.cmd_width, batch.cmd_width, net.hidden_width(),
                   net.action_count(), gated};
  const std::size_t n = batch.size();
  const std::size_t chunks = (n + GradientWorkspace::kChunk - 1) / GradientWorkspace::kChunk;

  transpose_into(net.obs_layer.weights, ws.obs_wt_);
  if (gated) transpose_into(net.gate_layer->weights, ws.gate_wt_);
  if (ws.partials_.size() < chunks) ws.partials_.resize(chunks);
  std::vector<double> chunk_loss(chunks, 0.0);

  const double* obs_wt = ws.obs_wt_.data();
  const double* gate_wt = ws.gate_wt_.data();
  const double* obs_b = net.obs_layer.bias.data();
  const double* gate_b = gated ? net.gate_layer->bias.data() : nullptr;
  const double* out_w = net.out_layer.weights.values().data();
  const double* out_b = net.out_layer.bias.data();
  const Activation hidden_act = net.obs_layer.activation;
  const std::size_t H = lay.hidden;
  const std::size_t A = lay.actions;

#pragma omp parallel
  {
    std::vector<double> f(H), g(H, 1.0), h(H), dh(H), da(H), dg(H), z(A);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) {
      auto& acc = ws.partials_[ci];
      acc.assign(lay.total(), 0.0);
      double* gow = acc.data() + lay.obs_w();
      double* gob = acc.data() + lay.obs_b();
      double* ggw = acc.data() + lay.gate_w();
      double* ggb = acc.data() + lay.gate_b();
      double* gyw = acc.data() + lay.out_w();
      double* gyb = acc.data() + lay.out_b();
      double loss = 0.0;

      const std::size_t begin = static_cast<std::size_t>(ci) * GradientWorkspace::kChunk;
      const std::size_t end = std::min(n, begin + GradientWorkspace::kChunk);
      for (std::size_t s = begin; s < end; ++s) {
        const double* c = batch.cmd.data() + s * lay.cmd;
        const double* x = gated ? batch.obs.data() + s * lay.in : c;

        std::copy(obs_b, obs_b + H, f.begin());
        for (std::size_t k = 0; k < lay.in; ++k) {
          const double xk = x[k];
          const double* w = obs_wt + k * H;
          for (std::size_t j = 0; j < H; ++j) f[j] += w[j] * xk;
        }
        apply_activation(hidden_act, f.data(), H);

        if (gated) {
          std::copy(gate_b, gate_b + H, g.begin());
          for (std::size_t k = 0; k < lay.cmd; ++k) {
            const double ck = c[k];
            const double* w = gate_wt + k * H;
            for (std::size_t j = 0; j < H; ++j) g[j] += w[j] * ck;
          }
          apply_activation(Activation::sigmoid, g.data(), H);
          for (std::size_t j = 0; j < H; ++j) h[j] = f[j] * g[j];
        } else {
          std::copy(f.begin(), f.end(), h.begin());
        }

        double peak = -INFINITY;
        for (std::size_t a = 0; a < A; ++a) {
          const double* w = out_w + a * H;
          double acc_z = out_b[a];
          for (std::size_t j = 0; j < H; ++j) acc_z += w[j] * h[j];
          z[a] = acc_z;
          peak = std::max(peak, acc_z);
        }
        double total = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          z[a] = std::exp(z[a] - peak);
          total += z[a];
        }
        const std::size_t target = batch.targets[s];
        for (std::size_t a = 0; a < A; ++a) z[a] /= total;
        loss += -std::log(std::max(z[target], 1e-12));
        z[target] -= 1.0;  // z now holds d loss / d logits

        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t a = 0; a < A; ++a) {
          const double dz = z[a];
          const double* w = out_w + a * H;
          double* gw = gyw + a * H;
          for (std::size_t j = 0; j < H; ++j) {
            gw[j] += dz * h[j];
            dh[j] += w[j] * dz;
          }
          gyb[a] += dz;
        }

        for (std::size_t j = 0; j < H; ++j) {
          const double slope = hidden_act == Activation::tanh   ? 1.0 - f[j] * f[j]
                               : hidden_act == Activation::relu ? (f[j] > 0.0 ? 1.0 : 0.0)
                               : activation_slope(hidden_act, f[j]);
          da[j] = dh[j] * g[j] * slope;
          gob[j] += da[j];
        }
        for (std::size_t k = 0; k < lay.in; ++k) {
          const double xk = x[k];
          double* gw = gow + k * H;
          for (std::size_t j = 0; j < H; ++j) gw[j] += da[j] * xk;
        }
        if (gated) {
          for (std::size_t j = 0; j < H; ++j) {
            dg[j] = dh[j] * f[j] * g[j] * (1.0 - g[j]);
            ggb[j] += dg[j];
          }
          for (std::size_t k = 0; k < lay.cmd; ++k) {
            const double ck = c[k];
            double* gw = ggw + k * H;
            for (std::size_t j = 0; j < H; ++j) gw[j] += dg[j] * ck;
          }
        }
      }
      chunk_loss[ci] = loss;
    }
  }

  // Ordered reduction over chunks.
  std::vector<double>& sum = ws.partials_[0];
  double loss = chunk_loss[0];
  for (std::size_t ci = 1; ci < chunks; ++ci) {
    const auto& part = ws.partials_[ci];
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += part[i];
    loss += chunk_loss[ci];
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  grads = NetGradients::zeros_like(net);
  auto scatter_transposed = [&](Matrix& dst, const double* src, std::size_t in) {
    for (std::size_t j = 0; j < H; ++j)
      for (std::size_t k = 0; k < in; ++k) dst(j, k) = src[k * H + j] * inv_n;
  };
  scatter_transposed(grads.obs.weights, sum.data() + lay.obs_w(), lay.in);
  for (std::size_t j = 0; j < H; ++j) grads.obs.bias[j] = sum[lay.obs_b() + j] * inv_n;
  if (gated) {
    scatter_transposed(grads.gate->weights, sum.data() + lay.gate_w(), lay.cmd);
    for (std::size_t j = 0; j < H; ++j) grads.gate->bias[j] = sum[lay.gate_b() + j] * inv_n;
  }
  auto out_vals = grads.out.weights.values();
  for (std::size_t i = 0; i < A * H; ++i) out_vals[i] = sum[lay.out_w() + i] * inv_n;
  for (std::size_t a = 0; a < A; ++a) grads.out.bias[a] = sum[lay.out_b() + a] * inv_n;
  return loss * inv_n;
}

double batch_gradient(const GatedPolicyNet& net, const PackedBatch& batch, NetGradients& grads) {
  GradientWorkspace ws;
  return batch_gradient(net, batch, grads, ws);
}

namespace reference {

double batch_gradient(const GatedPolicyNet& net, const PackedBatch& batch, NetGradients& grads) {
  check_batch(net, batch);
  grads = NetGradients::zeros_like(net);
  double loss = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const std::span<const double> obs(batch.obs.data() + s * batch.obs_width, batch.obs_width);
    const std::span<const double> cmd(batch.cmd.data() + s * batch.cmd_width, batch.cmd_width);
    const ForwardCache cache = forward(net, obs, cmd);
    loss += cross_entropy(softmax(cache.logits), batch.targets[s]);
    grads += backward(net, cache, batch.targets[s]);
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  grads *= inv_n;
  return loss * inv_n;
}

}  // namespace reference

}  // namespace udrl
