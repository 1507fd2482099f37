#pragma once

#include <cstddef>
#include <vector>

#include "udrl/nn.hpp"

namespace udrl {

// Training samples packed row-major for the batched kernels.
struct PackedBatch {
  std::size_t obs_width = 0;
  std::size_t cmd_width = 0;
  std::vector<double> obs;  // size() x obs_width
  std::vector<double> cmd;  // size() x cmd_width
  std::vector<std::size_t> targets;

  std::size_t size() const { return targets.size(); }
  void clear() {
    obs.clear();
    cmd.clear();
    targets.clear();
  }
};

// Scratch buffers reused across calls: transposed weights plus one gradient
// accumulator per fixed-size chunk of the batch.
class GradientWorkspace {
 public:
  // Samples per accumulation chunk. The reduction order depends only on this
  // constant, so results are bitwise identical for any OpenMP thread count.
  static constexpr std::size_t kChunk = 16;

 private:
  friend double batch_gradient(const GatedPolicyNet&, const PackedBatch&, NetGradients&, GradientWorkspace&);
  std::vector<double> obs_wt_;   // in x hidden
  std::vector<double> gate_wt_;  // cmd x hidden
  std::vector<std::vector<double>> partials_;
};

// Mean cross-entropy loss over the batch; writes the mean gradient into grads
// (which is resized to match net). OpenMP-parallel over chunks.
double batch_gradient(const GatedPolicyNet& net, const PackedBatch& batch, NetGradients& grads,
                      GradientWorkspace& workspace);
double batch_gradient(const GatedPolicyNet& net, const PackedBatch& batch, NetGradients& grads);

namespace reference {

// Serial per-sample forward()/backward() accumulation; the ground truth the
// parallel kernel is tested against.
double batch_gradient(const GatedPolicyNet& net, const PackedBatch& batch, NetGradients& grads);

}  // namespace reference

}  // namespace udrl
