#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "udrl/agent.hpp"
#include "udrl/batch_kernels.hpp"
#include "udrl/config.hpp"
#include "udrl/optimizer.hpp"
#include "udrl/replay.hpp"

namespace udrl {

struct MetricsRecord {
  std::size_t iteration = 0;
  std::size_t env_steps_so_far = 0;
  std::size_t episodes_so_far = 0;
  double mean_recent_return = 0.0;  // episodes collected this iteration
  double mean_batch_loss = 0.0;     // over this iteration's gradient steps
  std::array<double, 3> m_label_frequencies{0.0, 0.0, 0.0};  // m = -1, 0, +1

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

// One JSON object, no trailing newline.
std::string to_json_line(const MetricsRecord& record);
MetricsRecord metrics_from_json(const std::string& line);

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  ExperimentConfig config;
  GatedPolicyNet net;
  OptimizerState optimizer;
  Rng rng;
  std::size_t iteration = 0;
  std::size_t env_steps = 0;
  std::size_t episodes = 0;
  bool warmed_up = false;
  std::optional<ReplayBuffer> buffer;

  Policy policy() const { return Policy{net, config.env_kind, config.bandit_encoding}; }
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Online UDRL training loop. One instance is strictly single-threaded apart
// from the batched gradient kernel, whose results do not depend on the
// thread count.
class Trainer {
 public:
  explicit Trainer(ExperimentConfig config);
  // Resumes from a checkpoint, which must include the replay buffer.
  explicit Trainer(Checkpoint checkpoint);

  bool finished() const { return env_steps_ >= config_.total_env_steps; }

  // Collect, train, record. The first call also performs the random-action
  // warm-up fill of the buffer.
  MetricsRecord run_iteration();

  Checkpoint checkpoint(bool include_buffer = true) const;

  const ExperimentConfig& config() const { return config_; }
  const Policy& policy() const { return policy_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  std::size_t env_steps() const { return env_steps_; }
  std::size_t iteration() const { return iteration_; }

  // Called with every relabeled batch right before its gradient step.
  void set_sample_observer(std::function<void(std::span<const TrainingSample>)> observer) {
    observer_ = std::move(observer);
  }

 private:
  void collect(const ActionSelector& select, bool exploratory, double* return_sum, std::size_t* count);
  double gradient_step(std::span<const TrainingSample> samples);

  ExperimentConfig config_;
  Policy policy_;
  OptimizerState optimizer_;
  Rng rng_;
  ReplayBuffer buffer_;
  std::unique_ptr<Environment> env_;
  std::size_t iteration_ = 0;
  std::size_t env_steps_ = 0;
  std::size_t episodes_ = 0;
  bool warmed_up_ = false;

  PackedBatch packed_;
  NetGradients grads_;
  GradientWorkspace workspace_;
  std::function<void(std::span<const TrainingSample>)> observer_;
};

std::unique_ptr<Environment> make_environment(EnvKind kind);

// Runs a fresh training job to completion, streaming one record per iteration.
Checkpoint train(const ExperimentConfig& config, const std::function<void(const MetricsRecord&)>& sink = {});

}  // namespace udrl
