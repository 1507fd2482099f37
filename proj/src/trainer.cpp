#include "udrl/trainer.hpp"

#include "json.hpp"

#include "udrl/error.hpp"

namespace udrl {

std::string to_json_line(const MetricsRecord& r) {
  nlohmann::ordered_json j;
  j["iteration"] = r.iteration;
  j["env_steps_so_far"] = r.env_steps_so_far;
  j["episodes_so_far"] = r.episodes_so_far;
  j["mean_recent_return"] = r.mean_recent_return;
  j["mean_batch_loss"] = r.mean_batch_loss;
  j["m_label_frequencies"] = r.m_label_frequencies;
  return j.dump();
}

MetricsRecord metrics_from_json(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    MetricsRecord r;
    r.iteration = j.at("iteration").get<std::size_t>();
    r.env_steps_so_far = j.at("env_steps_so_far").get<std::size_t>();
    r.episodes_so_far = j.at("episodes_so_far").get<std::size_t>();
    r.mean_recent_return = j.at("mean_recent_return").get<double>();
    r.mean_batch_loss = j.at("mean_batch_loss").get<double>();
    r.m_label_frequencies = j.at("m_label_frequencies").get<std::array<double, 3>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed metrics record: ") + e.what());
  }
}

std::unique_ptr<Environment> make_environment(EnvKind kind) {
  if (kind == EnvKind::bandit) return std::make_unique<BanditEnv>();
  return std::make_unique<CartPoleEnv>();
}

namespace {

OptimizerState make_optimizer(const ExperimentConfig& c, const GatedPolicyNet& net) {
  return c.optimizer == OptimizerKind::adam ? make_adam(c.step_size, net) : make_sgd(c.step_size);
}

}  // namespace

Trainer::Trainer(ExperimentConfig config)
    : config_(std::move(config)), rng_(config_.seed), buffer_(config_.buffer_capacity) {
  config_.validate();
  policy_ = Policy{make_policy_net(net_shape(config_), rng_), config_.env_kind, config_.bandit_encoding};
  optimizer_ = make_optimizer(config_, policy_.net);
  env_ = make_environment(config_.env_kind);
}

Trainer::Trainer(Checkpoint cp)
    : config_(std::move(cp.config)),
      policy_{std::move(cp.net), config_.env_kind, config_.bandit_encoding},
      optimizer_(std::move(cp.optimizer)),
      rng_(cp.rng),
      iteration_(cp.iteration),
      env_steps_(cp.env_steps),
      episodes_(cp.episodes),
      warmed_up_(cp.warmed_up) {
  config_.validate();
  if (!cp.buffer) throw Error("cannot resume training from a checkpoint without its replay buffer");
  buffer_ = std::move(*cp.buffer);
  policy_.net.validate();
  env_ = make_environment(config_.env_kind);
}

Checkpoint Trainer::checkpoint(bool include_buffer) const {
  Checkpoint cp;
  cp.config = config_;
  cp.net = policy_.net;
  cp.optimizer = optimizer_;
  cp.rng = rng_;
  cp.iteration = iteration_;
  cp.env_steps = env_steps_;
  cp.episodes = episodes_;
  cp.warmed_up = warmed_up_;
  if (include_buffer) cp.buffer = buffer_;
  return cp;
}

void Trainer::collect(const ActionSelector& select, bool exploratory, double* return_sum, std::size_t* count) {
  for (std::size_t e = 0; e < config_.episodes_per_iteration && !finished(); ++e) {
    Command cmd = exploratory ? exploratory_command(buffer_, config_.env_kind, rng_, config_.best_k)
                              : default_exploratory_command(config_.env_kind);
    // Commands must speak the same horizon language as the relabeled samples.
    if (config_.segment_horizon == SegmentHorizon::budget) cmd.horizon = env_->step_cap();
    Episode episode = rollout(*env_, select, cmd, rng_, env_->step_cap());
    env_steps_ += episode.length();
    ++episodes_;
    if (return_sum) *return_sum += episode.total_return();
    if (count) ++*count;
    buffer_.push(std::move(episode));
  }
}

double Trainer::gradient_step(std::span<const TrainingSample> samples) {
  const std::size_t obs_width = policy_.net.observation_width();
  const std::size_t cmd_width = policy_.net.command_width();
  packed_.obs_width = obs_width;
  packed_.cmd_width = cmd_width;
  packed_.obs.resize(samples.size() * obs_width);
  packed_.cmd.resize(samples.size() * cmd_width);
  packed_.targets.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.observation.size() != obs_width) throw Error("training sample observation width mismatch");
    std::copy(s.observation.begin(), s.observation.end(), packed_.obs.begin() + i * obs_width);
    encode_command(config_.env_kind, Command{s.desired, s.horizon, s.morethan},
                   std::span<double>(packed_.cmd).subspan(i * cmd_width, cmd_width), config_.bandit_encoding);
    packed_.targets[i] = s.target_action;
  }
  const double loss = batch_gradient(policy_.net, packed_, grads_, workspace_);
  optimizer_step(policy_.net, grads_, optimizer_);
  return loss;
}

MetricsRecord Trainer::run_iteration() {
  if (!warmed_up_) {
    collect(uniform_selector(env_->action_count()), false, nullptr, nullptr);
    warmed_up_ = true;
  }

  double return_sum = 0.0;
  std::size_t collected = 0;
  collect(policy_selector(policy_), true, &return_sum, &collected);

  MLabelCounts counts{0, 0, 0};
  double loss_sum = 0.0;
  std::size_t steps = 0;
  for (std::size_t b = 0; b < config_.batches_per_iteration; ++b) {
    const std::vector<Segment> segments = sample_segments(
        buffer_, config_.batch_size, rng_,
        config_.segment_horizon == SegmentHorizon::budget ? std::optional<std::size_t>(env_->step_cap()) : std::nullopt);
    for (std::size_t p = 0; p < config_.permutations_per_batch; ++p) {
      const std::vector<std::size_t> perm =
          p == 0 ? identity_permutation(segments.size()) : rng_.permutation(segments.size());
      const std::vector<TrainingSample> samples = make_training_batch(segments, perm);
      const MLabelCounts batch_counts = m_label_histogram(samples);
      for (std::size_t i = 0; i < 3; ++i) counts[i] += batch_counts[i];
      if (observer_) observer_(samples);
      loss_sum += gradient_step(samples);
      ++steps;
    }
  }

  ++iteration_;
  MetricsRecord record;
  record.iteration = iteration_;
  record.env_steps_so_far = env_steps_;
  record.episodes_so_far = episodes_;
  record.mean_recent_return = collected > 0 ? return_sum / static_cast<double>(collected) : 0.0;
  record.mean_batch_loss = steps > 0 ? loss_sum / static_cast<double>(steps) : 0.0;
  const double total = static_cast<double>(counts[0] + counts[1] + counts[2]);
  for (std::size_t i = 0; i < 3; ++i) record.m_label_frequencies[i] = static_cast<double>(counts[i]) / total;
  return record;
}

Checkpoint train(const ExperimentConfig& config, const std::function<void(const MetricsRecord&)>& sink) {
  Trainer trainer(config);
  while (!trainer.finished()) {
    const MetricsRecord record = trainer.run_iteration();
    if (sink) sink(record);
  }
  return trainer.checkpoint();
}

}  // namespace udrl
