// Batched gradient kernel (OpenMP) vs the serial per-sample reference path,
// at the batch shapes used by the two training presets.

#include <benchmark/benchmark.h>

#include "udrl/agent.hpp"
#include "udrl/batch_kernels.hpp"
#include "udrl/config.hpp"

namespace {

using namespace udrl;

struct Fixture {
  GatedPolicyNet net;
  PackedBatch batch;
};

Fixture make_fixture(const std::string& preset_name) {
  const ExperimentConfig config = preset(preset_name);
  Rng rng(3);
  Fixture f{make_policy_net(net_shape(config), rng), {}};
  f.batch.obs_width = f.net.observation_width();
  f.batch.cmd_width = f.net.command_width();
  for (std::size_t i = 0; i < config.batch_size; ++i) {
    for (std::size_t k = 0; k < f.batch.obs_width; ++k) f.batch.obs.push_back(rng.uniform(-0.1, 0.1));
    const Command cmd{static_cast<double>(rng.uniform_index(200)), 1 + rng.uniform_index(200),
                      morethan_from_int(static_cast<int>(rng.uniform_index(3)) - 1)};
    const auto enc = encode_command(config.env_kind, cmd);
    f.batch.cmd.insert(f.batch.cmd.end(), enc.begin(), enc.end());
    f.batch.targets.push_back(rng.uniform_index(f.net.action_count()));
  }
  return f;
}

void BM_ParallelKernel(benchmark::State& state, const char* preset_name) {
  const Fixture f = make_fixture(preset_name);
  NetGradients grads;
  GradientWorkspace ws;
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient(f.net, f.batch, grads, ws));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.batch.size()));
}

void BM_ReferenceKernel(benchmark::State& state, const char* preset_name) {
  const Fixture f = make_fixture(preset_name);
  NetGradients grads;
  for (auto _ : state) benchmark::DoNotOptimize(reference::batch_gradient(f.net, f.batch, grads));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.batch.size()));
}

}  // namespace

BENCHMARK_CAPTURE(BM_ParallelKernel, cartpole, "cartpole-paper");
BENCHMARK_CAPTURE(BM_ReferenceKernel, cartpole, "cartpole-paper");
BENCHMARK_CAPTURE(BM_ParallelKernel, bandit, "bandit-paper");
BENCHMARK_CAPTURE(BM_ReferenceKernel, bandit, "bandit-paper");

BENCHMARK_MAIN();
