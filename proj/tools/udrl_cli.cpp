// Command-line front end: training, evaluation, figure data and self-tests.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "udrl/config.hpp"
#include "udrl/error.hpp"
#include "udrl/figures.hpp"
#include "udrl/selftest.hpp"
#include "udrl/trainer.hpp"

namespace fs = std::filesystem;
using namespace udrl;

namespace {

struct TrainOptions {
  std::string preset;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> total_steps;
  std::string resume;
  std::size_t max_iterations = 0;
  std::size_t checkpoint_every = 0;
  std::size_t log_every = 50;
  bool quiet = false;
};

ExperimentConfig resolve_config(const TrainOptions& o) {
  if (o.preset.empty() && o.config_path.empty())
    throw CLI::ValidationError("train", "either --preset or --config is required");
  ExperimentConfig config = o.preset.empty() ? ExperimentConfig{} : preset(o.preset);
  if (!o.config_path.empty()) config = load_config_file(o.config_path, config);
  if (o.seed) config.seed = *o.seed;
  if (o.total_steps) config.total_env_steps = *o.total_steps;
  if (!o.out.empty()) config.output_dir = o.out;
  config.validate();
  return config;
}

void run_training(Trainer& trainer, const fs::path& out_dir, const TrainOptions& o, std::mutex* log_mutex) {
  fs::create_directories(out_dir);
  const bool resuming = !o.resume.empty();
  std::ofstream metrics(out_dir / "metrics.jsonl", resuming ? std::ios::app : std::ios::trunc);
  if (!metrics) throw Error("cannot write " + (out_dir / "metrics.jsonl").string());
  write_text_file((out_dir / "config.txt").string(), to_config_text(trainer.config()));

  const auto checkpoint_path = (out_dir / "checkpoint.txt").string();
  const auto start = std::chrono::steady_clock::now();
  std::size_t ran = 0;
  while (!trainer.finished() && (o.max_iterations == 0 || ran < o.max_iterations)) {
    const MetricsRecord rec = trainer.run_iteration();
    ++ran;
    metrics << to_json_line(rec) << '\n';
    if (o.checkpoint_every > 0 && rec.iteration % o.checkpoint_every == 0) {
      metrics.flush();
      save_checkpoint(trainer.checkpoint(), checkpoint_path);
    }
    if (!o.quiet && o.log_every > 0 && rec.iteration % o.log_every == 0) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::unique_lock<std::mutex> lock;
      if (log_mutex) lock = std::unique_lock(*log_mutex);
      std::fprintf(stderr, "[seed %llu] iter %zu steps %zu/%zu return %.2f loss %.4f m(-1,0,+1)=(%.3f,%.3f,%.3f) %.0fs\n",
                   static_cast<unsigned long long>(trainer.config().seed), rec.iteration, rec.env_steps_so_far,
                   trainer.config().total_env_steps, rec.mean_recent_return, rec.mean_batch_loss,
                   rec.m_label_frequencies[0], rec.m_label_frequencies[1], rec.m_label_frequencies[2], secs);
    }
  }
  metrics.flush();
  save_checkpoint(trainer.checkpoint(), checkpoint_path);
}

std::vector<Checkpoint> load_all(const std::vector<std::string>& paths) {
  std::vector<Checkpoint> out;
  for (const auto& p : paths) out.push_back(load_checkpoint(p));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online upside-down RL with ternary morethan commands"};
  app.require_subcommand(1);

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand("train", "Train one run and write metrics.jsonl and checkpoint.txt");
  train_cmd->add_option("--preset", train_opts.preset, "bandit-paper or cartpole-paper")
      ->check(CLI::IsMember(preset_names()));
  train_cmd->add_option("--config", train_opts.config_path, "key = value config file (applied over the preset)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--seed", train_opts.seed, "Random seed");
  train_cmd->add_option("--out", train_opts.out, "Output directory");
  train_cmd->add_option("--total-steps", train_opts.total_steps, "Override the environment step budget");
  train_cmd->add_option("--resume", train_opts.resume, "Continue from a checkpoint (metrics are appended)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--max-iterations", train_opts.max_iterations, "Stop after this many iterations (0: no limit)");
  train_cmd->add_option("--checkpoint-every", train_opts.checkpoint_every, "Checkpoint period in iterations");
  train_cmd->add_option("--log-every", train_opts.log_every, "Progress line period in iterations");
  train_cmd->add_flag("--quiet", train_opts.quiet, "No progress output");

  std::string eval_checkpoint, eval_out;
  std::size_t eval_episodes = 10;
  std::uint64_t eval_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint (figure1 CSV for bandit, figure2 CSVs for CartPole)");
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out)->required();
  eval_cmd->add_option("--episodes-per-cell", eval_episodes)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_seed, "Evaluation seed (CartPole only)");

  std::vector<std::string> fig1_checkpoints;
  std::string fig1_out;
  auto* fig1_cmd = app.add_subcommand("figure1", "Mean bandit action probabilities over checkpoints");
  fig1_cmd->add_option("--checkpoint", fig1_checkpoints)->required()->check(CLI::ExistingFile);
  fig1_cmd->add_option("--out", fig1_out)->required();

  std::vector<std::string> fig2_checkpoints;
  std::string fig2_out, fig2_summary;
  std::size_t fig2_episodes = 10;
  std::uint64_t fig2_seed = 0;
  auto* fig2_cmd = app.add_subcommand("figure2", "Observed vs desired CartPole returns over checkpoints");
  fig2_cmd->add_option("--checkpoint", fig2_checkpoints)->required()->check(CLI::ExistingFile);
  fig2_cmd->add_option("--out", fig2_out)->required();
  fig2_cmd->add_option("--summary", fig2_summary, "Summary CSV path (default: <out>_summary.csv)");
  fig2_cmd->add_option("--episodes-per-cell", fig2_episodes)->check(CLI::PositiveNumber);
  fig2_cmd->add_option("--seed", fig2_seed);

  std::uint64_t selftest_seed = 1;
  auto* selftest_cmd = app.add_subcommand("selftest", "Run the gradient, orthogonality and oracle property suites");
  selftest_cmd->add_option("--seed", selftest_seed);

  TrainOptions sweep_opts;
  std::size_t sweep_seeds = 1;
  std::uint64_t sweep_first_seed = 0;
  std::size_t sweep_jobs = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train several seeds into <out>/seed_<n>/ and emit the figure data");
  sweep_cmd->add_option("--preset", sweep_opts.preset)->check(CLI::IsMember(preset_names()));
  sweep_cmd->add_option("--config", sweep_opts.config_path)->check(CLI::ExistingFile);
  sweep_cmd->add_option("--seeds", sweep_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--first-seed", sweep_first_seed);
  sweep_cmd->add_option("--out", sweep_opts.out)->required();
  sweep_cmd->add_option("--total-steps", sweep_opts.total_steps);
  sweep_cmd->add_option("--jobs", sweep_jobs, "Seeds trained concurrently")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--episodes-per-cell", fig2_episodes)->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--quiet", sweep_opts.quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train_cmd) {
      if (!train_opts.resume.empty()) {
        Checkpoint cp = load_checkpoint(train_opts.resume);
        if (train_opts.total_steps) cp.config.total_env_steps = *train_opts.total_steps;
        const fs::path out = train_opts.out.empty() ? fs::path(train_opts.resume).parent_path() : fs::path(train_opts.out);
        Trainer trainer(std::move(cp));
        run_training(trainer, out, train_opts, nullptr);
      } else {
        ExperimentConfig config = resolve_config(train_opts);
        Trainer trainer(config);
        run_training(trainer, config.output_dir, train_opts, nullptr);
      }
    } else if (*eval_cmd) {
      const std::vector<Checkpoint> cps{load_checkpoint(eval_checkpoint)};
      if (cps[0].config.env_kind == EnvKind::bandit)
        emit_figure1(cps, eval_out);
      else
        emit_figure2(cps, eval_out, summary_path_for(eval_out), eval_episodes, eval_seed);
    } else if (*fig1_cmd) {
      emit_figure1(load_all(fig1_checkpoints), fig1_out);
    } else if (*fig2_cmd) {
      emit_figure2(load_all(fig2_checkpoints), fig2_out, fig2_summary.empty() ? summary_path_for(fig2_out) : fig2_summary,
                   fig2_episodes, fig2_seed);
    } else if (*selftest_cmd) {
      bool ok = true;
      for (const auto& report : selftest::run_all(selftest_seed)) {
        std::cout << selftest::format_report(report) << '\n';
        ok = ok && report.passed;
      }
      return ok ? 0 : 1;
    } else if (*sweep_cmd) {
      const ExperimentConfig base = resolve_config(sweep_opts);
      const fs::path root = sweep_opts.out;
      std::vector<std::string> checkpoints;
      std::vector<ExperimentConfig> configs;
      for (std::size_t i = 0; i < sweep_seeds; ++i) {
        ExperimentConfig c = base;
        c.seed = sweep_first_seed + i;
        c.output_dir = (root / ("seed_" + std::to_string(c.seed))).string();
        configs.push_back(c);
        checkpoints.push_back((fs::path(c.output_dir) / "checkpoint.txt").string());
      }
      std::mutex log_mutex;
      std::mutex error_mutex;
      std::string first_error;
      std::size_t next = 0;
      auto worker = [&] {
        for (;;) {
          std::size_t idx;
          {
            std::lock_guard lock(error_mutex);
            if (next >= configs.size() || !first_error.empty()) return;
            idx = next++;
          }
          try {
            Trainer trainer(configs[idx]);
            run_training(trainer, configs[idx].output_dir, sweep_opts, &log_mutex);
          } catch (const std::exception& e) {
            std::lock_guard lock(error_mutex);
            if (first_error.empty()) first_error = e.what();
          }
        }
      };
      std::vector<std::thread> pool;
      for (std::size_t j = 0; j < std::min(sweep_jobs, configs.size()); ++j) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      if (!first_error.empty()) throw Error(first_error);

      const auto cps = load_all(checkpoints);
      if (base.env_kind == EnvKind::bandit)
        emit_figure1(cps, (root / "figure1.csv").string());
      else
        emit_figure2(cps, (root / "figure2.csv").string(), (root / "figure2_summary.csv").string(), fig2_episodes, 0);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
