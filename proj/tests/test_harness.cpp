#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "udrl/config.hpp"
#include "udrl/error.hpp"
#include "udrl/figures.hpp"
#include "udrl/trainer.hpp"

using namespace udrl;

namespace {

ExperimentConfig small_bandit(std::size_t steps = 1000, std::uint64_t seed = 3) {
  ExperimentConfig c = preset("bandit-paper");
  c.total_env_steps = steps;
  c.seed = seed;
  return c;
}

std::string error_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("presets carry the published hyperparameters") {
  const auto names = preset_names();
  CHECK(names == std::vector<std::string>{"bandit-paper", "cartpole-paper"});

  const ExperimentConfig b = preset("bandit-paper");
  CHECK(b.env_kind == EnvKind::bandit);
  CHECK(b.buffer_capacity == std::optional<std::size_t>{100});
  CHECK(b.episodes_per_iteration == 16);
  CHECK(b.batches_per_iteration == 16);
  CHECK(b.batch_size == 16);
  CHECK(b.permutations_per_batch == 2);
  CHECK(b.optimizer == OptimizerKind::sgd);
  CHECK(b.step_size == 0.01);
  CHECK(b.total_env_steps == 25000);
  CHECK(b.architecture == Architecture::plain_mlp);

  const ExperimentConfig c = preset("cartpole-paper");
  CHECK(c.env_kind == EnvKind::cartpole);
  CHECK_FALSE(c.buffer_capacity.has_value());
  CHECK(c.episodes_per_iteration == 5);
  CHECK(c.batches_per_iteration == 800);
  CHECK(c.batch_size == 256);
  CHECK(c.permutations_per_batch == 7);
  CHECK(c.optimizer == OptimizerKind::adam);
  CHECK(c.step_size == 0.0008);
  CHECK(c.total_env_steps == 500000);
  CHECK(c.architecture == Architecture::gated);
  CHECK(c.hidden_width == 32);
  CHECK(c.segment_horizon == SegmentHorizon::budget);
  CHECK(b.segment_horizon == SegmentHorizon::remaining);

  CHECK_THROWS_AS(preset("atari"), Error);
}

TEST_CASE("config errors name the offending key") {
  ExperimentConfig c = preset("bandit-paper");
  CHECK(error_message([&] { apply_config_text(c, "batch_sise = 16\n"); }).find("batch_sise") != std::string::npos);
  CHECK(error_message([&] { apply_config_value(c, "batch_size", "0"); }).find("batch_size") != std::string::npos);
  CHECK(error_message([&] { apply_config_value(c, "step_size", "fast"); }).find("step_size") != std::string::npos);
  CHECK(error_message([&] { apply_config_value(c, "optimizer", "rmsprop"); }).find("optimizer") != std::string::npos);
  CHECK(error_message([&] { apply_config_text(c, "seed = 4\npreset = cartpole-paper\n"); }).find("preset") !=
        std::string::npos);

  ExperimentConfig bad = preset("cartpole-paper");
  bad.permutations_per_batch = 0;
  CHECK(error_message([&] { bad.validate(); }).find("permutations_per_batch") != std::string::npos);
}

TEST_CASE("config text applies presets and overrides") {
  ExperimentConfig c;
  apply_config_text(c, "# comment\npreset = cartpole-paper\n\nseed = 9   # trailing\nbatch_size = 64\n");
  CHECK(c.env_kind == EnvKind::cartpole);
  CHECK(c.seed == 9);
  CHECK(c.batch_size == 64);
  apply_config_text(c, "buffer_capacity = 500\n");
  CHECK(c.buffer_capacity == std::optional<std::size_t>{500});
  apply_config_text(c, "buffer_capacity = unbounded\n");
  CHECK_FALSE(c.buffer_capacity.has_value());
}

TEST_CASE("config text round-trips every field") {
  for (const auto& name : preset_names()) {
    ExperimentConfig c = preset(name);
    c.seed = 123456789012345ULL;
    c.step_size = 0.1 + 0.2;
    c.output_dir = "some/dir with space";
    ExperimentConfig back;
    apply_config_text(back, to_config_text(c));
    CHECK(back == c);
  }
}

TEST_CASE("config files load relative to a base") {
  const auto dir = std::filesystem::temp_directory_path() / "udrl_test_harness_cfg";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "exp.cfg").string();
  write_text_file(path, "preset = bandit-paper\nseed = 77\n");
  const ExperimentConfig c = load_config_file(path);
  CHECK(c.seed == 77);
  CHECK(c.env_kind == EnvKind::bandit);
  CHECK_THROWS_AS(load_config_file((dir / "missing.cfg").string()), Error);
}

TEST_CASE("metrics records round-trip through JSON") {
  MetricsRecord r;
  r.iteration = 12;
  r.env_steps_so_far = 4567;
  r.episodes_so_far = 89;
  r.mean_recent_return = 123.456789012345;
  r.mean_batch_loss = 0.1 + 0.2;
  r.m_label_frequencies = {0.25, 0.5, 0.25};
  const std::string line = to_json_line(r);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(line.rfind("{\"iteration\":12,", 0) == 0);
  CHECK(metrics_from_json(line) == r);
  CHECK_THROWS_AS(metrics_from_json("{\"iteration\":1}"), Error);
  CHECK_THROWS_AS(metrics_from_json("not json"), Error);
}

TEST_CASE("checkpoint serialization round-trips bit for bit") {
  Trainer trainer(small_bandit(600));
  while (!trainer.finished()) trainer.run_iteration();
  const Checkpoint cp = trainer.checkpoint();
  const std::string text = serialize_checkpoint(cp);
  const Checkpoint back = parse_checkpoint(text);
  CHECK(serialize_checkpoint(back) == text);
  ExperimentConfig expected = cp.config;
  expected.output_dir = back.config.output_dir;
  CHECK(back.config == expected);
  CHECK(serialize_checkpoint(back).find("output_dir") == std::string::npos);
  CHECK(back.optimizer == cp.optimizer);
  CHECK(back.rng == cp.rng);
  CHECK(back.buffer == cp.buffer);
  CHECK(back.net.obs_layer.weights == cp.net.obs_layer.weights);
  CHECK(back.net.out_layer.bias == cp.net.out_layer.bias);

  const Checkpoint slim = trainer.checkpoint(false);
  CHECK_FALSE(parse_checkpoint(serialize_checkpoint(slim)).buffer.has_value());
  CHECK_THROWS_AS(Trainer(parse_checkpoint(serialize_checkpoint(slim))), Error);

  CHECK_THROWS_AS(parse_checkpoint("format_version 2\n"), Error);
  CHECK_THROWS_AS(parse_checkpoint(text.substr(0, text.size() / 2)), Error);
}

TEST_CASE("adam checkpoints keep their moments") {
  ExperimentConfig c = preset("cartpole-paper");
  c.total_env_steps = 60;
  c.batches_per_iteration = 2;
  c.batch_size = 8;
  Trainer trainer(c);
  trainer.run_iteration();
  const Checkpoint cp = trainer.checkpoint();
  CHECK(cp.optimizer.step_count == 14);
  const Checkpoint back = parse_checkpoint(serialize_checkpoint(cp));
  CHECK(back.optimizer == cp.optimizer);
}

TEST_CASE("resuming from a checkpoint is bit-identical to an uninterrupted run") {
  const ExperimentConfig c = small_bandit(1000, 11);
  std::vector<MetricsRecord> straight;
  const Checkpoint full = train(c, [&](const MetricsRecord& r) { straight.push_back(r); });

  Trainer first(c);
  std::vector<MetricsRecord> resumed;
  for (int i = 0; i < 20; ++i) resumed.push_back(first.run_iteration());
  Trainer second(parse_checkpoint(serialize_checkpoint(first.checkpoint())));
  while (!second.finished()) resumed.push_back(second.run_iteration());

  CHECK(resumed == straight);
  CHECK(serialize_checkpoint(second.checkpoint()) == serialize_checkpoint(full));
}

TEST_CASE("training is deterministic for a fixed seed and differs across seeds") {
  const std::string a = serialize_checkpoint(train(small_bandit(500, 1)));
  const std::string b = serialize_checkpoint(train(small_bandit(500, 1)));
  const std::string c = serialize_checkpoint(train(small_bandit(500, 2)));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("step accounting: the bandit preset consumes exactly 25000 episodes") {
  std::size_t last_steps = 0;
  std::size_t iterations = 0;
  const Checkpoint cp = train(preset("bandit-paper"), [&](const MetricsRecord& r) {
    CHECK(r.env_steps_so_far > last_steps);
    CHECK(r.env_steps_so_far == r.episodes_so_far);
    last_steps = r.env_steps_so_far;
    ++iterations;
  });
  CHECK(cp.env_steps == 25000);
  CHECK(cp.episodes == 25000);
  // 16 warm-up episodes, then 16 per iteration.
  CHECK(iterations == (25000 - 16 + 15) / 16);
  CHECK(cp.buffer->size() == 100);
}

TEST_CASE("cartpole iteration structure") {
  ExperimentConfig c = preset("cartpole-paper");
  c.total_env_steps = 100000;
  Trainer trainer(c);
  std::size_t batches = 0;
  std::size_t samples = 0;
  trainer.set_sample_observer([&](std::span<const TrainingSample> s) {
    ++batches;
    samples += s.size();
  });
  const MetricsRecord r = trainer.run_iteration();
  CHECK(r.iteration == 1);
  CHECK(r.episodes_so_far == 10);  // 5 random warm-up episodes + 5 exploratory
  CHECK(trainer.buffer().size() == 10);
  CHECK(batches == 800 * 7);
  CHECK(samples == 800 * 7 * 256);
  std::size_t stored = 0;
  for (const auto& ep : trainer.buffer().episodes()) stored += ep.length();
  CHECK(r.env_steps_so_far == stored);
  // The identity pairing alone contributes 1/7 of the labels as m = 0.
  CHECK(r.m_label_frequencies[1] >= 1.0 / 7.0);
  CHECK(std::abs(r.m_label_frequencies[0] + r.m_label_frequencies[1] + r.m_label_frequencies[2] - 1.0) < 1e-12);
}

TEST_CASE("m label frequencies match a recount of the observed batches") {
  Trainer trainer(small_bandit(2000, 5));
  std::array<std::size_t, 3> counts{0, 0, 0};
  trainer.set_sample_observer([&](std::span<const TrainingSample> s) {
    for (const auto& x : s) ++counts[static_cast<std::size_t>(to_int(x.morethan) + 1)];
  });
  for (int i = 0; i < 10; ++i) {
    counts = {0, 0, 0};
    const MetricsRecord r = trainer.run_iteration();
    const double total = static_cast<double>(counts[0] + counts[1] + counts[2]);
    CHECK(total == 16.0 * 16.0 * 2.0);
    for (std::size_t k = 0; k < 3; ++k) CHECK(r.m_label_frequencies[k] == static_cast<double>(counts[k]) / total);
  }
}

TEST_CASE("collection stops at the step budget but the iteration still trains") {
  ExperimentConfig c = small_bandit(20, 2);
  std::size_t batches = 0;
  Trainer trainer(c);
  trainer.set_sample_observer([&](std::span<const TrainingSample>) { ++batches; });
  const MetricsRecord r = trainer.run_iteration();
  CHECK(r.env_steps_so_far == 20);
  CHECK(trainer.finished());
  CHECK(batches == 32);
}

TEST_CASE("figure1 csv layout") {
  const Policy zero{make_zero_net(net_shape(preset("bandit-paper"))), EnvKind::bandit, BanditEncoding::joint};
  const std::vector<Policy> policies{zero, zero};
  const std::string csv = figure1_csv(mean_bandit_table(policies));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "d,m,action,probability");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const double p = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(p == doctest::Approx(1.0 / 6.0).epsilon(1e-10));
  }
  CHECK(rows == 126);
  CHECK(csv.find("\n0,-1,1,") != std::string::npos);
  CHECK(csv.find("\n6,1,6,") != std::string::npos);
}

TEST_CASE("figure2 evaluation layout and summary") {
  const Policy zero{make_zero_net(net_shape(preset("cartpole-paper"))), EnvKind::cartpole, BanditEncoding::joint};
  const std::vector<Policy> policies{zero};
  const auto grid = figure2_desired_grid();
  REQUIRE(grid.size() == 20);
  CHECK(grid.front() == 10.0);
  CHECK(grid.back() == 200.0);

  const auto rows = evaluate_figure2(policies, grid, 10, 4);
  CHECK(rows.size() == 600);
  const auto again = evaluate_figure2(policies, grid, 10, 4);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].observed_return == again[i].observed_return);

  const auto summary = summarize_figure2(rows);
  CHECK(summary.size() == 60);
  for (const auto& s : summary) {
    CHECK(s.stddev >= 0.0);
    double sum = 0.0, sq = 0.0;
    int n = 0;
    for (const auto& r : rows)
      if (r.desired == s.desired && r.morethan == s.morethan) {
        sum += r.observed_return;
        ++n;
      }
    const double mean = sum / n;
    for (const auto& r : rows)
      if (r.desired == s.desired && r.morethan == s.morethan) sq += (r.observed_return - mean) * (r.observed_return - mean);
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.stddev == doctest::Approx(std::sqrt(sq / n)).epsilon(1e-12));
  }

  const std::string csv = figure2_csv(rows);
  CHECK(csv.rfind("run,d,m,episode,observed_return\n", 0) == 0);
  CHECK(figure2_summary_csv(summary).rfind("d,m,mean,std\n", 0) == 0);
  CHECK(summary_path_for("out/figure2.csv") == "out/figure2_summary.csv");
}

TEST_CASE("segment horizon mode decides what the horizon reveals") {
  ExperimentConfig c = preset("cartpole-paper");
  c.total_env_steps = 100000;
  c.batches_per_iteration = 3;
  c.batch_size = 32;
  for (SegmentHorizon mode : {SegmentHorizon::remaining, SegmentHorizon::budget}) {
    c.segment_horizon = mode;
    Trainer trainer(c);
    std::size_t equal_labels = 0, horizon_is_desire = 0, checked = 0;
    trainer.set_sample_observer([&](std::span<const TrainingSample> s) {
      for (const auto& x : s) {
        ++checked;
        CHECK(x.horizon >= 1);
        CHECK(x.horizon <= 200);
        if (x.morethan == Morethan::equal) {
          ++equal_labels;
          if (static_cast<double>(x.horizon) == x.desired) ++horizon_is_desire;
        }
      }
    });
    trainer.run_iteration();
    CHECK(checked == 3 * 7 * 32);
    REQUIRE(equal_labels > 0);
    std::size_t longest = 0;
    for (const auto& ep : trainer.buffer().episodes()) longest = std::max(longest, ep.length());
    REQUIRE(longest < 200);
    // Unit rewards: with remaining-step horizons an m = 0 sample always has
    // h == d; with budget horizons it never does until an episode hits the cap.
    if (mode == SegmentHorizon::remaining)
      CHECK(horizon_is_desire == equal_labels);
    else
      CHECK(horizon_is_desire == 0);
  }
}
