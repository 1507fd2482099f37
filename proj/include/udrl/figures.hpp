#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "udrl/agent.hpp"
#include "udrl/trainer.hpp"

namespace udrl {

// Action probabilities averaged over one or more bandit policies;
// indexed like BanditTable.
BanditTable mean_bandit_table(std::span<const Policy> policies);

// Header `d,m,action,probability`; 7 x 3 x 6 data rows, actions 1-indexed.
std::string figure1_csv(const BanditTable& table);
void emit_figure1(std::span<const Checkpoint> checkpoints, const std::string& out_path);

struct Figure2Row {
  std::size_t run = 0;
  double desired = 0.0;
  int morethan = 0;
  std::size_t episode = 0;
  double observed_return = 0.0;
};

struct Figure2Summary {
  double desired = 0.0;
  int morethan = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over pooled episodes
};

// Desired returns 10, 20, ..., 200.
std::vector<double> figure2_desired_grid();

// Rollouts for every (run, d, m) cell. Each cell draws from its own random
// stream derived from (seed, run, cell), so the result does not depend on the
// OpenMP schedule.
std::vector<Figure2Row> evaluate_figure2(std::span<const Policy> policies, std::span<const double> desired_grid,
                                         std::size_t episodes_per_cell, std::uint64_t seed);
std::vector<Figure2Summary> summarize_figure2(std::span<const Figure2Row> rows);

std::string figure2_csv(std::span<const Figure2Row> rows);          // run,d,m,episode,observed_return
std::string figure2_summary_csv(std::span<const Figure2Summary> s);  // d,m,mean,std

void emit_figure2(std::span<const Checkpoint> checkpoints, const std::string& out_path,
                  const std::string& summary_path, std::size_t episodes_per_cell, std::uint64_t seed);

// Conventional summary path next to a figure2 CSV: foo.csv -> foo_summary.csv.
std::string summary_path_for(const std::string& figure2_path);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace udrl
