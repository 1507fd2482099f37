#include "udrl/figures.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "udrl/error.hpp"

namespace udrl {

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<Policy> policies_of(std::span<const Checkpoint> checkpoints, EnvKind expected) {
  if (checkpoints.empty()) throw Error("no checkpoints given");
  std::vector<Policy> out;
  for (const auto& cp : checkpoints) {
    if (cp.config.env_kind != expected)
      throw Error("checkpoint environment is " + to_string(cp.config.env_kind) + ", expected " + to_string(expected));
    out.push_back(cp.policy());
  }
  return out;
}

}  // namespace

BanditTable mean_bandit_table(std::span<const Policy> policies) {
  if (policies.empty()) throw Error("mean_bandit_table: no policies");
  BanditTable mean = evaluate_bandit(policies[0]);
  for (std::size_t p = 1; p < policies.size(); ++p) {
    const BanditTable t = evaluate_bandit(policies[p]);
    for (std::size_t d = 0; d < mean.size(); ++d)
      for (std::size_t m = 0; m < 3; ++m)
        for (std::size_t a = 0; a < mean[d][m].size(); ++a) mean[d][m][a] += t[d][m][a];
  }
  const double inv = 1.0 / static_cast<double>(policies.size());
  for (auto& row : mean)
    for (auto& cell : row)
      for (double& v : cell) v *= inv;
  return mean;
}

std::string figure1_csv(const BanditTable& table) {
  std::ostringstream os;
  os << "d,m,action,probability\n";
  for (std::size_t d = 0; d < table.size(); ++d)
    for (int m = -1; m <= 1; ++m) {
      const auto& probs = table[d][static_cast<std::size_t>(m + 1)];
      for (std::size_t a = 0; a < probs.size(); ++a)
        os << d << ',' << m << ',' << (a + 1) << ',' << fmt_real(probs[a]) << '\n';
    }
  return os.str();
}

void emit_figure1(std::span<const Checkpoint> checkpoints, const std::string& out_path) {
  const auto policies = policies_of(checkpoints, EnvKind::bandit);
  write_text_file(out_path, figure1_csv(mean_bandit_table(policies)));
}

std::vector<double> figure2_desired_grid() {
  std::vector<double> grid;
  for (int d = 10; d <= 200; d += 10) grid.push_back(d);
  return grid;
}

std::vector<Figure2Row> evaluate_figure2(std::span<const Policy> policies, std::span<const double> desired_grid,
                                         std::size_t episodes_per_cell, std::uint64_t seed) {
  const std::size_t cells_per_run = desired_grid.size() * 3;
  const std::size_t cells = policies.size() * cells_per_run;
  std::vector<std::vector<double>> returns(cells);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cells); ++c) {
    const auto cell = static_cast<std::size_t>(c);
    const std::size_t run = cell / cells_per_run;
    const std::size_t local = cell % cells_per_run;
    const double d = desired_grid[local / 3];
    const int m = static_cast<int>(local % 3) - 1;
    Rng rng(mix_seed(seed) ^ run, local);
    returns[cell] = evaluate_cartpole(policies[run], d, morethan_from_int(m), episodes_per_cell, rng);
  }

  std::vector<Figure2Row> rows;
  rows.reserve(cells * episodes_per_cell);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const std::size_t local = cell % cells_per_run;
    for (std::size_t e = 0; e < returns[cell].size(); ++e)
      rows.push_back(Figure2Row{cell / cells_per_run, desired_grid[local / 3], static_cast<int>(local % 3) - 1, e,
                                returns[cell][e]});
  }
  return rows;
}

std::vector<Figure2Summary> summarize_figure2(std::span<const Figure2Row> rows) {
  std::map<std::pair<double, int>, std::vector<double>> pooled;
  for (const auto& r : rows) pooled[{r.desired, r.morethan}].push_back(r.observed_return);
  std::vector<Figure2Summary> out;
  for (const auto& [key, values] : pooled) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    out.push_back(Figure2Summary{key.first, key.second, mean, std::sqrt(sq / static_cast<double>(values.size()))});
  }
  return out;
}

std::string figure2_csv(std::span<const Figure2Row> rows) {
  std::ostringstream os;
  os << "run,d,m,episode,observed_return\n";
  for (const auto& r : rows)
    os << r.run << ',' << fmt_real(r.desired) << ',' << r.morethan << ',' << r.episode << ','
       << fmt_real(r.observed_return) << '\n';
  return os.str();
}

std::string figure2_summary_csv(std::span<const Figure2Summary> summary) {
  std::ostringstream os;
  os << "d,m,mean,std\n";
  for (const auto& s : summary)
    os << fmt_real(s.desired) << ',' << s.morethan << ',' << fmt_real(s.mean) << ',' << fmt_real(s.stddev) << '\n';
  return os.str();
}

void emit_figure2(std::span<const Checkpoint> checkpoints, const std::string& out_path,
                  const std::string& summary_path, std::size_t episodes_per_cell, std::uint64_t seed) {
  if (episodes_per_cell == 0) throw Error("episodes per cell must be positive");
  const auto policies = policies_of(checkpoints, EnvKind::cartpole);
  const auto grid = figure2_desired_grid();
  const auto rows = evaluate_figure2(policies, grid, episodes_per_cell, seed);
  write_text_file(out_path, figure2_csv(rows));
  write_text_file(summary_path, figure2_summary_csv(summarize_figure2(rows)));
}

std::string summary_path_for(const std::string& figure2_path) {
  const auto dot = figure2_path.rfind('.');
  const auto slash = figure2_path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return figure2_path + "_summary.csv";
  return figure2_path.substr(0, dot) + "_summary" + figure2_path.substr(dot);
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << contents;
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace udrl
