#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

// Property suites with independent oracles (finite differences, brute-force
// pairing, naive matrix arithmetic). Shared by the `selftest` subcommand and
// the acceptance binary.

namespace udrl::selftest {

struct CheckReport {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // worst observed error for the check's metric
  double threshold = 0.0;
  double seconds = 0.0;
  std::string detail;
};

// Analytic vs central finite-difference gradients (h = 1e-5) for `nets`
// random networks alternating between both architectures.
CheckReport check_gradients(std::size_t nets, std::uint64_t seed);

// Semi-orthogonality residual of orthogonal_init over random shapes.
CheckReport check_orthogonality(std::size_t shapes, std::uint64_t seed);

// make_training_batch vs a brute-force pairing routine, plus the relation
// m = sign(achieved - desired) recomputed from the raw episodes.
CheckReport check_relabeling(std::size_t instances, std::uint64_t seed);

// forward() logits vs naive matrix arithmetic.
CheckReport check_forward_oracle(std::size_t nets, std::uint64_t seed);

// Parallel batched kernel vs the serial reference path.
CheckReport check_batch_kernel(std::size_t batches, std::uint64_t seed);

// CartPole mirror symmetry over random (state, action) pairs.
CheckReport check_cartpole_symmetry(std::size_t pairs, std::uint64_t seed);

std::vector<CheckReport> run_all(std::uint64_t seed);

std::string format_report(const CheckReport& report);

}  // namespace udrl::selftest
