#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "udrl/rng.hpp"

namespace udrl {

struct Transition {
  std::vector<double> observation;
  std::size_t action = 0;
  double reward = 0.0;

  friend bool operator==(const Transition&, const Transition&) = default;
};

class Episode {
 public:
  void append(std::vector<double> observation, std::size_t action, double reward);

  std::size_t length() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }
  double total_return() const { return total_return_; }
  const std::vector<Transition>& steps() const { return steps_; }
  const Transition& operator[](std::size_t t) const { return steps_[t]; }

  friend bool operator==(const Episode&, const Episode&) = default;

 private:
  std::vector<Transition> steps_;
  double total_return_ = 0.0;
};

// Suffix of an episode starting at some step t.
struct Segment {
  std::vector<double> observation;
  std::size_t action = 0;
  std::size_t horizon = 1;  // steps remaining from t, inclusive
  double return_to_go = 0.0;
};

// Ternary relation between achieved and desired return.
enum class Morethan : int { less = -1, equal = 0, more = 1 };

inline int to_int(Morethan m) { return static_cast<int>(m); }
Morethan morethan_from_int(int value);
// sign(achieved - desired).
Morethan compare_returns(double achieved, double desired);

struct TrainingSample {
  std::vector<double> observation;
  double desired = 0.0;
  std::size_t horizon = 1;
  Morethan morethan = Morethan::equal;
  std::size_t target_action = 0;

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

// FIFO episode store; capacity nullopt means unbounded.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::optional<std::size_t> capacity = std::nullopt);

  void push(Episode episode);

  std::optional<std::size_t> capacity() const { return capacity_; }
  std::size_t size() const { return episodes_.size(); }
  bool empty() const { return episodes_.empty(); }
  const Episode& operator[](std::size_t i) const { return episodes_[i]; }
  const std::deque<Episode>& episodes() const { return episodes_; }

  friend bool operator==(const ReplayBuffer&, const ReplayBuffer&) = default;

 private:
  std::optional<std::size_t> capacity_;
  std::deque<Episode> episodes_;
};

// How a segment's horizon is measured from its start index t.
//   remaining: steps left in the stored episode, length - t.
//   budget:    steps left in the environment's step budget, cap - t. The
//              return-to-go is still realized within that many steps, but the
//              horizon no longer reveals how long the episode actually lasted.
enum class SegmentHorizon { remaining, budget };
std::string to_string(SegmentHorizon mode);
SegmentHorizon segment_horizon_from_string(const std::string& name);

// With a step budget, horizon = budget - t (the episode must fit the budget).
Segment extract_segment(const Episode& episode, std::size_t t, std::optional<std::size_t> step_budget = std::nullopt);

// k episodes uniformly with replacement, each cut at a uniform start index.
std::vector<Segment> sample_segments(const ReplayBuffer& buffer, std::size_t k, Rng& rng,
                                     std::optional<std::size_t> step_budget = std::nullopt);

// The anchor supplies only the desired return; state, action and horizon come
// from the achiever, whose realized return stands in relation m to desired.
TrainingSample relabel_pair(const Segment& anchor, const Segment& achiever);

// Sample i pairs anchor segments[i] with achiever segments[permutation[i]].
std::vector<TrainingSample> make_training_batch(std::span<const Segment> segments,
                                                std::span<const std::size_t> permutation);

bool is_permutation_of_indices(std::span<const std::size_t> permutation);
std::vector<std::size_t> identity_permutation(std::size_t n);

// Counts indexed by m + 1, i.e. {m=-1, m=0, m=+1}.
using MLabelCounts = std::array<std::size_t, 3>;
MLabelCounts m_label_histogram(std::span<const TrainingSample> samples);

}  // namespace udrl
