#include "udrl/replay.hpp"

#include <numeric>

#include "udrl/error.hpp"

namespace udrl {

void Episode::append(std::vector<double> observation, std::size_t action, double reward) {
  steps_.push_back(Transition{std::move(observation), action, reward});
  total_return_ += reward;
}

Morethan morethan_from_int(int value) {
  if (value < -1 || value > 1) throw Error("morethan unit must be -1, 0 or +1");
  return static_cast<Morethan>(value);
}

Morethan compare_returns(double achieved, double desired) {
  if (achieved > desired) return Morethan::more;
  if (achieved < desired) return Morethan::less;
  return Morethan::equal;
}

ReplayBuffer::ReplayBuffer(std::optional<std::size_t> capacity) : capacity_(capacity) {
  if (capacity_ && *capacity_ == 0) throw Error("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::push(Episode episode) {
  if (episode.empty()) throw Error("ReplayBuffer::push: episode has no steps");
  episodes_.push_back(std::move(episode));
  if (capacity_ && episodes_.size() > *capacity_) episodes_.pop_front();
}

std::string to_string(SegmentHorizon mode) { return mode == SegmentHorizon::remaining ? "remaining" : "budget"; }

SegmentHorizon segment_horizon_from_string(const std::string& name) {
  if (name == "remaining") return SegmentHorizon::remaining;
  if (name == "budget") return SegmentHorizon::budget;
  throw Error("unknown segment horizon '" + name + "' (expected remaining or budget)");
}

Segment extract_segment(const Episode& episode, std::size_t t, std::optional<std::size_t> step_budget) {
  if (t >= episode.length()) throw Error("extract_segment: start index out of range");
  if (step_budget && *step_budget < episode.length())
    throw Error("extract_segment: episode is longer than the step budget");
  Segment seg;
  seg.observation = episode[t].observation;
  seg.action = episode[t].action;
  seg.horizon = (step_budget ? *step_budget : episode.length()) - t;
  for (std::size_t i = t; i < episode.length(); ++i) seg.return_to_go += episode[i].reward;
  return seg;
}

std::vector<Segment> sample_segments(const ReplayBuffer& buffer, std::size_t k, Rng& rng,
                                     std::optional<std::size_t> step_budget) {
  if (buffer.empty()) throw Error("sample_segments: replay buffer is empty");
  std::vector<Segment> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Episode& ep = buffer[rng.uniform_index(buffer.size())];
    out.push_back(extract_segment(ep, rng.uniform_index(ep.length()), step_budget));
  }
  return out;
}

TrainingSample relabel_pair(const Segment& anchor, const Segment& achiever) {
  return TrainingSample{achiever.observation, anchor.return_to_go, achiever.horizon,
                        compare_returns(achiever.return_to_go, anchor.return_to_go), achiever.action};
}

bool is_permutation_of_indices(std::span<const std::size_t> permutation) {
  std::vector<bool> seen(permutation.size(), false);
  for (std::size_t p : permutation) {
    if (p >= permutation.size() || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

std::vector<std::size_t> identity_permutation(std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  return perm;
}

std::vector<TrainingSample> make_training_batch(std::span<const Segment> segments,
                                                std::span<const std::size_t> permutation) {
  if (permutation.size() != segments.size() || !is_permutation_of_indices(permutation))
    throw Error("make_training_batch: pairing is not a bijection on the segment indices");
  std::vector<TrainingSample> samples;
  samples.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i)
    samples.push_back(relabel_pair(segments[i], segments[permutation[i]]));
  return samples;
}

MLabelCounts m_label_histogram(std::span<const TrainingSample> samples) {
  MLabelCounts counts{0, 0, 0};
  for (const auto& s : samples) ++counts[static_cast<std::size_t>(to_int(s.morethan) + 1)];
  return counts;
}

}  // namespace udrl
