#pragma once

#include <span>
#include <vector>

#include "lowimpact/distribution.hpp"

namespace lowimpact {

/// One observable datum of the future slice: a component at a timestep.
struct SliceItem {
  int component = 0;
  int time = 0;
  bool operator==(const SliceItem&) const = default;
};

/// Exact probability of partial evidence about the slice.
class SliceLikelihood {
 public:
  virtual ~SliceLikelihood() = default;
  /// P(items[i] takes values[i] for every i).
  virtual double probability(std::span<const SliceItem> items, std::span<const int> values) const = 0;
};

/// Forward recursion over (activation branch, state). Exact, and linear in
/// the horizon, so it scales to slices far too large to enumerate.
class ForwardLikelihood final : public SliceLikelihood {
 public:
  ForwardLikelihood(const WorldModel& model, const PolicyProfile& profile, const ActivationAssignment& given);
  double probability(std::span<const SliceItem> items, std::span<const int> values) const override;

 private:
  struct Branch {
    double weight = 0.0;
    /// kernel[t][s]: distribution of the next state, actions marginalized.
    std::vector<std::vector<std::vector<Outcome>>> kernel;
  };
  const WorldModel& model_;
  std::vector<Branch> branches_;
};

/// Summation over an explicit trajectory distribution.
class EnumeratedLikelihood final : public SliceLikelihood {
 public:
  EnumeratedLikelihood(const WorldModel& model, const TrajectoryDistribution& dist) : model_(model), dist_(dist) {}
  double probability(std::span<const SliceItem> items, std::span<const int> values) const override;

 private:
  const WorldModel& model_;
  const TrajectoryDistribution& dist_;
};

}  // namespace lowimpact
