#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lowimpact/distribution.hpp"
#include "lowimpact/likelihood.hpp"

namespace lowimpact {

/// Bounded utility over trajectories, valued in [0, 1].
struct Utility {
  std::string name;
  std::function<double(const Trajectory&)> value;

  double operator()(const Trajectory& t) const { return value(t); }
};

struct UtilitySet {
  std::string name;
  std::vector<Utility> utilities;
};

struct FactSet {
  std::string name;
  std::vector<EventPredicate> facts;
  /// Largest conjunction of facts considered.
  int max_conjunction = 2;
};

/// Largest gap |E(u | S, X) - E(u | S, not X)| over the utilities and every
/// conjunction S of at most max_conjunction facts (the empty conjunction
/// included). Conjunctions with zero probability in either branch are skipped.
double importance_penalty(const TrajectoryDistribution& active, const TrajectoryDistribution& inactive,
                          const UtilitySet& utilities, const FactSet& facts);

double importance_penalty(const BranchPair& branches, const UtilitySet& utilities, const FactSet& facts);

double importance_penalty(const WorldModel& model, const PolicyProfile& profile, int agent,
                          const UtilitySet& utilities, const FactSet& facts, const ActivationAssignment& base = {});

inline constexpr double kDefaultDetectionThreshold = 10.0;

/// 0.05, 0.10, ..., 1.00.
std::vector<double> default_rho_grid();

struct DetectionConfig {
  std::vector<double> rho_grid = default_rho_grid();
  double threshold = kDefaultDetectionThreshold;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  /// Observable future slice (boxed components are dropped on use).
  std::vector<SliceItem> slice;
};

/// Checks grid ordering, threshold and sample count; throws ValidationError.
void validate(const DetectionConfig& cfg);

struct RhoEstimate {
  double rho = 0.0;
  int items = 0;
  /// Monte Carlo mean of P(g|X)/P(g|not X), and of its inverse.
  double ratio_active = 1.0;
  double ratio_inactive = 1.0;
  bool detected = false;
};

struct DetectionResult {
  /// Smallest grid fraction at which either mean ratio exceeds the
  /// threshold; empty when undetectable.
  std::optional<double> detection_rho;
  /// 1 - detection_rho, or 0 when undetectable.
  double penalty = 0.0;
  std::vector<RhoEstimate> estimates;
};

enum class Execution { Serial, Parallel };

/// Slice items that are visible (component not boxed), with times resolved.
std::vector<SliceItem> visible_slice(const WorldModel& model, const std::vector<SliceItem>& slice);

/// Visible slice values of every draw, repeated by multiplicity.
std::vector<std::vector<int>> slice_futures(const WorldModel& model, const SampleSet& samples,
                                            const std::vector<SliceItem>& visible);

/// Core estimator. `futures[k]` holds the visible slice values of the k-th
/// sampled future g ~ P(.|X); each rho gets its own seeded mask stream, so
/// the result does not depend on evaluation order.
DetectionResult estimate_detectability(const std::vector<std::vector<int>>& futures,
                                       const std::vector<SliceItem>& visible, const SliceLikelihood& active,
                                       const SliceLikelihood& inactive, const DetectionConfig& cfg,
                                       Execution exec = Execution::Parallel);

/// Futures drawn by simulating the model, likelihoods by forward recursion.
DetectionResult detectability(const WorldModel& model, const PolicyProfile& profile, int agent,
                              const DetectionConfig& cfg, const ActivationAssignment& base = {},
                              Execution exec = Execution::Parallel);

/// Same estimator on explicit (possibly conditioned) branch distributions.
DetectionResult detectability(const WorldModel& model, const TrajectoryDistribution& active,
                              const TrajectoryDistribution& inactive, const DetectionConfig& cfg,
                              Execution exec = Execution::Parallel);

DetectionResult detectability(const WorldModel& model, const BranchPair& branches, const DetectionConfig& cfg,
                              Execution exec = Execution::Parallel);

}  // namespace lowimpact
