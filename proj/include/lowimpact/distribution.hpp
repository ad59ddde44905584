#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lowimpact/worldmodel.hpp"

namespace lowimpact {

/// Total mass of a distribution must stay within this of one.
inline constexpr double kMassTolerance = 1e-9;

/// Named, pure predicate over trajectories (X, O, A, fact conjunctions...).
struct EventPredicate {
  std::string name;
  std::function<bool(const Trajectory&)> test;

  bool operator()(const Trajectory& t) const { return test(t); }

  static EventPredicate sure();
  /// Trajectories in which `agent` was (or was not) activated.
  static EventPredicate activation(const WorldModel& model, int agent, bool active);
};

EventPredicate operator&&(const EventPredicate& a, const EventPredicate& b);
EventPredicate operator!(const EventPredicate& a);

/// Exact sparse distribution over trajectories, sorted by trajectory.
class TrajectoryDistribution {
 public:
  TrajectoryDistribution() = default;
  /// Entries are sorted and zero-probability entries dropped. Duplicate
  /// trajectories are merged.
  explicit TrajectoryDistribution(std::vector<WeightedTrajectory> entries, std::vector<std::string> provenance = {});

  const std::vector<WeightedTrajectory>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  double mass() const;
  double probability(const Trajectory& t) const;
  double probability(const EventPredicate& event) const;

  /// Sum of p * f(trajectory).
  template <typename F>
  double expectation(F&& f) const {
    double total = 0.0;
    for (const auto& e : entries_) total += e.probability * f(e.trajectory);
    return total;
  }

  /// Conditioning events applied so far, oldest first.
  const std::vector<std::string>& provenance() const { return provenance_; }

 private:
  std::vector<WeightedTrajectory> entries_;
  std::vector<std::string> provenance_;
};

/// Exact P(. | given) for the profile.
TrajectoryDistribution propagate(const WorldModel& model, const PolicyProfile& profile,
                                 const ActivationAssignment& given, const EnumerationOptions& options = {});

/// Bayes conditioning; throws ZeroProbabilityEvent when P(event) = 0.
TrajectoryDistribution condition(const TrajectoryDistribution& dist, const EventPredicate& event);

/// Drops the activation flags and merges trajectories with identical paths,
/// so distributions conditioned on different activation branches compare.
TrajectoryDistribution strip_activation(const TrajectoryDistribution& dist);

/// P(. | X) and P(. | not X) for one subject agent.
struct BranchPair {
  TrajectoryDistribution active;
  TrajectoryDistribution inactive;
};

/// Builds both branches for `agent`; the other agents follow `base`
/// (Either when `base` is empty).
BranchPair branch_pair(const WorldModel& model, const PolicyProfile& profile, int agent,
                       const ActivationAssignment& base = {}, const EnumerationOptions& options = {});

/// Assignment with `agent` set to `value` and everyone else taken from
/// `base` (Either when empty).
ActivationAssignment with_activation(const WorldModel& model, const ActivationAssignment& base, int agent,
                                     Activation value);

// -- coarse graining --------------------------------------------------------

using WorldVector = std::vector<int>;

/// One coarse-graining variable: a trajectory feature and optional bin
/// edges. With edges, the bin is the number of edges <= value.
struct Variable {
  std::string name;
  std::function<std::optional<int>(const Trajectory&)> value;
  std::vector<double> edges;

  int bin(const Trajectory& t) const;
};

struct VariableSpec {
  std::vector<Variable> variables;

  std::vector<std::string> names() const;
  WorldVector vector(const Trajectory& t) const;
};

/// Pushforward distribution over world vectors.
struct VectorMarginal {
  std::vector<std::string> names;
  std::map<WorldVector, double> probs;

  double mass() const;
  double probability(const WorldVector& v) const;
};

VectorMarginal marginalize(const TrajectoryDistribution& dist, const VariableSpec& vars);

/// Variable reading the activation flag of `agent` as 0/1.
Variable activation_variable(const WorldModel& model, int agent);

// -- bounded estimator ------------------------------------------------------

struct SampleSet {
  std::uint64_t seed = 0;
  /// Distinct trajectories with their multiplicities, in trajectory order.
  std::vector<std::pair<Trajectory, std::size_t>> draws;

  std::size_t count() const;
  TrajectoryDistribution empirical() const;
};

/// Seeded i.i.d. draws by forward simulation of the model.
SampleSet sample(const WorldModel& model, const PolicyProfile& profile, const ActivationAssignment& given,
                 std::size_t count, std::uint64_t seed);

/// Seeded i.i.d. draws from an explicit distribution.
SampleSet sample(const TrajectoryDistribution& dist, std::size_t count, std::uint64_t seed);

/// Total variation distance between two trajectory distributions.
double total_variation(const TrajectoryDistribution& a, const TrajectoryDistribution& b);

}  // namespace lowimpact
