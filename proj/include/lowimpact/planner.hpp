#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lowimpact/conditioning.hpp"

namespace lowimpact {

/// U = E[u | X] - mu * R.
struct Objective {
  Utility u;
  double mu = 0.0;
  PenaltyConfig measure;
  Conditioning conditioning;
  /// Agent whose policy is optimized.
  int agent = 0;
};

struct SweepRow {
  double mu = 0.0;
  std::string policy_id;
  double expected_u = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
  std::string measure;

  bool operator==(const SweepRow&) const = default;
};

/// E[u] - mu * R, with 0 * inf read as 0 so mu = 0 ignores the penalty.
double objective_value(double expected_u, double mu, double penalty);

inline constexpr double kTieTolerance = 1e-12;

/// True when `a` beats `b`: larger U, then smaller R, then smaller id.
/// U and R within kTieTolerance count as equal.
bool better(const SweepRow& a, const SweepRow& b);

inline constexpr double kDefaultBudget = 1e5;
inline constexpr int kDefaultRestarts = 32;
inline constexpr int kDefaultMutations = 512;

struct PlannerOptions {
  /// Search exhaustively when the policy space has at most this many members.
  double budget = kDefaultBudget;
  std::uint64_t seed = 0;
  int restarts = kDefaultRestarts;
  int mutations = kDefaultMutations;
  Execution exec = Execution::Parallel;
  /// Behaviour of the other agents; empty means null policies.
  PolicyProfile profile;
  /// Activation of the other agents (Either when empty).
  ActivationAssignment base;
};

/// Deterministic reactive policies of one agent. Table entries whose
/// (timestep, observation) can never occur are pinned to the null action;
/// the remaining entries are free, and policies are indexed in mixed radix
/// with the first free entry most significant, which matches id order.
class PolicySpace {
 public:
  PolicySpace(const WorldModel& model, int agent);

  /// Number of policies, as a double since it may not fit an integer.
  double size() const;
  Policy decode(std::uint64_t index) const;
  const std::vector<std::pair<int, int>>& free_entries() const { return entries_; }
  int actions() const { return actions_; }
  Policy null() const { return base_; }

 private:
  std::vector<std::pair<int, int>> entries_;
  int actions_ = 0;
  Policy base_;
};

/// Profile equal to `others` (null policies when empty) with `policy` in the
/// subject's slot.
PolicyProfile with_policy(const WorldModel& model, const PolicyProfile& others, int agent, const Policy& policy);

/// Reusable evaluation of policies against one objective.
class PolicyEvaluator {
 public:
  PolicyEvaluator(const WorldModel& model, const Objective& objective, const PlannerOptions& options = {});

  /// Row at the objective's mu. Throws UnboundedUtility when u leaves [0, 1]
  /// on a trajectory of P(. | X).
  SweepRow evaluate(const Policy& policy) const;
  /// Same row recomputed for a different mu.
  static SweepRow at_mu(SweepRow row, double mu);

  const Objective& objective() const { return objective_; }

 private:
  const WorldModel& model_;
  Objective objective_;
  PolicyProfile others_;
  PenaltyEvaluator penalty_;
};

SweepRow evaluate_policy(const WorldModel& model, const Policy& policy, const Objective& objective,
                         const PlannerOptions& options = {});

struct PlanResult {
  SweepRow row;
  Policy policy;
  bool exhaustive = false;
  std::size_t evaluated = 0;
};

/// Exact argmax over the policy space when it fits the budget; otherwise
/// seeded hill climbing with restarts. Deterministic given the options.
PlanResult optimize(const WorldModel& model, const Objective& objective, const PlannerOptions& options = {});

/// Every policy of the space with its row at the objective's mu, in index
/// order. Exhaustive search and the sweep are built on this.
std::vector<std::pair<Policy, SweepRow>> evaluate_all(const WorldModel& model, const Objective& objective,
                                                      const PlannerOptions& options = {});

/// One optimized row per mu, ordered by mu descending.
std::vector<SweepRow> mu_sweep(const WorldModel& model, const Objective& objective, std::vector<double> mus,
                               const PlannerOptions& options = {});

/// `steps` log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int steps);

}  // namespace lowimpact
