#pragma once

#include <optional>
#include <vector>

#include "lowimpact/planner.hpp"

namespace lowimpact {

inline constexpr double kDefaultIndifference = 0.5;

/// Goal of one agent that assumes another agent stays inactive.
struct ConditionalObjective {
  Objective base;
  /// Agent assumed inactive; nullopt makes the assumption the sure event.
  std::optional<int> other;
  /// Utility credited wherever the assumption fails.
  double indifference = kDefaultIndifference;
};

struct ConditionalReport {
  /// expected_u is E[u | X, not Y]; penalty compares P(.|X, not Y) with
  /// P(.|not X, not Y).
  SweepRow row;
  /// P(not Y).
  double p_assumption = 1.0;
  /// P(not Y) E[u | X, not Y] + P(Y) c.
  double effective_u = 0.0;
};

/// Evaluates `policy` for the agent under its assumption. Throws
/// AssumptionViolated when the agent can observe something that the
/// assumption makes impossible, since its conditional goal is then undefined.
ConditionalReport conditional_evaluate(const WorldModel& model, const Policy& policy,
                                       const ConditionalObjective& cobj, const PlannerOptions& options = {});

/// Best policy for the conditional goal: the other agent is pinned inactive
/// during the search, then the winner is re-checked with conditional_evaluate.
struct ConditionalPlan {
  Policy policy;
  ConditionalReport report;
};
ConditionalPlan conditional_optimize(const WorldModel& model, const ConditionalObjective& cobj,
                                     const PlannerOptions& options = {});

struct JointReport {
  /// P(every agent active and the success event holds).
  double p_success = 0.0;
  /// P(success event) with activation left random.
  double p_event = 0.0;
  std::vector<ConditionalReport> agents;
};

/// Exact rollout of a full profile with every activation left random.
/// `cobjs[i]` is agent i's conditional goal, used for the per-agent reports.
JointReport joint_rollout(const WorldModel& model, const PolicyProfile& profile, const EventPredicate& success,
                          const std::vector<ConditionalObjective>& cobjs, const PlannerOptions& options = {});

}  // namespace lowimpact
