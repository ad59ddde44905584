#include "lowimpact/multiagent.hpp"

#include <map>

namespace lowimpact {

namespace {

/// Throws AssumptionViolated at the first (t, observation) the agent can see
/// while active that has zero probability once `other` is inactive.
void check_observations(const WorldModel& model, const PolicyProfile& profile, int agent, int other,
                        const ActivationAssignment& base) {
  const auto dist = propagate(model, profile, with_activation(model, base, agent, Activation::Active));
  std::map<std::pair<int, int>, std::pair<double, double>> mass;
  for (const auto& e : dist.entries()) {
    const bool assumption = !e.trajectory.is_active(other);
    for (int t = 0; t < model.horizon; ++t) {
      auto& m = mass[{t, model.observation(agent, e.trajectory.state(t))}];
      m.first += e.probability;
      if (assumption) m.second += e.probability;
    }
  }
  const auto& name = model.agents[static_cast<std::size_t>(agent)].name;
  for (const auto& [key, m] : mass) {
    if (m.first > 0.0 && m.second == 0.0)
      throw AssumptionViolated(name, key.first, key.second,
                               "agent '" + name + "' can observe symbol " + std::to_string(key.second) + " at t=" +
                                   std::to_string(key.first) + ", which is impossible if agent '" +
                                   model.agents[static_cast<std::size_t>(other)].name +
                                   "' is inactive; its conditional goal is undefined there");
  }
}

}  // namespace

ConditionalReport conditional_evaluate(const WorldModel& model, const Policy& policy,
                                       const ConditionalObjective& cobj, const PlannerOptions& options) {
  const int agent = cobj.base.agent;
  PlannerOptions opts = options;
  ConditionalReport report;
  if (cobj.other) {
    const auto profile = with_policy(model, options.profile, agent, policy);
    auto either = options.base;
    either.resize(model.agents.size(), Activation::Either);
    either[static_cast<std::size_t>(*cobj.other)] = Activation::Either;
    check_observations(model, profile, agent, *cobj.other, either);
    opts.base = with_activation(model, options.base, *cobj.other, Activation::Inactive);
    report.p_assumption = model.agents[static_cast<std::size_t>(*cobj.other)].epsilon;
  }
  report.row = PolicyEvaluator(model, cobj.base, opts).evaluate(policy);
  report.effective_u =
      report.p_assumption * report.row.expected_u + (1.0 - report.p_assumption) * cobj.indifference;
  return report;
}

ConditionalPlan conditional_optimize(const WorldModel& model, const ConditionalObjective& cobj,
                                     const PlannerOptions& options) {
  PlannerOptions opts = options;
  if (cobj.other) opts.base = with_activation(model, options.base, *cobj.other, Activation::Inactive);
  auto plan = optimize(model, cobj.base, opts);
  return {plan.policy, conditional_evaluate(model, plan.policy, cobj, options)};
}

JointReport joint_rollout(const WorldModel& model, const PolicyProfile& profile, const EventPredicate& success,
                          const std::vector<ConditionalObjective>& cobjs, const PlannerOptions& options) {
  JointReport report;
  const auto dist = propagate(model, profile, {});
  for (const auto& e : dist.entries()) {
    if (!success(e.trajectory)) continue;
    report.p_event += e.probability;
    bool all_active = true;
    for (int i = 0; i < model.agent_count(); ++i) all_active = all_active && e.trajectory.is_active(i);
    if (all_active) report.p_success += e.probability;
  }
  PlannerOptions opts = options;
  opts.profile = profile;
  for (const auto& cobj : cobjs) {
    const auto& slot = profile[static_cast<std::size_t>(cobj.base.agent)];
    const Policy policy = slot ? *slot : null_policy(model, cobj.base.agent);
    report.agents.push_back(conditional_evaluate(model, policy, cobj, opts));
  }
  return report;
}

}  // namespace lowimpact
