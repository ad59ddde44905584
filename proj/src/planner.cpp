#include "lowimpact/planner.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <set>

namespace lowimpact {

double objective_value(double expected_u, double mu, double penalty) {
  if (mu == 0.0) return expected_u;
  return expected_u - mu * penalty;
}

namespace {
// Values this close are ties; summation order alone moves results by ~1e-16.
bool tied(double a, double b) { return a == b || std::abs(a - b) <= kTieTolerance; }
}  // namespace

bool better(const SweepRow& a, const SweepRow& b) {
  if (!tied(a.objective, b.objective)) return a.objective > b.objective;
  if (!tied(a.penalty, b.penalty)) return a.penalty < b.penalty;
  return a.policy_id < b.policy_id;
}

PolicySpace::PolicySpace(const WorldModel& model, int agent) {
  const auto& ag = model.agents[static_cast<std::size_t>(agent)];
  actions_ = static_cast<int>(ag.actions.size());
  base_ = Policy(model.horizon, model.observation_count(agent), actions_, ag.null_action);

  // States reachable under some joint action; a superset of what any
  // profile can reach.
  std::set<StateId> reach;
  for (const auto& o : model.initial)
    if (o.prob > 0.0) reach.insert(o.state);
  std::set<std::pair<int, int>> entries;
  for (int t = 0; t < model.horizon; ++t) {
    std::set<StateId> next;
    for (StateId s : reach) {
      entries.insert({t, model.observation(agent, s)});
      for (JointActionId a = 0; a < model.joint_count(); ++a)
        for (const auto& o : model.row(s, a))
          if (o.prob > 0.0) next.insert(o.state);
    }
    reach = std::move(next);
  }
  entries_.assign(entries.begin(), entries.end());
}

double PolicySpace::size() const { return std::pow(static_cast<double>(actions_), static_cast<double>(entries_.size())); }

Policy PolicySpace::decode(std::uint64_t index) const {
  Policy p = base_;
  const auto radix = static_cast<std::uint64_t>(actions_);
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    p.set(it->first, it->second, static_cast<ActionId>(index % radix));
    index /= radix;
  }
  return p;
}

PolicyProfile with_policy(const WorldModel& model, const PolicyProfile& others, int agent, const Policy& policy) {
  PolicyProfile profile = others.empty() ? null_profile(model) : others;
  profile.resize(model.agents.size());
  profile[static_cast<std::size_t>(agent)] = policy;
  return profile;
}

PolicyEvaluator::PolicyEvaluator(const WorldModel& model, const Objective& objective, const PlannerOptions& options)
    : model_(model),
      objective_(objective),
      others_(options.profile.empty() ? null_profile(model) : options.profile),
      penalty_(model, others_, objective.agent, objective.measure, objective.conditioning, options.base,
               options.exec) {}

SweepRow PolicyEvaluator::evaluate(const Policy& policy) const {
  const auto profile = with_policy(model_, others_, objective_.agent, policy);
  const auto result = penalty_.evaluate(profile);
  double expected = 0.0;
  for (const auto& e : result.active.entries()) {
    const double u = objective_.u(e.trajectory);
    if (!(u >= 0.0 && u <= 1.0))
      throw UnboundedUtility("utility '" + objective_.u.name + "' takes value " + std::to_string(u) +
                             " outside [0, 1]");
    expected += e.probability * u;
  }
  SweepRow row;
  row.mu = objective_.mu;
  row.policy_id = policy.id();
  row.expected_u = expected;
  row.penalty = result.penalty;
  row.objective = objective_value(expected, objective_.mu, result.penalty);
  row.measure = objective_.measure.label;
  return row;
}

SweepRow PolicyEvaluator::at_mu(SweepRow row, double mu) {
  row.mu = mu;
  row.objective = objective_value(row.expected_u, mu, row.penalty);
  return row;
}

SweepRow evaluate_policy(const WorldModel& model, const Policy& policy, const Objective& objective,
                         const PlannerOptions& options) {
  return PolicyEvaluator(model, objective, options).evaluate(policy);
}

namespace {

/// Runs body(i) for i in [0, n), in parallel when asked, and rethrows the
/// exception of the smallest failing index.
template <typename F>
void for_each_index(std::size_t n, Execution exec, F&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long>(n);
  auto guarded = [&](long i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < count; ++i) guarded(i);
  } else {
    for (long i = 0; i < count; ++i) guarded(i);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

constexpr double kMaxExhaustive = 9.0e15;

}  // namespace

std::vector<std::pair<Policy, SweepRow>> evaluate_all(const WorldModel& model, const Objective& objective,
                                                      const PlannerOptions& options) {
  const PolicySpace space(model, objective.agent);
  if (space.size() > kMaxExhaustive) throw ExplosionGuard("policy space too large to enumerate");
  const auto n = static_cast<std::size_t>(space.size());
  const PolicyEvaluator evaluator(model, objective, options);
  std::vector<std::pair<Policy, SweepRow>> out(n);
  for_each_index(n, options.exec, [&](std::size_t i) {
    auto policy = space.decode(i);
    auto row = evaluator.evaluate(policy);
    out[i] = {std::move(policy), std::move(row)};
  });
  return out;
}

namespace {

PlanResult best_of(const std::vector<std::pair<Policy, SweepRow>>& all, double mu) {
  PlanResult best;
  bool first = true;
  for (const auto& [policy, row] : all) {
    auto r = PolicyEvaluator::at_mu(row, mu);
    if (first || better(r, best.row)) {
      best.row = std::move(r);
      best.policy = policy;
      first = false;
    }
  }
  best.exhaustive = true;
  best.evaluated = all.size();
  return best;
}

PlanResult hill_climb(const WorldModel& model, const Objective& objective, const PlannerOptions& options) {
  const PolicySpace space(model, objective.agent);
  const PolicyEvaluator evaluator(model, objective, options);
  const auto& entries = space.free_entries();
  const int n_actions = space.actions();
  const int restarts = std::max(1, options.restarts);
  std::vector<PlanResult> results(static_cast<std::size_t>(restarts));

  for_each_index(results.size(), options.exec, [&](std::size_t r) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    std::uniform_int_distribution<std::size_t> pick_entry(0, entries.empty() ? 0 : entries.size() - 1);
    std::uniform_int_distribution<int> pick_action(0, std::max(0, n_actions - 2));

    // Restart 0 starts from the null policy, so the result never scores
    // below it.
    Policy current = space.null();
    if (r > 0) {
      std::uniform_int_distribution<int> any(0, n_actions - 1);
      for (const auto& [t, o] : entries) current.set(t, o, any(rng));
    }
    PlanResult res;
    res.policy = current;
    res.row = evaluator.evaluate(current);
    res.evaluated = 1;
    if (entries.empty() || n_actions < 2) {
      results[r] = std::move(res);
      return;
    }
    for (int m = 0; m < options.mutations; ++m) {
      const auto& [t, o] = entries[pick_entry(rng)];
      int action = pick_action(rng);
      if (action >= res.policy.at(t, o)) ++action;
      Policy candidate = res.policy;
      candidate.set(t, o, action);
      auto row = evaluator.evaluate(candidate);
      ++res.evaluated;
      if (better(row, res.row)) {
        res.row = std::move(row);
        res.policy = std::move(candidate);
      }
    }
    results[r] = std::move(res);
  });

  PlanResult best = results.front();
  std::size_t evaluated = 0;
  for (const auto& res : results) {
    evaluated += res.evaluated;
    if (better(res.row, best.row)) best = res;
  }
  best.exhaustive = false;
  best.evaluated = evaluated;
  return best;
}

}  // namespace

PlanResult optimize(const WorldModel& model, const Objective& objective, const PlannerOptions& options) {
  const PolicySpace space(model, objective.agent);
  if (space.size() <= options.budget) return best_of(evaluate_all(model, objective, options), objective.mu);
  return hill_climb(model, objective, options);
}

std::vector<SweepRow> mu_sweep(const WorldModel& model, const Objective& objective, std::vector<double> mus,
                               const PlannerOptions& options) {
  if (mus.empty()) throw std::invalid_argument("mu list is empty");
  for (double mu : mus)
    if (!(mu >= 0.0)) throw std::invalid_argument("mu must be non-negative");
  std::stable_sort(mus.begin(), mus.end(), std::greater<>());
  std::vector<SweepRow> rows;
  const PolicySpace space(model, objective.agent);
  if (space.size() <= options.budget) {
    // The penalty does not depend on mu, so every policy is scored once.
    const auto all = evaluate_all(model, objective, options);
    for (double mu : mus) rows.push_back(best_of(all, mu).row);
  } else {
    for (double mu : mus) {
      Objective at = objective;
      at.mu = mu;
      rows.push_back(hill_climb(model, at, options).row);
    }
  }
  return rows;
}

std::vector<double> log_grid(double lo, double hi, int steps) {
  if (steps < 1 || !(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("bad log grid");
  if (steps == 1) return {lo};
  std::vector<double> grid;
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < steps; ++i) {
    if (i == 0)
      grid.push_back(lo);
    else if (i == steps - 1)
      grid.push_back(hi);
    else
      grid.push_back(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(steps - 1)));
  }
  return grid;
}

}  // namespace lowimpact
