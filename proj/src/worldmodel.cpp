#include "lowimpact/worldmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace lowimpact {

int WorldModel::joint_count() const {
  int count = 1;
  for (const auto& agent : agents) count *= static_cast<int>(agent.actions.size());
  return count;
}

JointActionId WorldModel::joint(std::span<const ActionId> actions) const {
  JointActionId id = 0;
  for (std::size_t i = 0; i < agents.size(); ++i)
    id = id * static_cast<int>(agents[i].actions.size()) + actions[i];
  return id;
}

ActionId WorldModel::agent_action(JointActionId joint, int agent) const {
  for (int i = agent_count() - 1; i > agent; --i) joint /= static_cast<int>(agents[static_cast<std::size_t>(i)].actions.size());
  return joint % static_cast<int>(agents[static_cast<std::size_t>(agent)].actions.size());
}

std::vector<Outcome>& WorldModel::row_mut(StateId s, JointActionId a) {
  return transitions[static_cast<std::size_t>(s) * static_cast<std::size_t>(joint_count()) +
                     static_cast<std::size_t>(a)];
}

void WorldModel::reset_transitions() {
  transitions.assign(static_cast<std::size_t>(state_count()) * static_cast<std::size_t>(joint_count()), {});
}

void WorldModel::finalize() {
  obs_table_.assign(agents.size(), std::vector<int>(state_names.size(), 0));
  obs_count_.assign(agents.size(), 1);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& observes = agents[i].observes;
    if (observes.empty()) continue;
    std::map<std::vector<int>, int> symbols;
    std::vector<std::vector<int>> keys(state_names.size());
    for (std::size_t s = 0; s < state_names.size(); ++s) {
      for (int c : observes) {
        const bool ok = c >= 0 && s < state_values.size() && static_cast<std::size_t>(c) < state_values[s].size();
        keys[s].push_back(ok ? state_values[s][static_cast<std::size_t>(c)] : 0);
      }
      symbols.emplace(keys[s], 0);
    }
    int next = 0;
    for (auto& [key, symbol] : symbols) symbol = next++;
    for (std::size_t s = 0; s < state_names.size(); ++s) obs_table_[i][s] = symbols.at(keys[s]);
    obs_count_[i] = next;
  }
}

namespace {
template <typename Range>
int find_name(const Range& names, std::string_view name) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}
}  // namespace

int WorldModel::component_index(std::string_view name) const {
  for (std::size_t i = 0; i < components.size(); ++i)
    if (components[i].name == name) return static_cast<int>(i);
  return -1;
}

int WorldModel::state_index(std::string_view name) const { return find_name(state_names, name); }

int WorldModel::agent_index(std::string_view name) const {
  for (std::size_t i = 0; i < agents.size(); ++i)
    if (agents[i].name == name) return static_cast<int>(i);
  return -1;
}

int WorldModel::action_index(int agent, std::string_view name) const {
  return find_name(agents[static_cast<std::size_t>(agent)].actions, name);
}

bool WorldModel::operator==(const WorldModel& other) const {
  return horizon == other.horizon && components == other.components && state_names == other.state_names &&
         state_values == other.state_values && initial == other.initial && agents == other.agents &&
         transitions == other.transitions;
}

std::vector<Issue> validate_model(const WorldModel& model) {
  std::vector<Issue> issues;
  auto add = [&](std::string kind, std::string message) { issues.push_back({std::move(kind), std::move(message), -1}); };

  if (model.horizon < 1) add("BadHorizon", "horizon must be >= 1");
  if (model.state_names.empty()) add("EmptyStates", "model has no states");
  if (model.state_values.size() != model.state_names.size()) add("BadState", "state value table does not match state names");
  for (std::size_t s = 0; s < model.state_values.size(); ++s)
    if (model.state_values[s].size() != model.components.size())
      add("BadState", "state '" + (s < model.state_names.size() ? model.state_names[s] : std::to_string(s)) +
                          "' has " + std::to_string(model.state_values[s].size()) + " values for " +
                          std::to_string(model.components.size()) + " components");

  const int n_states = model.state_count();
  auto valid_state = [&](StateId s) { return s >= 0 && s < n_states; };

  if (model.initial.empty()) add("BadInitial", "initial distribution is empty");
  double initial_mass = 0.0;
  for (const auto& o : model.initial) {
    if (!valid_state(o.state)) add("BadInitial", "initial distribution names an unknown state");
    if (!(o.prob > 0.0)) add("BadInitial", "initial probabilities must be positive");
    initial_mass += o.prob;
  }
  if (!model.initial.empty() && std::abs(initial_mass - 1.0) > kRowTolerance)
    add("BadInitial", "initial distribution sums to " + std::to_string(initial_mass));

  if (model.agents.empty()) add("NoAgents", "model has no agents");
  for (const auto& agent : model.agents) {
    const int n_actions = static_cast<int>(agent.actions.size());
    if (n_actions == 0) add("NoActions", "agent '" + agent.name + "' has no actions");
    if (agent.null_action < 0 || agent.null_action >= n_actions)
      add("MissingNullAction", "agent '" + agent.name + "' has no valid null action");
    if (!(agent.epsilon > 0.0 && agent.epsilon < 1.0))
      add("DegenerateActivation", "agent '" + agent.name + "' activation failure probability must lie in (0, 1), got " +
                                      std::to_string(agent.epsilon));
    for (int c : agent.observes)
      if (c < 0 || c >= static_cast<int>(model.components.size()))
        add("BadObservation", "agent '" + agent.name + "' observes an unknown component");
    const auto& b = agent.baseline;
    for (ActionId a : b.actions)
      if (a < 0 || a >= n_actions) add("BadBaseline", "agent '" + agent.name + "' baseline uses an unknown action");
    switch (b.kind) {
      case BaselineKind::Null:
        break;
      case BaselineKind::Uniform:
        if (b.actions.empty()) add("BadBaseline", "agent '" + agent.name + "' uniform baseline has no actions");
        break;
      case BaselineKind::Weighted: {
        if (b.actions.empty() || b.weights.size() != b.actions.size()) {
          add("BadBaseline", "agent '" + agent.name + "' weighted baseline needs one weight per action");
          break;
        }
        double total = 0.0;
        for (double w : b.weights) {
          if (!(w > 0.0)) add("BadBaseline", "agent '" + agent.name + "' baseline weights must be positive");
          total += w;
        }
        if (std::abs(total - 1.0) > kRowTolerance)
          add("BadBaseline", "agent '" + agent.name + "' baseline weights sum to " + std::to_string(total));
        break;
      }
      case BaselineKind::Scripted:
        if (static_cast<int>(b.actions.size()) != model.horizon)
          add("BadBaseline", "agent '" + agent.name + "' scripted baseline length differs from the horizon");
        break;
    }
  }
  if (!issues.empty()) return issues;

  const int n_joint = model.joint_count();
  if (model.transitions.size() != static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_joint)) {
    add("MissingTransition", "transition table has " + std::to_string(model.transitions.size()) + " rows, expected " +
                                 std::to_string(n_states * n_joint));
    return issues;
  }
  std::vector<ActionId> nulls;
  for (const auto& agent : model.agents) nulls.push_back(agent.null_action);
  const JointActionId all_null = model.joint(nulls);
  for (StateId s = 0; s < n_states; ++s) {
    for (JointActionId a = 0; a < n_joint; ++a) {
      const auto row = model.row(s, a);
      if (row.empty()) {
        if (a == all_null)
          add("MissingNullAction", "no transition for the null action in state '" + model.state_names[static_cast<std::size_t>(s)] + "'");
        else
          add("MissingTransition", "no transition for joint action " + std::to_string(a) + " in state '" +
                                       model.state_names[static_cast<std::size_t>(s)] + "'");
        continue;
      }
      double total = 0.0;
      for (const auto& o : row) {
        if (!valid_state(o.state)) add("BadState", "transition targets an unknown state");
        if (!(o.prob >= 0.0)) add("NonStochasticRow", "negative transition probability");
        total += o.prob;
      }
      if (std::abs(total - 1.0) > kRowTolerance)
        add("NonStochasticRow", "row (state '" + model.state_names[static_cast<std::size_t>(s)] + "', joint action " +
                                    std::to_string(a) + ") sums to " + std::to_string(total));
    }
  }
  return issues;
}

void require_valid(const WorldModel& model) {
  auto issues = validate_model(model);
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

namespace {
std::vector<std::pair<ActionId, double>> baseline_step(const Agent& a, int t) {
  std::vector<std::pair<ActionId, double>> step;
  switch (a.baseline.kind) {
    case BaselineKind::Null:
      step.emplace_back(a.null_action, 1.0);
      break;
    case BaselineKind::Uniform: {
      const double p = 1.0 / static_cast<double>(a.baseline.actions.size());
      for (ActionId act : a.baseline.actions) step.emplace_back(act, p);
      break;
    }
    case BaselineKind::Weighted:
      for (std::size_t i = 0; i < a.baseline.actions.size(); ++i) step.emplace_back(a.baseline.actions[i], a.baseline.weights[i]);
      break;
    case BaselineKind::Scripted:
      step.emplace_back(a.baseline.actions[static_cast<std::size_t>(t)], 1.0);
      break;
  }
  std::sort(step.begin(), step.end());
  return step;
}
}  // namespace

BaselineProcess apply_baseline(const WorldModel& model, int agent) {
  BaselineProcess process;
  for (int t = 0; t < model.horizon; ++t)
    process.steps.push_back(baseline_step(model.agents[static_cast<std::size_t>(agent)], t));
  return process;
}

std::vector<std::pair<ActionId, double>> agent_step(const WorldModel& model, const PolicyProfile& profile, int agent,
                                                     bool active, int t, StateId s) {
  const auto idx = static_cast<std::size_t>(agent);
  if (active && idx < profile.size() && profile[idx])
    return {{profile[idx]->at(t, model.observation(agent, s)), 1.0}};
  return baseline_step(model.agents[idx], t);
}

namespace {

class Enumerator {
 public:
  Enumerator(const WorldModel& model, const PolicyProfile& profile, std::size_t cap)
      : model_(model), profile_(profile), cap_(cap) {}

  void run(const std::vector<std::uint8_t>& active, double weight, std::vector<WeightedTrajectory>& out) {
    out_ = &out;
    current_.active = active;
    current_.path.clear();
    current_.path.reserve(static_cast<std::size_t>(2 * model_.horizon + 1));
    auto initial = model_.initial;
    std::sort(initial.begin(), initial.end(), [](const Outcome& a, const Outcome& b) { return a.state < b.state; });
    for (const auto& o : initial) {
      if (o.prob <= 0.0) continue;
      current_.path.push_back(o.state);
      descend(0, weight * o.prob);
      current_.path.pop_back();
    }
  }

 private:
  void descend(int t, double prob) {
    if (t == model_.horizon) {
      if (out_->size() >= cap_)
        throw ExplosionGuard("trajectory count exceeds the cap of " + std::to_string(cap_));
      out_->push_back({current_, prob});
      return;
    }
    const StateId s = current_.path.back();
    const int n_agents = model_.agent_count();
    std::vector<std::vector<std::pair<ActionId, double>>> options(static_cast<std::size_t>(n_agents));
    for (int i = 0; i < n_agents; ++i)
      options[static_cast<std::size_t>(i)] = agent_step(model_, profile_, i, current_.is_active(i), t, s);
    std::vector<ActionId> chosen(static_cast<std::size_t>(n_agents));
    product(options, chosen, 0, 1.0, t, prob);
  }

  void product(const std::vector<std::vector<std::pair<ActionId, double>>>& options, std::vector<ActionId>& chosen,
               int agent, double action_prob, int t, double prob) {
    if (agent == static_cast<int>(options.size())) {
      const JointActionId joint = model_.joint(chosen);
      const StateId s = current_.path.back();
      for (const auto& o : model_.row(s, joint)) {
        if (o.prob <= 0.0) continue;
        current_.path.push_back(joint);
        current_.path.push_back(o.state);
        descend(t + 1, prob * action_prob * o.prob);
        current_.path.pop_back();
        current_.path.pop_back();
      }
      return;
    }
    for (const auto& [act, p] : options[static_cast<std::size_t>(agent)]) {
      if (p <= 0.0) continue;
      chosen[static_cast<std::size_t>(agent)] = act;
      product(options, chosen, agent + 1, action_prob * p, t, prob);
    }
  }

  const WorldModel& model_;
  const PolicyProfile& profile_;
  std::size_t cap_;
  std::vector<WeightedTrajectory>* out_ = nullptr;
  Trajectory current_;
};

}  // namespace

std::vector<WeightedTrajectory> enumerate_trajectories(const WorldModel& model, const PolicyProfile& profile,
                                                       const ActivationAssignment& given,
                                                       const EnumerationOptions& options) {
  const int n_agents = model.agent_count();

  // Activation branches in lexicographic order (inactive before active).
  std::vector<std::pair<std::vector<std::uint8_t>, double>> branches{{{}, 1.0}};
  for (int i = 0; i < n_agents; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const Activation a = given.empty() ? Activation::Either : given[idx];
    const double eps = model.agents[idx].epsilon;
    std::vector<std::pair<std::vector<std::uint8_t>, double>> next;
    for (const auto& [flags, w] : branches) {
      if (a != Activation::Active) {
        auto f = flags;
        f.push_back(0);
        next.emplace_back(std::move(f), a == Activation::Either ? w * eps : w);
      }
      if (a != Activation::Inactive) {
        auto f = flags;
        f.push_back(1);
        next.emplace_back(std::move(f), a == Activation::Either ? w * (1.0 - eps) : w);
      }
    }
    branches = std::move(next);
  }

  std::vector<WeightedTrajectory> out;
  Enumerator enumerator(model, profile, options.cap);
  for (const auto& [flags, w] : branches) enumerator.run(flags, w, out);
  return out;
}

Policy null_policy(const WorldModel& model, int agent) {
  const auto& a = model.agents[static_cast<std::size_t>(agent)];
  return Policy(model.horizon, model.observation_count(agent), static_cast<int>(a.actions.size()), a.null_action);
}

PolicyProfile null_profile(const WorldModel& model) {
  PolicyProfile profile;
  for (int i = 0; i < model.agent_count(); ++i) profile.emplace_back(null_policy(model, i));
  return profile;
}

}  // namespace lowimpact
