#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lowimpact/errors.hpp"
#include "lowimpact/policy.hpp"

namespace lowimpact {

using StateId = int;
using JointActionId = int;

/// Transition rows must sum to one within this tolerance.
inline constexpr double kRowTolerance = 1e-12;
inline constexpr double kDefaultEpsilon = 1e-3;
inline constexpr std::size_t kDefaultTrajectoryCap = 10'000'000;

/// Named integer-valued feature of a state. Boxed components are hidden
/// inside the agent's box: they never enter coarse-graining variables or the
/// detectability slice.
struct Component {
  std::string name;
  bool boxed = false;
  bool operator==(const Component&) const = default;
};

struct Outcome {
  StateId state = 0;
  double prob = 0.0;
  bool operator==(const Outcome&) const = default;
};

enum class BaselineKind { Null, Uniform, Weighted, Scripted };

/// What an agent does when its activation event fails.
///  - Null: the null action every step.
///  - Uniform: uniformly random over `actions` every step.
///  - Weighted: `actions` drawn with `weights` every step.
///  - Scripted: `actions[t]` at step t, deterministically.
struct Baseline {
  BaselineKind kind = BaselineKind::Null;
  std::vector<ActionId> actions;
  std::vector<double> weights;
  bool operator==(const Baseline&) const = default;
};

struct Agent {
  std::string name;
  std::vector<std::string> actions;
  ActionId null_action = 0;
  /// Probability that the activation event fails.
  double epsilon = kDefaultEpsilon;
  Baseline baseline;
  /// Components the agent observes; empty means a fully masked agent.
  std::vector<int> observes;
  bool operator==(const Agent&) const = default;
};

/// Finite stochastic world with one activation event per agent.
///
/// Joint actions are the cartesian product of the per-agent action sets,
/// encoded in mixed radix with agent 0 most significant. Call finalize()
/// after editing the public fields; it rebuilds the observation tables.
class WorldModel {
 public:
  int horizon = 1;
  std::vector<Component> components;
  std::vector<std::string> state_names;
  std::vector<std::vector<int>> state_values;
  std::vector<Outcome> initial;
  std::vector<Agent> agents;
  /// Indexed by state * joint_count() + joint action.
  std::vector<std::vector<Outcome>> transitions;

  void finalize();

  int state_count() const { return static_cast<int>(state_names.size()); }
  int agent_count() const { return static_cast<int>(agents.size()); }
  int joint_count() const;

  JointActionId joint(std::span<const ActionId> actions) const;
  ActionId agent_action(JointActionId joint, int agent) const;

  std::span<const Outcome> row(StateId s, JointActionId a) const {
    return transitions[static_cast<std::size_t>(s) * static_cast<std::size_t>(joint_count()) +
                       static_cast<std::size_t>(a)];
  }
  std::vector<Outcome>& row_mut(StateId s, JointActionId a);
  /// Resizes the transition table to state_count() * joint_count() rows.
  void reset_transitions();

  int value(StateId s, int component) const { return state_values[static_cast<std::size_t>(s)][static_cast<std::size_t>(component)]; }

  int observation(int agent, StateId s) const {
    return obs_table_[static_cast<std::size_t>(agent)][static_cast<std::size_t>(s)];
  }
  int observation_count(int agent) const { return obs_count_[static_cast<std::size_t>(agent)]; }

  int component_index(std::string_view name) const;
  int state_index(std::string_view name) const;
  int agent_index(std::string_view name) const;
  int action_index(int agent, std::string_view name) const;

  /// Data equality; derived tables are ignored.
  bool operator==(const WorldModel& other) const;

 private:
  std::vector<std::vector<int>> obs_table_;
  std::vector<int> obs_count_;
};

/// Every violated invariant of the model (empty when valid).
std::vector<Issue> validate_model(const WorldModel& model);
/// Throws ValidationError unless validate_model() is empty.
void require_valid(const WorldModel& model);

/// One world history: activation flags plus s0, a1, s1, ..., aH, sH.
struct Trajectory {
  std::vector<std::uint8_t> active;
  std::vector<int> path;

  int horizon() const { return (static_cast<int>(path.size()) - 1) / 2; }
  StateId state(int t) const { return path[static_cast<std::size_t>(2 * t)]; }
  /// Joint action taken at step `step` (1-based, leading into state(step)).
  JointActionId action(int step) const { return path[static_cast<std::size_t>(2 * step - 1)]; }
  bool is_active(int agent) const { return active[static_cast<std::size_t>(agent)] != 0; }

  auto operator<=>(const Trajectory&) const = default;
};

struct WeightedTrajectory {
  Trajectory trajectory;
  double probability = 0.0;
};

enum class Activation : std::uint8_t { Inactive, Active, Either };
/// Per-agent activation conditioning; an empty assignment means all Either.
using ActivationAssignment = std::vector<Activation>;

/// Distribution of an agent's baseline action at each step.
struct BaselineProcess {
  std::vector<std::vector<std::pair<ActionId, double>>> steps;

  std::span<const std::pair<ActionId, double>> at(int t) const { return steps[static_cast<std::size_t>(t)]; }
};

BaselineProcess apply_baseline(const WorldModel& model, int agent);

/// Action distribution of `agent` at step t (0-based) in state s.
std::vector<std::pair<ActionId, double>> agent_step(const WorldModel& model, const PolicyProfile& profile,
                                                     int agent, bool active, int t, StateId s);

struct EnumerationOptions {
  std::size_t cap = kDefaultTrajectoryCap;
};

/// Exhaustive list of positive-probability trajectories in lexicographic
/// order. Agents fixed by `given` contribute no activation factor, so the
/// result is the distribution conditional on that assignment.
std::vector<WeightedTrajectory> enumerate_trajectories(const WorldModel& model, const PolicyProfile& profile,
                                                       const ActivationAssignment& given = {},
                                                       const EnumerationOptions& options = {});

/// Null policy for one agent (null action everywhere).
Policy null_policy(const WorldModel& model, int agent);
/// Profile with the null policy for every agent.
PolicyProfile null_profile(const WorldModel& model);

}  // namespace lowimpact
