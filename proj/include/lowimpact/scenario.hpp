#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lowimpact/expression.hpp"
#include "lowimpact/multiagent.hpp"

namespace lowimpact {

struct UtilitySetDef {
  std::string name;
  std::vector<std::string> utilities;
  bool operator==(const UtilitySetDef&) const = default;
};

struct FactSetDef {
  std::string name;
  std::vector<std::string> facts;
  int max_conjunction = 2;
  bool operator==(const FactSetDef&) const = default;
};

/// Component observed at the listed times.
struct SliceDef {
  std::string component;
  std::vector<int> times;
  bool operator==(const SliceDef&) const = default;
};

/// Named penalty. `kind` uses the command-line syntax: coarse:<norm>,
/// div:<divergence>[:world], importance or detect.
struct MeasureDef {
  std::string name;
  std::string kind;
  /// World variables for coarse and divergence measures; empty means all.
  std::vector<std::string> variables;
  std::string utility_set;
  std::string fact_set;
  /// Detection slice; empty means every unboxed component at t = 1..H.
  std::vector<SliceDef> slice;
  /// Empty means the default grid.
  std::vector<double> rho_grid;
  double threshold = kDefaultDetectionThreshold;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  bool operator==(const MeasureDef&) const = default;
};

struct ChannelDef {
  std::string name;
  std::string component;
  int time = -1;
  std::vector<int> alphabet;
  bool operator==(const ChannelDef&) const = default;
};

struct AnnouncementDef {
  std::string name;
  std::string predicate;
  double floor = 1e-3;
  /// Unconditioned penalty every u-maximizing policy must exceed; 0 when
  /// not declared.
  double penalty_floor = 0.0;
  bool operator==(const AnnouncementDef&) const = default;
};

struct MuGrid {
  double lo = 1e-3;
  double hi = 1e3;
  int steps = 20;
  bool operator==(const MuGrid&) const = default;
};

struct PlannerDef {
  /// Empty means the first agent.
  std::string agent;
  std::string utility;
  /// Empty means the first declared measure.
  std::string measure;
  std::string conditioning = "none";
  double mu = 1.0;
  std::optional<MuGrid> mu_grid;
  double budget = kDefaultBudget;
  std::uint64_t seed = 0;
  int restarts = kDefaultRestarts;
  int mutations = kDefaultMutations;
  bool operator==(const PlannerDef&) const = default;
};

/// An agent whose goal assumes `other` stays inactive.
struct ConditionalAgentDef {
  std::string agent;
  std::string other;
  std::string utility;
  bool operator==(const ConditionalAgentDef&) const = default;
};

struct MultiagentDef {
  std::vector<ConditionalAgentDef> agents;
  /// Predicate naming the joint goal.
  std::string success;
  double indifference = kDefaultIndifference;
  bool operator==(const MultiagentDef&) const = default;
};

struct Scenario {
  std::string name;
  std::string description;
  WorldModel model;
  std::vector<VariableDef> variables;
  std::vector<PredicateDef> predicates;
  std::vector<UtilityDef> utilities;
  std::vector<UtilitySetDef> utility_sets;
  std::vector<FactSetDef> fact_sets;
  std::vector<MeasureDef> measures;
  std::vector<ChannelDef> channels;
  std::vector<AnnouncementDef> announcements;
  PlannerDef planner;
  std::optional<MultiagentDef> multiagent;

  bool operator==(const Scenario&) const = default;
};

// -- file format ------------------------------------------------------------

/// Parses a YAML scenario document. Throws ParseError for malformed YAML and
/// ValidationError (with line numbers where known) for schema or invariant
/// violations.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario_file(const std::string& path);
/// Built-in name or file path; throws UnknownBuiltin when it is neither.
Scenario load_scenario(const std::string& name_or_path);

/// YAML document that parses back to an equal scenario.
std::string serialize(const Scenario& scenario);

/// Every violated invariant: model validity, name resolution, fact and
/// announcement probabilities, channel coverage.
std::vector<Issue> validate_scenario(const Scenario& scenario);
void require_valid(const Scenario& scenario);

// -- compilation --------------------------------------------------------------

int planner_agent(const Scenario& s);
Utility utility(const Scenario& s, std::string_view name);
EventPredicate predicate(const Scenario& s, std::string_view name);
VariableSpec variables(const Scenario& s, const std::vector<std::string>& names = {});
UtilitySet utility_set(const Scenario& s, std::string_view name);
FactSet fact_set(const Scenario& s, std::string_view name);
AnnouncementEvent announcement(const Scenario& s, std::string_view name);
const AnnouncementDef& announcement_def(const Scenario& s, std::string_view name);

/// Measure given by scenario name or by kind string. Throws UnknownKind
/// listing the valid choices.
PenaltyConfig measure(const Scenario& s, std::string_view name_or_kind);
/// Human-readable list of accepted --measure values.
std::string measure_choices(const Scenario& s);

/// "none", "output", "output:<channel>" or "announce:<name>".
Conditioning conditioning(const Scenario& s, std::string_view spec);

Objective objective(const Scenario& s, std::string_view measure_name, std::string_view conditioning_spec,
                    double mu);
Objective planner_objective(const Scenario& s);
PlannerOptions planner_options(const Scenario& s);
/// The planner's mu grid when declared, else its single mu.
std::vector<double> planner_mus(const Scenario& s);

/// Conditional goals of the multiagent section, using the given measure.
std::vector<ConditionalObjective> conditional_objectives(const Scenario& s, std::string_view measure_name);

}  // namespace lowimpact
