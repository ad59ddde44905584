#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lowimpact/distribution.hpp"
#include "lowimpact/measures_info.hpp"

namespace lowimpact {

// Data-form definitions used by scenario files. Each one names state
// components and timesteps; compile() resolves the names against a model and
// returns a closure that owns everything it needs.
//
// Times index trajectory states: 0 is the initial state, H the final one,
// and negative values count back from the end (-1 is the final state).

enum class Compare { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view to_string(Compare op);
Compare parse_compare(std::string_view op);

/// component(time) <op> value.
struct Clause {
  std::string component;
  int time = -1;
  Compare op = Compare::Eq;
  int value = 0;
  bool operator==(const Clause&) const = default;
};

/// Conjunction of clauses; no clauses means the sure event.
struct PredicateDef {
  std::string name;
  std::vector<Clause> all;
  bool operator==(const PredicateDef&) const = default;
};

/// weight * component(time) * [when], where an empty component reads as 1
/// and an empty `when` as true.
struct TermDef {
  double weight = 1.0;
  std::string component;
  int time = -1;
  std::vector<Clause> when;
  bool operator==(const TermDef&) const = default;
};

struct UtilityDef {
  std::string name;
  double offset = 0.0;
  std::vector<TermDef> terms;
  bool operator==(const UtilityDef&) const = default;
};

/// World variable: a component at a time, optionally binned.
struct VariableDef {
  std::string name;
  std::string component;
  int time = -1;
  std::vector<double> edges;
  bool operator==(const VariableDef&) const = default;
};

/// Resolves a possibly negative time against the horizon; throws
/// ValidationError when out of range.
int resolve_time(const WorldModel& model, int time, std::string_view context);

EventPredicate compile(const WorldModel& model, const PredicateDef& def);
Utility compile(const WorldModel& model, const UtilityDef& def);
Variable compile(const WorldModel& model, const VariableDef& def);

}  // namespace lowimpact
