#include "lowimpact/expression.hpp"

#include <memory>

namespace lowimpact {

namespace {

/// Component values per state plus the resolved time.
struct Reader {
  std::vector<int> values;
  int time = 0;

  int operator()(const Trajectory& t) const { return values[static_cast<std::size_t>(t.state(time))]; }
};

Reader reader(const WorldModel& model, const std::string& component, int time, std::string_view context) {
  const int c = model.component_index(component);
  if (c < 0)
    throw ValidationError(
        std::vector<Issue>{{"UnknownComponent", std::string(context) + ": no component named '" + component + "'"}});
  Reader r;
  r.time = resolve_time(model, time, context);
  for (StateId s = 0; s < model.state_count(); ++s) r.values.push_back(model.value(s, c));
  return r;
}

bool holds(Compare op, int lhs, int rhs) {
  switch (op) {
    case Compare::Eq:
      return lhs == rhs;
    case Compare::Ne:
      return lhs != rhs;
    case Compare::Lt:
      return lhs < rhs;
    case Compare::Le:
      return lhs <= rhs;
    case Compare::Gt:
      return lhs > rhs;
    case Compare::Ge:
      return lhs >= rhs;
  }
  return false;
}

struct CompiledClause {
  Reader read;
  Compare op;
  int value;
};

std::vector<CompiledClause> compile_clauses(const WorldModel& model, const std::vector<Clause>& clauses,
                                            std::string_view context) {
  std::vector<CompiledClause> out;
  for (const auto& c : clauses) out.push_back({reader(model, c.component, c.time, context), c.op, c.value});
  return out;
}

bool all_hold(const std::vector<CompiledClause>& clauses, const Trajectory& t) {
  for (const auto& c : clauses)
    if (!holds(c.op, c.read(t), c.value)) return false;
  return true;
}

}  // namespace

std::string_view to_string(Compare op) {
  switch (op) {
    case Compare::Eq:
      return "==";
    case Compare::Ne:
      return "!=";
    case Compare::Lt:
      return "<";
    case Compare::Le:
      return "<=";
    case Compare::Gt:
      return ">";
    case Compare::Ge:
      return ">=";
  }
  return "?";
}

Compare parse_compare(std::string_view op) {
  if (op == "==") return Compare::Eq;
  if (op == "!=") return Compare::Ne;
  if (op == "<") return Compare::Lt;
  if (op == "<=") return Compare::Le;
  if (op == ">") return Compare::Gt;
  if (op == ">=") return Compare::Ge;
  throw UnknownKind("unknown comparison '" + std::string(op) + "'");
}

int resolve_time(const WorldModel& model, int time, std::string_view context) {
  const int t = time < 0 ? model.horizon + 1 + time : time;
  if (t < 0 || t > model.horizon)
    throw ValidationError(std::vector<Issue>{
        {"BadTime", std::string(context) + ": time " + std::to_string(time) + " outside the horizon"}});
  return t;
}

EventPredicate compile(const WorldModel& model, const PredicateDef& def) {
  auto clauses = std::make_shared<const std::vector<CompiledClause>>(
      compile_clauses(model, def.all, "predicate '" + def.name + "'"));
  return {def.name, [clauses](const Trajectory& t) { return all_hold(*clauses, t); }};
}

Utility compile(const WorldModel& model, const UtilityDef& def) {
  struct CompiledTerm {
    double weight;
    bool constant;
    Reader read;
    std::vector<CompiledClause> when;
  };
  const std::string context = "utility '" + def.name + "'";
  auto terms = std::make_shared<std::vector<CompiledTerm>>();
  for (const auto& term : def.terms) {
    CompiledTerm ct{term.weight, term.component.empty(), {}, compile_clauses(model, term.when, context)};
    if (!ct.constant) ct.read = reader(model, term.component, term.time, context);
    terms->push_back(std::move(ct));
  }
  const double offset = def.offset;
  return {def.name, [terms, offset](const Trajectory& t) {
            double total = offset;
            for (const auto& term : *terms) {
              if (!all_hold(term.when, t)) continue;
              total += term.weight * (term.constant ? 1.0 : static_cast<double>(term.read(t)));
            }
            return total;
          }};
}

Variable compile(const WorldModel& model, const VariableDef& def) {
  auto read = reader(model, def.component, def.time, "variable '" + def.name + "'");
  return {def.name, [read = std::move(read)](const Trajectory& t) -> std::optional<int> { return read(t); },
          def.edges};
}

}  // namespace lowimpact
