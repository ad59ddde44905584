#include "lowimpact/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "lowimpact/builtins.hpp"

namespace lowimpact {

namespace {

// -- parsing ------------------------------------------------------------------

int line_of(const YAML::Node& node) {
  const auto mark = node.Mark();
  return mark.line >= 0 ? mark.line + 1 : -1;
}

class Parser {
 public:
  std::vector<Issue> issues;

  void report(std::string kind, std::string message, const YAML::Node& at) {
    issues.push_back({std::move(kind), std::move(message), line_of(at)});
  }

  /// Child node, reporting MissingKey when absent.
  std::optional<YAML::Node> required(const YAML::Node& map, const char* key, const std::string& path) {
    if (map.IsMap() && map[key]) return map[key];
    report("MissingKey", path + "." + key + " is required", map);
    return std::nullopt;
  }

  std::string text(const YAML::Node& n, const std::string& path) {
    if (n.IsNull()) return "null";  // a plain `null` action name
    if (!n.IsScalar()) {
      report("BadValue", path + " must be a scalar", n);
      return {};
    }
    return n.Scalar();
  }

  template <typename T>
  T number(const YAML::Node& n, const std::string& path, T fallback = T{}) {
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      report("BadValue", path + " is not a valid number", n);
      return fallback;
    }
  }

  template <typename T>
  T optional_number(const YAML::Node& map, const char* key, const std::string& path, T fallback) {
    if (!map[key]) return fallback;
    return number<T>(map[key], path + "." + key, fallback);
  }

  std::string optional_text(const YAML::Node& map, const char* key, const std::string& path,
                            std::string fallback = {}) {
    if (!map[key]) return fallback;
    return text(map[key], path + "." + key);
  }

  std::vector<std::string> texts(const YAML::Node& seq, const std::string& path) {
    std::vector<std::string> out;
    if (!seq) return out;
    if (!seq.IsSequence()) {
      report("BadValue", path + " must be a list", seq);
      return out;
    }
    for (std::size_t i = 0; i < seq.size(); ++i) out.push_back(text(seq[i], path));
    return out;
  }

  template <typename T>
  std::vector<T> numbers(const YAML::Node& seq, const std::string& path) {
    std::vector<T> out;
    if (!seq) return out;
    if (!seq.IsSequence()) {
      report("BadValue", path + " must be a list", seq);
      return out;
    }
    for (std::size_t i = 0; i < seq.size(); ++i) out.push_back(number<T>(seq[i], path));
    return out;
  }

  bool flag(const YAML::Node& map, const char* key, const std::string& path) {
    if (!map[key]) return false;
    try {
      return map[key].as<bool>();
    } catch (const YAML::Exception&) {
      report("BadValue", path + "." + key + " must be true or false", map[key]);
      return false;
    }
  }

  std::vector<Clause> clauses(const YAML::Node& seq, const std::string& path) {
    std::vector<Clause> out;
    if (!seq) return out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto n = seq[i];
      Clause c;
      if (auto comp = required(n, "component", path)) c.component = text(*comp, path + ".component");
      c.time = optional_number<int>(n, "time", path, -1);
      try {
        c.op = parse_compare(optional_text(n, "op", path, "=="));
      } catch (const UnknownKind& e) {
        report("BadValue", path + ": " + e.what(), n);
      }
      if (auto v = required(n, "value", path)) c.value = number<int>(*v, path + ".value");
      out.push_back(std::move(c));
    }
    return out;
  }

  void model(const YAML::Node& node, WorldModel& m) {
    const std::string path = "model";
    if (auto h = required(node, "horizon", path)) m.horizon = number<int>(*h, "model.horizon", 1);

    if (auto comps = required(node, "components", path)) {
      for (std::size_t i = 0; i < comps->size(); ++i) {
        const auto c = (*comps)[i];
        if (c.IsScalar()) {
          m.components.push_back({c.Scalar(), false});
        } else {
          Component comp;
          if (auto name = required(c, "name", "model.components")) comp.name = text(*name, "component name");
          comp.boxed = flag(c, "boxed", "model.components");
          m.components.push_back(std::move(comp));
        }
      }
    }

    if (auto states = required(node, "states", path)) {
      for (std::size_t i = 0; i < states->size(); ++i) {
        const auto s = (*states)[i];
        std::string name;
        if (auto n = required(s, "name", "model.states")) name = text(*n, "state name");
        auto values = numbers<int>(s["values"], "model.states." + name + ".values");
        if (values.size() != m.components.size())
          report("BadState", "state '" + name + "' has " + std::to_string(values.size()) + " values for " +
                                 std::to_string(m.components.size()) + " components",
                 s);
        values.resize(m.components.size(), 0);
        m.state_names.push_back(std::move(name));
        m.state_values.push_back(std::move(values));
      }
    }

    if (auto init = required(node, "initial", path)) {
      for (const auto& kv : *init) {
        const auto name = text(kv.first, "model.initial");
        const int s = m.state_index(name);
        if (s < 0) {
          report("UnknownName", "model.initial: no state named '" + name + "'", kv.first);
          continue;
        }
        m.initial.push_back({s, number<double>(kv.second, "model.initial." + name)});
      }
    }

    if (auto agents = required(node, "agents", path)) {
      for (std::size_t i = 0; i < agents->size(); ++i) agent((*agents)[i], m);
    }

    m.reset_transitions();
    if (auto rows = required(node, "transitions", path)) {
      for (std::size_t i = 0; i < rows->size(); ++i) transition((*rows)[i], m);
    }
  }

  void agent(const YAML::Node& n, WorldModel& m) {
    Agent a;
    if (auto name = required(n, "name", "model.agents")) a.name = text(*name, "agent name");
    const std::string path = "agent '" + a.name + "'";
    a.actions = texts(n["actions"], path + ".actions");
    if (a.actions.empty()) report("MissingKey", path + ".actions is required", n);
    auto action_id = [&](const std::string& name, const YAML::Node& at) -> ActionId {
      const auto it = std::find(a.actions.begin(), a.actions.end(), name);
      if (it == a.actions.end()) {
        report("UnknownName", path + ": no action named '" + name + "'", at);
        return 0;
      }
      return static_cast<ActionId>(it - a.actions.begin());
    };
    if (auto null = required(n, "null_action", path)) a.null_action = action_id(text(*null, path), *null);
    a.epsilon = optional_number<double>(n, "epsilon", path, kDefaultEpsilon);
    if (n["baseline"]) {
      const auto b = n["baseline"];
      const auto kind = optional_text(b, "kind", path + ".baseline", "null");
      if (kind == "null") {
        a.baseline.kind = BaselineKind::Null;
      } else if (kind == "uniform") {
        a.baseline.kind = BaselineKind::Uniform;
      } else if (kind == "weighted") {
        a.baseline.kind = BaselineKind::Weighted;
      } else if (kind == "scripted") {
        a.baseline.kind = BaselineKind::Scripted;
      } else {
        report("BadValue", path + ".baseline.kind must be null, uniform, weighted or scripted", b);
      }
      for (const auto& name : texts(b["actions"], path + ".baseline.actions"))
        a.baseline.actions.push_back(action_id(name, b));
      a.baseline.weights = numbers<double>(b["weights"], path + ".baseline.weights");
    }
    for (const auto& name : texts(n["observes"], path + ".observes")) {
      const int c = m.component_index(name);
      if (c < 0)
        report("UnknownName", path + ".observes: no component named '" + name + "'", n["observes"]);
      else
        a.observes.push_back(c);
    }
    m.agents.push_back(std::move(a));
  }

  void transition(const YAML::Node& n, WorldModel& m) {
    const std::string path = "model.transitions";
    std::string from_name;
    if (auto from = required(n, "from", path)) from_name = text(*from, path + ".from");
    const StateId from = m.state_index(from_name);
    if (from < 0) {
      report("UnknownName", path + ": no state named '" + from_name + "'", n);
      return;
    }
    const auto actions = texts(n["actions"], path + ".actions");
    if (actions.size() != m.agents.size()) {
      report("BadTransition", path + ": expected one action (or \"*\") per agent", n);
      return;
    }
    std::vector<int> slot(actions.size(), -1);
    for (std::size_t i = 0; i < actions.size(); ++i) {
      if (actions[i] == "*") continue;
      slot[i] = m.action_index(static_cast<int>(i), actions[i]);
      if (slot[i] < 0) {
        report("UnknownName", path + ": agent '" + m.agents[i].name + "' has no action '" + actions[i] + "'", n);
        return;
      }
    }
    std::vector<Outcome> row;
    double total = 0.0;
    if (auto to = required(n, "to", path)) {
      for (const auto& kv : *to) {
        const auto name = text(kv.first, path + ".to");
        const StateId s = m.state_index(name);
        if (s < 0) {
          report("UnknownName", path + ": no state named '" + name + "'", kv.first);
          return;
        }
        row.push_back({s, number<double>(kv.second, path + ".to." + name)});
        total += row.back().prob;
      }
    }
    if (std::abs(total - 1.0) > kRowTolerance)
      report("NonStochasticRow", "transition row from '" + from_name + "' sums to " + std::to_string(total), n);
    for (JointActionId j = 0; j < m.joint_count(); ++j) {
      bool match = true;
      for (std::size_t i = 0; i < slot.size() && match; ++i)
        match = slot[i] < 0 || m.agent_action(j, static_cast<int>(i)) == slot[i];
      if (match) m.row_mut(from, j) = row;
    }
  }

  Scenario scenario(const YAML::Node& root) {
    Scenario s;
    if (!root.IsMap()) {
      report("BadDocument", "scenario document must be a mapping", root);
      return s;
    }
    s.name = optional_text(root, "name", "scenario");
    s.description = optional_text(root, "description", "scenario");
    if (auto m = required(root, "model", "scenario")) model(*m, s.model);
    s.model.finalize();

    for (const auto& v : each(root, "variables")) {
      VariableDef d;
      d.name = optional_text(v, "name", "variables");
      d.component = optional_text(v, "component", "variables", d.name);
      d.time = optional_number<int>(v, "time", "variables", -1);
      d.edges = numbers<double>(v["edges"], "variables." + d.name + ".edges");
      s.variables.push_back(std::move(d));
    }
    for (const auto& p : each(root, "predicates")) {
      PredicateDef d;
      if (auto n = required(p, "name", "predicates")) d.name = text(*n, "predicates.name");
      d.all = clauses(p["all"], "predicates." + d.name);
      s.predicates.push_back(std::move(d));
    }
    for (const auto& u : each(root, "utilities")) {
      UtilityDef d;
      if (auto n = required(u, "name", "utilities")) d.name = text(*n, "utilities.name");
      const std::string path = "utilities." + d.name;
      d.offset = optional_number<double>(u, "offset", path, 0.0);
      for (const auto& t : each(u, "terms")) {
        TermDef term;
        term.weight = optional_number<double>(t, "weight", path, 1.0);
        term.component = optional_text(t, "component", path);
        term.time = optional_number<int>(t, "time", path, -1);
        term.when = clauses(t["when"], path + ".when");
        d.terms.push_back(std::move(term));
      }
      s.utilities.push_back(std::move(d));
    }
    for (const auto& u : each(root, "utility_sets")) {
      UtilitySetDef d;
      d.name = optional_text(u, "name", "utility_sets");
      d.utilities = texts(u["utilities"], "utility_sets." + d.name);
      s.utility_sets.push_back(std::move(d));
    }
    for (const auto& f : each(root, "fact_sets")) {
      FactSetDef d;
      d.name = optional_text(f, "name", "fact_sets");
      d.facts = texts(f["facts"], "fact_sets." + d.name);
      d.max_conjunction = optional_number<int>(f, "max_conjunction", "fact_sets." + d.name, 2);
      s.fact_sets.push_back(std::move(d));
    }
    for (const auto& mnode : each(root, "measures")) {
      MeasureDef d;
      if (auto n = required(mnode, "name", "measures")) d.name = text(*n, "measures.name");
      const std::string path = "measures." + d.name;
      if (auto k = required(mnode, "kind", path)) d.kind = text(*k, path + ".kind");
      d.variables = texts(mnode["variables"], path + ".variables");
      d.utility_set = optional_text(mnode, "utility_set", path);
      d.fact_set = optional_text(mnode, "fact_set", path);
      for (const auto& item : each(mnode, "slice")) {
        SliceDef sd;
        sd.component = optional_text(item, "component", path + ".slice");
        sd.times = numbers<int>(item["times"], path + ".slice.times");
        d.slice.push_back(std::move(sd));
      }
      d.rho_grid = numbers<double>(mnode["rho_grid"], path + ".rho_grid");
      d.threshold = optional_number<double>(mnode, "threshold", path, kDefaultDetectionThreshold);
      d.samples = optional_number<std::size_t>(mnode, "samples", path, 1000);
      d.seed = optional_number<std::uint64_t>(mnode, "seed", path, 0);
      s.measures.push_back(std::move(d));
    }
    for (const auto& c : each(root, "channels")) {
      ChannelDef d;
      if (auto n = required(c, "name", "channels")) d.name = text(*n, "channels.name");
      d.component = optional_text(c, "component", "channels." + d.name, d.name);
      d.time = optional_number<int>(c, "time", "channels." + d.name, -1);
      d.alphabet = numbers<int>(c["alphabet"], "channels." + d.name + ".alphabet");
      s.channels.push_back(std::move(d));
    }
    for (const auto& a : each(root, "announcements")) {
      AnnouncementDef d;
      if (auto n = required(a, "name", "announcements")) d.name = text(*n, "announcements.name");
      const std::string path = "announcements." + d.name;
      d.predicate = optional_text(a, "predicate", path, d.name);
      d.floor = optional_number<double>(a, "floor", path, 1e-3);
      d.penalty_floor = optional_number<double>(a, "penalty_floor", path, 0.0);
      s.announcements.push_back(std::move(d));
    }
    if (auto p = required(root, "planner", "scenario")) {
      const std::string path = "planner";
      auto& d = s.planner;
      d.agent = optional_text(*p, "agent", path);
      if (auto u = required(*p, "utility", path)) d.utility = text(*u, "planner.utility");
      d.measure = optional_text(*p, "measure", path);
      d.conditioning = optional_text(*p, "conditioning", path, "none");
      d.mu = optional_number<double>(*p, "mu", path, 1.0);
      if ((*p)["mu_grid"]) {
        const auto g = (*p)["mu_grid"];
        MuGrid grid;
        grid.lo = optional_number<double>(g, "lo", "planner.mu_grid", grid.lo);
        grid.hi = optional_number<double>(g, "hi", "planner.mu_grid", grid.hi);
        grid.steps = optional_number<int>(g, "steps", "planner.mu_grid", grid.steps);
        d.mu_grid = grid;
      }
      d.budget = optional_number<double>(*p, "budget", path, kDefaultBudget);
      d.seed = optional_number<std::uint64_t>(*p, "seed", path, 0);
      d.restarts = optional_number<int>(*p, "restarts", path, kDefaultRestarts);
      d.mutations = optional_number<int>(*p, "mutations", path, kDefaultMutations);
    }
    if (root["multiagent"]) {
      const auto node = root["multiagent"];
      MultiagentDef d;
      d.success = optional_text(node, "success", "multiagent");
      d.indifference = optional_number<double>(node, "indifference", "multiagent", kDefaultIndifference);
      for (const auto& a : each(node, "agents")) {
        ConditionalAgentDef c;
        c.agent = optional_text(a, "agent", "multiagent.agents");
        c.other = optional_text(a, "other", "multiagent.agents");
        c.utility = optional_text(a, "utility", "multiagent.agents");
        d.agents.push_back(std::move(c));
      }
      s.multiagent = std::move(d);
    }
    return s;
  }

 private:
  /// Elements of an optional list under `key`.
  std::vector<YAML::Node> each(const YAML::Node& map, const char* key) {
    std::vector<YAML::Node> out;
    const auto seq = map[key];
    if (!seq) return out;
    if (!seq.IsSequence()) {
      report("BadValue", std::string(key) + " must be a list", seq);
      return out;
    }
    for (std::size_t i = 0; i < seq.size(); ++i) out.push_back(seq[i]);
    return out;
  }
};

// -- emitting -----------------------------------------------------------------

std::string number_text(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void emit_number(YAML::Emitter& out, double v) { out << number_text(v); }

bool needs_quotes(const std::string& s) {
  static const char* reserved[] = {"null", "Null", "NULL", "~", "true", "false", "yes", "no", "on", "off",
                                   "True", "False", "Yes", "No", "On", "Off", "y", "n", "Y", "N"};
  if (s.empty()) return true;
  for (const char* r : reserved)
    if (s == r) return true;
  double d = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), d);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

void emit_text(YAML::Emitter& out, const std::string& s) {
  if (needs_quotes(s))
    out << YAML::DoubleQuoted << s;
  else
    out << s;
}

void emit_texts(YAML::Emitter& out, const std::vector<std::string>& items) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& s : items) emit_text(out, s);
  out << YAML::EndSeq;
}

template <typename T>
void emit_numbers(YAML::Emitter& out, const std::vector<T>& items) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& v : items) {
    if constexpr (std::is_floating_point_v<T>)
      emit_number(out, v);
    else
      out << v;
  }
  out << YAML::EndSeq;
}

void emit_clauses(YAML::Emitter& out, const std::vector<Clause>& clauses) {
  out << YAML::BeginSeq;
  for (const auto& c : clauses) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "component" << YAML::Value;
    emit_text(out, c.component);
    out << YAML::Key << "time" << YAML::Value << c.time;
    out << YAML::Key << "op" << YAML::Value << YAML::DoubleQuoted << std::string(to_string(c.op));
    out << YAML::Key << "value" << YAML::Value << c.value;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

void emit_outcomes(YAML::Emitter& out, const WorldModel& m, const std::vector<Outcome>& row) {
  out << YAML::Flow << YAML::BeginMap;
  for (const auto& o : row) {
    out << YAML::Key;
    emit_text(out, m.state_names[static_cast<std::size_t>(o.state)]);
    out << YAML::Value;
    emit_number(out, o.prob);
  }
  out << YAML::EndMap;
}

std::string_view baseline_kind(BaselineKind k) {
  switch (k) {
    case BaselineKind::Null:
      return "null";
    case BaselineKind::Uniform:
      return "uniform";
    case BaselineKind::Weighted:
      return "weighted";
    case BaselineKind::Scripted:
      return "scripted";
  }
  return "null";
}

void emit_model(YAML::Emitter& out, const WorldModel& m) {
  out << YAML::BeginMap;
  out << YAML::Key << "horizon" << YAML::Value << m.horizon;
  out << YAML::Key << "components" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : m.components) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value;
    emit_text(out, c.name);
    if (c.boxed) out << YAML::Key << "boxed" << YAML::Value << true;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "states" << YAML::Value << YAML::BeginSeq;
  for (StateId s = 0; s < m.state_count(); ++s) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value;
    emit_text(out, m.state_names[static_cast<std::size_t>(s)]);
    out << YAML::Key << "values" << YAML::Value;
    emit_numbers(out, m.state_values[static_cast<std::size_t>(s)]);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "initial" << YAML::Value;
  emit_outcomes(out, m, m.initial);

  out << YAML::Key << "agents" << YAML::Value << YAML::BeginSeq;
  for (const auto& a : m.agents) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value;
    emit_text(out, a.name);
    out << YAML::Key << "actions" << YAML::Value;
    emit_texts(out, a.actions);
    out << YAML::Key << "null_action" << YAML::Value;
    emit_text(out, a.actions[static_cast<std::size_t>(a.null_action)]);
    out << YAML::Key << "epsilon" << YAML::Value;
    emit_number(out, a.epsilon);
    out << YAML::Key << "baseline" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << YAML::DoubleQuoted << std::string(baseline_kind(a.baseline.kind));
    if (!a.baseline.actions.empty()) {
      std::vector<std::string> names;
      for (ActionId id : a.baseline.actions) names.push_back(a.actions[static_cast<std::size_t>(id)]);
      out << YAML::Key << "actions" << YAML::Value;
      emit_texts(out, names);
    }
    if (!a.baseline.weights.empty()) {
      out << YAML::Key << "weights" << YAML::Value;
      emit_numbers(out, a.baseline.weights);
    }
    out << YAML::EndMap;
    std::vector<std::string> observes;
    for (int c : a.observes) observes.push_back(m.components[static_cast<std::size_t>(c)].name);
    out << YAML::Key << "observes" << YAML::Value;
    emit_texts(out, observes);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  // Per state: the most common row as a wildcard, then the exceptions.
  out << YAML::Key << "transitions" << YAML::Value << YAML::BeginSeq;
  const int joints = m.joint_count();
  const std::vector<std::string> wildcard(m.agents.size(), "*");
  for (StateId s = 0; s < m.state_count(); ++s) {
    std::vector<std::vector<Outcome>> rows;
    for (JointActionId j = 0; j < joints; ++j) {
      const auto r = m.row(s, j);
      rows.emplace_back(r.begin(), r.end());
    }
    std::size_t common = 0, best_count = 0;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const auto n = static_cast<std::size_t>(std::count(rows.begin(), rows.end(), rows[j]));
      if (n > best_count) {
        best_count = n;
        common = j;
      }
    }
    auto emit_row = [&](const std::vector<std::string>& actions, const std::vector<Outcome>& row) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "from" << YAML::Value;
      emit_text(out, m.state_names[static_cast<std::size_t>(s)]);
      out << YAML::Key << "actions" << YAML::Value;
      emit_texts(out, actions);
      out << YAML::Key << "to" << YAML::Value;
      emit_outcomes(out, m, row);
      out << YAML::EndMap;
    };
    if (rows.empty()) continue;
    emit_row(wildcard, rows[common]);
    for (JointActionId j = 0; j < joints; ++j) {
      const auto& row = rows[static_cast<std::size_t>(j)];
      if (row == rows[common]) continue;
      std::vector<std::string> actions;
      for (int i = 0; i < m.agent_count(); ++i)
        actions.push_back(m.agents[static_cast<std::size_t>(i)].actions[static_cast<std::size_t>(m.agent_action(j, i))]);
      emit_row(actions, row);
    }
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
}

template <typename T>
const T* find_named(const std::vector<T>& items, std::string_view name) {
  for (const auto& item : items)
    if (item.name == name) return &item;
  return nullptr;
}

[[noreturn]] void unknown(std::string what, std::string_view name) {
  throw ValidationError(std::vector<Issue>{{"UnknownName", "no " + what + " named '" + std::string(name) + "'"}});
}

std::pair<std::string, std::string> split_kind(std::string_view kind) {
  const auto colon = kind.find(':');
  if (colon == std::string_view::npos) return {std::string(kind), {}};
  return {std::string(kind.substr(0, colon)), std::string(kind.substr(colon + 1))};
}

PenaltyConfig compile_measure(const Scenario& s, const MeasureDef& def, std::string label) {
  PenaltyConfig config;
  config.label = std::move(label);
  const auto [family, rest] = split_kind(def.kind);
  if (family == "coarse") {
    config.measure = CoarseMeasure{variables(s, def.variables), parse_coarse_norm(rest.empty() ? "linf" : rest)};
  } else if (family == "div") {
    DivergenceMeasure d;
    const auto [kind, scope] = split_kind(rest);
    d.kind = parse_divergence(kind);
    if (scope == "world")
      d.include_activation = true;
    else if (!scope.empty())
      throw UnknownKind("unknown divergence scope '" + scope + "' (expected world)");
    d.variables = variables(s, def.variables);
    config.measure = std::move(d);
  } else if (family == "importance" && rest.empty()) {
    if (s.utility_sets.empty() && def.utility_set.empty()) throw EmptyUtilitySet("scenario declares no utility set");
    const auto& us = def.utility_set.empty() ? s.utility_sets.front().name : def.utility_set;
    const std::string fs = def.fact_set.empty() ? (s.fact_sets.empty() ? std::string() : s.fact_sets.front().name)
                                                : def.fact_set;
    config.measure = ImportanceMeasure{utility_set(s, us), fs.empty() ? FactSet{} : fact_set(s, fs)};
  } else if (family == "detect" && rest.empty()) {
    DetectionConfig cfg;
    if (!def.rho_grid.empty()) cfg.rho_grid = def.rho_grid;
    cfg.threshold = def.threshold;
    cfg.samples = def.samples;
    cfg.seed = def.seed;
    if (def.slice.empty()) {
      for (int t = 1; t <= s.model.horizon; ++t)
        for (int c = 0; c < static_cast<int>(s.model.components.size()); ++c)
          if (!s.model.components[static_cast<std::size_t>(c)].boxed) cfg.slice.push_back({c, t});
    } else {
      for (const auto& item : def.slice) {
        const int c = s.model.component_index(item.component);
        if (c < 0) unknown("component", item.component);
        for (int t : item.times) cfg.slice.push_back({c, resolve_time(s.model, t, "detect slice")});
      }
    }
    config.measure = DetectMeasure{std::move(cfg)};
  } else {
    throw UnknownKind("unknown measure kind '" + def.kind + "'");
  }
  return config;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : -1);
  }
  Parser parser;
  Scenario s = parser.scenario(root);
  if (!parser.issues.empty()) throw ValidationError(std::move(parser.issues));
  require_valid(s);
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", -1);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Scenario load_scenario(const std::string& name_or_path) {
  const auto names = builtin_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return builtin(name_or_path);
  if (std::filesystem::is_regular_file(name_or_path)) return load_scenario_file(name_or_path);
  std::string list;
  for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
  throw UnknownBuiltin("'" + name_or_path + "' is neither a file nor a built-in scenario (" + list + ")");
}

std::string serialize(const Scenario& s) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value;
  emit_text(out, s.name);
  out << YAML::Key << "description" << YAML::Value << YAML::DoubleQuoted << s.description;
  out << YAML::Key << "model" << YAML::Value;
  emit_model(out, s.model);

  out << YAML::Key << "variables" << YAML::Value << YAML::BeginSeq;
  for (const auto& v : s.variables) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value;
    emit_text(out, v.name);
    out << YAML::Key << "component" << YAML::Value;
    emit_text(out, v.component);
    out << YAML::Key << "time" << YAML::Value << v.time;
    if (!v.edges.empty()) {
      out << YAML::Key << "edges" << YAML::Value;
      emit_numbers(out, v.edges);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "predicates" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : s.predicates) {
    out << YAML::BeginMap << YAML::Key << "name" << YAML::Value;
    emit_text(out, p.name);
    out << YAML::Key << "all" << YAML::Value;
    emit_clauses(out, p.all);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "utilities" << YAML::Value << YAML::BeginSeq;
  for (const auto& u : s.utilities) {
    out << YAML::BeginMap << YAML::Key << "name" << YAML::Value;
    emit_text(out, u.name);
    out << YAML::Key << "offset" << YAML::Value;
    emit_number(out, u.offset);
    out << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : u.terms) {
      out << YAML::BeginMap;
      out << YAML::Key << "weight" << YAML::Value;
      emit_number(out, t.weight);
      if (!t.component.empty()) {
        out << YAML::Key << "component" << YAML::Value;
        emit_text(out, t.component);
        out << YAML::Key << "time" << YAML::Value << t.time;
      }
      if (!t.when.empty()) {
        out << YAML::Key << "when" << YAML::Value;
        emit_clauses(out, t.when);
      }
      out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "utility_sets" << YAML::Value << YAML::BeginSeq;
  for (const auto& u : s.utility_sets) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value;
    emit_text(out, u.name);
    out << YAML::Key << "utilities" << YAML::Value;
    emit_texts(out, u.utilities);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "fact_sets" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : s.fact_sets) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value;
    emit_text(out, f.name);
    out << YAML::Key << "facts" << YAML::Value;
    emit_texts(out, f.facts);
    out << YAML::Key << "max_conjunction" << YAML::Value << f.max_conjunction;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "measures" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : s.measures) {
    const MeasureDef defaults;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value;
    emit_text(out, m.name);
    out << YAML::Key << "kind" << YAML::Value;
    emit_text(out, m.kind);
    if (!m.variables.empty()) {
      out << YAML::Key << "variables" << YAML::Value;
      emit_texts(out, m.variables);
    }
    if (!m.utility_set.empty()) {
      out << YAML::Key << "utility_set" << YAML::Value;
      emit_text(out, m.utility_set);
    }
    if (!m.fact_set.empty()) {
      out << YAML::Key << "fact_set" << YAML::Value;
      emit_text(out, m.fact_set);
    }
    if (!m.slice.empty()) {
      out << YAML::Key << "slice" << YAML::Value << YAML::BeginSeq;
      for (const auto& item : m.slice) {
        out << YAML::Flow << YAML::BeginMap << YAML::Key << "component" << YAML::Value;
        emit_text(out, item.component);
        out << YAML::Key << "times" << YAML::Value;
        emit_numbers(out, item.times);
        out << YAML::EndMap;
      }
      out << YAML::EndSeq;
    }
    if (!m.rho_grid.empty()) {
      out << YAML::Key << "rho_grid" << YAML::Value;
      emit_numbers(out, m.rho_grid);
    }
    if (m.threshold != defaults.threshold) {
      out << YAML::Key << "threshold" << YAML::Value;
      emit_number(out, m.threshold);
    }
    if (m.samples != defaults.samples) out << YAML::Key << "samples" << YAML::Value << m.samples;
    if (m.seed != defaults.seed) out << YAML::Key << "seed" << YAML::Value << m.seed;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "channels" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : s.channels) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value;
    emit_text(out, c.name);
    out << YAML::Key << "component" << YAML::Value;
    emit_text(out, c.component);
    out << YAML::Key << "time" << YAML::Value << c.time;
    if (!c.alphabet.empty()) {
      out << YAML::Key << "alphabet" << YAML::Value;
      emit_numbers(out, c.alphabet);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "announcements" << YAML::Value << YAML::BeginSeq;
  for (const auto& a : s.announcements) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value;
    emit_text(out, a.name);
    out << YAML::Key << "predicate" << YAML::Value;
    emit_text(out, a.predicate);
    out << YAML::Key << "floor" << YAML::Value;
    emit_number(out, a.floor);
    out << YAML::Key << "penalty_floor" << YAML::Value;
    emit_number(out, a.penalty_floor);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  const auto& p = s.planner;
  out << YAML::Key << "planner" << YAML::Value << YAML::BeginMap;
  if (!p.agent.empty()) {
    out << YAML::Key << "agent" << YAML::Value;
    emit_text(out, p.agent);
  }
  out << YAML::Key << "utility" << YAML::Value;
  emit_text(out, p.utility);
  if (!p.measure.empty()) {
    out << YAML::Key << "measure" << YAML::Value;
    emit_text(out, p.measure);
  }
  out << YAML::Key << "conditioning" << YAML::Value;
  emit_text(out, p.conditioning);
  out << YAML::Key << "mu" << YAML::Value;
  emit_number(out, p.mu);
  if (p.mu_grid) {
    out << YAML::Key << "mu_grid" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "lo" << YAML::Value;
    emit_number(out, p.mu_grid->lo);
    out << YAML::Key << "hi" << YAML::Value;
    emit_number(out, p.mu_grid->hi);
    out << YAML::Key << "steps" << YAML::Value << p.mu_grid->steps;
    out << YAML::EndMap;
  }
  out << YAML::Key << "budget" << YAML::Value;
  emit_number(out, p.budget);
  out << YAML::Key << "seed" << YAML::Value << p.seed;
  out << YAML::Key << "restarts" << YAML::Value << p.restarts;
  out << YAML::Key << "mutations" << YAML::Value << p.mutations;
  out << YAML::EndMap;

  if (s.multiagent) {
    const auto& m = *s.multiagent;
    out << YAML::Key << "multiagent" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "success" << YAML::Value;
    emit_text(out, m.success);
    out << YAML::Key << "indifference" << YAML::Value;
    emit_number(out, m.indifference);
    out << YAML::Key << "agents" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : m.agents) {
      out << YAML::Flow << YAML::BeginMap;
      out << YAML::Key << "agent" << YAML::Value;
      emit_text(out, a.agent);
      out << YAML::Key << "other" << YAML::Value;
      emit_text(out, a.other);
      out << YAML::Key << "utility" << YAML::Value;
      emit_text(out, a.utility);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

// -- validation ---------------------------------------------------------------

std::vector<Issue> validate_scenario(const Scenario& s) {
  auto issues = validate_model(s.model);
  if (!issues.empty()) return issues;  // name checks below need a sound model

  auto check = [&](auto&& f) {
    try {
      f();
    } catch (const ValidationError& e) {
      issues.insert(issues.end(), e.issues().begin(), e.issues().end());
    } catch (const Error& e) {
      issues.push_back({"BadReference", e.what()});
    } catch (const std::invalid_argument& e) {
      issues.push_back({"BadValue", e.what()});
    }
  };

  for (const auto& v : s.variables) check([&] { compile(s.model, v); });
  for (const auto& p : s.predicates) check([&] { compile(s.model, p); });
  for (const auto& u : s.utilities) check([&] { compile(s.model, u); });
  for (const auto& u : s.utility_sets) check([&] { utility_set(s, u.name); });
  for (const auto& f : s.fact_sets) check([&] { fact_set(s, f.name); });
  for (const auto& m : s.measures)
    check([&] {
      const auto config = measure(s, m.name);
      if (const auto* d = std::get_if<DetectMeasure>(&config.measure)) validate(d->config);
    });
  for (const auto& c : s.channels)
    check([&] {
      if (s.model.component_index(c.component) < 0) unknown("component", c.component);
      resolve_time(s.model, c.time, "channel '" + c.name + "'");
    });
  for (const auto& a : s.announcements) check([&] { announcement(s, a.name); });

  const auto& p = s.planner;
  check([&] { planner_agent(s); });
  if (p.utility.empty()) issues.push_back({"MissingKey", "planner.utility is required"});
  check([&] { utility(s, p.utility); });
  if (!p.measure.empty()) check([&] { measure(s, p.measure); });
  check([&] { conditioning(s, p.conditioning); });
  if (!(p.mu >= 0.0)) issues.push_back({"BadValue", "planner.mu must be non-negative"});
  if (p.mu_grid) check([&] { log_grid(p.mu_grid->lo, p.mu_grid->hi, p.mu_grid->steps); });
  if (!(p.budget >= 1.0)) issues.push_back({"BadValue", "planner.budget must be at least 1"});
  if (p.restarts < 1 || p.mutations < 0) issues.push_back({"BadValue", "planner restarts/mutations out of range"});

  if (s.multiagent) {
    const auto& m = *s.multiagent;
    check([&] { predicate(s, m.success); });
    if (!(m.indifference >= 0.0 && m.indifference <= 1.0))
      issues.push_back({"BadValue", "multiagent.indifference must lie in [0, 1]"});
    for (const auto& a : m.agents) {
      if (s.model.agent_index(a.agent) < 0) issues.push_back({"UnknownName", "no agent named '" + a.agent + "'"});
      if (s.model.agent_index(a.other) < 0) issues.push_back({"UnknownName", "no agent named '" + a.other + "'"});
      check([&] { utility(s, a.utility); });
    }
  }
  if (!issues.empty()) return issues;

  // Probability checks under the null profile.
  check([&] {
    const int agent = planner_agent(s);
    const auto profile = null_profile(s.model);
    const auto branches = branch_pair(s.model, profile, agent);
    for (const auto& fs : s.fact_sets)
      for (const auto& name : fs.facts) {
        const auto fact = predicate(s, name);
        if (!(branches.active.probability(fact) > 0.0) || !(branches.inactive.probability(fact) > 0.0))
          issues.push_back({"IncompatibleFact", "fact '" + name + "' must be possible both with and without activation"});
      }
    for (const auto& a : s.announcements) {
      const double pa = announcement_probability(s.model, announcement(s, a.name), agent);
      if (!(pa > 0.0 && pa < 1.0))
        issues.push_back({"BadAnnouncement", "announcement '" + a.name + "' has baseline probability " +
                                                 number_text(pa) + ", outside (0, 1)"});
      else if (pa < a.floor)
        issues.push_back({"AnnouncementBelowFloor", "announcement '" + a.name + "' has baseline probability " +
                                                        number_text(pa) + " below its floor " + number_text(a.floor)});
    }
    for (const auto& c : s.channels) {
      const int comp = s.model.component_index(c.component);
      const int t = resolve_time(s.model, c.time, "channel");
      for (int symbol : c.alphabet) {
        double mass = 0.0;
        for (const auto& e : branches.inactive.entries())
          if (s.model.value(e.trajectory.state(t), comp) == symbol) mass += e.probability;
        if (!(mass > 0.0))
          issues.push_back({"UncoveredMessage", "channel '" + c.name + "': baseline never emits " +
                                                    std::to_string(symbol)});
      }
    }
  });
  return issues;
}

void require_valid(const Scenario& scenario) {
  auto issues = validate_scenario(scenario);
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

// -- compilation --------------------------------------------------------------

int planner_agent(const Scenario& s) {
  if (s.planner.agent.empty()) return 0;
  const int a = s.model.agent_index(s.planner.agent);
  if (a < 0) unknown("agent", s.planner.agent);
  return a;
}

Utility utility(const Scenario& s, std::string_view name) {
  const auto* def = find_named(s.utilities, name);
  if (!def) unknown("utility", name);
  return compile(s.model, *def);
}

EventPredicate predicate(const Scenario& s, std::string_view name) {
  const auto* def = find_named(s.predicates, name);
  if (!def) unknown("predicate", name);
  return compile(s.model, *def);
}

VariableSpec variables(const Scenario& s, const std::vector<std::string>& names) {
  VariableSpec spec;
  if (names.empty()) {
    for (const auto& v : s.variables) spec.variables.push_back(compile(s.model, v));
  } else {
    for (const auto& n : names) {
      const auto* def = find_named(s.variables, n);
      if (!def) unknown("variable", n);
      spec.variables.push_back(compile(s.model, *def));
    }
  }
  if (spec.variables.empty()) throw SpecMismatch("no world variables declared");
  return spec;
}

UtilitySet utility_set(const Scenario& s, std::string_view name) {
  const auto* def = find_named(s.utility_sets, name);
  if (!def) unknown("utility set", name);
  UtilitySet set{def->name, {}};
  for (const auto& u : def->utilities) set.utilities.push_back(utility(s, u));
  if (set.utilities.empty()) throw EmptyUtilitySet("utility set '" + def->name + "' is empty");
  return set;
}

FactSet fact_set(const Scenario& s, std::string_view name) {
  const auto* def = find_named(s.fact_sets, name);
  if (!def) unknown("fact set", name);
  if (def->max_conjunction < 0) throw std::invalid_argument("max_conjunction must be non-negative");
  FactSet set{def->name, {}, def->max_conjunction};
  for (const auto& f : def->facts) set.facts.push_back(predicate(s, f));
  return set;
}

const AnnouncementDef& announcement_def(const Scenario& s, std::string_view name) {
  const auto* def = find_named(s.announcements, name);
  if (!def) unknown("announcement", name);
  return *def;
}

AnnouncementEvent announcement(const Scenario& s, std::string_view name) {
  const auto& def = announcement_def(s, name);
  auto event = predicate(s, def.predicate);
  event.name = def.name;
  return {std::move(event), def.floor};
}

std::string measure_choices(const Scenario& s) {
  std::string out;
  for (const auto& m : s.measures) out += m.name + ", ";
  out += "coarse:linf|tv|l2|softmax[(tau)], div:kl|kl-fwd|js|hellinger|tv|bregman[:world], importance, detect";
  return out;
}

PenaltyConfig measure(const Scenario& s, std::string_view name_or_kind) {
  try {
    if (const auto* def = find_named(s.measures, name_or_kind)) return compile_measure(s, *def, def->name);
    // A bare kind borrows the auxiliary settings of the first declared
    // measure of the same family.
    const auto family = split_kind(name_or_kind).first;
    MeasureDef def;
    for (const auto& m : s.measures)
      if (split_kind(m.kind).first == family) {
        def = m;
        break;
      }
    def.name = std::string(name_or_kind);
    def.kind = std::string(name_or_kind);
    return compile_measure(s, def, def.name);
  } catch (const UnknownKind& e) {
    throw UnknownKind(std::string(e.what()) + "; valid measures: " + measure_choices(s));
  }
}

Conditioning conditioning(const Scenario& s, std::string_view spec) {
  Conditioning c;
  const auto [kind, name] = split_kind(spec);
  if (kind == "none" && name.empty()) return c;
  if (kind == "output") {
    if (s.channels.empty()) throw UnknownKind("scenario declares no output channel");
    const auto* def = name.empty() ? &s.channels.front() : find_named(s.channels, name);
    if (!def) unknown("channel", name);
    c.kind = Conditioning::Kind::Output;
    c.channel.name = def->name;
    c.channel.component = s.model.component_index(def->component);
    if (c.channel.component < 0) unknown("component", def->component);
    c.channel.time = resolve_time(s.model, def->time, "channel '" + def->name + "'");
    c.channel.alphabet = def->alphabet;
    return c;
  }
  if (kind == "announce" && !name.empty()) {
    c.kind = Conditioning::Kind::Announce;
    c.announcement = announcement(s, name);
    return c;
  }
  throw UnknownKind("unknown conditioning '" + std::string(spec) + "' (expected none, output[:<channel>], announce:<name>)");
}

Objective objective(const Scenario& s, std::string_view measure_name, std::string_view conditioning_spec,
                    double mu) {
  Objective obj;
  obj.u = utility(s, s.planner.utility);
  obj.mu = mu;
  std::string name(measure_name);
  if (name.empty()) name = s.planner.measure.empty() && !s.measures.empty() ? s.measures.front().name : s.planner.measure;
  obj.measure = measure(s, name);
  obj.conditioning = conditioning(s, conditioning_spec);
  obj.agent = planner_agent(s);
  return obj;
}

Objective planner_objective(const Scenario& s) { return objective(s, s.planner.measure, s.planner.conditioning, s.planner.mu); }

PlannerOptions planner_options(const Scenario& s) {
  PlannerOptions o;
  o.budget = s.planner.budget;
  o.seed = s.planner.seed;
  o.restarts = s.planner.restarts;
  o.mutations = s.planner.mutations;
  return o;
}

std::vector<double> planner_mus(const Scenario& s) {
  if (s.planner.mu_grid) return log_grid(s.planner.mu_grid->lo, s.planner.mu_grid->hi, s.planner.mu_grid->steps);
  return {s.planner.mu};
}

std::vector<ConditionalObjective> conditional_objectives(const Scenario& s, std::string_view measure_name) {
  std::vector<ConditionalObjective> out;
  if (!s.multiagent) return out;
  for (const auto& a : s.multiagent->agents) {
    ConditionalObjective c;
    c.base = objective(s, measure_name, "none", s.planner.mu);
    c.base.u = utility(s, a.utility);
    c.base.agent = s.model.agent_index(a.agent);
    c.other = s.model.agent_index(a.other);
    c.indifference = s.multiagent->indifference;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace lowimpact
