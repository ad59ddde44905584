#include "lowimpact/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "lowimpact/builtins.hpp"
#include "lowimpact/csv.hpp"
#include "lowimpact/scenario.hpp"

namespace lowimpact {

namespace {

struct Flags {
  std::string scenario;
  std::string measure;
  std::string measures;
  std::string condition;
  std::string policy = "null";
  std::optional<double> mu;
  std::string mu_grid;
  std::optional<double> budget;
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<int> restarts;
  std::optional<int> mutations;
  std::string out;
  bool serial = false;
  bool mutual = false;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

void add_scenario(CLI::App* cmd, Flags& f, bool required = true) {
  auto* opt = cmd->add_option("scenario,--scenario", f.scenario, "built-in name or YAML file");
  if (required) opt->required();
}

void add_planner_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--measure", f.measure, "declared measure name or kind (coarse:linf, div:js, importance, detect...)");
  cmd->add_option("--condition", f.condition, "none, output[:<channel>] or announce:<name>");
  cmd->add_option("--mu", f.mu, "penalty weight");
  cmd->add_option("--mu-grid", f.mu_grid, "lo:hi:steps, log-spaced");
  cmd->add_option("--budget", f.budget, "largest policy space searched exhaustively");
  cmd->add_option("--samples", f.samples, "Monte Carlo samples for detect");
  cmd->add_option("--seed", f.seed, "planner and sampler seed");
  cmd->add_option("--restarts", f.restarts, "hill-climb restarts");
  cmd->add_option("--mutations", f.mutations, "hill-climb mutations per restart");
  cmd->add_option("--out", f.out, "CSV path (default: stdout)");
  cmd->add_flag("--serial", f.serial, "disable OpenMP kernels");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string p; std::getline(in, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw UsageError("--mu-grid expects lo:hi:steps, got '" + text + "'");
  double lo = 0.0, hi = 0.0;
  int steps = 0;
  try {
    lo = std::stod(parts[0]);
    hi = std::stod(parts[1]);
    steps = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw UsageError("--mu-grid expects lo:hi:steps, got '" + text + "'");
  }
  if (!(lo > 0.0) || !(hi >= lo) || steps < 1) throw UsageError("--mu-grid needs 0 < lo <= hi and steps >= 1");
  return log_grid(lo, hi, steps);
}

PlannerOptions options_for(const Scenario& s, const Flags& f) {
  auto o = planner_options(s);
  if (f.budget) o.budget = *f.budget;
  if (f.seed) o.seed = *f.seed;
  if (f.restarts) o.restarts = *f.restarts;
  if (f.mutations) o.mutations = *f.mutations;
  if (f.serial) o.exec = Execution::Serial;
  return o;
}

void apply_overrides(PenaltyConfig& config, const Flags& f) {
  if (auto* d = std::get_if<DetectMeasure>(&config.measure)) {
    if (f.samples) d->config.samples = *f.samples;
    if (f.seed) d->config.seed = *f.seed;
  }
}

/// The scenario is already valid, so a name that fails to resolve here came
/// from the command line.
Objective objective_for(const Scenario& s, const Flags& f, std::string_view measure_name) {
  try {
    auto obj = objective(s, measure_name, f.condition.empty() ? s.planner.conditioning : f.condition,
                         f.mu.value_or(s.planner.mu));
    apply_overrides(obj.measure, f);
    return obj;
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
}

/// CSV destination: the --out file when given, else `out` after the report.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& out) : out_(out) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot write '" + path + "'");
    }
  }
  std::ostream& csv() { return file_.is_open() ? file_ : out_; }

 private:
  std::ostream& out_;
  std::ofstream file_;
};

void report(std::ostream& out, std::string_view key, std::string_view value) {
  out << "# " << key << '=' << value << '\n';
}

void report_conditioning(std::ostream& out, const Scenario& s, const Objective& obj) {
  report(out, "conditioning", obj.conditioning.tag());
  if (obj.conditioning.kind == Conditioning::Kind::Output) report(out, "warning", unsafe_output_warning());
  if (obj.conditioning.kind == Conditioning::Kind::Announce) {
    report(out, "pA_given_notX",
           format_number(announcement_probability(s.model, obj.conditioning.announcement, obj.agent)));
    report(out, "pA_floor", format_number(obj.conditioning.announcement.floor));
  }
}

int cmd_run(const Flags& f, bool sweep, std::ostream& out) {
  const auto s = load_scenario(f.scenario);
  const auto obj = objective_for(s, f, f.measure);
  const auto opts = options_for(s, f);

  std::vector<double> mus;
  if (!f.mu_grid.empty())
    mus = parse_grid(f.mu_grid);
  else if (f.mu && !sweep)
    mus = {*f.mu};
  else if (sweep && !s.planner.mu_grid)
    mus = log_grid(MuGrid{}.lo, MuGrid{}.hi, MuGrid{}.steps);
  else
    mus = planner_mus(s);

  const PolicySpace space(s.model, obj.agent);
  report(out, "scenario", s.name);
  report(out, "agent", s.model.agents[static_cast<std::size_t>(obj.agent)].name);
  report(out, "measure", obj.measure.label);
  report_conditioning(out, s, obj);
  report(out, "policies", format_number(space.size()));
  report(out, "search", space.size() <= opts.budget ? "exhaustive" : "hill-climb");

  const auto rows = mu_sweep(s.model, obj, mus, opts);
  // Policy changes between neighbouring grid points, largest mu first.
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].policy_id != rows[i - 1].policy_id)
      report(out, "transition",
             format_number(rows[i].mu) + ".." + format_number(rows[i - 1].mu) + " " + rows[i - 1].policy_id + "->" +
                 rows[i].policy_id + " dR=" + format_number(rows[i].penalty - rows[i - 1].penalty));
  Sink sink(f.out, out);
  write_rows(sink.csv(), rows);
  return kExitOk;
}

int cmd_compare(const Flags& f, std::ostream& out) {
  const auto s = load_scenario(f.scenario);
  std::vector<std::string> names;
  if (!f.measures.empty()) {
    std::stringstream in(f.measures);
    for (std::string n; std::getline(in, n, ',');)
      if (!n.empty()) names.push_back(n);
  } else {
    for (const auto& m : s.measures) names.push_back(m.name);
  }
  if (names.empty()) throw UsageError("no measures to compare");

  const auto first = objective_for(s, f, names.front());
  const auto opts = options_for(s, f);
  Policy policy;
  if (f.policy == "null") {
    policy = null_policy(s.model, first.agent);
  } else if (f.policy == "best") {
    policy = optimize(s.model, objective_for(s, f, f.measure), opts).policy;
  } else {
    const auto& a = s.model.agents[static_cast<std::size_t>(first.agent)];
    try {
      policy = Policy::from_id(f.policy, s.model.horizon, s.model.observation_count(first.agent),
                               static_cast<int>(a.actions.size()));
    } catch (const std::logic_error& e) {
      throw UsageError(std::string("bad --policy: ") + e.what());
    }
  }

  // Both branches are shared by every measure.
  const auto profile = with_policy(s.model, opts.profile, first.agent, policy);
  const auto active = propagate(s.model, profile, with_activation(s.model, opts.base, first.agent, Activation::Active));
  const auto inactive =
      propagate(s.model, profile, with_activation(s.model, opts.base, first.agent, Activation::Inactive));
  const double eu = active.expectation(first.u.value);

  report(out, "scenario", s.name);
  report(out, "policy", policy.id());
  report_conditioning(out, s, first);

  std::vector<SweepRow> rows;
  for (const auto& name : names) {
    const auto obj = objective_for(s, f, name);
    const PenaltyEvaluator evaluator(s.model, profile, obj.agent, obj.measure, obj.conditioning, opts.base, opts.exec,
                                     &inactive);
    const auto r = evaluator.evaluate(profile, active);
    rows.push_back({obj.mu, policy.id(), eu, r.penalty, objective_value(eu, obj.mu, r.penalty), obj.measure.label});
  }
  Sink sink(f.out, out);
  write_rows(sink.csv(), rows);
  return kExitOk;
}

int cmd_joint(const Flags& f, std::ostream& out) {
  Scenario s;
  if (f.scenario.empty() || f.scenario == "asteroid-laser") {
    AsteroidOptions a;
    a.mutual_observation = f.mutual;
    s = make_asteroid_laser(a);
  } else {
    if (f.mutual) throw UsageError("--mutual-observation applies to asteroid-laser only");
    s = load_scenario(f.scenario);
  }
  if (!s.multiagent) throw UsageError("scenario '" + s.name + "' has no multiagent section");
  std::vector<ConditionalObjective> cobjs;
  try {
    cobjs = conditional_objectives(s, f.measure);
  } catch (const ValidationError& e) {
    throw UsageError(e.what());
  }
  for (auto& c : cobjs) {
    apply_overrides(c.base.measure, f);
    if (f.mu) c.base.mu = *f.mu;
  }
  const auto opts = options_for(s, f);

  PolicyProfile profile = null_profile(s.model);
  for (const auto& c : cobjs)
    profile[static_cast<std::size_t>(c.base.agent)] = conditional_optimize(s.model, c, opts).policy;

  report(out, "scenario", s.name);
  report(out, "measure", cobjs.empty() ? "" : cobjs.front().base.measure.label);
  const auto joint = joint_rollout(s.model, profile, predicate(s, s.multiagent->success), cobjs, opts);
  report(out, "p_success", format_number(joint.p_success));
  report(out, "p_event", format_number(joint.p_event));

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < joint.agents.size(); ++i) {
    const auto& r = joint.agents[i];
    const auto& name = s.model.agents[static_cast<std::size_t>(cobjs[i].base.agent)].name;
    report(out, "agent", name + " p_assumption=" + format_number(r.p_assumption) +
                             " effective_u=" + format_number(r.effective_u));
    rows.push_back(r.row);
  }
  Sink sink(f.out, out);
  write_rows(sink.csv(), rows);
  return kExitOk;
}

int cmd_list(const Flags& f, std::ostream& out) {
  if (f.scenario.empty()) {
    for (const auto& name : builtin_names()) out << name << '\t' << builtin(name).description << '\n';
    return kExitOk;
  }
  const auto s = load_scenario(f.scenario);
  out << "scenario\t" << s.name << '\n';
  for (const auto& a : s.model.agents) out << "agent\t" << a.name << '\n';
  for (const auto& m : s.measures) out << "measure\t" << m.name << '\t' << m.kind << '\n';
  for (const auto& c : s.channels) out << "condition\toutput:" << c.name << '\n';
  for (const auto& a : s.announcements) out << "condition\tannounce:" << a.name << '\n';
  for (const auto& u : s.utilities) out << "utility\t" << u.name << '\n';
  return kExitOk;
}

int cmd_export(const Flags& f, std::ostream& out) {
  const auto s = load_scenario(f.scenario);
  Sink sink(f.out, out);
  sink.csv() << serialize(s);
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-impact planning simulator"};
  app.name("lowimpact");
  app.require_subcommand(1);
  Flags f;

  auto* run = app.add_subcommand("run", "optimize the planner objective at one mu or over a grid");
  add_scenario(run, f);
  add_planner_flags(run, f);

  auto* sweep = app.add_subcommand("sweep", "run over a mu grid (the scenario's, else 1e-3:1e3:20)");
  add_scenario(sweep, f);
  add_planner_flags(sweep, f);

  auto* compare = app.add_subcommand("compare", "penalties of several measures for one fixed policy");
  add_scenario(compare, f);
  add_planner_flags(compare, f);
  compare->add_option("--measures", f.measures, "comma-separated list (default: every declared measure)");
  compare->add_option("--policy", f.policy, "null, best, or a policy id")->capture_default_str();

  auto* joint = app.add_subcommand("joint", "conditional planning for every agent, then a joint rollout");
  add_scenario(joint, f, false);
  add_planner_flags(joint, f);
  joint->add_flag("--mutual-observation", f.mutual, "asteroid-laser agents observe each other");

  auto* list = app.add_subcommand("list", "built-in scenarios, or the names one scenario declares");
  add_scenario(list, f, false);

  auto* exp = app.add_subcommand("export", "write a scenario as YAML");
  add_scenario(exp, f);
  exp->add_option("--out", f.out, "YAML path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(f, false, out);
    if (sweep->parsed()) return cmd_run(f, true, out);
    if (compare->parsed()) return cmd_compare(f, out);
    if (joint->parsed()) return cmd_joint(f, out);
    if (list->parsed()) return cmd_list(f, out);
    if (exp->parsed()) return cmd_export(f, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnknownKind& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitScenario;
  } catch (const ParseError& e) {
    err << "error: ";
    if (e.line() >= 0) err << "line " << e.line() << ": ";
    err << e.what() << '\n';
    return kExitScenario;
  } catch (const UnknownBuiltin& e) {
    err << "error: " << e.what() << '\n';
    return kExitScenario;
  } catch (const AssumptionViolated& e) {
    err << "error: assumption violated for agent " << e.agent() << " at t=" << e.time()
        << " observation=" << e.observation() << ": " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace lowimpact
