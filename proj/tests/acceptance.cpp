// Acceptance run: one PASS/FAIL line per criterion. Every number a criterion
// computes is also written as a CSV row; criterion 9 runs 1-8 twice and
// compares the two CSV documents byte for byte.
//
//   acceptance [csv-path]

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lowimpact/builtins.hpp"
#include "lowimpact/csv.hpp"
#include "models.hpp"
#include "oracle.hpp"

using namespace lowimpact;

namespace {

struct Log {
  std::ostringstream csv;
  std::string detail;

  void row(int criterion, const std::string& key, double value) {
    csv << criterion << ',' << key << ',' << format_number(value) << '\n';
  }
  void row(int criterion, const std::string& key, const std::string& value) {
    csv << criterion << ',' << key << ',' << value << '\n';
  }
};

using Check = std::function<bool(Log&)>;

struct Criterion {
  int id;
  std::string name;
  double seconds;  // runtime bound, 0 for none
  Check run;
};

Policy random_table(std::mt19937_64& rng, const WorldModel& m, int agent) { return oracle::random_policy(rng, m, agent); }

// 1 ------------------------------------------------------------------------

bool null_equivalence(Log& log) {
  bool ok = true;
  double worst = 0.0;
  for (const auto& name : builtin_names()) {
    const auto s = builtin(name);
    const auto profile = null_profile(s.model);
    for (int agent = 0; agent < s.model.agent_count(); ++agent) {
      for (const char* kind : {"coarse:linf", "div:js", "importance", "detect"}) {
        const double r = conditioned_penalty(s.model, profile, agent, measure(s, kind), {});
        log.row(1, name + "/" + s.model.agents[static_cast<std::size_t>(agent)].name + "/" + kind, r);
        worst = std::max(worst, r);
        ok = ok && r <= 1e-9;
      }
    }
  }
  log.detail = "largest null penalty " + format_number(worst);
  return ok;
}

// 2 ------------------------------------------------------------------------

bool stock_exactness(Log& log) {
  const auto s = make_stock_advisor(1000);
  const double p = announcement_probability(s.model, announcement(s, "rich"));
  const auto r = optimize(s.model, objective(s, "coarse", "announce:rich", 1.0));
  const std::string& pick = s.model.agents[0].actions[static_cast<std::size_t>(r.policy.at(0, 0))];
  log.row(2, "pA_given_notX", p);
  log.row(2, "policy", r.row.policy_id);
  log.row(2, "action", pick);
  log.row(2, "penalty", r.row.penalty);
  log.detail = "P(A|notX)=" + format_number(p) + ", picks " + pick;
  return p == 0.001 && pick == "pick_333";
}

// 3 ------------------------------------------------------------------------

bool kl_failure(Log& log) {
  bool ok = true;
  double js_max = 0.0, h_max = 0.0;
  int cases = 0;
  std::mt19937_64 rng(3);
  for (const auto& name : builtin_names()) {
    const auto s = builtin(name);
    const int agent = planner_agent(s);
    auto spec = variables(s);
    spec.variables.push_back(activation_variable(s.model, agent));
    for (int trial = 0; trial < 3; ++trial) {
      auto profile = null_profile(s.model);
      if (trial > 0) profile[static_cast<std::size_t>(agent)] = random_table(rng, s.model, agent);
      const auto b = branch_pair(s.model, profile, agent);
      const auto x = marginalize(b.active, spec);
      const auto nx = marginalize(b.inactive, spec);
      const double kl = divergence_penalty(x, nx, DivergenceKind::KlInactiveFromActive);
      const double js = divergence_penalty(x, nx, DivergenceKind::JensenShannon);
      const double h = divergence_penalty(x, nx, DivergenceKind::Hellinger);
      log.row(3, name + "/" + std::to_string(trial) + "/kl", kl);
      log.row(3, name + "/" + std::to_string(trial) + "/js", js);
      log.row(3, name + "/" + std::to_string(trial) + "/hellinger", h);
      ok = ok && is_unbounded(kl) && js <= std::log(2.0) + 1e-12 && h <= 1.0 + 1e-12;
      js_max = std::max(js_max, js);
      h_max = std::max(h_max, h);
      ++cases;
    }
  }
  log.detail = std::to_string(cases) + " cases, max js " + format_number(js_max) + ", max hellinger " +
               format_number(h_max);
  return ok;
}

// 4 ------------------------------------------------------------------------

bool dial_phases(Log& log) {
  const auto s = make_paperclip_grid();
  const auto obj = objective(s, "coarse:linf", "none", 1.0);
  const PlannerOptions opts;
  const bool exhaustive = PolicySpace(s.model, obj.agent).size() <= opts.budget;

  // Takeover floor: least R among the policies with the largest E[u].
  double best_u = -1.0, floor = INFINITY;
  for (const auto& p : oracle::all_policies(s.model, obj.agent)) {
    const auto r = oracle::coarse_row(s.model, obj.agent, p, obj.u, variables(s), CoarseNormKind::Linf);
    if (r.eu > best_u + 1e-12) {
      best_u = r.eu;
      floor = r.penalty;
    } else if (std::abs(r.eu - best_u) <= 1e-12) {
      floor = std::min(floor, r.penalty);
    }
  }

  const auto rows = mu_sweep(s.model, obj, log_grid(1e-3, 1e3, 20), opts);
  std::stringstream csv;
  write_rows(csv, rows);
  log.csv << csv.str();
  log.row(4, "floor", floor);

  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) monotone = monotone && rows[i].penalty >= rows[i - 1].penalty - 1e-12;
  const auto& top = rows.front();
  const auto& bottom = rows.back();
  log.detail = "mu=" + format_number(top.mu) + " -> " + top.policy_id + " R=" + format_number(top.penalty) +
               "; mu=" + format_number(bottom.mu) + " -> " + bottom.policy_id + " R=" +
               format_number(bottom.penalty) + " (floor " + format_number(floor) + ")";
  return exhaustive && rows.size() == 20 && top.policy_id == null_policy(s.model, obj.agent).id() &&
         top.penalty <= 1e-9 && bottom.penalty >= floor - 1e-12 && monotone;
}

// 5 ------------------------------------------------------------------------

bool asteroid(Log& log) {
  const double eps = 1e-3;
  AsteroidOptions o;
  o.alice_epsilon = o.bob_epsilon = eps;
  const auto s = make_asteroid_laser(o);
  const auto cobjs = conditional_objectives(s, "coarse");
  auto profile = null_profile(s.model);
  for (const auto& c : cobjs)
    profile[static_cast<std::size_t>(c.base.agent)] = conditional_optimize(s.model, c).policy;
  const auto joint = joint_rollout(s.model, profile, predicate(s, "deflected"), cobjs);

  bool ok = cobjs.size() == 2;
  double worst = 0.0;
  for (std::size_t i = 0; i < joint.agents.size(); ++i) {
    log.row(5, "penalty" + std::to_string(i), joint.agents[i].row.penalty);
    worst = std::max(worst, joint.agents[i].row.penalty);
    ok = ok && joint.agents[i].row.penalty <= 1e-6;
  }
  const double expected = (1.0 - eps) * (1.0 - eps);
  log.row(5, "p_success", joint.p_success);

  o.mutual_observation = true;
  const auto m = make_asteroid_laser(o);
  const auto mcobjs = conditional_objectives(m, "coarse");
  auto mprofile = null_profile(m.model);
  bool raised = false;
  std::string where;
  try {
    for (const auto& c : mcobjs)
      mprofile[static_cast<std::size_t>(c.base.agent)] = conditional_optimize(m.model, c).policy;
    joint_rollout(m.model, mprofile, predicate(m, "deflected"), mcobjs);
  } catch (const AssumptionViolated& e) {
    raised = true;
    where = e.agent() + "@t=" + std::to_string(e.time());
  }
  log.row(5, "mutual", raised ? where : "none");
  log.detail = "p_success " + format_number(joint.p_success) + ", max penalty " + format_number(worst) +
               ", mutual variant " + (raised ? "raised AssumptionViolated (" + where + ")" : "did not raise");
  return ok && joint.p_success >= 0.998 && std::abs(joint.p_success - expected) <= 1e-12 && raised;
}

// 6 ------------------------------------------------------------------------

bool detect_monotone(Log& log) {
  const auto m = testmodels::coin_bits(16);
  DetectionConfig cfg;
  cfg.slice = testmodels::all_bits(m);
  cfg.samples = 10000;
  cfg.seed = 6;
  cfg.threshold = 10.0;
  std::vector<double> rho;
  std::string seq;
  for (int k = 0; k <= 8; ++k) {
    const auto r = detectability(m, {testmodels::flip_k(m, k)}, 0, cfg);
    // Undetectable sorts above every grid fraction.
    rho.push_back(r.detection_rho.value_or(INFINITY));
    log.row(6, "k" + std::to_string(k), rho.back());
    seq += (k ? " " : "") + (r.detection_rho ? format_number(*r.detection_rho) : std::string("-"));
  }
  int violations = 0;
  for (std::size_t i = 1; i < rho.size(); ++i)
    if (rho[i] > rho[i - 1]) ++violations;
  log.row(6, "violations", violations);
  log.detail = "detection_rho by k: " + seq + "; violations " + std::to_string(violations);
  return violations <= 1 && std::isfinite(rho.back());
}

// 7 ------------------------------------------------------------------------

bool oracle_equivalence(Log& log) {
  bool ok = true;
  double worst = 0.0;
  std::string checked;
  std::mt19937_64 rng(7);
  for (const auto& name : builtin_names()) {
    const auto s = builtin(name);
    const auto& m = s.model;
    const int agent = planner_agent(s);
    if (oracle::enumerate(m, null_profile(m)).size() > 500) {
      log.row(7, name, "skipped");
      continue;
    }
    checked += (checked.empty() ? "" : ",") + name;
    const auto vars = variables(s);
    const auto imp = std::get<ImportanceMeasure>(measure(s, "importance").measure);
    for (int trial = 0; trial < 4; ++trial) {
      auto profile = null_profile(m);
      if (trial > 0) profile[static_cast<std::size_t>(agent)] = random_table(rng, m, agent);
      const auto on = with_activation(m, {}, agent, Activation::Active);
      const auto off = with_activation(m, {}, agent, Activation::Inactive);
      const auto x = propagate(m, profile, on);
      const auto nx = propagate(m, profile, off);
      const auto ox = oracle::enumerate(m, profile, on);
      const auto onx = oracle::enumerate(m, profile, off);
      double gap = std::max(oracle::max_gap(oracle::as_map(x), ox), oracle::max_gap(oracle::as_map(nx), onx));
      ok = ok && x.size() == ox.size() && nx.size() == onx.size();

      const auto mx = marginalize(x, vars);
      const auto mnx = marginalize(nx, vars);
      const auto cx = oracle::marginal(ox, vars);
      const auto cnx = oracle::marginal(onx, vars);
      for (const auto& [k, p] : cx) gap = std::max(gap, std::abs(mx.probability(k) - p));
      for (const auto& [k, p] : cnx) gap = std::max(gap, std::abs(mnx.probability(k) - p));
      ok = ok && mx.probs.size() == cx.size() && mnx.probs.size() == cnx.size();

      for (auto kind : {CoarseNormKind::Linf, CoarseNormKind::TotalVariation, CoarseNormKind::L2})
        gap = std::max(gap, std::abs(coarse_penalty(mx, mnx, {kind}) - oracle::coarse(cx, cnx, kind)));
      gap = std::max(gap, std::abs(importance_penalty(x, nx, imp.utilities, imp.facts) -
                                   oracle::importance(ox, onx, imp.utilities, imp.facts)));
      log.row(7, name + "/" + std::to_string(trial), gap);
      worst = std::max(worst, gap);
    }
  }
  log.detail = "checked " + checked + "; max gap " + format_number(worst);
  return ok && !checked.empty() && worst <= 1e-12;
}

// 8 ------------------------------------------------------------------------

bool chaotic_absorption(Log& log) {
  const auto s = make_election_breakfast();
  const auto& m = s.model;
  const int agent = planner_agent(s);
  const int alice = m.component_index("alice");
  bool ok = true;
  double worst = 0.0;
  for (const char* action : {"apricots", "biscuits"}) {
    Policy p = null_policy(m, agent);
    for (int t = 0; t < m.horizon; ++t)
      for (int o = 0; o < m.observation_count(agent); ++o) p.set(t, o, m.action_index(agent, action));
    auto profile = null_profile(m);
    profile[static_cast<std::size_t>(agent)] = p;
    const double r = conditioned_penalty(m, profile, agent, measure(s, "coarse:linf"), {});
    worst = std::max(worst, r);

    // The sampled elections themselves go both ways in each branch.
    for (auto branch : {Activation::Active, Activation::Inactive}) {
      const auto draws = sample(m, profile, with_activation(m, {}, agent, branch), 1000, 8);
      std::size_t wins = 0;
      for (const auto& [t, n] : draws.draws)
        if (m.value(t.state(m.horizon), alice) == 1) wins += n;
      log.row(8, std::string(action) + (branch == Activation::Active ? "/X" : "/notX") + "/alice_wins",
              static_cast<double>(wins));
      ok = ok && wins > 0 && wins < draws.count();
    }
    log.row(8, std::string(action) + "/linf", r);
  }
  log.detail = "largest linf " + format_number(worst);
  return ok && worst <= 0.01;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "null policy has zero penalty", 5, null_equivalence},
      {2, "stock announcement probability and pick", 10, stock_exactness},
      {3, "KL unbounded with the activation indicator", 0, kl_failure},
      {4, "paperclip dial phases", 60, dial_phases},
      {5, "asteroid joint impact", 10, asteroid},
      {6, "detectability monotone in flipped bits", 30, detect_monotone},
      {7, "oracle equivalence", 0, oracle_equivalence},
      {8, "election absorbs the breakfast nudge", 0, chaotic_absorption},
  };

  auto run_all = [&](bool print, bool& all_ok) {
    std::string csv = "criterion,key,value\n";
    for (const auto& c : criteria) {
      Log log;
      const auto start = std::chrono::steady_clock::now();
      bool ok = false;
      try {
        ok = c.run(log);
      } catch (const std::exception& e) {
        log.detail = std::string("threw: ") + e.what();
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (c.seconds > 0 && secs > c.seconds) {
        ok = false;
        log.detail += "; over the " + format_number(c.seconds) + " s budget";
      }
      csv += log.csv.str();
      all_ok = all_ok && ok;
      if (print) {
        char t[32];
        std::snprintf(t, sizeof t, "%.2f", secs);
        std::cout << "criterion " << c.id << ": " << (ok ? "PASS" : "FAIL") << "  " << c.name << " (" << log.detail
                  << ", " << t << " s)" << std::endl;
      }
    }
    return csv;
  };

  bool all_ok = true;
  const auto first = run_all(true, all_ok);
  bool again_ok = true;
  const auto second = run_all(false, again_ok);
  const bool same = first == second;
  std::cout << "criterion 9: " << (same ? "PASS" : "FAIL") << "  identical CSV across two runs (" << first.size()
            << " bytes)" << std::endl;
  if (argc > 1) std::ofstream(argv[1]) << first;
  return all_ok && same ? 0 : 1;
}
