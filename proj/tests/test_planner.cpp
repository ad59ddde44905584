#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lowimpact/builtins.hpp"
#include "models.hpp"
#include "oracle.hpp"

using namespace lowimpact;

namespace {

struct Best {
  std::string id;
  double eu = 0.0;
  double penalty = 0.0;
};

/// Argmax of E[u] - mu R over every table, ties to smaller R then smaller id.
Best brute_force(const Scenario& s, double mu) {
  const auto vars = variables(s);
  const auto u = utility(s, s.planner.utility);
  const int agent = planner_agent(s);
  Best best{"", -1.0, 0.0};
  double best_u = -INFINITY;
  for (const auto& p : oracle::all_policies(s.model, agent)) {
    const auto r = oracle::coarse_row(s.model, agent, p, u, vars, CoarseNormKind::Linf);
    const double obj = r.eu - mu * r.penalty;
    const bool wins = obj > best_u + 1e-12 ||
                      (std::abs(obj - best_u) <= 1e-12 &&
                       (r.penalty < best.penalty - 1e-12 ||
                        (std::abs(r.penalty - best.penalty) <= 1e-12 && p.id() < best.id)));
    if (best.id.empty() || wins) {
      best = {p.id(), r.eu, r.penalty};
      best_u = obj;
    }
  }
  return best;
}

Objective coarse_objective(const Scenario& s, double mu) {
  auto obj = objective(s, "coarse:linf", "none", mu);
  return obj;
}

}  // namespace

TEST_CASE("policy space pins unreachable entries to null") {
  const auto s = make_paperclip_grid();
  const PolicySpace space(s.model, 0);
  // seized is never observed as 1 at t = 0.
  CHECK(space.free_entries().size() == 5);
  CHECK(space.size() == 243.0);
  CHECK(space.decode(0) == space.null());
  CHECK(space.null() == null_policy(s.model, 0));
  std::set<std::string> ids;
  std::string last;
  for (std::uint64_t i = 0; i < 243; ++i) {
    const auto id = space.decode(i).id();
    CHECK(id > last);
    last = id;
    ids.insert(id);
  }
  CHECK(ids.size() == 243);
}

TEST_CASE("exhaustive search equals the brute-force argmax") {
  for (const char* name : {"paperclip-grid", "election-breakfast", "message-channel"}) {
    const auto s = builtin(name);
    for (double mu : {0.0, 0.01, 0.1, 0.5, 2.0, 100.0}) {
      INFO(name << " mu=" << mu);
      const auto ref = brute_force(s, mu);
      PlannerOptions opts;
      const auto got = optimize(s.model, coarse_objective(s, mu), opts);
      CHECK(got.exhaustive);
      CHECK(got.row.policy_id == ref.id);
      CHECK(std::abs(got.row.expected_u - ref.eu) <= 1e-12);
      CHECK(std::abs(got.row.penalty - ref.penalty) <= 1e-12);
    }
  }
}

TEST_CASE("takeover row matches the oracle") {
  const auto s = make_paperclip_grid();
  const auto takeover = Policy::from_id("20.00.00", 3, s.model.observation_count(0), 3);
  const auto row = evaluate_policy(s.model, takeover, coarse_objective(s, 1.0));
  const auto ref = oracle::coarse_row(s.model, 0, takeover, utility(s, "clips"), variables(s), CoarseNormKind::Linf);
  CHECK(std::abs(row.expected_u - ref.eu) <= 1e-12);
  CHECK(std::abs(row.penalty - ref.penalty) <= 1e-12);
  CHECK(row.penalty == doctest::Approx(1.0));
  CHECK(row.objective == doctest::Approx(row.expected_u - row.penalty));
}

TEST_CASE("hill climbing is deterministic and independent of execution mode") {
  const auto s = make_paperclip_grid();
  PlannerOptions opts;
  opts.budget = 10;
  opts.restarts = 4;
  opts.mutations = 64;
  opts.seed = 3;
  const auto obj = coarse_objective(s, 0.05);
  const auto a = optimize(s.model, obj, opts);
  const auto b = optimize(s.model, obj, opts);
  opts.exec = Execution::Serial;
  const auto c = optimize(s.model, obj, opts);
  CHECK_FALSE(a.exhaustive);
  CHECK(a.row == b.row);
  CHECK(a.row == c.row);
  // The climb starts from null, so it never ends below it.
  CHECK(a.row.objective >= evaluate_policy(s.model, null_policy(s.model, 0), obj).objective);
  CHECK(a.row.policy_id == brute_force(s, 0.05).id);
}

TEST_CASE("sweep rows are the per-mu optima, in descending mu") {
  const auto s = make_paperclip_grid();
  const auto mus = log_grid(1e-3, 1e3, 20);
  const auto obj = coarse_objective(s, 1.0);
  const auto rows = mu_sweep(s.model, obj, mus);
  REQUIRE(rows.size() == 20);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      CHECK(rows[i].mu < rows[i - 1].mu);
      CHECK(rows[i].penalty >= rows[i - 1].penalty);
    }
    auto single = obj;
    single.mu = rows[i].mu;
    CHECK(optimize(s.model, single).row == rows[i]);
  }
  CHECK(rows.front().policy_id == null_policy(s.model, 0).id());
}

TEST_CASE("log grid hits both endpoints exactly") {
  const auto g = log_grid(1e-3, 1e3, 20);
  REQUIRE(g.size() == 20);
  CHECK(g.front() == 1e-3);
  CHECK(g.back() == 1e3);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(std::pow(1e6, 1.0 / 19)));
  CHECK(log_grid(2.0, 2.0, 1) == std::vector<double>{2.0});
}

TEST_CASE("objective arithmetic and ordering") {
  CHECK(objective_value(0.7, 0.0, INFINITY) == 0.7);
  CHECK(objective_value(0.7, 1.0, INFINITY) == -INFINITY);
  CHECK(objective_value(0.5, 2.0, 0.1) == doctest::Approx(0.3));
  const SweepRow hi{1, "b", 1, 0.2, 0.8, "m"};
  const SweepRow lo{1, "a", 1, 0.3, 0.7, "m"};
  CHECK(better(hi, lo));
  CHECK_FALSE(better(lo, hi));
  const SweepRow tie_r{1, "c", 0.8, 0.0, 0.8, "m"};
  CHECK(better(tie_r, hi));
  const SweepRow tie_id{1, "a", 0.8, 0.0, 0.8, "m"};
  CHECK(better(tie_id, tie_r));
  CHECK_FALSE(better(tie_id, tie_id));
}

TEST_CASE("utilities outside the unit interval are rejected") {
  const auto s = make_paperclip_grid();
  auto obj = coarse_objective(s, 1.0);
  obj.u = Utility{"double_clips", [inner = obj.u](const Trajectory& t) { return 2.0 * inner(t); }};
  const auto takeover = Policy::from_id("20.00.00", 3, s.model.observation_count(0), 3);
  CHECK_THROWS_AS(evaluate_policy(s.model, takeover, obj), UnboundedUtility);
}

TEST_CASE("enumerating an astronomically large space is refused") {
  const auto m = testmodels::coin_bits(60);
  Objective obj;
  obj.u = Utility{"zero", [](const Trajectory&) { return 0.0; }};
  obj.measure = PenaltyConfig{"coarse", CoarseMeasure{{}, {}}};
  CHECK(PolicySpace(m, 0).size() > 1e15);
  CHECK_THROWS_AS(evaluate_all(m, obj), ExplosionGuard);
}

TEST_CASE("stock advisor picks the true best stock under announcement conditioning") {
  const auto s = make_stock_advisor();
  const auto obj = objective(s, "coarse", "announce:rich", 1.0);
  const auto r = optimize(s.model, obj);
  CHECK(r.exhaustive);
  CHECK(r.policy.at(0, 0) == s.model.action_index(0, "pick_333"));
  CHECK(r.row.penalty <= 1e-12);
  CHECK(r.row.expected_u == 1.0);
}
