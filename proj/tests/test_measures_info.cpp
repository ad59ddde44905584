#include <doctest.h>

#include <cmath>
#include <random>

#include "lowimpact/builtins.hpp"
#include "models.hpp"
#include "oracle.hpp"

using namespace lowimpact;

namespace {

/// Brute-force P(items = values) by summing trajectory masses.
double slice_mass(const WorldModel& m, const oracle::Dist& d, const std::vector<SliceItem>& items,
                  const std::vector<int>& values) {
  double p = 0.0;
  for (const auto& [t, w] : d) {
    bool ok = true;
    for (std::size_t i = 0; i < items.size() && ok; ++i) ok = m.value(t.state(items[i].time), items[i].component) == values[i];
    if (ok) p += w;
  }
  return p;
}

}  // namespace

TEST_CASE("importance penalty matches the oracle on builtins") {
  std::mt19937_64 rng(41);
  for (const auto& name : builtin_names()) {
    const auto s = builtin(name);
    if (oracle::enumerate(s.model, null_profile(s.model)).size() > 500) continue;
    INFO(name);
    const int agent = planner_agent(s);
    const auto us = utility_set(s, s.utility_sets.front().name);
    const auto fs = fact_set(s, s.fact_sets.front().name);
    for (int trial = 0; trial < 6; ++trial) {
      auto profile = null_profile(s.model);
      if (trial > 0) profile[static_cast<std::size_t>(agent)] = oracle::random_policy(rng, s.model, agent);
      const auto x = oracle::enumerate(s.model, profile, with_activation(s.model, {}, agent, Activation::Active));
      const auto nx = oracle::enumerate(s.model, profile, with_activation(s.model, {}, agent, Activation::Inactive));
      const double lib = importance_penalty(s.model, profile, agent, us, fs);
      CHECK(std::abs(lib - oracle::importance(x, nx, us, fs)) <= 1e-12);
      CHECK(lib >= 0.0);
      CHECK(lib <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("importance penalty grows with the conjunction bound") {
  const auto s = make_paperclip_grid();
  auto profile = null_profile(s.model);
  profile[0] = Policy::from_id("10.10.10", 3, s.model.observation_count(0), 3);
  const auto us = utility_set(s, "world");
  auto fs = fact_set(s, "world");
  double last = -1.0;
  for (int k = 0; k <= 2; ++k) {
    fs.max_conjunction = k;
    const double r = importance_penalty(s.model, profile, 0, us, fs);
    CHECK(r >= last);
    last = r;
  }
  CHECK_THROWS_AS(importance_penalty(s.model, profile, 0, UtilitySet{"empty", {}}, fs), EmptyUtilitySet);
}

TEST_CASE("forward and enumerated likelihoods agree with brute force") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    const auto m = oracle::random_model(rng);
    const PolicyProfile profile{oracle::random_policy(rng, m, 0)};
    const auto given = with_activation(m, {}, 0, trial % 2 ? Activation::Active : Activation::Inactive);
    const ForwardLikelihood forward(m, profile, given);
    const auto dist = propagate(m, profile, given);
    const EnumeratedLikelihood enumerated(m, dist);
    const auto ref = oracle::enumerate(m, profile, given);
    for (int q = 0; q < 10; ++q) {
      std::vector<SliceItem> items;
      std::vector<int> values;
      for (int t = 1; t <= m.horizon; ++t)
        if (rng() % 2) {
          items.push_back({static_cast<int>(rng() % 2), t});
          values.push_back(static_cast<int>(rng() % 2));
        }
      const double p = slice_mass(m, ref, items, values);
      CHECK(std::abs(forward.probability(items, values) - p) <= 1e-12);
      CHECK(std::abs(enumerated.probability(items, values) - p) <= 1e-12);
    }
  }
}

TEST_CASE("visible slice drops boxed components and resolves negative times") {
  const auto m = make_paperclip_grid().model;
  const int clips = m.component_index("clips");
  const int power = m.component_index("power");
  const auto v = visible_slice(m, {{clips, 1}, {power, -1}, {power, 3}});
  REQUIRE(v.size() == 1);
  CHECK(v[0] == SliceItem{power, 3});
  CHECK_THROWS_AS(visible_slice(m, {{power, 9}}), ValidationError);
}

TEST_CASE("detection config validation") {
  DetectionConfig cfg;
  cfg.slice = {{0, 1}};
  CHECK_NOTHROW(validate(cfg));
  auto bad = cfg;
  bad.rho_grid = {0.5, 0.25};
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = cfg;
  bad.threshold = 1.0;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = cfg;
  bad.slice.clear();
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = cfg;
  bad.rho_grid = {0.0, 1.0};
  CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("full-slice ratio equals the exact expectation") {
  // With rho = 1 every item is revealed, so the Monte Carlo mean is a plain
  // average of exact ratios over the drawn futures.
  const auto m = testmodels::coin_bits(4);
  const PolicyProfile profile{testmodels::flip_k(m, 2)};
  DetectionConfig cfg;
  cfg.slice = testmodels::all_bits(m);
  cfg.rho_grid = {1.0};
  cfg.samples = 500;
  cfg.seed = 9;
  const auto r = detectability(m, profile, 0, cfg, {}, Execution::Serial);
  REQUIRE(r.estimates.size() == 1);
  // Two pinned bits: P_X / P_notX = 4 on every future the active branch emits.
  CHECK(r.estimates[0].ratio_active == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(r.estimates[0].items == 4);
  CHECK_FALSE(r.detection_rho);
  CHECK(r.penalty == 0.0);
}

TEST_CASE("identical branches are undetectable") {
  const auto m = testmodels::coin_bits(6);
  DetectionConfig cfg;
  cfg.slice = testmodels::all_bits(m);
  cfg.samples = 200;
  const auto r = detectability(m, {testmodels::flip_k(m, 0)}, 0, cfg);
  CHECK_FALSE(r.detection_rho);
  CHECK(r.penalty == 0.0);
  for (const auto& e : r.estimates) CHECK(e.ratio_active == doctest::Approx(1.0));
}

TEST_CASE("pinning every bit is detected at a small fraction") {
  const auto m = testmodels::coin_bits(8);
  DetectionConfig cfg;
  cfg.slice = testmodels::all_bits(m);
  cfg.samples = 300;
  const auto r = detectability(m, {testmodels::flip_k(m, 8)}, 0, cfg);
  REQUIRE(r.detection_rho);
  // 2^m > 10 needs m = 4 visible bits, first reached at rho = 0.4.
  CHECK(*r.detection_rho == doctest::Approx(0.4));
  CHECK(r.penalty == doctest::Approx(1.0 - *r.detection_rho));
}

TEST_CASE("a fully boxed slice is undetectable") {
  const auto s = make_paperclip_grid();
  DetectionConfig cfg;
  cfg.slice = {{s.model.component_index("clips"), 3}};
  const auto r = detectability(s.model, null_profile(s.model), 0, cfg);
  CHECK_FALSE(r.detection_rho);
  CHECK(r.estimates.empty());
}

TEST_CASE("detectability is seeded and identical across execution modes") {
  const auto m = testmodels::coin_bits(12);
  const PolicyProfile profile{testmodels::flip_k(m, 5)};
  DetectionConfig cfg;
  cfg.slice = testmodels::all_bits(m);
  cfg.samples = 400;
  cfg.seed = 77;
  const auto a = detectability(m, profile, 0, cfg, {}, Execution::Serial);
  const auto b = detectability(m, profile, 0, cfg, {}, Execution::Parallel);
  const auto c = detectability(m, profile, 0, cfg, {}, Execution::Parallel);
  REQUIRE(a.estimates.size() == b.estimates.size());
  for (std::size_t i = 0; i < a.estimates.size(); ++i) {
    CHECK(a.estimates[i].ratio_active == b.estimates[i].ratio_active);
    CHECK(b.estimates[i].ratio_active == c.estimates[i].ratio_active);
    CHECK(a.estimates[i].items == b.estimates[i].items);
  }
  CHECK(a.detection_rho == b.detection_rho);
}

TEST_CASE("enumerated route on explicit branches") {
  const auto m = testmodels::coin_bits(6);
  const PolicyProfile profile{testmodels::flip_k(m, 6)};
  DetectionConfig cfg;
  cfg.slice = testmodels::all_bits(m);
  cfg.samples = 300;
  const auto b = branch_pair(m, profile, 0);
  const auto enumerated = detectability(m, b, cfg, Execution::Serial);
  const auto forward = detectability(m, profile, 0, cfg, {}, Execution::Serial);
  REQUIRE(enumerated.detection_rho);
  REQUIRE(forward.detection_rho);
  // Every active future is all ones, so both routes see the same ratios.
  CHECK(*enumerated.detection_rho == *forward.detection_rho);
}
