#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lowimpact/builtins.hpp"
#include "lowimpact/csv.hpp"
#include "oracle.hpp"

using namespace lowimpact;

namespace {

const char* kTiny = R"(name: tiny
model:
  horizon: 1
  components: [{name: on}]
  states:
    - {name: a, values: [0]}
    - {name: b, values: [1]}
  initial: {a: 1}
  agents:
    - {name: bot, actions: [rest, push], null_action: rest}
  transitions:
    - {from: a, actions: ["*"], to: {a: 1}}
    - {from: a, actions: [push], to: {b: 1}}
    - {from: b, actions: ["*"], to: {b: 1}}
variables:
  - {name: on, component: on}
utilities:
  - {name: on, terms: [{component: on}]}
measures:
  - {name: coarse, kind: "coarse:linf"}
planner: {utility: on}
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

bool has_issue(const ValidationError& e, const std::string& kind, int line = -2) {
  for (const auto& i : e.issues())
    if (i.kind == kind && (line == -2 || i.line == line)) return true;
  return false;
}

}  // namespace

TEST_CASE("the builtin set is exactly the five scenarios and each validates") {
  CHECK(builtin_names() == std::vector<std::string>{"paperclip-grid", "election-breakfast", "message-channel",
                                                    "stock-advisor", "asteroid-laser"});
  for (const auto& name : builtin_names()) {
    INFO(name);
    const auto s = load_scenario(name);
    CHECK(s.name == name);
    CHECK(validate_scenario(s).empty());
  }
  CHECK_THROWS_AS(load_scenario("no-such-scenario"), UnknownBuiltin);
}

TEST_CASE("load, serialize, load gives an identical scenario") {
  auto all = builtin_names();
  for (const auto& name : all) {
    INFO(name);
    const auto s = builtin(name);
    const auto text = serialize(s);
    const auto back = parse_scenario(text);
    CHECK(back == s);
    CHECK(serialize(back) == text);
  }
  const auto tiny = parse_scenario(kTiny);
  CHECK(parse_scenario(serialize(tiny)) == tiny);
}

TEST_CASE("property: round trip survives random edits") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = make_paperclip_grid();
    s.model.agents[0].epsilon = std::uniform_real_distribution<double>(1e-6, 0.5)(rng);
    s.planner.mu = std::ldexp(static_cast<double>(rng() % 1000 + 1), -static_cast<int>(rng() % 20));
    s.planner.seed = rng();
    s.measures[4].threshold = 1.0 + static_cast<double>(rng() % 1000) / 7.0;
    s.description = trial % 2 ? "has: colon, \"quotes\" and # hash" : "null";
    CHECK(parse_scenario(serialize(s)) == s);
  }
}

TEST_CASE("missing horizon is reported by key") {
  const auto text = replace(kTiny, "  horizon: 1\n", "");
  try {
    parse_scenario(text);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("model.horizon") != std::string::npos);
    CHECK(has_issue(e, "MissingKey"));
  }
}

TEST_CASE("errors carry line numbers") {
  CHECK_THROWS_AS(parse_scenario("name: [unclosed\n"), ParseError);
  try {
    parse_scenario("name: x\nmodel: {horizon: 1\n");
  } catch (const ParseError& e) {
    CHECK(e.line() >= 1);
  }
  // The first a-row, on line 12, sums to 1.5.
  const auto bad_row = replace(kTiny, "to: {a: 1}}", "to: {a: 1, b: 0.5}}");
  try {
    parse_scenario(bad_row);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(has_issue(e, "NonStochasticRow", 12));
  }
}

TEST_CASE("unresolved names are validation errors") {
  const auto text = replace(kTiny, "planner: {utility: on}", "planner: {utility: off}");
  CHECK_THROWS_AS(parse_scenario(text), ValidationError);
  const auto bad_measure = replace(kTiny, "\"coarse:linf\"", "\"coarse:l9\"");
  CHECK_THROWS_AS(parse_scenario(bad_measure), ValidationError);
}

TEST_CASE("scenario files load from disk") {
  const auto path = std::filesystem::temp_directory_path() / "lowimpact_tiny.yaml";
  {
    std::ofstream out(path);
    out << kTiny;
  }
  const auto s = load_scenario(path.string());
  CHECK(s.name == "tiny");
  CHECK(s.model.state_count() == 2);
  std::filesystem::remove(path);
}

TEST_CASE("bare measure kinds borrow declared settings") {
  const auto s = make_paperclip_grid();
  const auto declared = measure(s, "importance");
  CHECK(declared.label == "importance");
  const auto norm = measure(s, "coarse:tv");
  CHECK(norm.label == "coarse:tv");
  CHECK(std::get<CoarseMeasure>(norm.measure).norm.kind == CoarseNormKind::TotalVariation);
  const auto world = measure(s, "div:kl:world");
  CHECK(std::get<DivergenceMeasure>(world.measure).include_activation);
  try {
    measure(s, "entropy");
    FAIL("expected UnknownKind");
  } catch (const UnknownKind& e) {
    const std::string what = e.what();
    CHECK(what.find("coarse:linf") != std::string::npos);
    CHECK(what.find("div:") != std::string::npos);
  }
}

TEST_CASE("compiled expressions") {
  const auto s = make_paperclip_grid();
  const auto& m = s.model;
  const auto d = propagate(m, null_profile(m), {});
  const auto spike = predicate(s, "steel_spike");
  const auto calm = utility(s, "steel_calm");
  for (const auto& e : d.entries()) {
    const int steel = m.value(e.trajectory.state(m.horizon), m.component_index("steel"));
    CHECK(spike(e.trajectory) == (steel == 1));
    CHECK(calm(e.trajectory) == 1.0 - steel);
  }
  CHECK(parse_compare("<=") == Compare::Le);
  CHECK(to_string(Compare::Ne) == "!=");
  CHECK_THROWS_AS(resolve_time(m, 7, "test"), ValidationError);
  CHECK(resolve_time(m, -1, "test") == m.horizon);
}

TEST_CASE("property: CSV round trip keeps 12 significant digits") {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SweepRow> rows;
    for (int i = 0; i < 5; ++i) {
      SweepRow r{std::pow(10.0, 6.0 * unit(rng) - 3.0), "0" + std::to_string(rng() % 100) + ".12",
                 unit(rng),     unit(rng) < 0.1 ? INFINITY : unit(rng),
                 unit(rng) - 1.0, i % 2 ? "coarse:linf" : "odd, \"name\""};
      rows.push_back(r);
    }
    std::stringstream buf;
    write_rows(buf, rows);
    const auto back = read_rows(buf);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(back[i].policy_id == rows[i].policy_id);
      CHECK(back[i].measure == rows[i].measure);
      for (auto [a, b] : {std::pair{back[i].mu, rows[i].mu}, {back[i].expected_u, rows[i].expected_u},
                          {back[i].penalty, rows[i].penalty}, {back[i].objective, rows[i].objective}}) {
        if (std::isinf(b))
          CHECK(a == b);
        else
          CHECK(std::abs(a - b) <= 1e-11 * std::max(1.0, std::abs(b)));
        CHECK(format_number(a) == format_number(b));
      }
    }
  }
  CHECK(format_number(INFINITY) == "inf");
  CHECK(format_number(-INFINITY) == "-inf");
  CHECK(format_number(0.001) == "0.001");
  std::stringstream bad("mu,policy\n1,2\n");
  CHECK_THROWS_AS(read_rows(bad), ParseError);
}
