#pragma once

// Brute-force reference implementations. They share only the data types
// with the library: every probability is rebuilt by walking all activation
// flags, joint actions and successor states directly.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "lowimpact/conditioning.hpp"
#include "lowimpact/worldmodel.hpp"

namespace oracle {

using namespace lowimpact;

using Dist = std::map<Trajectory, double>;

inline double baseline_prob(const Agent& a, int t, ActionId act) {
  const auto& b = a.baseline;
  switch (b.kind) {
    case BaselineKind::Null:
      return act == a.null_action ? 1.0 : 0.0;
    case BaselineKind::Uniform: {
      const auto n = std::count(b.actions.begin(), b.actions.end(), act);
      return static_cast<double>(n) / static_cast<double>(b.actions.size());
    }
    case BaselineKind::Weighted: {
      double p = 0.0;
      for (std::size_t i = 0; i < b.actions.size(); ++i)
        if (b.actions[i] == act) p += b.weights[i];
      return p;
    }
    case BaselineKind::Scripted:
      return b.actions[static_cast<std::size_t>(t)] == act ? 1.0 : 0.0;
  }
  return 0.0;
}

inline double action_prob(const WorldModel& m, const PolicyProfile& profile, int agent, bool active, int t,
                          StateId s, ActionId act) {
  const auto i = static_cast<std::size_t>(agent);
  if (active && i < profile.size() && profile[i]) return profile[i]->at(t, m.observation(agent, s)) == act ? 1.0 : 0.0;
  return baseline_prob(m.agents[i], t, act);
}

inline double step_prob(const WorldModel& m, StateId s, JointActionId a, StateId next) {
  double p = 0.0;
  for (const auto& o : m.row(s, a))
    if (o.state == next) p += o.prob;
  return p;
}

inline void walk(const WorldModel& m, const PolicyProfile& profile, Trajectory& tr, int t, double p, Dist& out) {
  if (t == m.horizon) {
    out[tr] += p;
    return;
  }
  const StateId s = tr.path.back();
  for (JointActionId a = 0; a < m.joint_count(); ++a) {
    double pa = 1.0;
    for (int i = 0; i < m.agent_count() && pa > 0.0; ++i)
      pa *= action_prob(m, profile, i, tr.active[static_cast<std::size_t>(i)] != 0, t, s, m.agent_action(a, i));
    if (pa == 0.0) continue;
    for (StateId next = 0; next < m.state_count(); ++next) {
      const double q = step_prob(m, s, a, next);
      if (q == 0.0) continue;
      tr.path.push_back(a);
      tr.path.push_back(next);
      walk(m, profile, tr, t + 1, p * pa * q, out);
      tr.path.resize(tr.path.size() - 2);
    }
  }
}

/// P(. | given) by exhaustive walk.
inline Dist enumerate(const WorldModel& m, const PolicyProfile& profile, const ActivationAssignment& given = {}) {
  Dist out;
  const int n = m.agent_count();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    Trajectory tr;
    double w = 1.0;
    for (int i = 0; i < n; ++i) {
      const bool on = (mask >> (n - 1 - i)) & 1u;
      const Activation g = given.empty() ? Activation::Either : given[static_cast<std::size_t>(i)];
      const double eps = m.agents[static_cast<std::size_t>(i)].epsilon;
      if (g == Activation::Either) w *= on ? 1.0 - eps : eps;
      if ((g == Activation::Active && !on) || (g == Activation::Inactive && on)) w = 0.0;
      tr.active.push_back(on ? 1 : 0);
    }
    if (w == 0.0) continue;
    for (const auto& o : m.initial) {
      if (o.prob == 0.0) continue;
      tr.path = {o.state};
      walk(m, profile, tr, 0, w * o.prob, out);
    }
  }
  return out;
}

inline Dist as_map(const TrajectoryDistribution& d) {
  Dist out;
  for (const auto& e : d.entries()) out[e.trajectory] += e.probability;
  return out;
}

/// Largest probability gap over the union of supports.
inline double max_gap(const Dist& a, const Dist& b) {
  double worst = 0.0;
  for (const auto& [t, p] : a) {
    const auto it = b.find(t);
    worst = std::max(worst, std::abs(p - (it == b.end() ? 0.0 : it->second)));
  }
  for (const auto& [t, p] : b)
    if (!a.count(t)) worst = std::max(worst, p);
  return worst;
}

inline Dist condition(const Dist& d, const EventPredicate& e) {
  double z = 0.0;
  for (const auto& [t, p] : d)
    if (e(t)) z += p;
  Dist out;
  for (const auto& [t, p] : d)
    if (e(t)) out[t] = p / z;
  return out;
}

using Cells = std::map<std::vector<int>, double>;

inline Cells marginal(const Dist& d, const VariableSpec& vars) {
  Cells out;
  for (const auto& [t, p] : d) {
    std::vector<int> key;
    for (const auto& v : vars.variables) {
      const int raw = *v.value(t);
      int bin = raw;
      if (!v.edges.empty()) {
        bin = 0;
        for (double e : v.edges)
          if (e <= raw) ++bin;
      }
      key.push_back(bin);
    }
    out[key] += p;
  }
  return out;
}

inline std::vector<std::pair<double, double>> paired(const Cells& a, const Cells& b) {
  std::set<std::vector<int>> keys;
  for (const auto& [k, p] : a) keys.insert(k);
  for (const auto& [k, p] : b) keys.insert(k);
  std::vector<std::pair<double, double>> out;
  for (const auto& k : keys) {
    const auto ia = a.find(k);
    const auto ib = b.find(k);
    out.emplace_back(ia == a.end() ? 0.0 : ia->second, ib == b.end() ? 0.0 : ib->second);
  }
  return out;
}

inline double linf(const Cells& a, const Cells& b) {
  double r = 0.0;
  for (auto [x, y] : paired(a, b)) r = std::max(r, std::abs(x - y));
  return r;
}

inline double tv(const Cells& a, const Cells& b) {
  double r = 0.0;
  for (auto [x, y] : paired(a, b)) r += std::abs(x - y);
  return r / 2.0;
}

inline double l2(const Cells& a, const Cells& b) {
  double r = 0.0;
  for (auto [x, y] : paired(a, b)) r += (x - y) * (x - y);
  return std::sqrt(r);
}

inline double coarse(const Cells& a, const Cells& b, CoarseNormKind kind) {
  switch (kind) {
    case CoarseNormKind::Linf:
      return linf(a, b);
    case CoarseNormKind::TotalVariation:
      return tv(a, b);
    case CoarseNormKind::L2:
      return l2(a, b);
    default:
      return NAN;
  }
}

inline double expectation(const Dist& d, const Utility& u, const EventPredicate* given = nullptr) {
  double num = 0.0, den = 0.0;
  for (const auto& [t, p] : d) {
    if (given && !(*given)(t)) continue;
    num += p * u(t);
    den += p;
  }
  return num / den;
}

inline double probability(const Dist& d, const EventPredicate& e) {
  double r = 0.0;
  for (const auto& [t, p] : d)
    if (e(t)) r += p;
  return r;
}

/// max over utilities and fact subsets of size <= k of the conditional gap.
inline double importance(const Dist& x, const Dist& nx, const UtilitySet& us, const FactSet& fs) {
  const std::size_t n = fs.facts.size();
  double worst = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) > fs.max_conjunction) continue;
    EventPredicate all{"s", [&fs, mask](const Trajectory& t) {
                         for (std::size_t i = 0; i < fs.facts.size(); ++i)
                           if (((mask >> i) & 1u) && !fs.facts[i](t)) return false;
                         return true;
                       }};
    if (probability(x, all) <= 0.0 || probability(nx, all) <= 0.0) continue;
    for (const auto& u : us.utilities)
      worst = std::max(worst, std::abs(expectation(x, u, &all) - expectation(nx, u, &all)));
  }
  return worst;
}

/// Every deterministic table for one agent, by counting in base |actions|.
inline std::vector<Policy> all_policies(const WorldModel& m, int agent) {
  const int h = m.horizon;
  const int obs = m.observation_count(agent);
  const int acts = static_cast<int>(m.agents[static_cast<std::size_t>(agent)].actions.size());
  const int cells = h * obs;
  std::vector<Policy> out;
  std::vector<int> digits(static_cast<std::size_t>(cells), 0);
  while (true) {
    Policy p(h, obs, acts, 0);
    for (int c = 0; c < cells; ++c) p.set(c / obs, c % obs, digits[static_cast<std::size_t>(c)]);
    out.push_back(p);
    int c = cells - 1;
    while (c >= 0 && ++digits[static_cast<std::size_t>(c)] == acts) digits[static_cast<std::size_t>(c--)] = 0;
    if (c < 0) break;
  }
  return out;
}

/// Expected u and coarse penalty of a single-agent policy (agent inactive
/// branch vs active branch, others null).
struct Row {
  double eu = 0.0;
  double penalty = 0.0;
};

inline Row coarse_row(const WorldModel& m, int agent, const Policy& policy, const Utility& u,
                      const VariableSpec& vars, CoarseNormKind kind) {
  auto profile = null_profile(m);
  profile[static_cast<std::size_t>(agent)] = policy;
  ActivationAssignment on(static_cast<std::size_t>(m.agent_count()), Activation::Either), off = on;
  on[static_cast<std::size_t>(agent)] = Activation::Active;
  off[static_cast<std::size_t>(agent)] = Activation::Inactive;
  const auto x = enumerate(m, profile, on);
  const auto nx = enumerate(m, profile, off);
  return {expectation(x, u), coarse(marginal(x, vars), marginal(nx, vars), kind)};
}

// -- random models for property tests --------------------------------------

/// Small random single- or two-agent model with random observation masks.
inline WorldModel random_model(std::mt19937_64& rng, int agents = 1) {
  std::uniform_int_distribution<int> small(2, 3);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  WorldModel m;
  m.horizon = small(rng);
  const int states = small(rng) + 1;
  m.components = {{"a", false}, {"b", false}, {"hidden", true}};
  for (int s = 0; s < states; ++s) {
    m.state_names.push_back("s" + std::to_string(s));
    m.state_values.push_back({s % 2, s / 2, s % 3});
  }
  m.initial = {{0, 0.5}, {1, 0.5}};
  for (int i = 0; i < agents; ++i) {
    Agent a;
    a.name = "g" + std::to_string(i);
    a.actions = {"null", "x", "y"};
    a.epsilon = std::uniform_real_distribution<double>(0.01, 0.5)(rng);
    if (rng() % 2) {
      a.baseline.kind = BaselineKind::Uniform;
      a.baseline.actions = {0, 1};
    }
    if (rng() % 2) a.observes = {0};
    m.agents.push_back(a);
  }
  m.reset_transitions();
  for (StateId s = 0; s < states; ++s)
    for (JointActionId j = 0; j < m.joint_count(); ++j) {
      std::vector<double> w(static_cast<std::size_t>(states));
      double z = 0.0;
      for (auto& x : w) {
        x = rng() % 3 == 0 ? 0.0 : unit(rng);
        z += x;
      }
      if (z == 0.0) {
        w[0] = 1.0;
        z = 1.0;
      }
      auto& row = m.row_mut(s, j);
      double acc = 0.0;
      for (int n = 0; n < states; ++n) {
        if (w[static_cast<std::size_t>(n)] == 0.0) continue;
        row.push_back({n, w[static_cast<std::size_t>(n)] / z});
        acc += w[static_cast<std::size_t>(n)] / z;
      }
      row.back().prob += 1.0 - acc;
    }
  m.finalize();
  return m;
}

inline Policy random_policy(std::mt19937_64& rng, const WorldModel& m, int agent) {
  const int acts = static_cast<int>(m.agents[static_cast<std::size_t>(agent)].actions.size());
  Policy p(m.horizon, m.observation_count(agent), acts, 0);
  for (int t = 0; t < m.horizon; ++t)
    for (int o = 0; o < m.observation_count(agent); ++o) p.set(t, o, static_cast<int>(rng() % acts));
  return p;
}

}  // namespace oracle
