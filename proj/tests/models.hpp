#pragma once

#include <vector>

#include "lowimpact/worldmodel.hpp"

namespace testmodels {

using namespace lowimpact;

/// One fair coin per step, observed as component "bit". The agent's "flip"
/// action pins the next bit to 1. Two states, so the forward likelihood
/// handles long horizons.
inline WorldModel coin_bits(int horizon) {
  WorldModel m;
  m.horizon = horizon;
  m.components = {{"bit", false}};
  m.state_names = {"zero", "one"};
  m.state_values = {{0}, {1}};
  m.initial = {{0, 1.0}};
  Agent a;
  a.name = "flipper";
  a.actions = {"null", "flip"};
  m.agents = {a};
  m.reset_transitions();
  for (StateId s = 0; s < 2; ++s) {
    m.row_mut(s, 0) = {{0, 0.5}, {1, 0.5}};
    m.row_mut(s, 1) = {{1, 1.0}};
  }
  m.finalize();
  return m;
}

/// Flips k of the horizon's steps, spread evenly.
inline Policy flip_k(const WorldModel& m, int k) {
  Policy p(m.horizon, m.observation_count(0), 2, 0);
  for (int i = 0; i < k; ++i) p.set(i * m.horizon / k, 0, 1);
  return p;
}

inline std::vector<SliceItem> all_bits(const WorldModel& m) {
  std::vector<SliceItem> out;
  for (int t = 1; t <= m.horizon; ++t) out.push_back({0, t});
  return out;
}

}  // namespace testmodels
