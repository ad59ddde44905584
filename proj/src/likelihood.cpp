#include "lowimpact/likelihood.hpp"

#include <algorithm>
#include <map>

namespace lowimpact {

ForwardLikelihood::ForwardLikelihood(const WorldModel& model, const PolicyProfile& profile,
                                     const ActivationAssignment& given)
    : model_(model) {
  const int n_agents = model.agent_count();
  std::vector<std::pair<std::vector<std::uint8_t>, double>> combos{{{}, 1.0}};
  for (int i = 0; i < n_agents; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const Activation a = given.empty() ? Activation::Either : given[idx];
    const double eps = model.agents[idx].epsilon;
    std::vector<std::pair<std::vector<std::uint8_t>, double>> next;
    for (const auto& [flags, w] : combos) {
      if (a != Activation::Active) {
        auto f = flags;
        f.push_back(0);
        next.emplace_back(std::move(f), a == Activation::Either ? w * eps : w);
      }
      if (a != Activation::Inactive) {
        auto f = flags;
        f.push_back(1);
        next.emplace_back(std::move(f), a == Activation::Either ? w * (1.0 - eps) : w);
      }
    }
    combos = std::move(next);
  }

  const int n_states = model.state_count();
  std::vector<ActionId> chosen(static_cast<std::size_t>(n_agents));
  for (const auto& [flags, weight] : combos) {
    Branch branch;
    branch.weight = weight;
    branch.kernel.resize(static_cast<std::size_t>(model.horizon));
    for (int t = 0; t < model.horizon; ++t) {
      auto& layer = branch.kernel[static_cast<std::size_t>(t)];
      layer.resize(static_cast<std::size_t>(n_states));
      for (StateId s = 0; s < n_states; ++s) {
        std::vector<std::vector<std::pair<ActionId, double>>> options;
        for (int i = 0; i < n_agents; ++i)
          options.push_back(agent_step(model, profile, i, flags[static_cast<std::size_t>(i)] != 0, t, s));
        std::map<StateId, double> next;
        // Odometer over the per-agent option lists.
        std::vector<std::size_t> pos(static_cast<std::size_t>(n_agents), 0);
        while (true) {
          double p = 1.0;
          for (int i = 0; i < n_agents; ++i) {
            const auto& [act, q] = options[static_cast<std::size_t>(i)][pos[static_cast<std::size_t>(i)]];
            chosen[static_cast<std::size_t>(i)] = act;
            p *= q;
          }
          if (p > 0.0)
            for (const auto& o : model.row(s, model.joint(chosen)))
              if (o.prob > 0.0) next[o.state] += p * o.prob;
          int k = n_agents - 1;
          while (k >= 0 && ++pos[static_cast<std::size_t>(k)] == options[static_cast<std::size_t>(k)].size()) {
            pos[static_cast<std::size_t>(k)] = 0;
            --k;
          }
          if (k < 0) break;
        }
        auto& out = layer[static_cast<std::size_t>(s)];
        for (const auto& [state, p] : next) out.push_back({state, p});
      }
    }
    branches_.push_back(std::move(branch));
  }
}

double ForwardLikelihood::probability(std::span<const SliceItem> items, std::span<const int> values) const {
  const int horizon = model_.horizon;
  const int n_states = model_.state_count();
  // Evidence indicator per (time, state).
  std::vector<std::vector<std::uint8_t>> allowed(static_cast<std::size_t>(horizon + 1));
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto t = static_cast<std::size_t>(items[i].time);
    if (allowed[t].empty()) allowed[t].assign(static_cast<std::size_t>(n_states), 1);
    for (StateId s = 0; s < n_states; ++s)
      if (model_.value(s, items[i].component) != values[i]) allowed[t][static_cast<std::size_t>(s)] = 0;
  }
  auto ok = [&](int t, StateId s) {
    const auto& row = allowed[static_cast<std::size_t>(t)];
    return row.empty() || row[static_cast<std::size_t>(s)] != 0;
  };

  double total = 0.0;
  std::vector<double> alpha(static_cast<std::size_t>(n_states));
  std::vector<double> next(static_cast<std::size_t>(n_states));
  for (const auto& branch : branches_) {
    std::fill(alpha.begin(), alpha.end(), 0.0);
    for (const auto& o : model_.initial)
      if (ok(0, o.state)) alpha[static_cast<std::size_t>(o.state)] += o.prob;
    for (int t = 0; t < horizon; ++t) {
      std::fill(next.begin(), next.end(), 0.0);
      const auto& layer = branch.kernel[static_cast<std::size_t>(t)];
      for (StateId s = 0; s < n_states; ++s) {
        const double a = alpha[static_cast<std::size_t>(s)];
        if (a == 0.0) continue;
        for (const auto& o : layer[static_cast<std::size_t>(s)]) next[static_cast<std::size_t>(o.state)] += a * o.prob;
      }
      for (StateId s = 0; s < n_states; ++s)
        if (!ok(t + 1, s)) next[static_cast<std::size_t>(s)] = 0.0;
      alpha.swap(next);
    }
    double mass = 0.0;
    for (double a : alpha) mass += a;
    total += branch.weight * mass;
  }
  return total;
}

double EnumeratedLikelihood::probability(std::span<const SliceItem> items, std::span<const int> values) const {
  double total = 0.0;
  for (const auto& e : dist_.entries()) {
    bool match = true;
    for (std::size_t i = 0; i < items.size() && match; ++i)
      match = model_.value(e.trajectory.state(items[i].time), items[i].component) == values[i];
    if (match) total += e.probability;
  }
  return total;
}

}  // namespace lowimpact
