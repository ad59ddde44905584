#include "lowimpact/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lowimpact {

EventPredicate EventPredicate::sure() {
  return {"true", [](const Trajectory&) { return true; }};
}

EventPredicate EventPredicate::activation(const WorldModel& model, int agent, bool active) {
  const std::string& name = model.agents[static_cast<std::size_t>(agent)].name;
  return {(active ? "active(" : "inactive(") + name + ")",
          [agent, active](const Trajectory& t) { return t.is_active(agent) == active; }};
}

EventPredicate operator&&(const EventPredicate& a, const EventPredicate& b) {
  return {a.name + " & " + b.name, [a, b](const Trajectory& t) { return a.test(t) && b.test(t); }};
}

EventPredicate operator!(const EventPredicate& a) {
  return {"!(" + a.name + ")", [a](const Trajectory& t) { return !a.test(t); }};
}

TrajectoryDistribution::TrajectoryDistribution(std::vector<WeightedTrajectory> entries,
                                               std::vector<std::string> provenance)
    : provenance_(std::move(provenance)) {
  std::sort(entries.begin(), entries.end(),
            [](const WeightedTrajectory& a, const WeightedTrajectory& b) { return a.trajectory < b.trajectory; });
  for (auto& e : entries) {
    if (!(e.probability > 0.0)) continue;
    if (!entries_.empty() && entries_.back().trajectory == e.trajectory)
      entries_.back().probability += e.probability;
    else
      entries_.push_back(std::move(e));
  }
}

double TrajectoryDistribution::mass() const {
  double total = 0.0;
  for (const auto& e : entries_) total += e.probability;
  return total;
}

double TrajectoryDistribution::probability(const Trajectory& t) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), t,
                             [](const WeightedTrajectory& e, const Trajectory& key) { return e.trajectory < key; });
  return it != entries_.end() && it->trajectory == t ? it->probability : 0.0;
}

double TrajectoryDistribution::probability(const EventPredicate& event) const {
  double total = 0.0;
  for (const auto& e : entries_)
    if (event.test(e.trajectory)) total += e.probability;
  return total;
}

TrajectoryDistribution propagate(const WorldModel& model, const PolicyProfile& profile,
                                 const ActivationAssignment& given, const EnumerationOptions& options) {
  std::vector<std::string> provenance;
  for (std::size_t i = 0; i < given.size() && i < model.agents.size(); ++i) {
    if (given[i] == Activation::Active) provenance.push_back("active(" + model.agents[i].name + ")");
    if (given[i] == Activation::Inactive) provenance.push_back("inactive(" + model.agents[i].name + ")");
  }
  return TrajectoryDistribution(enumerate_trajectories(model, profile, given, options), std::move(provenance));
}

TrajectoryDistribution condition(const TrajectoryDistribution& dist, const EventPredicate& event) {
  std::vector<WeightedTrajectory> kept;
  double total = 0.0;
  for (const auto& e : dist.entries()) {
    if (!event.test(e.trajectory)) continue;
    kept.push_back(e);
    total += e.probability;
  }
  if (!(total > 0.0)) throw ZeroProbabilityEvent("event '" + event.name + "' has probability zero");
  for (auto& e : kept) e.probability /= total;
  auto provenance = dist.provenance();
  provenance.push_back(event.name);
  return TrajectoryDistribution(std::move(kept), std::move(provenance));
}

TrajectoryDistribution strip_activation(const TrajectoryDistribution& dist) {
  std::vector<WeightedTrajectory> entries;
  entries.reserve(dist.size());
  for (const auto& e : dist.entries()) {
    WeightedTrajectory copy = e;
    std::fill(copy.trajectory.active.begin(), copy.trajectory.active.end(), std::uint8_t{0});
    entries.push_back(std::move(copy));
  }
  return TrajectoryDistribution(std::move(entries), dist.provenance());
}

ActivationAssignment with_activation(const WorldModel& model, const ActivationAssignment& base, int agent,
                                     Activation value) {
  ActivationAssignment out = base;
  out.resize(model.agents.size(), Activation::Either);
  out[static_cast<std::size_t>(agent)] = value;
  return out;
}

BranchPair branch_pair(const WorldModel& model, const PolicyProfile& profile, int agent,
                       const ActivationAssignment& base, const EnumerationOptions& options) {
  return {propagate(model, profile, with_activation(model, base, agent, Activation::Active), options),
          propagate(model, profile, with_activation(model, base, agent, Activation::Inactive), options)};
}

int Variable::bin(const Trajectory& t) const {
  const auto v = value(t);
  if (!v) throw UnevaluableVariable("variable '" + name + "' is undefined on a trajectory");
  if (edges.empty()) return *v;
  return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), static_cast<double>(*v)) - edges.begin());
}

std::vector<std::string> VariableSpec::names() const {
  std::vector<std::string> out;
  for (const auto& v : variables) out.push_back(v.name);
  return out;
}

WorldVector VariableSpec::vector(const Trajectory& t) const {
  WorldVector out;
  out.reserve(variables.size());
  for (const auto& v : variables) out.push_back(v.bin(t));
  return out;
}

double VectorMarginal::mass() const {
  double total = 0.0;
  for (const auto& [v, p] : probs) total += p;
  return total;
}

double VectorMarginal::probability(const WorldVector& v) const {
  auto it = probs.find(v);
  return it == probs.end() ? 0.0 : it->second;
}

VectorMarginal marginalize(const TrajectoryDistribution& dist, const VariableSpec& vars) {
  if (vars.variables.empty()) throw SpecMismatch("variable spec has no variables");
  VectorMarginal out;
  out.names = vars.names();
  for (const auto& e : dist.entries()) out.probs[vars.vector(e.trajectory)] += e.probability;
  return out;
}

Variable activation_variable(const WorldModel& model, int agent) {
  return {"active." + model.agents[static_cast<std::size_t>(agent)].name,
          [agent](const Trajectory& t) -> std::optional<int> { return t.is_active(agent) ? 1 : 0; },
          {}};
}

std::size_t SampleSet::count() const {
  std::size_t total = 0;
  for (const auto& [t, n] : draws) total += n;
  return total;
}

TrajectoryDistribution SampleSet::empirical() const {
  const double n = static_cast<double>(count());
  std::vector<WeightedTrajectory> entries;
  for (const auto& [t, k] : draws) entries.push_back({t, static_cast<double>(k) / n});
  return TrajectoryDistribution(std::move(entries), {"empirical"});
}

namespace {

template <typename Items, typename Weight>
std::size_t pick(const Items& items, Weight weight, double u) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    cumulative += weight(items[i]);
    if (u < cumulative) return i;
  }
  // Rounding left u above the final cumulative sum: take the last positive item.
  for (std::size_t i = items.size(); i-- > 0;)
    if (weight(items[i]) > 0.0) return i;
  return items.size() - 1;
}

SampleSet collect(std::map<Trajectory, std::size_t>&& counts, std::uint64_t seed) {
  SampleSet out;
  out.seed = seed;
  out.draws.reserve(counts.size());
  for (auto& [t, n] : counts) out.draws.emplace_back(t, n);
  return out;
}

}  // namespace

SampleSet sample(const WorldModel& model, const PolicyProfile& profile, const ActivationAssignment& given,
                 std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::map<Trajectory, std::size_t> counts;
  const int n_agents = model.agent_count();
  std::vector<ActionId> chosen(static_cast<std::size_t>(n_agents));

  for (std::size_t draw = 0; draw < count; ++draw) {
    Trajectory t;
    t.active.resize(static_cast<std::size_t>(n_agents));
    for (int i = 0; i < n_agents; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const Activation a = given.empty() ? Activation::Either : given[idx];
      bool on = a == Activation::Active;
      if (a == Activation::Either) on = unit(rng) >= model.agents[idx].epsilon;
      t.active[idx] = on ? 1 : 0;
    }
    const auto& init = model.initial;
    StateId s = init[pick(init, [](const Outcome& o) { return o.prob; }, unit(rng))].state;
    t.path.push_back(s);
    for (int step = 0; step < model.horizon; ++step) {
      for (int i = 0; i < n_agents; ++i) {
        const auto options = agent_step(model, profile, i, t.is_active(i), step, s);
        chosen[static_cast<std::size_t>(i)] =
            options[pick(options, [](const auto& o) { return o.second; }, unit(rng))].first;
      }
      const JointActionId joint = model.joint(chosen);
      const auto row = model.row(s, joint);
      s = row[pick(row, [](const Outcome& o) { return o.prob; }, unit(rng))].state;
      t.path.push_back(joint);
      t.path.push_back(s);
    }
    ++counts[std::move(t)];
  }
  return collect(std::move(counts), seed);
}

SampleSet sample(const TrajectoryDistribution& dist, std::size_t count, std::uint64_t seed) {
  if (dist.empty()) throw ZeroProbabilityEvent("cannot sample from an empty distribution");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> cumulative;
  cumulative.reserve(dist.size());
  double total = 0.0;
  for (const auto& e : dist.entries()) cumulative.push_back(total += e.probability);
  std::map<Trajectory, std::size_t> counts;
  for (std::size_t draw = 0; draw < count; ++draw) {
    const double u = unit(rng) * total;
    auto idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    idx = std::min(idx, dist.size() - 1);
    ++counts[dist.entries()[idx].trajectory];
  }
  return collect(std::move(counts), seed);
}

double total_variation(const TrajectoryDistribution& a, const TrajectoryDistribution& b) {
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  std::size_t i = 0, j = 0;
  double sum = 0.0;
  while (i < ea.size() || j < eb.size()) {
    if (j == eb.size() || (i < ea.size() && ea[i].trajectory < eb[j].trajectory)) {
      sum += ea[i++].probability;
    } else if (i == ea.size() || eb[j].trajectory < ea[i].trajectory) {
      sum += eb[j++].probability;
    } else {
      sum += std::abs(ea[i++].probability - eb[j++].probability);
    }
  }
  return 0.5 * sum;
}

}  // namespace lowimpact
