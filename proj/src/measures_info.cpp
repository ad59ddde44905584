#include "lowimpact/measures_info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace lowimpact {

namespace {

struct BranchTable {
  std::vector<double> prob;
  std::vector<std::uint64_t> fact_mask;
  std::vector<std::vector<double>> utility;  // [utility][trajectory]
};

BranchTable tabulate(const TrajectoryDistribution& dist, const UtilitySet& utilities, const FactSet& facts) {
  BranchTable table;
  table.utility.resize(utilities.utilities.size());
  for (const auto& e : dist.entries()) {
    table.prob.push_back(e.probability);
    std::uint64_t mask = 0;
    for (std::size_t f = 0; f < facts.facts.size(); ++f)
      if (facts.facts[f].test(e.trajectory)) mask |= std::uint64_t{1} << f;
    table.fact_mask.push_back(mask);
    for (std::size_t u = 0; u < utilities.utilities.size(); ++u)
      table.utility[u].push_back(utilities.utilities[u].value(e.trajectory));
  }
  return table;
}

/// Calls f(mask) for every subset of {0..n-1} with at most k elements,
/// by increasing size then lexicographically.
template <typename F>
void for_each_conjunction(int n, int k, F&& f) {
  f(std::uint64_t{0});
  std::vector<int> pick;
  for (int size = 1; size <= std::min(n, k); ++size) {
    pick.resize(static_cast<std::size_t>(size));
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      std::uint64_t mask = 0;
      for (int i : pick) mask |= std::uint64_t{1} << i;
      f(mask);
      int i = size - 1;
      while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - size + i) --i;
      if (i < 0) break;
      ++pick[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < size; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
}

}  // namespace

double importance_penalty(const BranchPair& branches, const UtilitySet& utilities, const FactSet& facts) {
  return importance_penalty(branches.active, branches.inactive, utilities, facts);
}

double importance_penalty(const TrajectoryDistribution& active, const TrajectoryDistribution& inactive,
                          const UtilitySet& utilities, const FactSet& facts) {
  if (utilities.utilities.empty()) throw EmptyUtilitySet("utility set '" + utilities.name + "' is empty");
  if (facts.facts.size() > 63) throw std::invalid_argument("fact sets are limited to 63 facts");
  const auto x = tabulate(active, utilities, facts);
  const auto nx = tabulate(inactive, utilities, facts);
  const std::size_t n_util = utilities.utilities.size();

  double worst = 0.0;
  std::vector<double> ex(n_util), enx(n_util);
  for_each_conjunction(static_cast<int>(facts.facts.size()), facts.max_conjunction, [&](std::uint64_t mask) {
    auto accumulate = [&](const BranchTable& b, std::vector<double>& sums) {
      std::fill(sums.begin(), sums.end(), 0.0);
      double p = 0.0;
      for (std::size_t i = 0; i < b.prob.size(); ++i) {
        if ((b.fact_mask[i] & mask) != mask) continue;
        p += b.prob[i];
        for (std::size_t u = 0; u < n_util; ++u) sums[u] += b.prob[i] * b.utility[u][i];
      }
      return p;
    };
    const double px = accumulate(x, ex);
    const double pnx = accumulate(nx, enx);
    if (!(px > 0.0) || !(pnx > 0.0)) return;
    for (std::size_t u = 0; u < n_util; ++u) worst = std::max(worst, std::abs(ex[u] / px - enx[u] / pnx));
  });
  return worst;
}

double importance_penalty(const WorldModel& model, const PolicyProfile& profile, int agent,
                          const UtilitySet& utilities, const FactSet& facts, const ActivationAssignment& base) {
  return importance_penalty(branch_pair(model, profile, agent, base), utilities, facts);
}

std::vector<double> default_rho_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(static_cast<double>(i) / 20.0);
  return grid;
}

void validate(const DetectionConfig& cfg) {
  std::vector<Issue> issues;
  if (cfg.rho_grid.empty()) issues.push_back({"BadDetection", "rho grid is empty"});
  for (std::size_t i = 0; i < cfg.rho_grid.size(); ++i) {
    const double r = cfg.rho_grid[i];
    if (!(r > 0.0 && r <= 1.0)) issues.push_back({"BadDetection", "rho values must lie in (0, 1]"});
    if (i > 0 && !(r > cfg.rho_grid[i - 1])) issues.push_back({"BadDetection", "rho grid must be ascending"});
  }
  if (!(cfg.threshold > 1.0)) issues.push_back({"BadDetection", "ratio threshold must exceed 1"});
  if (cfg.samples < 1) issues.push_back({"BadDetection", "sample count must be >= 1"});
  if (cfg.slice.empty()) issues.push_back({"BadDetection", "observation slice is empty"});
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

std::vector<SliceItem> visible_slice(const WorldModel& model, const std::vector<SliceItem>& slice) {
  std::vector<SliceItem> out;
  for (auto item : slice) {
    if (item.time < 0) item.time += model.horizon + 1;
    if (item.time < 0 || item.time > model.horizon || item.component < 0 ||
        item.component >= static_cast<int>(model.components.size()))
      throw ValidationError(std::vector<Issue>{{"BadSlice", "slice item outside the model"}});
    if (model.components[static_cast<std::size_t>(item.component)].boxed) continue;
    if (std::find(out.begin(), out.end(), item) == out.end()) out.push_back(item);
  }
  return out;
}

DetectionResult estimate_detectability(const std::vector<std::vector<int>>& futures,
                                       const std::vector<SliceItem>& visible, const SliceLikelihood& active,
                                       const SliceLikelihood& inactive, const DetectionConfig& cfg, Execution exec) {
  DetectionResult result;
  const int n = static_cast<int>(visible.size());
  if (n == 0 || futures.empty()) return result;

  const auto& grid = cfg.rho_grid;
  result.estimates.resize(grid.size());
  const auto n_rho = static_cast<long>(grid.size());
  const double samples = static_cast<double>(futures.size());

  auto estimate = [&](std::size_t r) {
    RhoEstimate est;
    est.rho = grid[r];
    const int m = std::clamp(static_cast<int>(std::ceil(grid[r] * n - 1e-9)), 1, n);
    est.items = m;
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    std::map<std::vector<int>, std::pair<double, double>> cache;
    std::vector<int> order(static_cast<std::size_t>(n));
    std::vector<SliceItem> items(static_cast<std::size_t>(m));
    std::vector<int> values(static_cast<std::size_t>(m));
    double sum_active = 0.0, sum_inactive = 0.0;
    for (const auto& g : futures) {
      std::iota(order.begin(), order.end(), 0);
      for (int j = 0; j < m; ++j) {
        std::uniform_int_distribution<int> pick(j, n - 1);
        std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(pick(rng))]);
      }
      std::sort(order.begin(), order.begin() + m);
      std::vector<int> key(order.begin(), order.begin() + m);
      for (int j = 0; j < m; ++j) key.push_back(g[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]);
      auto it = cache.find(key);
      if (it == cache.end()) {
        for (int j = 0; j < m; ++j) {
          items[static_cast<std::size_t>(j)] = visible[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
          values[static_cast<std::size_t>(j)] = g[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
        }
        const double pa = active.probability(items, values);
        const double pi = inactive.probability(items, values);
        // A future impossible under one branch is infinitely strong evidence.
        const double ra = pi > 0.0 ? pa / pi : std::numeric_limits<double>::infinity();
        const double ri = pa > 0.0 ? pi / pa : std::numeric_limits<double>::infinity();
        it = cache.emplace(std::move(key), std::make_pair(ra, ri)).first;
      }
      sum_active += it->second.first;
      sum_inactive += it->second.second;
    }
    est.ratio_active = sum_active / samples;
    est.ratio_inactive = sum_inactive / samples;
    est.detected = est.ratio_active > cfg.threshold || est.ratio_inactive > cfg.threshold;
    result.estimates[r] = est;
  };

  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long r = 0; r < n_rho; ++r) estimate(static_cast<std::size_t>(r));
  } else {
    for (long r = 0; r < n_rho; ++r) estimate(static_cast<std::size_t>(r));
  }

  for (const auto& est : result.estimates) {
    if (est.detected) {
      result.detection_rho = est.rho;
      result.penalty = 1.0 - est.rho;
      break;
    }
  }
  return result;
}

std::vector<std::vector<int>> slice_futures(const WorldModel& model, const SampleSet& samples,
                                           const std::vector<SliceItem>& visible) {
  std::vector<std::vector<int>> futures;
  futures.reserve(samples.count());
  for (const auto& [t, count] : samples.draws) {
    std::vector<int> values;
    values.reserve(visible.size());
    for (const auto& item : visible) values.push_back(model.value(t.state(item.time), item.component));
    for (std::size_t k = 0; k < count; ++k) futures.push_back(values);
  }
  return futures;
}

DetectionResult detectability(const WorldModel& model, const PolicyProfile& profile, int agent,
                              const DetectionConfig& cfg, const ActivationAssignment& base, Execution exec) {
  validate(cfg);
  const auto visible = visible_slice(model, cfg.slice);
  if (visible.empty()) return {};
  const auto given_x = with_activation(model, base, agent, Activation::Active);
  const auto given_nx = with_activation(model, base, agent, Activation::Inactive);
  const auto futures = slice_futures(model, sample(model, profile, given_x, cfg.samples, cfg.seed), visible);
  const ForwardLikelihood active(model, profile, given_x);
  const ForwardLikelihood inactive(model, profile, given_nx);
  return estimate_detectability(futures, visible, active, inactive, cfg, exec);
}

DetectionResult detectability(const WorldModel& model, const TrajectoryDistribution& active,
                              const TrajectoryDistribution& inactive, const DetectionConfig& cfg, Execution exec) {
  validate(cfg);
  const auto visible = visible_slice(model, cfg.slice);
  if (visible.empty()) return {};
  const auto futures = slice_futures(model, sample(active, cfg.samples, cfg.seed), visible);
  const EnumeratedLikelihood lik_active(model, active);
  const EnumeratedLikelihood lik_inactive(model, inactive);
  return estimate_detectability(futures, visible, lik_active, lik_inactive, cfg, exec);
}

DetectionResult detectability(const WorldModel& model, const BranchPair& branches, const DetectionConfig& cfg,
                              Execution exec) {
  return detectability(model, branches.active, branches.inactive, cfg, exec);
}

}  // namespace lowimpact
