#include "lowimpact/measures_state.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace lowimpact {

namespace {

void require_same_spec(const VectorMarginal& a, const VectorMarginal& b) {
  if (a.names != b.names) throw SpecMismatch("marginals are over different variable specs");
}

/// Visits every world vector in the union of both supports, in order.
template <typename F>
void for_each_cell(const VectorMarginal& a, const VectorMarginal& b, F&& f) {
  auto ia = a.probs.begin();
  auto ib = b.probs.begin();
  while (ia != a.probs.end() || ib != b.probs.end()) {
    if (ib == b.probs.end() || (ia != a.probs.end() && ia->first < ib->first)) {
      f(ia->second, 0.0);
      ++ia;
    } else if (ia == a.probs.end() || ib->first < ia->first) {
      f(0.0, ib->second);
      ++ib;
    } else {
      f(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
}

double kl(const VectorMarginal& p, const VectorMarginal& q) {
  double total = 0.0;
  bool unbounded = false;
  for_each_cell(p, q, [&](double pp, double qq) {
    if (pp <= 0.0) return;
    if (qq <= 0.0) {
      unbounded = true;
      return;
    }
    total += pp * std::log(pp / qq);
  });
  if (unbounded) return kUnbounded;
  return std::max(0.0, total);
}

}  // namespace

CoarseNorm parse_coarse_norm(std::string_view name) {
  if (name == "linf") return {CoarseNormKind::Linf};
  if (name == "tv") return {CoarseNormKind::TotalVariation};
  if (name == "l2") return {CoarseNormKind::L2};
  if (name == "softmax") return {CoarseNormKind::Softmax};
  if (name.starts_with("softmax(") && name.ends_with(")")) {
    const auto inner = name.substr(8, name.size() - 9);
    double tau = 0.0;
    std::istringstream in{std::string(inner)};
    if (in >> tau && in.eof() && tau > 0.0) return {CoarseNormKind::Softmax, tau};
  }
  throw UnknownKind("unknown coarse norm '" + std::string(name) + "' (expected linf, tv, l2, softmax)");
}

std::string to_string(const CoarseNorm& norm) {
  switch (norm.kind) {
    case CoarseNormKind::Linf:
      return "linf";
    case CoarseNormKind::TotalVariation:
      return "tv";
    case CoarseNormKind::L2:
      return "l2";
    case CoarseNormKind::Softmax: {
      if (norm.tau == CoarseNorm{}.tau) return "softmax";
      std::ostringstream out;
      out.precision(17);
      out << "softmax(" << norm.tau << ")";
      return out.str();
    }
  }
  return "?";
}

double coarse_penalty(const VectorMarginal& x, const VectorMarginal& not_x, const CoarseNorm& norm) {
  require_same_spec(x, not_x);
  switch (norm.kind) {
    case CoarseNormKind::Linf: {
      double best = 0.0;
      for_each_cell(x, not_x, [&](double a, double b) { best = std::max(best, std::abs(a - b)); });
      return best;
    }
    case CoarseNormKind::TotalVariation: {
      double sum = 0.0;
      for_each_cell(x, not_x, [&](double a, double b) { sum += std::abs(a - b); });
      return 0.5 * sum;
    }
    case CoarseNormKind::L2: {
      double sum = 0.0;
      for_each_cell(x, not_x, [&](double a, double b) { sum += (a - b) * (a - b); });
      return std::sqrt(sum);
    }
    case CoarseNormKind::Softmax: {
      std::vector<double> gaps;
      for_each_cell(x, not_x, [&](double a, double b) { gaps.push_back(std::abs(a - b)); });
      if (gaps.empty()) return 0.0;
      const double top = *std::max_element(gaps.begin(), gaps.end());
      double num = 0.0, den = 0.0;
      for (double g : gaps) {
        const double w = std::exp((g - top) / norm.tau);
        num += g * w;
        den += w;
      }
      return num / den;
    }
  }
  throw UnknownKind("unknown coarse norm");
}

DivergenceKind parse_divergence(std::string_view name) {
  if (name == "kl") return DivergenceKind::KlInactiveFromActive;
  if (name == "kl-fwd") return DivergenceKind::KlActiveFromInactive;
  if (name == "js") return DivergenceKind::JensenShannon;
  if (name == "hellinger") return DivergenceKind::Hellinger;
  if (name == "tv") return DivergenceKind::TotalVariation;
  if (name == "bregman") return DivergenceKind::BregmanSquared;
  throw UnknownKind("unknown divergence '" + std::string(name) + "' (expected kl, kl-fwd, js, hellinger, tv, bregman)");
}

std::string to_string(DivergenceKind kind) {
  switch (kind) {
    case DivergenceKind::KlInactiveFromActive:
      return "kl";
    case DivergenceKind::KlActiveFromInactive:
      return "kl-fwd";
    case DivergenceKind::JensenShannon:
      return "js";
    case DivergenceKind::Hellinger:
      return "hellinger";
    case DivergenceKind::TotalVariation:
      return "tv";
    case DivergenceKind::BregmanSquared:
      return "bregman";
  }
  return "?";
}

double divergence_penalty(const VectorMarginal& x, const VectorMarginal& not_x, DivergenceKind kind) {
  require_same_spec(x, not_x);
  switch (kind) {
    case DivergenceKind::KlInactiveFromActive:
      return kl(not_x, x);
    case DivergenceKind::KlActiveFromInactive:
      return kl(x, not_x);
    case DivergenceKind::JensenShannon: {
      double total = 0.0;
      for_each_cell(x, not_x, [&](double a, double b) {
        const double m = 0.5 * (a + b);
        if (a > 0.0) total += 0.5 * a * std::log(a / m);
        if (b > 0.0) total += 0.5 * b * std::log(b / m);
      });
      return std::clamp(total, 0.0, std::log(2.0));
    }
    case DivergenceKind::Hellinger: {
      // sqrt(1 - BC) written as a sum of squares so equal inputs give exactly 0.
      double sum = 0.0;
      for_each_cell(x, not_x, [&](double a, double b) {
        const double d = std::sqrt(a) - std::sqrt(b);
        sum += d * d;
      });
      return std::sqrt(std::clamp(0.5 * sum, 0.0, 1.0));
    }
    case DivergenceKind::TotalVariation: {
      double sum = 0.0;
      for_each_cell(x, not_x, [&](double a, double b) { sum += std::abs(a - b); });
      return 0.5 * sum;
    }
    case DivergenceKind::BregmanSquared: {
      double sum = 0.0;
      for_each_cell(x, not_x, [&](double a, double b) { sum += (a - b) * (a - b); });
      return sum;
    }
  }
  throw UnknownKind("unknown divergence");
}

}  // namespace lowimpact
