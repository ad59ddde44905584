#pragma once

#include <limits>
#include <string>
#include <string_view>

#include "lowimpact/distribution.hpp"

namespace lowimpact {

/// Distinguished value for a divergence that is infinite (KL with support
/// mismatch). It is a result, not an error.
inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

inline bool is_unbounded(double value) { return value == kUnbounded; }

enum class CoarseNormKind { Linf, TotalVariation, L2, Softmax };

struct CoarseNorm {
  CoarseNormKind kind = CoarseNormKind::Linf;
  /// Temperature of the smoothed maximum.
  double tau = 0.01;
  bool operator==(const CoarseNorm&) const = default;
};

/// "linf", "tv", "l2", "softmax" or "softmax(<tau>)".
CoarseNorm parse_coarse_norm(std::string_view name);
std::string to_string(const CoarseNorm& norm);

/// Cellwise distance between P(V_w | X) and P(V_w | not X).
///
/// linf is the largest cell gap, tv half the l1 distance and l2 the
/// Euclidean distance. softmax is the Boltzmann-weighted mean of the cell
/// gaps over the joint support, which tends to linf as tau -> 0 and is zero
/// when the marginals agree.
double coarse_penalty(const VectorMarginal& x, const VectorMarginal& not_x, const CoarseNorm& norm);

enum class DivergenceKind {
  KlInactiveFromActive,  ///< D_KL(P_notX || P_X)
  KlActiveFromInactive,  ///< D_KL(P_X || P_notX)
  JensenShannon,
  Hellinger,
  TotalVariation,
  BregmanSquared,  ///< squared Euclidean distance between probability vectors
};

/// "kl", "kl-fwd", "js", "hellinger", "tv", "bregman".
DivergenceKind parse_divergence(std::string_view name);
std::string to_string(DivergenceKind kind);

/// Named divergence between the two marginals; kUnbounded when infinite.
/// Jensen-Shannon uses natural logarithms, so it lies in [0, ln 2].
double divergence_penalty(const VectorMarginal& x, const VectorMarginal& not_x, DivergenceKind kind);

}  // namespace lowimpact
