#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lowimpact/measures_info.hpp"
#include "lowimpact/measures_state.hpp"

namespace lowimpact {

// -- penalty configuration --------------------------------------------------

struct CoarseMeasure {
  VariableSpec variables;
  CoarseNorm norm;
};

struct DivergenceMeasure {
  VariableSpec variables;
  DivergenceKind kind = DivergenceKind::TotalVariation;
  /// Adds the subject agent's activation flag to the outcome space.
  bool include_activation = false;
};

struct ImportanceMeasure {
  UtilitySet utilities;
  FactSet facts;
};

struct DetectMeasure {
  DetectionConfig config;
};

/// Which penalty R to compute, with its parameters.
struct PenaltyConfig {
  /// Label written to reports, e.g. "coarse:linf".
  std::string label;
  std::variant<CoarseMeasure, DivergenceMeasure, ImportanceMeasure, DetectMeasure> measure;
};

// -- conditioning events ----------------------------------------------------

/// The agent's output: a state component read at one timestep.
struct MessageChannel {
  std::string name;
  int component = 0;
  int time = -1;
  /// Message symbols; empty means every value the component takes.
  std::vector<int> alphabet;
};

struct AnnouncementEvent {
  EventPredicate event;
  /// Smallest acceptable P(A | not X).
  double floor = 1e-3;
};

struct Conditioning {
  enum class Kind { None, Output, Announce };
  Kind kind = Kind::None;
  MessageChannel channel;
  AnnouncementEvent announcement;

  /// "none", "output:<channel>" or "announce:<name>".
  std::string tag() const;
};

/// Shown whenever penalties are conditioned on the output channel.
std::string_view unsafe_output_warning();

// -- evaluation -------------------------------------------------------------

struct PenaltyEvaluation {
  /// P(. | X) for the evaluated profile, unconditioned on O or A.
  TrajectoryDistribution active;
  double penalty = 0.0;
  /// Set when the measure was detectability.
  std::optional<DetectionResult> detection;
  /// The conditioning event had probability zero under the active branch.
  bool infeasible = false;
};

/// Evaluates one measure for many policies of a single subject agent.
///
/// The not-X side does not depend on the subject's policy, so its
/// distribution, conditioned variants and marginals are computed once in the
/// constructor. Afterwards evaluate() only reads shared state and may be
/// called concurrently. The model must outlive the evaluator.
class PenaltyEvaluator {
 public:
  /// `profile` supplies the other agents' behaviour; the subject's slot is
  /// ignored. `base` fixes the other agents' activation (Either when empty).
  /// A precomputed P(. | not X) may be passed in to share it across
  /// measures.
  PenaltyEvaluator(const WorldModel& model, const PolicyProfile& profile, int agent, PenaltyConfig config,
                   Conditioning conditioning = {}, ActivationAssignment base = {},
                   Execution exec = Execution::Parallel, const TrajectoryDistribution* inactive = nullptr);

  /// Penalty for `profile` (whose subject slot is the policy under test).
  /// An active branch that cannot satisfy the conditioning event is reported
  /// as infeasible with an unbounded penalty.
  PenaltyEvaluation evaluate(const PolicyProfile& profile) const;
  /// Same, reusing an already propagated P(. | X) for `profile`.
  PenaltyEvaluation evaluate(const PolicyProfile& profile, TrajectoryDistribution active) const;

  const PenaltyConfig& config() const { return config_; }
  const Conditioning& conditioning() const { return conditioning_; }
  const ActivationAssignment& active_assignment() const { return given_x_; }
  const TrajectoryDistribution& inactive() const { return inactive_; }

 private:
  struct Side {
    TrajectoryDistribution dist;
    std::optional<VectorMarginal> marginal;
  };

  Side make_side(TrajectoryDistribution dist) const;
  double measure(const Side& x, const Side& not_x) const;
  VariableSpec spec() const;

  const WorldModel& model_;
  int agent_;
  PenaltyConfig config_;
  Conditioning conditioning_;
  Execution exec_;
  ActivationAssignment given_x_;
  ActivationAssignment given_nx_;
  TrajectoryDistribution inactive_;
  /// Unconditioned, or conditioned on A.
  std::optional<Side> inactive_side_;
  /// Conditioned on each message with positive probability under not X.
  std::map<int, Side> inactive_by_message_;
  std::shared_ptr<const ForwardLikelihood> inactive_likelihood_;
};

/// R computed on P(. | X, E) against P(. | not X, E); throws
/// ZeroProbabilityEvent when E is impossible in either branch.
double conditioned_penalty(const WorldModel& model, const PolicyProfile& profile, int agent,
                           const PenaltyConfig& config, const Conditioning& conditioning,
                           const ActivationAssignment& base = {});

/// Exact P(A | not X) when the agent is replaced by its baseline.
double announcement_probability(const WorldModel& model, const AnnouncementEvent& event, int agent = 0);

struct PumpReport {
  double p_given_active = 0.0;
  double p_given_inactive = 0.0;
  /// p_given_active / p_given_inactive (infinite when the latter is 0).
  double ratio = 0.0;
};

PumpReport probability_pump_report(const WorldModel& model, const PolicyProfile& profile, int agent,
                                   const AnnouncementEvent& event);

}  // namespace lowimpact
