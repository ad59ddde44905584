#include "lowimpact/conditioning.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace lowimpact {

namespace {

EventPredicate message_event(const WorldModel& model, const MessageChannel& channel, int message) {
  const int c = channel.component;
  const int t = channel.time < 0 ? model.horizon + 1 + channel.time : channel.time;
  std::vector<int> values;
  for (StateId s = 0; s < model.state_count(); ++s) values.push_back(model.value(s, c));
  return {channel.name + "=" + std::to_string(message),
          [values = std::move(values), t, message](const Trajectory& tr) {
            return values[static_cast<std::size_t>(tr.state(t))] == message;
          }};
}

/// Messages with positive probability under `dist`, restricted to the
/// channel alphabet when one is declared.
std::vector<int> messages(const WorldModel& model, const MessageChannel& channel, const TrajectoryDistribution& dist) {
  const int t = channel.time < 0 ? model.horizon + 1 + channel.time : channel.time;
  std::set<int> seen;
  for (const auto& e : dist.entries()) seen.insert(model.value(e.trajectory.state(t), channel.component));
  std::vector<int> out;
  for (int m : seen)
    if (channel.alphabet.empty() || std::find(channel.alphabet.begin(), channel.alphabet.end(), m) !=
                                        channel.alphabet.end())
      out.push_back(m);
  return out;
}

constexpr double kInfeasible = std::numeric_limits<double>::infinity();

}  // namespace

std::string Conditioning::tag() const {
  switch (kind) {
    case Kind::None:
      return "none";
    case Kind::Output:
      return "output:" + channel.name;
    case Kind::Announce:
      return "announce:" + announcement.event.name;
  }
  return "?";
}

std::string_view unsafe_output_warning() {
  return "penalty is conditioned on the output channel: it measures impact other than through the message, "
         "and says nothing about whether acting on the message is safe";
}

PenaltyEvaluator::PenaltyEvaluator(const WorldModel& model, const PolicyProfile& profile, int agent,
                                   PenaltyConfig config, Conditioning conditioning, ActivationAssignment base,
                                   Execution exec, const TrajectoryDistribution* inactive)
    : model_(model),
      agent_(agent),
      config_(std::move(config)),
      conditioning_(std::move(conditioning)),
      exec_(exec),
      given_x_(with_activation(model, base, agent, Activation::Active)),
      given_nx_(with_activation(model, base, agent, Activation::Inactive)),
      inactive_(inactive ? *inactive : propagate(model, profile, given_nx_)) {
  switch (conditioning_.kind) {
    case Conditioning::Kind::None:
      inactive_side_ = make_side(inactive_);
      if (std::holds_alternative<DetectMeasure>(config_.measure))
        inactive_likelihood_ = std::make_shared<const ForwardLikelihood>(model, profile, given_nx_);
      break;
    case Conditioning::Kind::Announce:
      inactive_side_ = make_side(condition(inactive_, conditioning_.announcement.event));
      break;
    case Conditioning::Kind::Output:
      for (int m : messages(model, conditioning_.channel, inactive_))
        inactive_by_message_.emplace(m, make_side(condition(inactive_, message_event(model, conditioning_.channel, m))));
      break;
  }
}

VariableSpec PenaltyEvaluator::spec() const {
  if (const auto* c = std::get_if<CoarseMeasure>(&config_.measure)) return c->variables;
  const auto& d = std::get<DivergenceMeasure>(config_.measure);
  VariableSpec vars = d.variables;
  if (d.include_activation) vars.variables.push_back(activation_variable(model_, agent_));
  return vars;
}

PenaltyEvaluator::Side PenaltyEvaluator::make_side(TrajectoryDistribution dist) const {
  Side side{std::move(dist), std::nullopt};
  if (std::holds_alternative<CoarseMeasure>(config_.measure) ||
      std::holds_alternative<DivergenceMeasure>(config_.measure))
    side.marginal = marginalize(side.dist, spec());
  return side;
}

double PenaltyEvaluator::measure(const Side& x, const Side& not_x) const {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, CoarseMeasure>) {
          return coarse_penalty(*x.marginal, *not_x.marginal, m.norm);
        } else if constexpr (std::is_same_v<M, DivergenceMeasure>) {
          return divergence_penalty(*x.marginal, *not_x.marginal, m.kind);
        } else if constexpr (std::is_same_v<M, ImportanceMeasure>) {
          return importance_penalty(x.dist, not_x.dist, m.utilities, m.facts);
        } else {
          return detectability(model_, x.dist, not_x.dist, m.config, exec_).penalty;
        }
      },
      config_.measure);
}

PenaltyEvaluation PenaltyEvaluator::evaluate(const PolicyProfile& profile) const {
  return evaluate(profile, propagate(model_, profile, given_x_));
}

PenaltyEvaluation PenaltyEvaluator::evaluate(const PolicyProfile& profile, TrajectoryDistribution active) const {
  PenaltyEvaluation out;
  out.active = std::move(active);
  const auto* detect = std::get_if<DetectMeasure>(&config_.measure);

  switch (conditioning_.kind) {
    case Conditioning::Kind::None: {
      if (detect) {
        // Forward route: futures by simulation, exact slice likelihoods.
        const auto& cfg = detect->config;
        validate(cfg);
        const auto visible = visible_slice(model_, cfg.slice);
        if (visible.empty()) {
          out.detection = DetectionResult{};
        } else {
          const auto futures = slice_futures(model_, sample(model_, profile, given_x_, cfg.samples, cfg.seed), visible);
          const ForwardLikelihood active(model_, profile, given_x_);
          out.detection = estimate_detectability(futures, visible, active, *inactive_likelihood_, cfg, exec_);
        }
        out.penalty = out.detection->penalty;
      } else {
        out.penalty = measure(make_side(out.active), *inactive_side_);
      }
      break;
    }
    case Conditioning::Kind::Announce: {
      if (!(out.active.probability(conditioning_.announcement.event) > 0.0)) {
        out.infeasible = true;
        out.penalty = kInfeasible;
        break;
      }
      const auto x = make_side(condition(out.active, conditioning_.announcement.event));
      if (detect) {
        out.detection = detectability(model_, x.dist, inactive_side_->dist, detect->config, exec_);
        out.penalty = out.detection->penalty;
      } else {
        out.penalty = measure(x, *inactive_side_);
      }
      break;
    }
    case Conditioning::Kind::Output: {
      // Worst case over the messages the policy can emit.
      double worst = 0.0;
      for (int m : messages(model_, conditioning_.channel, out.active)) {
        const auto it = inactive_by_message_.find(m);
        if (it == inactive_by_message_.end()) {
          out.infeasible = true;
          worst = kInfeasible;
          break;
        }
        const auto x = make_side(condition(out.active, message_event(model_, conditioning_.channel, m)));
        worst = std::max(worst, measure(x, it->second));
      }
      out.penalty = worst;
      break;
    }
  }
  return out;
}

double conditioned_penalty(const WorldModel& model, const PolicyProfile& profile, int agent,
                           const PenaltyConfig& config, const Conditioning& conditioning,
                           const ActivationAssignment& base) {
  const PenaltyEvaluator evaluator(model, profile, agent, config, conditioning, base);
  const auto result = evaluator.evaluate(profile);
  if (result.infeasible)
    throw ZeroProbabilityEvent("conditioning event '" + conditioning.tag() +
                               "' has probability zero when the agent is active");
  return result.penalty;
}

double announcement_probability(const WorldModel& model, const AnnouncementEvent& event, int agent) {
  return propagate(model, null_profile(model), with_activation(model, {}, agent, Activation::Inactive))
      .probability(event.event);
}

PumpReport probability_pump_report(const WorldModel& model, const PolicyProfile& profile, int agent,
                                   const AnnouncementEvent& event) {
  PumpReport report;
  report.p_given_active =
      propagate(model, profile, with_activation(model, {}, agent, Activation::Active)).probability(event.event);
  report.p_given_inactive =
      propagate(model, profile, with_activation(model, {}, agent, Activation::Inactive)).probability(event.event);
  report.ratio = report.p_given_inactive > 0.0 ? report.p_given_active / report.p_given_inactive
                                               : std::numeric_limits<double>::infinity();
  return report;
}

}  // namespace lowimpact
