#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lowimpact {

using ActionId = int;

/// Deterministic reactive policy: (timestep, observation symbol) -> action.
class Policy {
 public:
  Policy() = default;
  Policy(int horizon, int observations, int actions, ActionId fill);

  ActionId at(int t, int observation) const { return table_[index(t, observation)]; }
  void set(int t, int observation, ActionId action);

  int horizon() const { return horizon_; }
  int observations() const { return observations_; }
  int actions() const { return actions_; }

  /// Canonical serialization, also used as the policy's identifier. One
  /// '.'-separated group per timestep; each group concatenates the actions
  /// for every observation symbol as fixed-width decimal indices, so string
  /// order agrees with table order.
  std::string id() const;
  static Policy from_id(std::string_view id, int horizon, int observations, int actions);

  auto operator<=>(const Policy&) const = default;

 private:
  std::size_t index(int t, int observation) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(observations_) +
           static_cast<std::size_t>(observation);
  }

  int horizon_ = 0;
  int observations_ = 0;
  int actions_ = 0;
  std::vector<ActionId> table_;
};

/// Per-agent behaviour when active. An empty slot means the agent keeps
/// following its baseline process even when its activation event fires.
using PolicyProfile = std::vector<std::optional<Policy>>;

}  // namespace lowimpact
