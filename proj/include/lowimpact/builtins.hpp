#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lowimpact/scenario.hpp"

namespace lowimpact {

/// paperclip-grid, election-breakfast, message-channel, stock-advisor,
/// asteroid-laser.
std::vector<std::string> builtin_names();
/// Throws UnknownBuiltin.
Scenario builtin(std::string_view name);

/// Factory that makes clips. It can also seize the grid, which makes the
/// most clips and wrecks everything else.
Scenario make_paperclip_grid();

/// A breakfast choice nudges a close vote by half a percent.
Scenario make_election_breakfast();

/// One message from a sixteen-symbol alphabet; message 7 is the cure.
Scenario make_message_channel();

/// Advisor picks one of `stocks` stocks; the best one is stocks / 3.
Scenario make_stock_advisor(int stocks = 1000);

struct AsteroidOptions {
  /// Each robot observes whether the other has deployed.
  bool mutual_observation = false;
  /// Lists bob before alice in the agent table.
  bool swap_agents = false;
  double alice_epsilon = kDefaultEpsilon;
  double bob_epsilon = kDefaultEpsilon;
};

/// Two robots each supply one coordinate of a laser shot. The shot
/// deflects the asteroid only when both coordinates are right.
Scenario make_asteroid_laser(const AsteroidOptions& options = {});

inline constexpr int kAsteroidX = 2;
inline constexpr int kAsteroidY = 1;

}  // namespace lowimpact
