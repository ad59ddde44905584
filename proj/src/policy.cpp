#include "lowimpact/policy.hpp"

#include <stdexcept>

namespace lowimpact {

namespace {
int digits_for(int actions) {
  int width = 1;
  for (int v = actions - 1; v >= 10; v /= 10) ++width;
  return width;
}
}  // namespace

Policy::Policy(int horizon, int observations, int actions, ActionId fill)
    : horizon_(horizon),
      observations_(observations),
      actions_(actions),
      table_(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(observations), fill) {
  if (horizon < 1 || observations < 1 || actions < 1) throw std::invalid_argument("empty policy shape");
  if (fill < 0 || fill >= actions) throw std::out_of_range("policy fill action out of range");
}

void Policy::set(int t, int observation, ActionId action) {
  if (t < 0 || t >= horizon_ || observation < 0 || observation >= observations_)
    throw std::out_of_range("policy entry out of range");
  if (action < 0 || action >= actions_) throw std::out_of_range("policy action out of range");
  table_[index(t, observation)] = action;
}

std::string Policy::id() const {
  const int width = digits_for(actions_);
  std::string out;
  out.reserve(table_.size() * static_cast<std::size_t>(width) + static_cast<std::size_t>(horizon_));
  for (int t = 0; t < horizon_; ++t) {
    if (t > 0) out.push_back('.');
    for (int o = 0; o < observations_; ++o) {
      std::string digits = std::to_string(at(t, o));
      out.append(static_cast<std::size_t>(width) - digits.size(), '0');
      out += digits;
    }
  }
  return out;
}

Policy Policy::from_id(std::string_view id, int horizon, int observations, int actions) {
  Policy policy(horizon, observations, actions, 0);
  const auto width = static_cast<std::size_t>(digits_for(actions));
  std::size_t pos = 0;
  for (int t = 0; t < horizon; ++t) {
    if (t > 0) {
      if (pos >= id.size() || id[pos] != '.') throw std::invalid_argument("malformed policy id");
      ++pos;
    }
    for (int o = 0; o < observations; ++o) {
      if (pos + width > id.size()) throw std::invalid_argument("policy id too short");
      int value = 0;
      for (std::size_t k = 0; k < width; ++k) {
        const char c = id[pos + k];
        if (c < '0' || c > '9') throw std::invalid_argument("malformed policy id");
        value = value * 10 + (c - '0');
      }
      policy.set(t, o, value);
      pos += width;
    }
  }
  if (pos != id.size()) throw std::invalid_argument("policy id too long");
  return policy;
}

}  // namespace lowimpact
