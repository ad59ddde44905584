#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lowimpact {

/// Base class for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enumeration would produce more trajectories than the configured cap.
class ExplosionGuard : public Error {
 public:
  using Error::Error;
};

/// Conditioning on an event that has probability zero.
class ZeroProbabilityEvent : public Error {
 public:
  using Error::Error;
};

/// A conditional agent reaches an information state that is impossible
/// under its assumption (e.g. it observes that the other agent is active).
class AssumptionViolated : public ZeroProbabilityEvent {
 public:
  AssumptionViolated(std::string agent, int time, int observation, const std::string& what)
      : ZeroProbabilityEvent(what), agent_(std::move(agent)), time_(time), observation_(observation) {}

  const std::string& agent() const { return agent_; }
  int time() const { return time_; }
  int observation() const { return observation_; }

 private:
  std::string agent_;
  int time_;
  int observation_;
};

class UnevaluableVariable : public Error {
 public:
  using Error::Error;
};

class SpecMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownKind : public Error {
 public:
  using Error::Error;
};

class EmptyUtilitySet : public Error {
 public:
  using Error::Error;
};

class UnboundedUtility : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line) : Error(what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// One violated invariant found while loading or validating a scenario.
struct Issue {
  std::string kind;
  std::string message;
  int line = -1;

  std::string to_string() const;
  bool operator==(const Issue&) const = default;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Issue> issues);
  const std::vector<Issue>& issues() const { return issues_; }

 private:
  std::vector<Issue> issues_;
};

class UnknownBuiltin : public Error {
 public:
  using Error::Error;
};

}  // namespace lowimpact
