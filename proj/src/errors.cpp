#include "lowimpact/errors.hpp"

namespace lowimpact {

std::string Issue::to_string() const {
  std::string out;
  if (line >= 0) out += "line " + std::to_string(line) + ": ";
  out += kind + ": " + message;
  return out;
}

namespace {
std::string join_issues(const std::vector<Issue>& issues) {
  std::string out = "validation failed";
  for (const auto& issue : issues) out += "\n  " + issue.to_string();
  return out;
}
}  // namespace

ValidationError::ValidationError(std::vector<Issue> issues)
    : Error(join_issues(issues)), issues_(std::move(issues)) {}

}  // namespace lowimpact
