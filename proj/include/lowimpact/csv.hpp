#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "lowimpact/planner.hpp"

namespace lowimpact {

inline constexpr std::string_view kCsvHeader = "mu,policy_id,expected_u,penalty,objective,measure";

/// 12 significant digits; "inf" and "-inf" for infinities.
std::string format_number(double value);
double parse_number(std::string_view text);

void write_rows(std::ostream& out, const std::vector<SweepRow>& rows);
/// Parses a document written by write_rows; throws ParseError.
std::vector<SweepRow> read_rows(std::istream& in);

}  // namespace lowimpact
