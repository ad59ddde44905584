#include "lowimpact/csv.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace lowimpact {

namespace {

std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_record(const std::string& line, int line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError("unterminated quote", line_no);
  out.push_back(std::move(cur));
  return out;
}

}  // namespace

std::string format_number(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

double parse_number(std::string_view text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  std::istringstream in{std::string(text)};
  in.imbue(std::locale::classic());
  double v = 0.0;
  if (!(in >> v) || !in.eof()) throw ParseError("not a number: '" + std::string(text) + "'", -1);
  return v;
}

void write_rows(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows)
    out << format_number(r.mu) << ',' << field(r.policy_id) << ',' << format_number(r.expected_u) << ','
        << format_number(r.penalty) << ',' << format_number(r.objective) << ',' << field(r.measure) << '\n';
}

std::vector<SweepRow> read_rows(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw ParseError("missing CSV header", 1);
  std::vector<SweepRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_record(line, line_no);
    if (f.size() != 6) throw ParseError("expected 6 fields", line_no);
    try {
      rows.push_back({parse_number(f[0]), f[1], parse_number(f[2]), parse_number(f[3]), parse_number(f[4]), f[5]});
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return rows;
}

}  // namespace lowimpact
