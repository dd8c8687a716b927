#include "mploc/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mploc {

nlohmann::json CheckReport::to_json() const {
  nlohmann::json j{{"name", name},       {"lhs", lhs},
                   {"rhs", rhs},         {"lhs_se", lhs_se},
                   {"rhs_se", rhs_se},   {"tolerance", tolerance},
                   {"status", status},   {"seed", seed},
                   {"query", query}};
  if (!extra.is_null()) j["extra"] = extra;
  return j;
}

std::string judge_inequality(double lhs, double rhs, double combined_se, double rel_slack) {
  const double slack = rel_slack * std::max({std::abs(lhs), std::abs(rhs), 1.0});
  if (lhs <= rhs + 3.0 * combined_se + slack) return "pass";
  if (lhs <= rhs + 6.0 * combined_se + slack) return "inconclusive";
  return "violated";
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : ncols_(columns.size()) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) text_ += ',';
    text_ += columns[i];
  }
  text_ += '\n';
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != ncols_) throw std::invalid_argument("CsvWriter: column count mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) text_ += ',';
    const bool needs_quotes = cells[i].find_first_of(",\"\n") != std::string::npos;
    if (needs_quotes) {
      text_ += '"';
      for (char c : cells[i]) {
        if (c == '"') text_ += '"';
        text_ += c;
      }
      text_ += '"';
    } else {
      text_ += cells[i];
    }
  }
  text_ += '\n';
}

void CsvWriter::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text_;
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fnv1a_hex(const std::string& data) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(data)));
  return buf;
}

}  // namespace mploc
