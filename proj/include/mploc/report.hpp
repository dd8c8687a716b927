#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

// Check reports, CSV helpers, and content hashing for run manifests.

namespace mploc {

// Outcome of a single inequality / identity check. `status` is one of
// "pass", "violated", "inconclusive"; MC checks that cannot separate the
// two sides at their confidence level report inconclusive rather than
// failure.
struct CheckReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  double tolerance = 0.0;
  std::string status = "pass";
  std::uint64_t seed = 0;
  std::string query;  // free-form description of the probed quantities
  nlohmann::json extra;

  bool passed() const { return status == "pass"; }
  nlohmann::json to_json() const;
};

// Resolves pass/violated/inconclusive for an MC bound lhs <= rhs given
// the combined standard error of the comparison.
std::string judge_inequality(double lhs, double rhs, double combined_se,
                             double rel_slack = 1e-12);

// Deterministic text formatting: %.17g round-trips doubles exactly.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);
  void add_row(const std::vector<std::string>& cells);
  const std::string& text() const { return text_; }
  void write(const std::string& path) const;

 private:
  std::size_t ncols_;
  std::string text_;
};

std::uint64_t fnv1a(const std::string& data);
std::string fnv1a_hex(const std::string& data);

}  // namespace mploc
