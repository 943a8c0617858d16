#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "noisestab/config.hpp"
#include "noisestab/experiments.hpp"

namespace noisestab {

using Cell = std::variant<std::monostate, bool, std::uint64_t, double, std::string>;

/// Experiment-specific rows (sweep points, per-set fits, matrices). When
/// present they are the CSV payload; otherwise the comparisons are.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline constexpr const char* kViolationNote =
    "statistical or discretization artifact; increase samples/steps";

struct Report {
  std::string command;
  ConfigDocument config;  // fully resolved
  std::vector<ComparisonResult> results;
  std::optional<Table> table;
  std::vector<std::pair<std::string, Cell>> summary;
  std::optional<std::string> error;
  double runtime_seconds = 0.0;
  std::string timestamp;

  /// 0 when every verdict is holds or equality_band, 2 on any violation,
  /// 1 for an error report.
  int exit_code() const;

  /// With `volatile_fields` false, runtime_seconds and timestamp are left
  /// out; what remains is a pure function of the config and seed.
  std::string to_json(bool volatile_fields = true) const;
  /// One header row, floats with 17 significant digits.
  std::string to_csv() const;
};

int exit_code_for(const std::vector<Verdict>& verdicts);

/// Canonical string for a float, as used in CSV cells.
std::string format_double(double v);

}  // namespace noisestab
