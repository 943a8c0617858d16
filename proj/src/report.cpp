#include "noisestab/report.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace noisestab {

namespace {

using Json = nlohmann::ordered_json;

Json cell_json(const Cell& c) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, double>) {
          return std::isfinite(v) ? Json(v) : Json(format_double(v));
        } else {
          return v;
        }
      },
      c);
}

std::string cell_csv(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else {
          if (v.find_first_of(",\"\n") == std::string::npos) return v;
          std::string out = "\"";
          for (char ch : v) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
          return out + "\"";
        }
      },
      c);
}

Json estimate_json(const Estimate& e) {
  return Json{{"value", cell_json(e.value)}, {"se", cell_json(e.std_error)}, {"samples", e.samples}, {"seed", e.seed}};
}

Json config_json(const ConfigDocument& doc) {
  Json out = Json::object();
  for (const auto& e : doc.top().entries) out[e.key] = e.value;
  for (std::size_t s = 1; s < doc.sections().size(); ++s) {
    Json section = Json::object();
    for (const auto& e : doc.sections()[s].entries) section[e.key] = e.value;
    out["[" + doc.sections()[s].name + "]"] = std::move(section);
  }
  return out;
}

const std::vector<std::string> kComparisonColumns = {
    "name", "param", "lhs", "lhs_se", "lhs_samples", "lhs_seed", "rhs", "rhs_se", "rhs_samples",
    "rhs_seed", "difference_se", "margin_se", "verdict"};

std::vector<Cell> comparison_row(const ComparisonResult& r) {
  return {r.name,
          r.param ? Cell(*r.param) : Cell(),
          r.lhs.value,
          r.lhs.std_error,
          r.lhs.samples,
          r.lhs.seed,
          r.rhs.value,
          r.rhs.std_error,
          r.rhs.samples,
          r.rhs.seed,
          r.difference_se,
          r.margin_se,
          std::string(verdict_name(r.verdict))};
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int exit_code_for(const std::vector<Verdict>& verdicts) {
  for (Verdict v : verdicts) {
    if (v == Verdict::violated) return 2;
  }
  return 0;
}

int Report::exit_code() const {
  if (error) return 1;
  std::vector<Verdict> verdicts;
  for (const auto& r : results) verdicts.push_back(r.verdict);
  return exit_code_for(verdicts);
}

std::string Report::to_json(bool volatile_fields) const {
  Json j;
  j["command"] = command;
  j["config"] = config_json(config);
  j["config_text"] = config.emit();
  if (error) j["error"] = *error;
  Json results_json = Json::array();
  for (const auto& r : results) {
    Json item;
    item["name"] = r.name;
    if (r.param) item["param"] = *r.param;
    item["lhs"] = estimate_json(r.lhs);
    item["rhs"] = estimate_json(r.rhs);
    item["difference_se"] = cell_json(r.difference_se);
    item["margin_se"] = cell_json(r.margin_se);
    item["verdict"] = verdict_name(r.verdict);
    if (r.verdict == Verdict::violated) item["note"] = kViolationNote;
    results_json.push_back(std::move(item));
  }
  j["results"] = std::move(results_json);
  if (table) {
    j["columns"] = table->columns;
    Json rows = Json::array();
    for (const auto& row : table->rows) {
      Json r = Json::array();
      for (const auto& c : row) r.push_back(cell_json(c));
      rows.push_back(std::move(r));
    }
    j["rows"] = std::move(rows);
  }
  if (!summary.empty()) {
    Json s = Json::object();
    for (const auto& [k, v] : summary) s[k] = cell_json(v);
    j["summary"] = std::move(s);
  }
  j["exit_code"] = exit_code();
  j["library_version"] = NOISESTAB_VERSION;
  if (volatile_fields) {
    j["runtime_seconds"] = runtime_seconds;
    j["timestamp"] = timestamp;
  }
  return j.dump(2) + "\n";
}

std::string Report::to_csv() const {
  auto line = [](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    return out + "\n";
  };
  if (error) return line({"error"}) + line({cell_csv(*error)});
  std::string out;
  if (table) {
    out += line(table->columns);
    for (const auto& row : table->rows) {
      std::vector<std::string> cells;
      for (const auto& c : row) cells.push_back(cell_csv(c));
      out += line(cells);
    }
    return out;
  }
  out += line(kComparisonColumns);
  for (const auto& r : results) {
    std::vector<std::string> cells;
    for (const auto& c : comparison_row(r)) cells.push_back(cell_csv(c));
    out += line(cells);
  }
  return out;
}

}  // namespace noisestab
