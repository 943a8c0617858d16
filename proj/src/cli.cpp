#include "noisestab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "noisestab/j_functional.hpp"

namespace noisestab {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError(what + ": expected a nonnegative integer, got '" + s + "'");
  }
  return v;
}

std::vector<double> parse_taus(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw UsageError("--tau: bad item '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--tau: empty list");
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string joined(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out += (out.empty() ? "" : " ") + format_double(m(r, c));
  }
  return out;
}

Table sweep_table(const std::vector<SweepRow>& rows, bool grid) {
  Table t;
  const Eigen::Index k = rows.empty() ? 0 : rows.front().point.x.size();
  for (Eigen::Index i = 0; i < k; ++i) t.columns.push_back("x" + std::to_string(i + 1));
  if (grid) t.columns.push_back("rho");
  for (const char* c : {"max_eigenvalue", "se", "margin_se", "verdict"}) t.columns.emplace_back(c);
  for (const auto& r : rows) {
    std::vector<Cell> row;
    for (Eigen::Index i = 0; i < k; ++i) row.emplace_back(r.point.x(i));
    if (grid) row.emplace_back(r.point.m(0, 1));
    row.emplace_back(r.max_eigenvalue.value);
    row.emplace_back(r.max_eigenvalue.std_error);
    row.emplace_back(r.check.margin_se);
    row.emplace_back(std::string(verdict_name(r.check.verdict)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void print_summary(const Report& report, std::ostream& err) {
  for (const auto& r : report.results) {
    if (report.table && report.results.size() > 20 && r.verdict != Verdict::violated) continue;
    err << r.name;
    if (r.param) err << " [" << format_double(*r.param) << "]";
    err << ": " << format_double(r.lhs.value) << " +- " << format_double(r.lhs.std_error) << " <= "
        << format_double(r.rhs.value) << " +- " << format_double(r.rhs.std_error) << "  margin "
        << format_double(r.margin_se) << " SE  " << verdict_name(r.verdict);
    if (r.verdict == Verdict::violated) err << " (" << kViolationNote << ")";
    err << "\n";
  }
  if (report.table) err << report.table->rows.size() << " rows\n";
  for (const auto& [k, v] : report.summary) {
    err << k << ": ";
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, std::monostate>) {
            err << "-";
          } else if constexpr (std::is_same_v<T, bool>) {
            err << (x ? "true" : "false");
          } else if constexpr (std::is_same_v<T, double>) {
            err << format_double(x);
          } else {
            err << x;
          }
        },
        v);
    err << "\n";
  }
}

}  // namespace

Report run_experiment(const ExperimentConfig& cfg) {
  Report report;
  report.command = cfg.experiment;
  report.config = cfg.resolved;
  const std::string& e = cfg.experiment;
  if (e == "verify-main") {
    report.results.push_back(
        verify_main_inequality(cfg.sets, cfg.matrices.front().build(), cfg.samples, cfg.target_se, cfg.seed));
  } else if (e == "noise-stability") {
    report.results.push_back(
        verify_noise_stability(cfg.sets[0], cfg.sets[1], cfg.t, cfg.samples, cfg.target_se, cfg.seed));
  } else if (e == "exit-time") {
    report.results = verify_exit_dominance(cfg.sets[0], cfg.taus, cfg.steps, cfg.paths, cfg.samples, cfg.seed);
  } else if (e == "occupation") {
    report.results.push_back(
        verify_occupation(cfg.sets[0], cfg.sets[1], cfg.taus[0], cfg.steps, cfg.paths, cfg.samples, cfg.seed));
  } else if (e == "hessian-sweep") {
    const bool grid = cfg.sweep_random == 0;
    const auto points = grid ? k2_grid(cfg.sweep_x, cfg.sweep_rho)
                             : random_points(cfg.matrices.front().build(), cfg.sweep_random, cfg.seed);
    const auto rows = hessian_sweep(points, cfg.target_se, cfg.seed);
    for (const auto& r : rows) report.results.push_back(r.check);
    report.table = sweep_table(rows, grid);
  } else if (e == "equality-diagnostic") {
    const auto d = equality_diagnostic_run(cfg.sets, cfg.t, cfg.probes, cfg.samples, cfg.seed);
    Table t;
    t.columns = {"set", "residual", "direction_norm", "k_t", "offset", "used_probes", "min_cosine", "direction"};
    for (std::size_t i = 0; i < cfg.sets.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      t.rows.push_back({cfg.set_names[i], d.residual[i], d.direction[i].norm(), d.k_t, d.offset[i],
                        d.used_probes[i], d.cosines.row(ii).minCoeff(), joined(d.direction[i].transpose())});
    }
    report.table = std::move(t);
    report.summary = {{"t", d.t},
                      {"k_t", d.k_t},
                      {"consistent_with_parallel_halfspaces", d.consistent_with_parallel_halfspaces()}};
  } else if (e == "condition-check") {
    Table t;
    t.columns = {"name", "k", "entrywise_nonnegative", "inverse_offdiag_nonpositive", "min_eigenvalue", "entries"};
    std::uint64_t both = 0, entrywise_only = 0, inverse_only = 0;
    for (const auto& spec : cfg.matrices) {
      const auto row = condition_check(spec.name, spec.build());
      const bool inv = row.inverse_offdiag_nonpositive.value_or(false);
      both += row.entrywise_nonnegative && inv;
      entrywise_only += row.entrywise_nonnegative && row.inverse_offdiag_nonpositive && !inv;
      inverse_only += !row.entrywise_nonnegative && inv;
      t.rows.push_back({row.name, static_cast<std::uint64_t>(row.m.rows()), row.entrywise_nonnegative,
                        row.inverse_offdiag_nonpositive ? Cell(*row.inverse_offdiag_nonpositive) : Cell(),
                        row.min_eigenvalue, joined(row.m)});
    }
    report.table = std::move(t);
    report.summary = {{"both_conditions", both},
                      {"entrywise_only", entrywise_only},
                      {"inverse_only", inverse_only}};
  }
  return report;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            std::optional<std::string> env_seed) {
  CLI::App app{"Numerical checks of multivariate Gaussian noise stability", "noisestab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NOISESTAB_VERSION);

  std::string config_path, out_path, format = "json", tau;
  std::optional<std::uint64_t> seed, samples, paths, steps;
  bool quiet = false;
  const std::pair<std::string_view, const char*> descriptions[] = {
      {"verify-main", "joint containment against J at the sets' measures"},
      {"noise-stability", "two sets at OU times 0 and t"},
      {"exit-time", "exit-time survival against the matched half-space"},
      {"occupation", "occupation functional against matched half-spaces"},
      {"hessian-sweep", "largest eigenvalue of M o H_J over a grid or random points"},
      {"equality-diagnostic", "linearity of quantile(P_t 1_A) over a probe cloud"},
      {"condition-check", "entrywise versus inverse-sign conditions on M"}};
  for (const auto& [name, description] : descriptions) {
    auto* sub = app.add_subcommand(std::string(name), description);
    sub->add_option("--config", config_path, "config file");
    sub->add_option("--seed", seed, "base seed (overrides config and NOISESTAB_SEED)");
    sub->add_option("--samples", samples, "Monte Carlo samples");
    sub->add_option("--paths", paths, "OU paths");
    sub->add_option("--steps", steps, "time steps per path");
    sub->add_option("--tau", tau, "comma-separated horizons");
    sub->add_option("--out", out_path, "report file (default: stdout)");
    sub->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--quiet", quiet, "no summary on stderr");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << NOISESTAB_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  Report report;
  report.command = command;
  const auto start = std::chrono::steady_clock::now();
  try {
    ConfigDocument doc = config_path.empty() ? ConfigDocument::parse("", "<no config>")
                                             : ConfigDocument::load(config_path);
    report.config = doc;
    ConfigOverrides o;
    o.seed = seed;
    o.samples = samples;
    o.paths = paths;
    o.steps = steps;
    if (!tau.empty()) o.taus = parse_taus(tau);
    if (env_seed && !env_seed->empty()) o.default_seed = parse_u64(*env_seed, "NOISESTAB_SEED");
    const ExperimentConfig cfg = resolve_config(doc, command, o);
    report.config = cfg.resolved;
    report = run_experiment(cfg);
  } catch (const std::exception& e) {
    const bool hypothesis = dynamic_cast<const HypothesisError*>(&e) != nullptr;
    report.error = std::string(hypothesis ? "hypothesis not met: " : "") + e.what();
    report.results.clear();
    report.table.reset();
  }
  report.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.timestamp = utc_timestamp();

  const std::string text = format == "csv" ? report.to_csv() : report.to_json();
  if (report.error) {
    err << "error: " << *report.error << "\n";
    if (!out_path.empty()) {
      std::ofstream(out_path) << text;
    } else {
      out << text;
    }
    return 1;
  }
  if (!out_path.empty()) {
    std::ofstream file(out_path);
    file << text;
    if (!file) {
      err << "error: cannot write " << out_path << "\n";
      return 1;
    }
  } else {
    out << text;
  }
  if (!quiet) print_summary(report, err);
  return report.exit_code();
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const char* env = std::getenv("NOISESTAB_SEED");
  return run_cli(args, std::cout, std::cerr, env ? std::optional<std::string>(env) : std::nullopt);
}

}  // namespace noisestab
