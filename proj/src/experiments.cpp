#include "noisestab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include "noisestab/gaussian.hpp"
#include "noisestab/j_functional.hpp"
#include "noisestab/ou.hpp"
#include "noisestab/random.hpp"

namespace noisestab {

namespace {

constexpr std::uint64_t kShards = 64;
// Sub-seed streams; any two estimates in one experiment use different streams.
constexpr std::uint64_t kLhsStream = 0x6c68730000000000ULL;
constexpr std::uint64_t kMeasureStream = 0x6d65617300000000ULL;
constexpr std::uint64_t kJStream = 0x6a76616c00000000ULL;
constexpr std::uint64_t kProbeStream = 0x70726f6200000000ULL;
constexpr std::uint64_t kSemigroupStream = 0x73656d6900000000ULL;
constexpr std::uint64_t kRandomStream = 0x72616e6400000000ULL;

std::string format_real(double v) {
  if (v == HUGE_VAL) return "inf";
  if (v == -HUGE_VAL) return "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_real(v[i]);
  return out;
}

void require_same_dimension(const std::vector<SetExpr>& sets, const char* who) {
  if (sets.empty()) throw std::invalid_argument(std::string(who) + ": no sets");
  for (const auto& s : sets) {
    if (s.dimension() != sets.front().dimension()) {
      throw std::invalid_argument(std::string(who) + ": sets live in different dimensions");
    }
  }
}

void require_nonnegative(const CorrelationMatrix& m) {
  for (Eigen::Index i = 0; i < m.dim(); ++i) {
    for (Eigen::Index j = 0; j < m.dim(); ++j) {
      if (m(i, j) < 0.0) {
        throw HypothesisError("correlation matrix entry m_" + std::to_string(i + 1) + std::to_string(j + 1) +
                              " = " + format_real(m(i, j)) +
                              " is negative; the inequality is only claimed for entrywise nonnegative M");
      }
    }
  }
}

Eigen::VectorXd first_axis(Eigen::Index n) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  e(0) = 1.0;
  return e;
}

// Matched parallel half-spaces {y_1 <= quantile(gamma(A_i))}.
std::vector<SetExpr> matched_halfspaces(const std::vector<Estimate>& measures, Eigen::Index n) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(measures.size()));
  for (std::size_t i = 0; i < measures.size(); ++i) p(static_cast<Eigen::Index>(i)) = measures[i].value;
  std::vector<SetExpr> out;
  for (auto& h : parallel_halfspaces(p, first_axis(n))) out.emplace_back(std::move(h));
  return out;
}

}  // namespace

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::holds:
      return "holds";
    case Verdict::equality_band:
      return "equality_band";
    case Verdict::violated:
      return "violated";
  }
  return "unknown";
}

Verdict classify(double margin_se) {
  if (margin_se < -kBandWidth) return Verdict::violated;
  if (margin_se <= kBandWidth) return Verdict::equality_band;
  return Verdict::holds;
}

ComparisonResult compare(std::string name, const Estimate& lhs, const Estimate& rhs,
                         std::optional<double> paired_se, std::optional<double> param) {
  ComparisonResult r;
  r.name = std::move(name);
  r.param = param;
  r.lhs = lhs;
  r.rhs = rhs;
  r.difference_se = paired_se ? *paired_se : combined_se(lhs, rhs);
  r.margin_se = (rhs.value - lhs.value) / std::max(r.difference_se, kBandFloor / kBandWidth);
  r.verdict = classify(r.margin_se);
  return r;
}

Estimate joint_containment(const std::vector<SetExpr>& sets, const CorrelationMatrix& m,
                           std::uint64_t samples, std::uint64_t seed) {
  require_same_dimension(sets, "joint_containment");
  if (static_cast<Eigen::Index>(sets.size()) != m.dim()) {
    throw std::invalid_argument("joint_containment: number of sets and matrix size disagree");
  }
  if (samples < 1) throw std::invalid_argument("joint_containment: samples must be >= 1");
  const Eigen::Index n = sets.front().dimension();
  const std::uint64_t shards = std::min(kShards, samples);
  std::vector<std::uint64_t> hits(shards, 0);
  for_each_shard(shards, [&](std::uint64_t s) {
    KroneckerSampler sampler(m, n);
    Rng rng(derive_seed(seed, s));
    Eigen::MatrixXd draw;
    const std::uint64_t count = samples / shards + (s < samples % shards ? 1 : 0);
    std::uint64_t h = 0;
    for (std::uint64_t j = 0; j < count; ++j) {
      sampler.draw(rng, draw);
      bool inside = true;
      for (std::size_t i = 0; i < sets.size() && inside; ++i) {
        inside = sets[i].contains(draw.row(static_cast<Eigen::Index>(i)).transpose());
      }
      h += inside ? 1 : 0;
    }
    hits[s] = h;
  });
  return Estimate::binomial(std::accumulate(hits.begin(), hits.end(), std::uint64_t{0}), samples, seed);
}

std::vector<Estimate> set_measures(const std::vector<SetExpr>& sets, std::uint64_t samples,
                                   std::uint64_t seed) {
  std::vector<Estimate> out;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    out.push_back(gaussian_measure(sets[i], samples, derive_seed(seed, kMeasureStream + i)));
  }
  return out;
}

Estimate j_at_measures(const std::vector<Estimate>& measures, const CorrelationMatrix& m,
                       double target_se, std::uint64_t seed) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(measures.size()));
  for (std::size_t i = 0; i < measures.size(); ++i) {
    x(static_cast<Eigen::Index>(i)) = std::clamp(measures[i].value, 0.0, 1.0);
  }
  const JQuery q(x, m);
  Estimate j = j_value(q, target_se, derive_seed(seed, kJStream));
  double var = j.std_error * j.std_error;
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const double se = measures[i].std_error;
    if (se == 0.0) continue;
    const auto ii = static_cast<Eigen::Index>(i);
    // dJ/dx_i is a probability, so 1 bounds it wherever the closed form is
    // unavailable (boundary x, singular M).
    double slope = 1.0;
    if (x(ii) >= kInteriorMin && x(ii) <= 1.0 - kInteriorMin && m.strictly_positive_definite()) {
      slope = j_grad(q, ii, 1e-5, derive_seed(seed, kJStream + 1 + i)).value;
    }
    var += slope * slope * se * se;
  }
  j.std_error = std::sqrt(var);
  return j;
}

ComparisonResult verify_main_inequality(const std::vector<SetExpr>& sets, const CorrelationMatrix& m,
                                        std::uint64_t samples, double target_se, std::uint64_t seed) {
  require_same_dimension(sets, "verify_main_inequality");
  require_nonnegative(m);
  const Estimate lhs = joint_containment(sets, m, samples, derive_seed(seed, kLhsStream));
  const Estimate rhs = j_at_measures(set_measures(sets, samples, seed), m, target_se, seed);
  return compare("joint containment", lhs, rhs);
}

ComparisonResult verify_noise_stability(const SetExpr& a1, const SetExpr& a2, double t,
                                        std::uint64_t samples, double target_se, std::uint64_t seed) {
  if (!(t > 0.0)) throw std::domain_error("verify_noise_stability: t must be positive");
  auto r = verify_main_inequality({a1, a2}, CorrelationMatrix::bivariate(std::exp(-t)), samples, target_se, seed);
  r.name = "noise stability";
  r.param = t;
  return r;
}

std::vector<ComparisonResult> verify_exit_dominance(const SetExpr& a, const std::vector<double>& taus,
                                                    std::uint64_t steps, std::uint64_t paths,
                                                    std::uint64_t samples, std::uint64_t seed) {
  const auto b = matched_halfspaces(set_measures({a}, samples, seed), a.dimension()).front();
  std::vector<ComparisonResult> out;
  for (double tau : taus) {
    const PairedExit e = exit_survival_paired(a, b, tau, steps, paths, seed);
    out.push_back(compare("exit survival", e.a.survival, e.b.survival, e.difference_se, tau));
  }
  return out;
}

ComparisonResult verify_occupation(const SetExpr& a1, const SetExpr& a2, double tau, std::uint64_t steps,
                                   std::uint64_t paths, std::uint64_t samples, std::uint64_t seed) {
  require_same_dimension({a1, a2}, "verify_occupation");
  const auto b = matched_halfspaces(set_measures({a1, a2}, samples, seed), a1.dimension());
  const PairedOccupation o = occupation_paired(a1, a2, b[0], b[1], tau, steps, paths, seed);
  return compare("occupation", o.a.value, o.b.value, o.difference_se, tau);
}

bool EqualityDiagnostic::consistent_with_parallel_halfspaces() const {
  for (double r : residual) {
    if (!(r <= kResidualTolerance)) return false;
  }
  for (Eigen::Index i = 0; i < cosines.rows(); ++i) {
    for (Eigen::Index j = 0; j < cosines.cols(); ++j) {
      if (i != j && !(cosines(i, j) >= kCosineTolerance)) return false;
    }
  }
  return true;
}

EqualityDiagnostic equality_diagnostic_run(const std::vector<SetExpr>& sets, double t, std::uint64_t probes,
                                           std::uint64_t samples, std::uint64_t seed) {
  require_same_dimension(sets, "equality_diagnostic_run");
  if (!(t > 0.0)) throw std::domain_error("equality_diagnostic_run: t must be positive");
  const Eigen::Index n = sets.front().dimension();
  if (probes < static_cast<std::uint64_t>(n) + 2) {
    throw std::invalid_argument("equality_diagnostic_run: need at least dimension + 2 probes");
  }
  const auto measures = set_measures(sets, samples, seed);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const double p = measures[i].value;
    if (p - 3 * measures[i].std_error <= 0.0 || p + 3 * measures[i].std_error >= 1.0) {
      throw std::domain_error("equality_diagnostic_run: set " + std::to_string(i + 1) +
                              " has Gaussian measure at 0 or 1");
    }
  }

  Eigen::MatrixXd cloud(static_cast<Eigen::Index>(probes), n);
  Rng rng(derive_seed(seed, kProbeStream));
  for (Eigen::Index r = 0; r < cloud.rows(); ++r) {
    for (Eigen::Index c = 0; c < n; ++c) cloud(r, c) = rng.normal();
  }

  EqualityDiagnostic out;
  out.t = t;
  out.k_t = k_t(t);
  out.probes = probes;
  const std::size_t k = sets.size();
  for (std::size_t i = 0; i < k; ++i) {
    // One seed per set, shared by all probes, so w_i is a fixed function of x.
    const std::uint64_t set_seed = derive_seed(seed, kSemigroupStream + i);
    std::vector<Eigen::Index> used;
    std::vector<double> w;
    for (Eigen::Index r = 0; r < cloud.rows(); ++r) {
      const Eigen::VectorXd x = cloud.row(r).transpose();
      double p;
      if (const auto exact = semigroup_exact(sets[i], t, x)) {
        p = *exact;
        if (p < 1e-12 || p > 1.0 - 1e-12) continue;
      } else {
        const Estimate e = semigroup_apply(sets[i], t, x, samples, set_seed);
        if (e.value == 0.0 || e.value == 1.0) continue;
        p = e.value;
      }
      used.push_back(r);
      w.push_back(std_normal_quantile(p));
    }
    const auto m = static_cast<Eigen::Index>(used.size());
    if (m < n + 2) {
      throw std::runtime_error("equality_diagnostic_run: too few probes with 0 < P_t 1_A < 1 for set " +
                               std::to_string(i + 1));
    }
    Eigen::MatrixXd design(m, n + 1);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      design.row(r).head(n) = cloud.row(used[static_cast<std::size_t>(r)]);
      design(r, n) = 1.0;
      rhs(r) = w[static_cast<std::size_t>(r)];
    }
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(rhs);
    out.direction.push_back(coef.head(n));
    out.offset.push_back(coef(n));
    out.residual.push_back(std::sqrt((design * coef - rhs).squaredNorm() / static_cast<double>(m)));
    out.used_probes.push_back(static_cast<std::uint64_t>(m));
  }
  out.cosines = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double denom = out.direction[i].norm() * out.direction[j].norm();
      const double c = denom > 0.0 ? std::clamp(out.direction[i].dot(out.direction[j]) / denom, -1.0, 1.0) : 0.0;
      out.cosines(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      out.cosines(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
    }
  }
  return out;
}

std::vector<SweepPoint> k2_grid(const std::vector<double>& xs, const std::vector<double>& rhos) {
  std::vector<SweepPoint> out;
  for (double rho : rhos) {
    const auto m = CorrelationMatrix::bivariate(rho);
    for (double x1 : xs) {
      for (double x2 : xs) out.push_back({Eigen::Vector2d(x1, x2), m});
    }
  }
  return out;
}

std::vector<SweepPoint> random_points(const CorrelationMatrix& m, std::uint64_t count, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kRandomStream));
  std::vector<SweepPoint> out;
  for (std::uint64_t p = 0; p < count; ++p) {
    Eigen::VectorXd x(m.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = 0.05 + 0.9 * rng.uniform();
    out.push_back({x, m});
  }
  return out;
}

std::vector<SweepRow> hessian_sweep(const std::vector<SweepPoint>& points, double target_se, std::uint64_t seed) {
  std::vector<SweepRow> out;
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& pt = points[p];
    require_nonnegative(pt.m);
    if (!pt.m.strictly_positive_definite()) {
      throw HypothesisError("hessian sweep: correlation matrix is not strictly positive definite");
    }
    const JEvaluation e = hadamard_hessian(JQuery(pt.x, pt.m), target_se, derive_seed(seed, p));
    const Estimate top = e.max_hessian_eigenvalue();
    out.push_back({pt, top, compare("max eigenvalue of M o H_J", top, Estimate::exact(0.0), std::nullopt,
                                    static_cast<double>(p))});
  }
  return out;
}

ConditionRow condition_check(const std::string& name, const CorrelationMatrix& m) {
  ConditionRow row;
  row.name = name;
  row.m = m.matrix();
  row.entrywise_nonnegative = m.entrywise_nonnegative();
  row.min_eigenvalue = m.min_eigenvalue();
  try {
    row.inverse_offdiag_nonpositive = inverse_offdiag_nonpositive(m);
  } catch (const NotPositiveDefinite&) {
    row.inverse_offdiag_nonpositive.reset();
  }
  return row;
}

CorrelationMatrix MatrixSpec::build() const {
  switch (kind) {
    case Kind::equicorrelated:
      return CorrelationMatrix::equicorrelated(size, rho);
    case Kind::ou:
      return ou_covariance(values);
    case Kind::explicit_entries: {
      const auto k = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(values.size()))));
      if (k * k != static_cast<Eigen::Index>(values.size()) || k == 0) {
        throw std::invalid_argument("explicit matrix needs k*k entries");
      }
      Eigen::MatrixXd m(k, k);
      for (Eigen::Index r = 0; r < k; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) m(r, c) = values[static_cast<std::size_t>(r * k + c)];
      }
      return CorrelationMatrix(m);
    }
  }
  throw std::logic_error("MatrixSpec: unknown kind");
}

// ------------------------------------------------------------ config parsing

namespace {

SectionReader reader(const ConfigDocument& doc, std::string_view name) {
  return SectionReader(doc, doc.section(name), std::string(name));
}

SetExpr parse_set_rec(const ConfigDocument& doc, const std::string& name, Eigen::Index n,
                      const SectionReader& referrer, std::string_view ref_key, std::set<std::string>& visiting) {
  const std::string section_name = "set." + name;
  const auto r = reader(doc, section_name);
  if (!r.present()) referrer.fail(ref_key, "no section [" + section_name + "]");
  if (!visiting.insert(name).second) referrer.fail(ref_key, "set '" + name + "' refers to itself");
  const std::string type = r.string("type");

  auto vector_of = [&](std::string_view key) {
    const auto v = r.reals(key);
    if (static_cast<Eigen::Index>(v.size()) != n) {
      r.fail(key, "expected " + std::to_string(n) + " components, got " + std::to_string(v.size()));
    }
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), n));
  };
  auto measure = [&]() {
    const double p = r.real("measure");
    if (!(p >= 0.0 && p <= 1.0)) r.fail("measure", "must lie in [0, 1]");
    return p;
  };

  SetExpr out = SetExpr::full(n);
  if (type == "halfspace") {
    r.restrict_keys({"type", "normal", "offset", "measure"});
    const Eigen::VectorXd normal = vector_of("normal");
    if (normal.norm() == 0.0) r.fail("normal", "must be nonzero");
    if (r.has("offset") == r.has("measure")) r.fail("offset", "give exactly one of offset and measure");
    out = r.has("offset") ? SetExpr::halfspace(normal, r.real("offset"))
                          : SetExpr(parallel_halfspaces(Eigen::VectorXd::Constant(1, measure()), normal).front());
  } else if (type == "ball") {
    r.restrict_keys({"type", "center", "radius", "measure"});
    const Eigen::VectorXd center = r.has("center") ? vector_of("center") : Eigen::VectorXd::Zero(n);
    if (r.has("radius") == r.has("measure")) r.fail("radius", "give exactly one of radius and measure");
    double radius;
    if (r.has("radius")) {
      radius = r.real("radius");
      if (!(radius >= 0.0) || !std::isfinite(radius)) r.fail("radius", "must be finite and >= 0");
    } else {
      if (!center.isZero(0.0)) r.fail("measure", "a ball given by its measure must be centered at the origin");
      radius = ball_radius_for_measure(n, measure());
    }
    out = SetExpr::ball(center, radius);
  } else if (type == "box") {
    r.restrict_keys({"type", "lo", "hi"});
    const Eigen::VectorXd lo = vector_of("lo"), hi = vector_of("hi");
    out = SetExpr::box(lo, hi);
  } else if (type == "complement") {
    r.restrict_keys({"type", "of"});
    const auto names = r.names("of");
    if (names.size() != 1) r.fail("of", "expected exactly one set name");
    out = SetExpr::complement(parse_set_rec(doc, names.front(), n, r, "of", visiting));
  } else if (type == "intersection" || type == "union") {
    r.restrict_keys({"type", "members"});
    std::vector<SetExpr> members;
    for (const auto& m : r.names("members")) members.push_back(parse_set_rec(doc, m, n, r, "members", visiting));
    if (members.empty()) r.fail("members", "needs at least one member");
    out = type == "union" ? SetExpr::union_of(std::move(members)) : SetExpr::intersection(std::move(members));
  } else if (type == "full" || type == "empty") {
    r.restrict_keys({"type"});
    out = type == "full" ? SetExpr::full(n) : SetExpr::empty(n);
  } else {
    r.fail("type", "unknown set type '" + type + "' (halfspace, ball, box, complement, intersection, union, full, empty)");
  }
  visiting.erase(name);
  return out;
}

MatrixSpec parse_matrix(const ConfigDocument& doc, const std::string& section, std::optional<Eigen::Index> default_size) {
  const auto r = reader(doc, section);
  MatrixSpec spec;
  spec.name = section == "matrix" ? "matrix" : section.substr(std::string("matrix.").size());
  const std::string kind = r.string("kind");
  if (kind == "equicorrelated") {
    r.restrict_keys({"kind", "rho", "size"});
    spec.kind = MatrixSpec::Kind::equicorrelated;
    spec.rho = r.real("rho");
    if (r.has("size")) {
      spec.size = static_cast<Eigen::Index>(r.count("size"));
    } else if (default_size) {
      spec.size = *default_size;
    } else {
      r.fail("size", "required field missing");
    }
    if (spec.size < 1) r.fail("size", "must be >= 1");
  } else if (kind == "ou") {
    r.restrict_keys({"kind", "times"});
    spec.kind = MatrixSpec::Kind::ou;
    spec.values = r.reals("times");
    spec.size = static_cast<Eigen::Index>(spec.values.size());
  } else if (kind == "explicit") {
    r.restrict_keys({"kind", "entries"});
    spec.kind = MatrixSpec::Kind::explicit_entries;
    spec.values = r.reals("entries");
  } else {
    r.fail("kind", "unknown matrix kind '" + kind + "' (equicorrelated, ou, explicit)");
  }
  try {
    spec.size = spec.build().dim();
  } catch (const std::exception& e) {
    r.fail(kind == "explicit" ? "entries" : kind == "ou" ? "times" : "rho", e.what());
  }
  return spec;
}

bool uses(std::string_view experiment, std::initializer_list<std::string_view> list) {
  return std::find(list.begin(), list.end(), experiment) != list.end();
}

}  // namespace

SetExpr parse_set(const ConfigDocument& doc, const std::string& name, Eigen::Index dimension) {
  std::set<std::string> visiting;
  return parse_set_rec(doc, name, dimension, reader(doc, ""), "sets", visiting);
}

ExperimentConfig resolve_config(const ConfigDocument& doc, std::string_view experiment,
                                const ConfigOverrides& o) {
  if (std::find(std::begin(kExperiments), std::end(kExperiments), experiment) == std::end(kExperiments)) {
    throw ConfigError(doc.source(), 0, "experiment", "unknown experiment '" + std::string(experiment) + "'");
  }
  const SectionReader top(doc, &doc.top(), "");
  ExperimentConfig cfg;
  cfg.experiment = std::string(experiment);
  cfg.resolved = doc;

  const bool set_based = uses(experiment, {"verify-main", "noise-stability", "exit-time", "occupation",
                                           "equality-diagnostic"});
  const bool path_based = uses(experiment, {"exit-time", "occupation"});
  const bool j_based = uses(experiment, {"verify-main", "noise-stability", "hessian-sweep"});
  const bool timed = uses(experiment, {"noise-stability", "equality-diagnostic"});

  std::vector<std::string_view> allowed{"experiment", "seed"};
  if (set_based) allowed.insert(allowed.end(), {"dimension", "sets", "samples"});
  if (path_based) allowed.insert(allowed.end(), {"paths", "steps", "tau"});
  if (j_based) allowed.push_back("target_se");
  if (timed) allowed.push_back("t");
  if (experiment == "equality-diagnostic") allowed.push_back("probes");
  if (experiment == "condition-check") allowed.push_back("random_ou");
  for (const auto& e : doc.top().entries) {
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) {
      throw ConfigError(doc.source(), e.line, e.key, "not used by " + std::string(experiment));
    }
  }
  for (std::size_t s = 1; s < doc.sections().size(); ++s) {
    const auto& sec = doc.sections()[s];
    const bool ok = (sec.name.rfind("set.", 0) == 0 && set_based) ||
                    (sec.name == "matrix" && uses(experiment, {"verify-main", "hessian-sweep", "condition-check"})) ||
                    (sec.name.rfind("matrix.", 0) == 0 && experiment == "condition-check") ||
                    (sec.name == "sweep" && experiment == "hessian-sweep");
    if (!ok) {
      throw ConfigError(doc.source(), sec.line, "[" + sec.name + "]", "section not used by " + std::string(experiment));
    }
  }

  if (const auto e = top.optional_string("experiment"); e && *e != experiment) {
    top.fail("experiment", "document is for '" + *e + "', not '" + std::string(experiment) + "'");
  }
  cfg.resolved.set("", "experiment", cfg.experiment);

  cfg.seed = o.seed ? *o.seed : top.has("seed") ? top.count("seed") : o.default_seed.value_or(1);
  cfg.resolved.set("", "seed", std::to_string(cfg.seed));

  if (set_based) {
    cfg.dimension = static_cast<Eigen::Index>(top.optional_count("dimension").value_or(2));
    if (cfg.dimension < 1) top.fail("dimension", "must be >= 1");
    cfg.resolved.set("", "dimension", std::to_string(cfg.dimension));
    cfg.samples = o.samples ? *o.samples : top.optional_count("samples").value_or(1'000'000);
    if (cfg.samples < 1) top.fail("samples", "must be >= 1");
    cfg.resolved.set("", "samples", std::to_string(cfg.samples));
    cfg.set_names = top.names("sets");
    for (const auto& name : cfg.set_names) cfg.sets.push_back(parse_set(doc, name, cfg.dimension));
    const std::size_t want = experiment == "exit-time" ? 1
                             : uses(experiment, {"noise-stability", "occupation"}) ? 2 : 0;
    if (want && cfg.set_names.size() != want) {
      top.fail("sets", std::string(experiment) + " takes " + std::to_string(want) + " set(s)");
    }
    if (cfg.sets.empty()) top.fail("sets", "needs at least one set");
  }
  if (path_based) {
    cfg.paths = o.paths ? *o.paths : top.optional_count("paths").value_or(100'000);
    cfg.steps = o.steps ? *o.steps : top.optional_count("steps").value_or(512);
    if (cfg.paths < 1) top.fail("paths", "must be >= 1");
    if (cfg.steps < 1) top.fail("steps", "must be >= 1");
    if (o.taus) {
      cfg.taus = *o.taus;
    } else if (top.has("tau")) {
      cfg.taus = top.reals("tau");
    } else {
      cfg.taus = experiment == "exit-time" ? std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}
                                           : std::vector<double>{0.5};
    }
    if (cfg.taus.empty()) top.fail("tau", "needs at least one horizon");
    for (double tau : cfg.taus) {
      if (!(tau >= 0.0) || !std::isfinite(tau)) top.fail("tau", "horizons must be finite and >= 0");
    }
    if (experiment == "occupation" && cfg.taus.size() != 1) top.fail("tau", "occupation takes one horizon");
    cfg.resolved.set("", "paths", std::to_string(cfg.paths));
    cfg.resolved.set("", "steps", std::to_string(cfg.steps));
    cfg.resolved.set("", "tau", format_list(cfg.taus));
  }
  if (j_based) {
    cfg.target_se = top.optional_real("target_se").value_or(1e-6);
    if (!(cfg.target_se > 0.0)) top.fail("target_se", "must be positive");
    cfg.resolved.set("", "target_se", format_real(cfg.target_se));
  }
  if (timed) {
    cfg.t = top.optional_real("t").value_or(0.5);
    if (!(cfg.t > 0.0) || !std::isfinite(cfg.t)) top.fail("t", "must be positive and finite");
    cfg.resolved.set("", "t", format_real(cfg.t));
  }
  if (experiment == "equality-diagnostic") {
    cfg.probes = top.optional_count("probes").value_or(200);
    if (cfg.probes < static_cast<std::uint64_t>(cfg.dimension) + 2) top.fail("probes", "needs at least dimension + 2");
    cfg.resolved.set("", "probes", std::to_string(cfg.probes));
  }

  if (experiment == "verify-main") {
    if (!doc.section("matrix")) throw ConfigError(doc.source(), 0, "[matrix]", "required section missing");
    cfg.matrices.push_back(parse_matrix(doc, "matrix", static_cast<Eigen::Index>(cfg.sets.size())));
    if (cfg.matrices.front().size != static_cast<Eigen::Index>(cfg.sets.size())) {
      top.fail("sets", "matrix is " + std::to_string(cfg.matrices.front().size) + "x" +
                           std::to_string(cfg.matrices.front().size) + " but " + std::to_string(cfg.sets.size()) +
                           " sets are listed");
    }
    if (cfg.matrices.front().kind == MatrixSpec::Kind::equicorrelated) {
      cfg.resolved.set("matrix", "size", std::to_string(cfg.matrices.front().size));
    }
  }
  if (experiment == "hessian-sweep") {
    const auto sweep = reader(doc, "sweep");
    if (!sweep.present()) throw ConfigError(doc.source(), 0, "[sweep]", "required section missing");
    sweep.restrict_keys({"x", "rho", "random"});
    if (sweep.has("random") == (sweep.has("x") || sweep.has("rho"))) {
      sweep.fail("random", "give either x and rho (k = 2 grid) or random (points at [matrix])");
    }
    if (sweep.has("random")) {
      cfg.sweep_random = sweep.count("random");
      if (!doc.section("matrix")) throw ConfigError(doc.source(), 0, "[matrix]", "required for a random sweep");
      cfg.matrices.push_back(parse_matrix(doc, "matrix", std::nullopt));
    } else {
      if (doc.section("matrix")) {
        throw ConfigError(doc.source(), doc.section("matrix")->line, "[matrix]", "a k = 2 grid takes rho from [sweep]");
      }
      cfg.sweep_x = sweep.reals("x");
      cfg.sweep_rho = sweep.reals("rho");
      for (double x : cfg.sweep_x) {
        if (!(x >= kInteriorMin && x <= 1.0 - kInteriorMin)) sweep.fail("x", "points must lie in (0, 1)");
      }
      for (double rho : cfg.sweep_rho) {
        if (!(rho >= 0.0 && rho < 1.0)) sweep.fail("rho", "correlations must lie in [0, 1)");
      }
    }
  }
  if (experiment == "condition-check") {
    for (std::size_t s = 1; s < doc.sections().size(); ++s) {
      cfg.matrices.push_back(parse_matrix(doc, doc.sections()[s].name, std::nullopt));
    }
    if (cfg.matrices.empty() && !top.has("random_ou")) {
      // Built-in comparison: random OU grids plus a matrix with nonnegative
      // entries whose inverse has a positive off-diagonal entry.
      MatrixSpec witness;
      witness.name = "witness";
      witness.kind = MatrixSpec::Kind::explicit_entries;
      witness.values = {1, 0.7, 0.7, 0.7, 1, 0, 0.7, 0, 1};
      witness.size = 3;
      cfg.matrices.push_back(witness);
      cfg.resolved.set("matrix.witness", "kind", "explicit");
      cfg.resolved.set("matrix.witness", "entries", format_list(witness.values));
      cfg.random_ou = 20;
    } else {
      cfg.random_ou = top.optional_count("random_ou").value_or(0);
    }
    cfg.resolved.set("", "random_ou", std::to_string(cfg.random_ou));
    Rng rng(derive_seed(cfg.seed, kRandomStream));
    for (std::uint64_t i = 0; i < cfg.random_ou; ++i) {
      MatrixSpec spec;
      spec.name = "ou_random_" + std::to_string(i + 1);
      spec.kind = MatrixSpec::Kind::ou;
      const std::size_t k = 1 + i % 5;
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        spec.values.push_back(acc);
        acc += 0.05 + 1.45 * rng.uniform();
      }
      spec.size = static_cast<Eigen::Index>(k);
      cfg.matrices.push_back(std::move(spec));
    }
  }
  return cfg;
}

}  // namespace noisestab
