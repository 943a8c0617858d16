#include "noisestab/geometry.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "noisestab/gaussian.hpp"
#include "noisestab/random.hpp"

namespace noisestab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kMeasureShards = 64;

struct Complement {
  std::vector<SetExpr> child;
};
struct Intersection {
  std::vector<SetExpr> members;
};
struct Union {
  std::vector<SetExpr> members;
};

void print_vector(std::ostream& os, const Eigen::VectorXd& v) {
  os << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? "," : "") << v(i);
  os << ']';
}

}  // namespace

struct SetExpr::Node {
  std::variant<HalfSpace, Ball, AxisBox, Complement, Intersection, Union> payload;
  Eigen::Index dim = 0;
};

HalfSpace HalfSpace::from(const Eigen::VectorXd& normal, double offset) {
  const double norm = normal.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("HalfSpace: normal must be nonzero and finite");
  }
  if (std::isnan(offset)) throw std::invalid_argument("HalfSpace: NaN offset");
  return {normal / norm, offset / norm};
}

SetExpr::SetExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

SetExpr::SetExpr(HalfSpace h) {
  const auto n = h.normal.size();
  HalfSpace canonical = HalfSpace::from(h.normal, h.offset);
  node_ = std::make_shared<const Node>(Node{std::move(canonical), n});
}

SetExpr::SetExpr(Ball b) {
  if (!(b.radius >= 0.0) || !b.center.allFinite()) {
    throw std::invalid_argument("Ball: radius must be >= 0 and center finite");
  }
  const auto n = b.center.size();
  node_ = std::make_shared<const Node>(Node{std::move(b), n});
}

SetExpr::SetExpr(AxisBox b) {
  if (b.lo.size() != b.hi.size()) throw std::invalid_argument("AxisBox: bound size mismatch");
  for (Eigen::Index i = 0; i < b.lo.size(); ++i) {
    if (std::isnan(b.lo(i)) || std::isnan(b.hi(i))) throw std::invalid_argument("AxisBox: NaN bound");
  }
  const auto n = b.lo.size();
  node_ = std::make_shared<const Node>(Node{std::move(b), n});
}

SetExpr SetExpr::halfspace(const Eigen::VectorXd& normal, double offset) {
  return SetExpr(HalfSpace::from(normal, offset));
}

SetExpr SetExpr::ball(const Eigen::VectorXd& center, double radius) {
  return SetExpr(Ball{center, radius});
}

SetExpr SetExpr::box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return SetExpr(AxisBox{lo, hi});
}

SetExpr SetExpr::full(Eigen::Index n) {
  return SetExpr(HalfSpace{Eigen::VectorXd::Unit(n, 0), kInf});
}

SetExpr SetExpr::empty(Eigen::Index n) {
  return SetExpr(HalfSpace{Eigen::VectorXd::Unit(n, 0), -kInf});
}

SetExpr SetExpr::complement(const SetExpr& s) {
  return SetExpr(std::make_shared<const Node>(Node{Complement{{s}}, s.dimension()}));
}

namespace {

Eigen::Index common_dimension(const std::vector<SetExpr>& members, const char* who) {
  if (members.empty()) throw std::invalid_argument(std::string(who) + ": no members");
  const Eigen::Index n = members.front().dimension();
  for (const auto& m : members) {
    if (m.dimension() != n) throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  }
  return n;
}

}  // namespace

SetExpr SetExpr::intersection(std::vector<SetExpr> members) {
  const Eigen::Index n = common_dimension(members, "intersection");
  return SetExpr(std::make_shared<const Node>(Node{Intersection{std::move(members)}, n}));
}

SetExpr SetExpr::union_of(std::vector<SetExpr> members) {
  const Eigen::Index n = common_dimension(members, "union");
  return SetExpr(std::make_shared<const Node>(Node{Union{std::move(members)}, n}));
}

SetExpr::Kind SetExpr::kind() const {
  return static_cast<Kind>(node_->payload.index());
}

Eigen::Index SetExpr::dimension() const { return node_->dim; }

const HalfSpace& SetExpr::as_halfspace() const { return std::get<HalfSpace>(node_->payload); }
const Ball& SetExpr::as_ball() const { return std::get<Ball>(node_->payload); }
const AxisBox& SetExpr::as_box() const { return std::get<AxisBox>(node_->payload); }

const std::vector<SetExpr>& SetExpr::children() const {
  if (const auto* c = std::get_if<Complement>(&node_->payload)) return c->child;
  if (const auto* c = std::get_if<Intersection>(&node_->payload)) return c->members;
  return std::get<Union>(node_->payload).members;
}

bool SetExpr::contains(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dimension()) throw std::invalid_argument("SetExpr::contains: dimension mismatch");
  return contains_unchecked(x);
}

bool SetExpr::contains_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  struct Visitor {
    const Eigen::Ref<const Eigen::VectorXd>& x;
    bool operator()(const HalfSpace& h) const {
      if (h.offset == kInf) return true;
      if (h.offset == -kInf) return false;
      return x.dot(h.normal) <= h.offset;
    }
    bool operator()(const Ball& b) const {
      return (x - b.center).squaredNorm() <= b.radius * b.radius;
    }
    bool operator()(const AxisBox& b) const {
      return (x.array() >= b.lo.array()).all() && (x.array() <= b.hi.array()).all();
    }
    bool operator()(const Complement& c) const { return !c.child.front().contains_unchecked(x); }
    bool operator()(const Intersection& c) const {
      for (const auto& m : c.members) {
        if (!m.contains_unchecked(x)) return false;
      }
      return true;
    }
    bool operator()(const Union& c) const {
      for (const auto& m : c.members) {
        if (m.contains_unchecked(x)) return true;
      }
      return false;
    }
  };
  return std::visit(Visitor{x}, node_->payload);
}

std::string SetExpr::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind()) {
    case Kind::halfspace:
      os << "halfspace(";
      print_vector(os, as_halfspace().normal);
      os << ',' << as_halfspace().offset << ')';
      break;
    case Kind::ball:
      os << "ball(";
      print_vector(os, as_ball().center);
      os << ',' << as_ball().radius << ')';
      break;
    case Kind::box:
      os << "box(";
      print_vector(os, as_box().lo);
      os << ',';
      print_vector(os, as_box().hi);
      os << ')';
      break;
    case Kind::complement:
    case Kind::intersection:
    case Kind::union_of: {
      os << (kind() == Kind::complement ? "complement(" : kind() == Kind::intersection ? "intersection(" : "union(");
      const auto& ch = children();
      for (std::size_t i = 0; i < ch.size(); ++i) os << (i ? "," : "") << ch[i].describe();
      os << ')';
      break;
    }
  }
  return os.str();
}

SetSystem::SetSystem(std::vector<SetExpr> s) : sets(std::move(s)) {
  common_dimension(sets, "SetSystem");
}

std::optional<double> exact_gaussian_measure(const SetExpr& s) {
  switch (s.kind()) {
    case SetExpr::Kind::halfspace:
      return std_normal_cdf(s.as_halfspace().offset);
    case SetExpr::Kind::ball: {
      const Ball& b = s.as_ball();
      if (!b.center.isZero(0.0)) return std::nullopt;
      if (b.radius == 0.0) return 0.0;
      // |X|^2 ~ chi-square with n degrees of freedom.
      return boost::math::gamma_p(0.5 * static_cast<double>(s.dimension()), 0.5 * b.radius * b.radius);
    }
    case SetExpr::Kind::box: {
      const AxisBox& b = s.as_box();
      double p = 1.0;
      for (Eigen::Index i = 0; i < b.lo.size(); ++i) {
        if (b.hi(i) < b.lo(i)) return 0.0;
        p *= std_normal_cdf(b.hi(i)) - std_normal_cdf(b.lo(i));
      }
      return p;
    }
    case SetExpr::Kind::complement: {
      const auto inner = exact_gaussian_measure(s.children().front());
      if (!inner) return std::nullopt;
      return 1.0 - *inner;
    }
    default:
      return std::nullopt;
  }
}

Estimate gaussian_measure(const SetExpr& s, std::uint64_t samples, std::uint64_t seed) {
  if (const auto exact = exact_gaussian_measure(s)) return {*exact, 0.0, 0, seed};
  if (samples < 1) throw std::invalid_argument("gaussian_measure: samples must be >= 1");
  const Eigen::Index n = s.dimension();
  const std::uint64_t shards = std::min(kMeasureShards, samples);
  std::vector<std::uint64_t> hits(shards, 0);
  for_each_shard(shards, [&](std::uint64_t sh) {
    const std::uint64_t count = samples / shards + (sh < samples % shards ? 1 : 0);
    Rng rng(derive_seed(seed, sh));
    Eigen::VectorXd x(n);
    std::uint64_t h = 0;
    for (std::uint64_t t = 0; t < count; ++t) {
      rng.fill_normal(x);
      h += s.contains(x) ? 1 : 0;
    }
    hits[sh] = h;
  });
  return Estimate::binomial(std::accumulate(hits.begin(), hits.end(), std::uint64_t{0}), samples, seed);
}

std::vector<HalfSpace> parallel_halfspaces(const Eigen::VectorXd& measures,
                                           const Eigen::VectorXd& direction) {
  const double norm = direction.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw std::invalid_argument("parallel_halfspaces: direction must be nonzero");
  }
  const Eigen::VectorXd unit = direction / norm;
  std::vector<HalfSpace> out;
  out.reserve(measures.size());
  for (Eigen::Index i = 0; i < measures.size(); ++i) {
    out.push_back({unit, std_normal_quantile(measures(i))});
  }
  return out;
}

SetExpr enlarge(const SetExpr& s, double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("enlarge: eps must be finite and >= 0");
  }
  switch (s.kind()) {
    case SetExpr::Kind::halfspace: {
      const HalfSpace& h = s.as_halfspace();
      return SetExpr(HalfSpace{h.normal, h.offset + eps});
    }
    case SetExpr::Kind::ball: {
      const Ball& b = s.as_ball();
      return SetExpr(Ball{b.center, b.radius + eps});
    }
    case SetExpr::Kind::union_of: {
      std::vector<SetExpr> members;
      for (const auto& m : s.children()) members.push_back(enlarge(m, eps));
      return SetExpr::union_of(std::move(members));
    }
    case SetExpr::Kind::box:
      throw UnsupportedSetOperation("enlarge: box enlargement has no closed form");
    default:
      throw UnsupportedSetOperation("enlarge: does not distribute over complement or intersection");
  }
}

double ball_radius_for_measure(Eigen::Index n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("ball_radius_for_measure: p outside [0, 1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return kInf;
  return std::sqrt(2.0 * boost::math::gamma_p_inv(0.5 * static_cast<double>(n), p));
}

}  // namespace noisestab
