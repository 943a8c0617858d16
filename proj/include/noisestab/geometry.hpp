#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "noisestab/estimate.hpp"

namespace noisestab {

/// Raised for operations a set expression cannot support in closed form.
class UnsupportedSetOperation : public std::logic_error {
 public:
  explicit UnsupportedSetOperation(const std::string& what) : std::logic_error(what) {}
};

/// {y : y . normal <= offset}, stored with a unit normal. An offset of +inf is
/// the whole space and -inf the empty set.
struct HalfSpace {
  Eigen::VectorXd normal;
  double offset = 0.0;

  /// Canonicalizes (a, b) to (a / |a|, b / |a|). Throws on a zero normal.
  static HalfSpace from(const Eigen::VectorXd& normal, double offset);
};

/// Closed ball.
struct Ball {
  Eigen::VectorXd center;
  double radius = 0.0;
};

/// Closed axis-aligned box [lo, hi]. Infinite bounds are allowed.
struct AxisBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
};

/// Immutable expression tree over half-spaces, balls and boxes with
/// complement, intersection and union. Copies share structure.
class SetExpr {
 public:
  enum class Kind { halfspace, ball, box, complement, intersection, union_of };

  SetExpr(HalfSpace h);  // NOLINT(google-explicit-constructor)
  SetExpr(Ball b);       // NOLINT(google-explicit-constructor)
  SetExpr(AxisBox b);    // NOLINT(google-explicit-constructor)

  static SetExpr halfspace(const Eigen::VectorXd& normal, double offset);
  static SetExpr ball(const Eigen::VectorXd& center, double radius);
  static SetExpr box(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi);
  static SetExpr full(Eigen::Index n);
  static SetExpr empty(Eigen::Index n);
  static SetExpr complement(const SetExpr& s);
  static SetExpr intersection(std::vector<SetExpr> members);
  static SetExpr union_of(std::vector<SetExpr> members);

  Kind kind() const;
  Eigen::Index dimension() const;

  /// Leaf accessors; throw std::bad_variant_access on the wrong kind.
  const HalfSpace& as_halfspace() const;
  const Ball& as_ball() const;
  const AxisBox& as_box() const;
  /// Children of a complement (one) or intersection/union node.
  const std::vector<SetExpr>& children() const;

  /// Membership with closed leaves. Throws std::invalid_argument on a
  /// dimension mismatch.
  bool contains(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Compact text form, e.g. "union(ball([0,0],1),halfspace([1,0],0.5))".
  std::string describe() const;

 private:
  struct Node;
  explicit SetExpr(std::shared_ptr<const Node> node);
  bool contains_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  std::shared_ptr<const Node> node_;
};

/// The sets A_1..A_k of one comparison, all in a common dimension.
struct SetSystem {
  std::vector<SetExpr> sets;

  explicit SetSystem(std::vector<SetExpr> s);
  Eigen::Index dimension() const { return sets.front().dimension(); }
  std::size_t size() const { return sets.size(); }
};

/// Closed-form standard Gaussian measure when one exists: half-spaces,
/// balls centered at the origin, boxes, and complements of those.
std::optional<double> exact_gaussian_measure(const SetExpr& s);

/// Standard Gaussian measure: exact (std_error 0) when a closed form exists,
/// otherwise an indicator average over `samples` draws.
Estimate gaussian_measure(const SetExpr& s, std::uint64_t samples, std::uint64_t seed);

/// Half-spaces {y : y . direction <= quantile(p_i)} with measures p_i.
/// A nonzero direction is normalized; p_i = 1 gives the whole space.
std::vector<HalfSpace> parallel_halfspaces(const Eigen::VectorXd& measures,
                                           const Eigen::VectorXd& direction);

/// {y : d(y, s) <= eps} for half-spaces, balls and unions of those.
/// Throws UnsupportedSetOperation for boxes, complements and intersections.
SetExpr enlarge(const SetExpr& s, double eps);

/// Radius of the origin-centered ball in R^n with Gaussian measure p.
double ball_radius_for_measure(Eigen::Index n, double p);

}  // namespace noisestab
