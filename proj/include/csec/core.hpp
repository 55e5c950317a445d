#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace csec {

using Point = Eigen::VectorXd;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require_same_dim(const Point& x, const Point& y, const char* what) {
  if (x.size() != y.size()) {
    throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(x.size()) +
                         " vs " + std::to_string(y.size()) + ")");
  }
}

inline bool all_finite(const Point& x) { return x.allFinite(); }

/// Points of a finite-horizon learner, each tagged with its insertion counter.
class WorkingSet {
 public:
  WorkingSet() = default;

  explicit WorkingSet(std::vector<Point> points) {
    for (auto& p : points) push(std::move(p));
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  Eigen::Index dim() const { return points_.empty() ? 0 : points_.front().size(); }

  const Point& operator[](std::size_t i) const { return points_[i]; }
  const std::vector<Point>& points() const { return points_; }
  std::uint64_t timestamp(std::size_t i) const { return stamps_[i]; }
  const std::vector<std::uint64_t>& timestamps() const { return stamps_; }

  void push(Point p) {
    if (!points_.empty()) require_same_dim(points_.front(), p, "WorkingSet::push");
    if (!all_finite(p)) throw std::invalid_argument("WorkingSet::push: non-finite coordinate");
    points_.push_back(std::move(p));
    stamps_.push_back(next_stamp_++);
  }

  /// Overwrites slot i with x and gives it the newest timestamp.
  Point replace(std::size_t i, Point x) {
    require_same_dim(points_.at(i), x, "WorkingSet::replace");
    Point old = std::move(points_[i]);
    points_[i] = std::move(x);
    stamps_[i] = next_stamp_++;
    return old;
  }

  std::size_t oldest() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < stamps_.size(); ++i)
      if (stamps_[i] < stamps_[best]) best = i;
    return best;
  }

  /// Nearest neighbour of x; ties go to the lowest index.
  std::size_t nearest(const Point& x) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double d = (points_[i] - x).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  }

  Point mean() const {
    Point m = Point::Zero(dim());
    for (const auto& p : points_) m += p;
    return m / static_cast<double>(points_.size());
  }

  /// Points as columns of a dim x n matrix.
  Eigen::MatrixXd as_columns() const {
    Eigen::MatrixXd m(dim(), static_cast<Eigen::Index>(points_.size()));
    for (std::size_t i = 0; i < points_.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = points_[i];
    return m;
  }

  std::uint64_t next_timestamp() const { return next_stamp_; }

  /// Restores a set exactly as serialized (used by snapshots).
  static WorkingSet restore(std::vector<Point> points, std::vector<std::uint64_t> stamps,
                            std::uint64_t next_stamp) {
    WorkingSet ws;
    ws.points_ = std::move(points);
    ws.stamps_ = std::move(stamps);
    ws.next_stamp_ = next_stamp;
    return ws;
  }

 private:
  std::vector<Point> points_;
  std::vector<std::uint64_t> stamps_;
  std::uint64_t next_stamp_ = 0;
};

/// Center, radius and window of a centroid learner. The working set is
/// present only for rules that need to know which point leaves.
struct CentroidState {
  Point center;
  double radius = 1.0;
  std::size_t window = 1;
  std::optional<WorkingSet> working_set;

  static CentroidState from_center(Point center, double radius, std::size_t window) {
    if (!(radius > 0.0)) throw std::invalid_argument("CentroidState: radius must be positive");
    if (window == 0) throw std::invalid_argument("CentroidState: window must be positive");
    return CentroidState{std::move(center), radius, window, std::nullopt};
  }

  static CentroidState from_working_set(WorkingSet ws, double radius) {
    if (ws.empty()) throw std::invalid_argument("CentroidState: empty working set");
    if (!(radius > 0.0)) throw std::invalid_argument("CentroidState: radius must be positive");
    Point c = ws.mean();
    const std::size_t n = ws.size();
    return CentroidState{std::move(c), radius, n, std::move(ws)};
  }

  Eigen::Index dim() const { return center.size(); }

  /// Full recomputation of the center from the working set (drift audit).
  Point recompute() const {
    if (!working_set) return center;
    return working_set->mean();
  }

  double drift() const { return (recompute() - center).norm(); }
};

/// Attack point A, unit direction a = (A - c0)/|A - c0|, and the initial center.
class AttackContext {
 public:
  static AttackContext from_attack_point(const Point& attack_point, const Point& initial_center) {
    require_same_dim(attack_point, initial_center, "AttackContext");
    const Point diff = attack_point - initial_center;
    const double norm = diff.norm();
    if (!(norm > 0.0)) throw std::invalid_argument("AttackContext: attack point equals center");
    return AttackContext(attack_point, diff / norm, initial_center);
  }

  /// Direction given directly; it is normalised and the attack point is
  /// placed one unit along it.
  static AttackContext from_direction(const Point& direction, const Point& initial_center) {
    require_same_dim(direction, initial_center, "AttackContext");
    const double norm = direction.norm();
    if (!(norm > 0.0)) throw std::invalid_argument("AttackContext: zero direction");
    Point a = direction / norm;
    return AttackContext(initial_center + a, a, initial_center);
  }

  const Point& attack_point() const { return attack_point_; }
  const Point& direction() const { return direction_; }
  const Point& initial_center() const { return initial_center_; }

 private:
  AttackContext(Point A, Point a, Point c0)
      : attack_point_(std::move(A)), direction_(std::move(a)), initial_center_(std::move(c0)) {}

  Point attack_point_;
  Point direction_;
  Point initial_center_;
};

/// Distance of x to the learner's center; x is anomalous iff the score exceeds the radius.
inline double anomaly_score(const CentroidState& state, const Point& x) {
  require_same_dim(state.center, x, "anomaly_score");
  return (x - state.center).norm();
}

inline bool is_anomalous(const CentroidState& state, const Point& x) {
  return anomaly_score(state, x) > state.radius;
}

/// Projection of the center shift onto the attack direction, in radii.
inline double relative_displacement(const CentroidState& state, const AttackContext& ctx) {
  if (!(state.radius > 0.0)) throw std::invalid_argument("relative_displacement: zero radius");
  require_same_dim(state.center, ctx.direction(), "relative_displacement");
  return (state.center - ctx.initial_center()).dot(ctx.direction()) / state.radius;
}

}  // namespace csec
