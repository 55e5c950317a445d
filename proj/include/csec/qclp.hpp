#pragma once

// Linear objective over a polyhedron intersected with one ball:
//
//   maximize (x - offset) . a   s.t.   G x <= h,   |x - center| <= radius.
//
// For a fixed ball multiplier beta > 0 the Lagrangian maximiser is the
// Euclidean projection of center + t a (t = 1/(2 beta)) onto the polyhedron,
// and |proj(center + t a) - center| is nondecreasing in t. The solver first
// projects the ball center onto the polyhedron (infeasibility certificate),
// then follows the piecewise-linear projection path in t through active-set
// breakpoints until the ball constraint binds or the path stops moving.

#include "core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace csec {

struct QclpTolerances {
  double feasibility = 1e-7;
  double optimality = 1e-6;
  std::size_t max_iterations = 10000;
};

enum class QclpStatus { optimal, infeasible, not_converged };

inline std::string_view to_string(QclpStatus s) {
  switch (s) {
    case QclpStatus::optimal: return "optimal";
    case QclpStatus::infeasible: return "infeasible";
    case QclpStatus::not_converged: return "not_converged";
  }
  return "unknown";
}

struct QclpProblem {
  Point objective;  ///< a
  Point offset;     ///< x_i; the objective is (x - offset) . a
  Eigen::MatrixXd G;  ///< one constraint per row: G.row(j) x <= h(j)
  Eigen::VectorXd h;
  Point ball_center;
  double ball_radius = 1.0;
  /// Rows that were dropped as vacuous (duplicate working-set points).
  std::vector<std::size_t> dropped;
  /// The cell's site duplicates a lower-index point, which owns the cell.
  bool shadowed = false;

  Eigen::Index dim() const { return objective.size(); }
  bool degenerate() const { return !dropped.empty() || shadowed; }
  double value_at(const Point& x) const { return (x - offset).dot(objective); }
};

struct QclpSolution {
  Point point;
  double objective_value = -std::numeric_limits<double>::infinity();
  QclpStatus status = QclpStatus::infeasible;
  std::size_t iterations = 0;

  bool optimal() const { return status == QclpStatus::optimal; }
};

/// Largest violation of G x <= h and of the ball constraint.
inline double linear_residual(const Eigen::MatrixXd& G, const Eigen::VectorXd& h, const Point& x) {
  if (G.rows() == 0) return 0.0;
  return std::max(0.0, (G * x - h).maxCoeff());
}

inline double ball_residual(const QclpProblem& p, const Point& x) {
  return std::max(0.0, (x - p.ball_center).norm() - p.ball_radius);
}

namespace detail {

/// Constraints with unit-norm rows; zero rows are removed (vacuous) or make
/// the polyhedron empty.
struct NormalizedPolyhedron {
  Eigen::MatrixXd N;  ///< inward normals as columns: N.col(j) . x >= b(j)
  Eigen::VectorXd b;
  bool empty = false;
};

inline NormalizedPolyhedron normalize(const Eigen::MatrixXd& G, const Eigen::VectorXd& h) {
  NormalizedPolyhedron out;
  const Eigen::Index d = G.cols();
  std::vector<Eigen::Index> keep;
  std::vector<double> norms;
  for (Eigen::Index j = 0; j < G.rows(); ++j) {
    const double nrm = G.row(j).norm();
    if (nrm <= 1e-300) {
      if (h(j) < 0.0) out.empty = true;
      continue;
    }
    keep.push_back(j);
    norms.push_back(nrm);
  }
  out.N.resize(d, static_cast<Eigen::Index>(keep.size()));
  out.b.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    out.N.col(kk) = -G.row(keep[k]).transpose() / norms[k];
    out.b(kk) = -h(keep[k]) / norms[k];
  }
  return out;
}

/// Dual active-set projection onto {x : N^T x >= b} (Goldfarb-Idnani with an
/// identity Hessian). Maintains J orthogonal and R upper triangular with
/// J^T N_active = [R; 0], which the path follower reuses.
class ProjectionSolver {
 public:
  ProjectionSolver(const Eigen::MatrixXd& N, const Eigen::VectorXd& b, double tol, std::size_t max_iter)
      : N_(N), b_(b), d_(N.rows()), tol_(tol), max_iter_(max_iter) {}

  enum class Result { ok, infeasible, not_converged };

  /// Projects y; on success x(), active() and multipliers() describe the optimum.
  Result project(const Point& y) {
    x_ = y;
    J_ = Eigen::MatrixXd::Identity(d_, d_);
    R_ = Eigen::MatrixXd::Zero(d_, d_);
    active_.clear();
    u_.resize(0);
    in_active_.assign(static_cast<std::size_t>(N_.cols()), false);
    r_norm_ = 1.0;
    iterations_ = 0;

    const Eigen::Index m = N_.cols();
    while (true) {
      if (++iterations_ > max_iter_) return Result::not_converged;
      Eigen::Index p = -1;
      double worst = -tol_;
      if (m > 0) {
        const Eigen::VectorXd s = N_.transpose() * x_ - b_;
        for (Eigen::Index j = 0; j < m; ++j) {
          if (in_active_[static_cast<std::size_t>(j)]) continue;
          if (s(j) < worst) {
            worst = s(j);
            p = j;
          }
        }
      }
      if (p < 0) return Result::ok;

      Eigen::VectorXd u_plus(static_cast<Eigen::Index>(active_.size()) + 1);
      u_plus.head(static_cast<Eigen::Index>(active_.size())) = u_;
      u_plus(static_cast<Eigen::Index>(active_.size())) = 0.0;
      double sp = N_.col(p).dot(x_) - b_(p);

      while (true) {
        if (++iterations_ > max_iter_) return Result::not_converged;
        const Eigen::Index q = static_cast<Eigen::Index>(active_.size());
        const Eigen::VectorXd dv = J_.transpose() * N_.col(p);
        const Eigen::VectorXd z = J_.rightCols(d_ - q) * dv.tail(d_ - q);
        Eigen::VectorXd r(q);
        if (q > 0) r = R_.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(dv.head(q));

        double t1 = std::numeric_limits<double>::infinity();
        Eigen::Index drop = -1;
        for (Eigen::Index k = 0; k < q; ++k) {
          if (r(k) > 0.0) {
            const double ratio = u_plus(k) / r(k);
            if (ratio < t1) {
              t1 = ratio;
              drop = k;
            }
          }
        }
        const double zn = z.dot(N_.col(p));
        const double t2 = (z.norm() > 1e-14 && zn > 1e-300) ? -sp / zn : std::numeric_limits<double>::infinity();
        const double t = std::min(t1, t2);
        if (!std::isfinite(t)) return Result::infeasible;

        if (!std::isfinite(t2)) {
          u_plus.head(q) -= t * r;
          u_plus(q) += t;
          remove_active(drop, u_plus);
          continue;
        }
        x_ += t * z;
        u_plus.head(q) -= t * r;
        u_plus(q) += t;
        if (t == t2) {
          if (!add_active(p, dv)) return Result::infeasible;
          u_ = u_plus;
          break;
        }
        remove_active(drop, u_plus);
        sp = N_.col(p).dot(x_) - b_(p);
      }
    }
  }

  const Point& x() const { return x_; }
  Point& x_mut() { return x_; }
  const std::vector<Eigen::Index>& active() const { return active_; }
  const Eigen::VectorXd& multipliers() const { return u_; }
  Eigen::VectorXd& multipliers_mut() { return u_; }
  bool is_active(Eigen::Index j) const { return in_active_[static_cast<std::size_t>(j)]; }
  std::size_t iterations() const { return iterations_; }

  /// Projection of v onto the null space of the active normals.
  Point null_space_part(const Point& v) const {
    const Eigen::Index q = static_cast<Eigen::Index>(active_.size());
    const auto J2 = J_.rightCols(d_ - q);
    return J2 * (J2.transpose() * v);
  }

  /// Multiplier rate -R^{-1} J1^T v for a unit change of y along v.
  Eigen::VectorXd multiplier_rate(const Point& v) const {
    const Eigen::Index q = static_cast<Eigen::Index>(active_.size());
    if (q == 0) return Eigen::VectorXd(0);
    const Eigen::VectorXd w = J_.leftCols(q).transpose() * v;
    return -R_.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(w);
  }

  /// Adds constraint j with zero multiplier. False if it is linearly dependent.
  bool activate(Eigen::Index j) {
    const Eigen::VectorXd dv = J_.transpose() * N_.col(j);
    const Eigen::Index q = static_cast<Eigen::Index>(active_.size());
    Eigen::VectorXd u_plus(q + 1);
    u_plus.head(q) = u_;
    u_plus(q) = 0.0;
    if (!add_active(j, dv)) return false;
    u_ = u_plus;
    return true;
  }

  void deactivate(Eigen::Index position) { remove_active(position, u_); }

 private:
  bool add_active(Eigen::Index p, Eigen::VectorXd dv) {
    const Eigen::Index q = static_cast<Eigen::Index>(active_.size());
    for (Eigen::Index j = d_ - 1; j >= q + 1; --j) {
      double cc = dv(j - 1);
      double ss = dv(j);
      const double hh = std::hypot(cc, ss);
      if (hh == 0.0) continue;
      dv(j) = 0.0;
      ss /= hh;
      cc /= hh;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        dv(j - 1) = -hh;
      } else {
        dv(j - 1) = hh;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = 0; k < d_; ++k) {
        const double t1 = J_(k, j - 1);
        const double t2 = J_(k, j);
        J_(k, j - 1) = t1 * cc + t2 * ss;
        J_(k, j) = xny * (t1 + J_(k, j - 1)) - t2;
      }
    }
    if (q >= d_ || std::abs(dv(q)) <= 1e-12 * r_norm_) return false;
    R_.col(q).head(q + 1) = dv.head(q + 1);
    r_norm_ = std::max(r_norm_, std::abs(dv(q)));
    active_.push_back(p);
    in_active_[static_cast<std::size_t>(p)] = true;
    return true;
  }

  /// Removes active position `pos`; `mult` has one entry per active
  /// constraint, possibly followed by extra trailing entries.
  void remove_active(Eigen::Index pos, Eigen::VectorXd& mult) {
    const Eigen::Index q = static_cast<Eigen::Index>(active_.size());
    in_active_[static_cast<std::size_t>(active_[static_cast<std::size_t>(pos)])] = false;
    active_.erase(active_.begin() + pos);
    const Eigen::Index len = mult.size();
    for (Eigen::Index k = pos; k + 1 < len; ++k) mult(k) = mult(k + 1);
    mult.conservativeResize(len - 1);
    for (Eigen::Index j = pos; j + 1 < q; ++j) R_.col(j) = R_.col(j + 1);
    R_.col(q - 1).setZero();
    const Eigen::Index nq = q - 1;
    for (Eigen::Index j = pos; j < nq; ++j) {
      double cc = R_(j, j);
      double ss = R_(j + 1, j);
      const double hh = std::hypot(cc, ss);
      if (hh == 0.0) continue;
      cc /= hh;
      ss /= hh;
      R_(j + 1, j) = 0.0;
      if (cc < 0.0) {
        R_(j, j) = -hh;
        cc = -cc;
        ss = -ss;
      } else {
        R_(j, j) = hh;
      }
      const double xny = ss / (1.0 + cc);
      for (Eigen::Index k = j + 1; k < nq; ++k) {
        const double t1 = R_(j, k);
        const double t2 = R_(j + 1, k);
        R_(j, k) = t1 * cc + t2 * ss;
        R_(j + 1, k) = xny * (t1 + R_(j, k)) - t2;
      }
      for (Eigen::Index k = 0; k < d_; ++k) {
        const double t1 = J_(k, j);
        const double t2 = J_(k, j + 1);
        J_(k, j) = t1 * cc + t2 * ss;
        J_(k, j + 1) = xny * (J_(k, j) + t1) - t2;
      }
    }
  }

  const Eigen::MatrixXd& N_;
  const Eigen::VectorXd& b_;
  Eigen::Index d_;
  double tol_;
  std::size_t max_iter_;

  Point x_;
  Eigen::MatrixXd J_;
  Eigen::MatrixXd R_;
  std::vector<Eigen::Index> active_;
  std::vector<bool> in_active_;
  Eigen::VectorXd u_;
  double r_norm_ = 1.0;
  std::size_t iterations_ = 0;
};

}  // namespace detail

/// Euclidean projection of y onto {x : G x <= h}.
struct ProjectionResult {
  Point point;
  bool feasible = false;
  bool converged = true;
};

inline ProjectionResult project_onto_polyhedron(const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                                                const Point& y, const QclpTolerances& tol = {}) {
  const auto poly = detail::normalize(G, h);
  if (poly.empty) return {y, false, true};
  detail::ProjectionSolver solver(poly.N, poly.b, tol.feasibility * 1e-2, tol.max_iterations);
  const auto res = solver.project(y);
  if (res == detail::ProjectionSolver::Result::infeasible) return {y, false, true};
  if (res == detail::ProjectionSolver::Result::not_converged) return {solver.x(), false, false};
  return {solver.x(), true, true};
}

namespace detail {

inline QclpSolution finish(const QclpProblem& p, Point x, std::size_t iterations) {
  // Ball activity is solved from a quadratic; clip round-off back onto the sphere.
  const double dist = (x - p.ball_center).norm();
  if (dist > p.ball_radius) x = p.ball_center + (x - p.ball_center) * (p.ball_radius / dist);
  QclpSolution sol;
  sol.objective_value = p.value_at(x);
  sol.point = std::move(x);
  sol.status = QclpStatus::optimal;
  sol.iterations = iterations;
  return sol;
}

/// Bisection on the path parameter, each point computed by a fresh projection.
inline QclpSolution solve_by_bisection(const QclpProblem& p, const NormalizedPolyhedron& poly,
                                       const QclpTolerances& tol) {
  ProjectionSolver solver(poly.N, poly.b, tol.feasibility * 1e-2, tol.max_iterations);
  const double r = p.ball_radius;
  auto radius_at = [&](double t, Point& out) {
    const auto res = solver.project(p.ball_center + t * p.objective);
    if (res != ProjectionSolver::Result::ok) return std::numeric_limits<double>::quiet_NaN();
    out = solver.x();
    return (out - p.ball_center).norm();
  };
  Point x_lo;
  double lo = 0.0;
  const double base = radius_at(0.0, x_lo);
  if (std::isnan(base)) return {p.ball_center, -std::numeric_limits<double>::infinity(), QclpStatus::not_converged};
  double hi = std::max(r, 1.0);
  Point x_hi;
  std::size_t it = 0;
  while (true) {
    const double rh = radius_at(hi, x_hi);
    if (std::isnan(rh)) return {x_lo, p.value_at(x_lo), QclpStatus::not_converged};
    if (rh > r) break;
    // The projection path has stopped: the linear optimum lies inside the ball.
    const bool settled = it > 0 && (x_hi - x_lo).norm() <= 1e-12 * std::max(1.0, x_hi.norm());
    x_lo = x_hi;
    lo = hi;
    hi *= 4.0;
    if (settled || ++it > 60) return finish(p, x_lo, it);
  }
  for (int k = 0; k < 200 && hi - lo > 1e-15 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    Point x_mid;
    const double rm = radius_at(mid, x_mid);
    if (std::isnan(rm)) return {x_lo, p.value_at(x_lo), QclpStatus::not_converged};
    if (rm <= r) {
      lo = mid;
      x_lo = x_mid;
    } else {
      hi = mid;
    }
  }
  return finish(p, x_lo, it + 200);
}

}  // namespace detail

/// Maximises the problem's linear objective over polyhedron and ball.
inline QclpSolution solve_qclp(const QclpProblem& p, const QclpTolerances& tol = {}) {
  if (!(p.ball_radius > 0.0)) throw std::invalid_argument("solve_qclp: ball radius must be positive");
  if (p.G.cols() != p.dim() || p.h.size() != p.G.rows() || p.ball_center.size() != p.dim() ||
      p.offset.size() != p.dim())
    throw DimensionError("solve_qclp: inconsistent problem dimensions");
  QclpSolution infeasible{p.ball_center, -std::numeric_limits<double>::infinity(), QclpStatus::infeasible, 0};
  if (p.shadowed) return infeasible;

  const auto poly = detail::normalize(p.G, p.h);
  if (poly.empty) return infeasible;
  const double r = p.ball_radius;
  const Point& m = p.ball_center;
  const Point& a = p.objective;

  detail::ProjectionSolver solver(poly.N, poly.b, tol.feasibility * 1e-2, tol.max_iterations);
  const auto start = solver.project(m);
  if (start == detail::ProjectionSolver::Result::infeasible) return infeasible;
  if (start == detail::ProjectionSolver::Result::not_converged) return detail::solve_by_bisection(p, poly, tol);
  if ((solver.x() - m).norm() > r * (1.0 + 1e-12) + tol.feasibility * 1e-2) {
    infeasible.iterations = solver.iterations();
    return infeasible;
  }
  if (a.norm() == 0.0) return detail::finish(p, solver.x(), solver.iterations());

  const Eigen::Index m_cons = poly.N.cols();
  const double a_scale = a.norm();
  std::size_t it = solver.iterations();
  for (; it < tol.max_iterations; ++it) {
    Point& x = solver.x_mut();
    const Point dx = solver.null_space_part(a);
    const Eigen::VectorXd du = solver.multiplier_rate(a);
    const Eigen::VectorXd& u = solver.multipliers();
    const bool moving = dx.norm() > 1e-13 * a_scale;

    double step = std::numeric_limits<double>::infinity();
    int kind = 0;  // 1 ball, 2 drop, 3 add
    Eigen::Index which = -1;

    for (Eigen::Index k = 0; k < du.size(); ++k) {
      if (du(k) < -1e-15 * a_scale) {
        const double s = std::max(0.0, -u(k) / du(k));
        if (s < step) {
          step = s;
          kind = 2;
          which = k;
        }
      }
    }
    if (moving) {
      const Point off = x - m;
      const double qa = dx.squaredNorm();
      const double qb = off.dot(dx);
      const double qc = off.squaredNorm() - r * r;
      const double disc = std::max(0.0, qb * qb - qa * qc);
      // Stable positive root of qa s^2 + 2 qb s + qc = 0 with qc <= 0.
      const double s_ball = qc >= 0.0 ? 0.0 : (qb >= 0.0 ? -qc / (qb + std::sqrt(disc)) : (std::sqrt(disc) - qb) / qa);
      if (s_ball <= step) {
        step = s_ball;
        kind = 1;
      }
      if (m_cons > 0) {
        const Eigen::VectorXd rate = poly.N.transpose() * dx;
        const Eigen::VectorXd slack = poly.N.transpose() * x - poly.b;
        for (Eigen::Index j = 0; j < m_cons; ++j) {
          if (solver.is_active(j) || rate(j) >= -1e-15) continue;
          const double s = std::max(0.0, slack(j)) / -rate(j);
          if (s < step) {
            step = s;
            kind = 3;
            which = j;
          }
        }
      }
    }

    if (kind == 0) return detail::finish(p, x, it);  // path has stopped: linear optimum inside the ball
    x += step * dx;
    solver.multipliers_mut() += step * du;
    if (kind == 1) return detail::finish(p, x, it);
    if (kind == 2) {
      solver.deactivate(which);
    } else if (!solver.activate(which)) {
      return detail::solve_by_bisection(p, poly, tol);
    }
  }
  return detail::solve_by_bisection(p, poly, tol);
}

/// Voronoi cell of point i intersected with the acceptance ball around the
/// working-set mean: rows 2(x_j - x_i) . x <= x_j.x_j - x_i.x_i for j != i.
inline QclpProblem build_cell_problem(const Eigen::MatrixXd& points, Eigen::Index i, const Point& direction,
                                      const Point& ball_center, double radius) {
  const Eigen::Index n = points.cols();
  if (i < 0 || i >= n) throw std::out_of_range("build_cell_problem: invalid index");
  if (direction.size() != points.rows() || ball_center.size() != points.rows())
    throw DimensionError("build_cell_problem: dimension mismatch");
  QclpProblem p;
  p.objective = direction;
  p.offset = points.col(i);
  p.ball_center = ball_center;
  p.ball_radius = radius;
  p.G.resize(n - 1, points.rows());
  p.h.resize(n - 1);
  const Point xi = points.col(i);
  const double xi2 = xi.squaredNorm();
  Eigen::Index row = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i) continue;
    const Point diff = points.col(j) - xi;
    if (diff.squaredNorm() == 0.0) {
      if (j < i) p.shadowed = true;
      p.dropped.push_back(static_cast<std::size_t>(j));
      continue;
    }
    p.G.row(row) = 2.0 * diff.transpose();
    p.h(row) = points.col(j).squaredNorm() - xi2;
    ++row;
  }
  p.G.conservativeResize(row, Eigen::NoChange);
  p.h.conservativeResize(row);
  return p;
}

inline QclpProblem build_cell_problem(const WorkingSet& ws, std::size_t i, const Point& direction, double radius) {
  return build_cell_problem(ws.as_columns(), static_cast<Eigen::Index>(i), direction, ws.mean(), radius);
}

struct PruneDecision {
  bool feasible = false;  ///< the improving part of the cell is nonempty
  double bound = std::numeric_limits<double>::infinity();  ///< closest distance of that part to the ball center
  bool skip = true;
};

/// Skip test for a cell given the best objective found so far: the cell is
/// restricted to (x - x_i) . a >= best_so_far, and the distance of that region
/// to the ball center is computed by projection. If it exceeds the radius no
/// improving point lies inside the ball and the cell's QCLP can be skipped.
inline PruneDecision aux_qp_prune(const QclpProblem& cell, double best_so_far, const QclpTolerances& tol = {}) {
  PruneDecision out;
  if (cell.shadowed) return out;
  Eigen::MatrixXd G = cell.G;
  Eigen::VectorXd h = cell.h;
  if (std::isfinite(best_so_far)) {
    G.conservativeResize(G.rows() + 1, Eigen::NoChange);
    h.conservativeResize(h.size() + 1);
    G.row(G.rows() - 1) = -cell.objective.transpose();
    h(h.size() - 1) = -(best_so_far + cell.objective.dot(cell.offset));
  } else if (std::isnan(best_so_far)) {
    throw std::invalid_argument("aux_qp_prune: best_so_far must not be NaN");
  }
  const auto proj = project_onto_polyhedron(G, h, cell.ball_center, tol);
  if (!proj.converged) {
    out.skip = false;  // undecided: let the full solve run
    out.feasible = true;
    return out;
  }
  if (!proj.feasible) return out;
  out.feasible = true;
  out.bound = (proj.point - cell.ball_center).norm();
  out.skip = out.bound > cell.ball_radius * (1.0 + 1e-12);
  return out;
}

/// Dense grid search over the ball's bounding box (test oracle, d <= 3).
inline QclpSolution brute_force_oracle(const QclpProblem& p, double grid_step) {
  const Eigen::Index d = p.dim();
  if (d < 1 || d > 3) throw std::invalid_argument("brute_force_oracle: dimension must be 1..3");
  if (!(grid_step > 0.0)) throw std::invalid_argument("brute_force_oracle: grid step must be positive");
  QclpSolution best{p.ball_center, -std::numeric_limits<double>::infinity(), QclpStatus::infeasible, 0};
  if (p.shadowed) return best;
  const double r = p.ball_radius;
  const auto steps = static_cast<long>(std::ceil(2.0 * r / grid_step));
  const double r2 = r * r;
  std::vector<long> idx(static_cast<std::size_t>(d), 0);
  Point x(d);
  while (true) {
    for (Eigen::Index k = 0; k < d; ++k)
      x(k) = p.ball_center(k) - r + static_cast<double>(idx[static_cast<std::size_t>(k)]) * grid_step;
    if ((x - p.ball_center).squaredNorm() <= r2 && (p.G.rows() == 0 || (p.G * x - p.h).maxCoeff() <= 0.0)) {
      const double v = p.value_at(x);
      if (v > best.objective_value) {
        best.objective_value = v;
        best.point = x;
        best.status = QclpStatus::optimal;
      }
    }
    ++best.iterations;
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] > steps) idx[k++] = 0;
    if (k == idx.size()) break;
  }
  return best;
}

}  // namespace csec
