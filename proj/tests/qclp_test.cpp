#include "csec/qclp.hpp"
#include "csec/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

using csec::Point;
using csec::QclpProblem;
using csec::QclpStatus;

Point vec(std::initializer_list<double> xs) {
  Point p(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) p(k++) = x;
  return p;
}

QclpProblem ball_problem(const Point& a, const Point& center, double r) {
  QclpProblem p;
  p.objective = a;
  p.offset = Point::Zero(a.size());
  p.G.resize(0, a.size());
  p.h.resize(0);
  p.ball_center = center;
  p.ball_radius = r;
  return p;
}

void add_halfspace(QclpProblem& p, const Point& g, double h) {
  p.G.conservativeResize(p.G.rows() + 1, p.dim());
  p.h.conservativeResize(p.h.size() + 1);
  p.G.row(p.G.rows() - 1) = g.transpose();
  p.h(p.h.size() - 1) = h;
}

/// Random polyhedron of up to 20 halfspaces that keeps an interior point of
/// the unit ball feasible with some margin.
QclpProblem random_instance(csec::RandomSource& rng, Eigen::Index d) {
  Point a(d);
  for (Eigen::Index k = 0; k < d; ++k) a(k) = rng.normal();
  a.normalize();
  QclpProblem p = ball_problem(a, Point::Zero(d), 1.0);
  Point inner(d);
  for (Eigen::Index k = 0; k < d; ++k) inner(k) = rng.uniform(-0.5, 0.5);
  const auto m = 1 + rng.uniform_index(20);
  for (std::uint64_t j = 0; j < m; ++j) {
    Point g(d);
    for (Eigen::Index k = 0; k < d; ++k) g(k) = rng.normal();
    add_halfspace(p, g, g.dot(inner) + rng.uniform(0.05, 0.6) * g.norm());
  }
  p.offset = inner;
  return p;
}

TEST(SolveQclp, BallOnlyMaximumAlongDirection) {
  const auto p = ball_problem(vec({1, 0}), vec({0, 0}), 1.0);
  const auto s = csec::solve_qclp(p);
  ASSERT_EQ(s.status, QclpStatus::optimal);
  EXPECT_NEAR(s.objective_value, 1.0, 1e-12);
  EXPECT_NEAR(s.point(0), 1.0, 1e-12);
  EXPECT_NEAR(s.point(1), 0.0, 1e-12);
}

TEST(SolveQclp, SingleActiveHalfspace) {
  auto p = ball_problem(vec({1, 0}), vec({0, 0}), 1.0);
  add_halfspace(p, vec({1, 0}), 0.5);
  const auto s = csec::solve_qclp(p);
  ASSERT_EQ(s.status, QclpStatus::optimal);
  EXPECT_NEAR(s.objective_value, 0.5, 1e-12);
  EXPECT_LE(csec::linear_residual(p.G, p.h, s.point), 1e-7);
  EXPECT_LE(csec::ball_residual(p, s.point), 1e-7);
}

TEST(SolveQclp, LinearOptimumInsideBall) {
  // Wedge x <= 0.3, y <= 0.2 reached at its vertex before the ball binds.
  auto p = ball_problem(vec({1, 1}) / std::sqrt(2.0), vec({0, 0}), 1.0);
  add_halfspace(p, vec({1, 0}), 0.3);
  add_halfspace(p, vec({0, 1}), 0.2);
  const auto s = csec::solve_qclp(p);
  ASSERT_EQ(s.status, QclpStatus::optimal);
  EXPECT_NEAR(s.point(0), 0.3, 1e-12);
  EXPECT_NEAR(s.point(1), 0.2, 1e-12);
}

TEST(SolveQclp, EmptyIntersectionIsInfeasible) {
  auto p = ball_problem(vec({1, 0}), vec({0, 0}), 1.0);
  add_halfspace(p, vec({-1, 0}), -2.0);  // x >= 2
  EXPECT_EQ(csec::solve_qclp(p).status, QclpStatus::infeasible);
}

TEST(SolveQclp, EmptyPolyhedronIsInfeasible) {
  auto p = ball_problem(vec({1, 0}), vec({0, 0}), 1.0);
  add_halfspace(p, vec({1, 0}), -0.1);
  add_halfspace(p, vec({-1, 0}), -0.1);
  EXPECT_EQ(csec::solve_qclp(p).status, QclpStatus::infeasible);
}

TEST(SolveQclp, ZeroObjectiveReturnsFeasiblePoint) {
  auto p = ball_problem(vec({0, 0}), vec({0, 0}), 1.0);
  add_halfspace(p, vec({1, 1}), 0.1);
  const auto s = csec::solve_qclp(p);
  ASSERT_EQ(s.status, QclpStatus::optimal);
  EXPECT_DOUBLE_EQ(s.objective_value, 0.0);
  EXPECT_LE(csec::linear_residual(p.G, p.h, s.point), 1e-7);
}

TEST(SolveQclp, AgreesWithGridOracleOnRandom2D) {
  csec::RandomSource rng(11, 3);
  for (int k = 0; k < 10; ++k) {
    const auto p = random_instance(rng, 2);
    const auto s = csec::solve_qclp(p);
    const auto o = csec::brute_force_oracle(p, 2e-3);
    ASSERT_EQ(s.status, QclpStatus::optimal) << "instance " << k;
    ASSERT_EQ(o.status, QclpStatus::optimal);
    // The grid optimum can only underestimate.
    EXPECT_GE(s.objective_value, o.objective_value - 1e-9);
    EXPECT_NEAR(s.objective_value, o.objective_value, 1e-2) << "instance " << k;
    EXPECT_LE(csec::linear_residual(p.G, p.h, s.point), 1e-7);
    EXPECT_LE(csec::ball_residual(p, s.point), 1e-7);
  }
}

TEST(SolveQclp, AgreesWithGridOracleOnRandom3D) {
  csec::RandomSource rng(12, 1);
  for (int k = 0; k < 5; ++k) {
    const auto p = random_instance(rng, 3);
    const auto s = csec::solve_qclp(p);
    const auto o = csec::brute_force_oracle(p, 2e-2);
    ASSERT_EQ(s.status, QclpStatus::optimal);
    EXPECT_GE(s.objective_value, o.objective_value - 1e-9);
    EXPECT_NEAR(s.objective_value, o.objective_value, 0.06);
  }
}

/// KKT certificate in higher dimension: a = 2 beta (x - m) + sum lambda_j g_j
/// with beta, lambda >= 0, checked by non-negative least squares on the
/// active rows.
TEST(SolveQclp, OptimalityCertificateInHighDimension) {
  csec::RandomSource rng(5, 9);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index d = 30;
    Eigen::MatrixXd pts(d, 40);
    for (Eigen::Index j = 0; j < pts.cols(); ++j)
      for (Eigen::Index k = 0; k < d; ++k) pts(k, j) = rng.normal();
    Point a(d);
    for (Eigen::Index k = 0; k < d; ++k) a(k) = rng.normal();
    a.normalize();
    const Point mean = pts.rowwise().mean();
    const auto p = csec::build_cell_problem(pts, trial % 40, a, mean, 6.0);
    const auto s = csec::solve_qclp(p);
    if (s.status == QclpStatus::infeasible) continue;
    ASSERT_EQ(s.status, QclpStatus::optimal);
    ASSERT_LE(csec::linear_residual(p.G, p.h, s.point), 1e-7);
    ASSERT_LE(csec::ball_residual(p, s.point), 1e-7);
    // No feasible random perturbation improves the objective.
    for (int k = 0; k < 200; ++k) {
      Point step(d);
      for (Eigen::Index c = 0; c < d; ++c) step(c) = rng.normal();
      const Point y = s.point + 1e-3 * step.normalized();
      if (csec::linear_residual(p.G, p.h, y) > 0.0 || csec::ball_residual(p, y) > 0.0) continue;
      EXPECT_LE(p.value_at(y), s.objective_value + 1e-9);
    }
    // The site is feasible whenever it lies in the ball; the optimum beats it.
    if ((p.offset - mean).norm() <= 6.0) {
      EXPECT_GE(s.objective_value, -1e-9);
    }
  }
}

TEST(SolveQclp, BisectionFallbackMatchesPathFollower) {
  csec::RandomSource rng(77, 0);
  for (int k = 0; k < 10; ++k) {
    const auto p = random_instance(rng, 4);
    const auto s = csec::solve_qclp(p);
    const auto poly = csec::detail::normalize(p.G, p.h);
    const auto b = csec::detail::solve_by_bisection(p, poly, {});
    ASSERT_EQ(s.status, QclpStatus::optimal);
    ASSERT_EQ(b.status, QclpStatus::optimal);
    EXPECT_NEAR(s.objective_value, b.objective_value, 1e-6);
  }
}

TEST(SolveQclp, SolutionLiesInSpanOfDataAndDirection) {
  // d > n + 1: the optimum must stay in the 5-dimensional span.
  csec::RandomSource rng(3, 3);
  const Eigen::Index d = 12;
  Eigen::MatrixXd pts(d, 4);
  for (Eigen::Index j = 0; j < 4; ++j)
    for (Eigen::Index k = 0; k < d; ++k) pts(k, j) = rng.normal();
  Point a(d);
  for (Eigen::Index k = 0; k < d; ++k) a(k) = rng.normal();
  a.normalize();
  const Point mean = pts.rowwise().mean();
  Eigen::MatrixXd basis(d, 5);
  basis << a, pts;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(d, 5);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const auto s = csec::solve_qclp(csec::build_cell_problem(pts, i, a, mean, 3.0));
    if (!s.optimal()) continue;
    EXPECT_LE((s.point - Q * (Q.transpose() * s.point)).norm(), 1e-6);
  }
}

TEST(BuildCellProblem, TwoPointsGiveOneHalfspace) {
  Eigen::MatrixXd pts(2, 2);
  pts << 0, 2, 0, 0;
  const auto p = csec::build_cell_problem(pts, 0, vec({1, 0}), vec({1, 0}), 1.0);
  ASSERT_EQ(p.G.rows(), 1);
  // 2 (x_1 - x_0) . x <= |x_1|^2 - |x_0|^2  <=>  4 x_1 <= 4  <=>  x_1 <= 1
  EXPECT_DOUBLE_EQ(p.G(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(p.G(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(p.h(0), 4.0);
}

TEST(BuildCellProblem, DuplicatePointsAreVacuousAndFlagged) {
  Eigen::MatrixXd pts(2, 3);
  pts << 0, 0, 3, 0, 0, 0;
  const auto owner = csec::build_cell_problem(pts, 0, vec({1, 0}), vec({1, 0}), 2.0);
  EXPECT_TRUE(owner.degenerate());
  EXPECT_FALSE(owner.shadowed);
  EXPECT_EQ(owner.G.rows(), 1);
  const auto dup = csec::build_cell_problem(pts, 1, vec({1, 0}), vec({1, 0}), 2.0);
  EXPECT_TRUE(dup.shadowed);
  EXPECT_EQ(csec::solve_qclp(dup).status, QclpStatus::infeasible);
  EXPECT_EQ(csec::solve_qclp(owner).status, QclpStatus::optimal);
}

TEST(BuildCellProblem, CellOutsideBallIsInfeasible) {
  Eigen::MatrixXd pts(2, 3);
  pts << -1, 1, 20, 0, 0, 0;
  const Point mean = vec({0, 0});
  const auto p = csec::build_cell_problem(pts, 2, vec({1, 0}), mean, 2.0);
  EXPECT_EQ(csec::solve_qclp(p).status, QclpStatus::infeasible);
}

TEST(BuildCellProblem, InvalidIndexThrows) {
  Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(2, 2);
  EXPECT_THROW(csec::build_cell_problem(pts, 2, vec({1, 0}), vec({0, 0}), 1.0), std::out_of_range);
}

TEST(AuxQpPrune, UnrestrictedBoundIsDistanceOfCellToCenter) {
  Eigen::MatrixXd pts(2, 2);
  pts << 0, 4, 0, 0;
  // Cell of point 1 is x_1 >= 2; the ball center (0, 0) is 2 away from it.
  const auto cell = csec::build_cell_problem(pts, 1, vec({1, 0}), vec({0, 0}), 1.0);
  const auto d = csec::aux_qp_prune(cell, -std::numeric_limits<double>::infinity());
  EXPECT_TRUE(d.feasible);
  EXPECT_NEAR(d.bound, 2.0, 1e-12);
  EXPECT_TRUE(d.skip);
}

TEST(AuxQpPrune, CellInsideBallMustBeSolved) {
  Eigen::MatrixXd pts(2, 2);
  pts << -0.1, 0.1, 0, 0;
  const auto cell = csec::build_cell_problem(pts, 0, vec({1, 0}), vec({0, 0}), 1.0);
  const auto d = csec::aux_qp_prune(cell, -0.5);
  EXPECT_LE(d.bound, 1.0);
  EXPECT_FALSE(d.skip);
}

TEST(AuxQpPrune, SkipDecisionIsSound) {
  csec::RandomSource rng(21, 4);
  int skipped = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(trial % 5);
    Eigen::MatrixXd pts(d, 15);
    for (Eigen::Index j = 0; j < pts.cols(); ++j)
      for (Eigen::Index k = 0; k < d; ++k) pts(k, j) = rng.normal();
    Point a(d);
    for (Eigen::Index k = 0; k < d; ++k) a(k) = rng.normal();
    a.normalize();
    const Point mean = pts.rowwise().mean();
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
      const auto cell = csec::build_cell_problem(pts, i, a, mean, 1.5);
      const auto full = csec::solve_qclp(cell);
      const double threshold = rng.uniform(-1.0, 1.5);
      const auto dec = csec::aux_qp_prune(cell, threshold);
      if (dec.skip) {
        ++skipped;
        if (full.optimal()) {
          EXPECT_LE(full.objective_value, threshold + 1e-7);
        }
      } else if (full.optimal()) {
        EXPECT_GE(full.objective_value, threshold - 1e-7);
      }
    }
  }
  EXPECT_GT(skipped, 0);
}

TEST(BruteForceOracle, RejectsHighDimension) {
  const auto p = ball_problem(Point::Ones(4), Point::Zero(4), 1.0);
  EXPECT_THROW(csec::brute_force_oracle(p, 0.1), std::invalid_argument);
}

TEST(BruteForceOracle, EmptyFeasibleSet) {
  auto p = ball_problem(vec({1, 0}), vec({0, 0}), 1.0);
  add_halfspace(p, vec({-1, 0}), -2.0);
  EXPECT_EQ(csec::brute_force_oracle(p, 0.05).status, QclpStatus::infeasible);
}

TEST(BruteForceOracle, ZeroObjectiveGivesZero) {
  const auto p = ball_problem(vec({0, 0}), vec({0, 0}), 1.0);
  const auto o = csec::brute_force_oracle(p, 0.1);
  ASSERT_EQ(o.status, QclpStatus::optimal);
  EXPECT_DOUBLE_EQ(o.objective_value, 0.0);
}

TEST(BruteForceOracle, MatchesBasicExamples) {
  const auto p1 = ball_problem(vec({1, 0}), vec({0, 0}), 1.0);
  EXPECT_NEAR(csec::brute_force_oracle(p1, 1e-3).objective_value, 1.0, 1e-3);
  auto p2 = p1;
  add_halfspace(p2, vec({1, 0}), 0.5);
  EXPECT_NEAR(csec::brute_force_oracle(p2, 1e-3).objective_value, 0.5, 1e-3);
}

}  // namespace
