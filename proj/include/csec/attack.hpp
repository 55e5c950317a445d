#pragma once

// Attack strategies against the centroid learner: closed-form placement for
// the infinite-horizon and average-out learners, the greedy Voronoi-cell
// attack against nearest-out, and the stochastic-model strategy f(X) = X + a.

#include "core.hpp"
#include "csv.hpp"
#include "learner.hpp"
#include "qclp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace csec {

/// c + r a: the accepted point furthest along the attack direction.
inline Point optimal_attack_point(const CentroidState& state, const AttackContext& ctx) {
  require_same_dim(state.center, ctx.direction(), "optimal_attack_point");
  return state.center + state.radius * ctx.direction();
}

/// f(X) = X + a for the unit-radius stochastic models.
inline Point limited_control_strategy(const Point& X, const AttackContext& ctx) {
  require_same_dim(X, ctx.direction(), "limited_control_strategy");
  return X + ctx.direction();
}

struct GreedyConfig {
  QclpTolerances tolerances;
  bool prune = true;       ///< skip cells that provably cannot beat the incumbent
  bool safeguard = true;   ///< replace points about to become immune first
  double nudge = 1e-9;     ///< relative step off a cell boundary to settle nearest-neighbour ties
};

struct CachedSolution {
  Point point;
  double objective_value = 0.0;
  std::size_t iteration = 0;
};

struct GreedyStepInfo {
  std::size_t iteration = 0;
  double displacement = 0.0;  ///< D after the step
  std::size_t replaced_index = 0;
  double objective_value = 0.0;  ///< (x* - x_replaced) . a
  std::size_t skipped_cells = 0;
  std::size_t solved_cells = 0;
  bool override_applied = false;
  bool stalled = false;
  double representer_residual = 0.0;
  double score = 0.0;  ///< anomaly score of the emitted point
};

struct GreedyAttackState {
  std::vector<std::optional<CachedSolution>> cached_solutions;
  std::vector<std::pair<std::size_t, std::size_t>> replaced_history;  ///< (iteration, index)
  std::vector<double> trace;
  std::vector<GreedyStepInfo> steps;
  bool stalled = false;

  std::size_t iterations() const { return trace.size(); }
};

/// Distance of p from span(basis columns), via a thin QR.
inline double span_residual(const Eigen::MatrixXd& basis, const Point& p) {
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::Index rank = qr.rank();
  if (rank == 0) return p.norm();
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(basis.rows(), rank);
  return (p - Q * (Q.transpose() * p)).norm();
}

namespace detail {

inline bool in_cell(const QclpProblem& cell, const Point& x, double tol) {
  return linear_residual(cell.G, cell.h, x) <= tol;
}

/// Moves x slightly toward site i until the learner's nearest-neighbour rule
/// picks i, keeping x inside the ball.
inline Point settle_on_site(const WorkingSet& ws, std::size_t i, Point x, const Point& center, double radius,
                            double nudge) {
  const double scale = std::max(1.0, radius);
  double eta = nudge * scale;
  for (int k = 0; k < 40 && ws.nearest(x) != i; ++k) {
    const Point toward = ws[i] - x;
    const double len = toward.norm();
    if (len == 0.0) break;
    x += std::min(eta, len) * toward / len;
    const double dist = (x - center).norm();
    if (dist > radius) x = center + (x - center) * (radius / dist);
    eta *= 2.0;
  }
  return x;
}

struct CellResult {
  std::optional<QclpSolution> solution;
  bool skipped = false;
};

}  // namespace detail

/// One iteration of the greedy attack against a nearest-out learner.
///
/// Every cell's QCLP is solved or pruned; the cell with the largest
/// objective is the tentative target. Before committing, cached optimal
/// points of the other cells are checked against the post-replacement ball:
/// if any would fall outside (its site would become immune) the site with
/// the largest violation is replaced by its cached point instead.
/// With `normalized`, cell solutions are projected onto the unit sphere and
/// re-checked for cell and ball feasibility; pruning is disabled.
inline GreedyStepInfo greedy_step(CentroidState& state, GreedyAttackState& gs, const AttackContext& ctx,
                                  const GreedyConfig& cfg = {}, bool normalized = false) {
  if (!state.working_set || state.working_set->empty())
    throw std::invalid_argument("greedy_step: nearest-out learner with a working set required");
  const WorkingSet& ws = *state.working_set;
  const std::size_t n = ws.size();
  const double r = state.radius;
  const Point& a = ctx.direction();
  const Point m = state.center;
  require_same_dim(m, a, "greedy_step");
  if (gs.cached_solutions.size() != n) gs.cached_solutions.assign(n, std::nullopt);

  const std::size_t iteration = gs.trace.size();
  const Eigen::MatrixXd X = ws.as_columns();
  const double feas_tol = 10.0 * cfg.tolerances.feasibility * std::max(1.0, r);

  // Candidate order: largest upper bound (m - x_i).a + r first, so the
  // incumbent is strong early and later cells are pruned.
  std::vector<double> upper(n);
  for (std::size_t i = 0; i < n; ++i) upper[i] = (m - ws[i]).dot(a) + r;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return upper[x] > upper[y]; });

  GreedyStepInfo info;
  info.iteration = iteration;
  std::vector<detail::CellResult> results(n);
  std::vector<QclpProblem> cells(n);
  double best = -std::numeric_limits<double>::infinity();
  std::optional<std::size_t> best_index;
  const bool prune = cfg.prune && !normalized;

  for (std::size_t i : order) {
    if (prune && best_index && upper[i] <= best) {
      results[i].skipped = true;
      ++info.skipped_cells;
      continue;
    }
    cells[i] = build_cell_problem(X, static_cast<Eigen::Index>(i), a, m, r);
    const QclpProblem& cell = cells[i];
    if (prune && best_index) {
      const auto dec = aux_qp_prune(cell, best, cfg.tolerances);
      if (dec.skip) {
        results[i].skipped = true;
        ++info.skipped_cells;
        continue;
      }
    }
    auto sol = solve_qclp(cell, cfg.tolerances);
    ++info.solved_cells;
    if (sol.status == QclpStatus::not_converged)
      throw std::runtime_error("greedy_step: cell QCLP did not converge");
    if (!sol.optimal()) continue;
    if (normalized) {
      const double len = sol.point.norm();
      if (len == 0.0) continue;
      sol.point /= len;
      sol.objective_value = cell.value_at(sol.point);
      if (!detail::in_cell(cell, sol.point, feas_tol) || ball_residual(cell, sol.point) > feas_tol) continue;
    }
    gs.cached_solutions[i] = CachedSolution{sol.point, sol.objective_value, iteration};
    results[i].solution = std::move(sol);
    const double v = results[i].solution->objective_value;
    if (!best_index || v > best || (v == best && i < *best_index)) {
      best = v;
      best_index = i;
    }
  }

  if (!best_index) {
    gs.stalled = true;
    info.stalled = true;
    info.displacement = relative_displacement(state, ctx);
    return info;
  }

  std::size_t target = *best_index;
  Point x_star = results[target].solution->point;

  if (cfg.safeguard) {
    const Point m_next = m + (x_star - ws[target]) / static_cast<double>(n);
    double worst = 0.0;
    std::optional<std::size_t> at_risk;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == target || !gs.cached_solutions[j]) continue;
      const Point& xj = gs.cached_solutions[j]->point;
      // Stale entries must still be reachable now: inside the current cell and ball.
      if (gs.cached_solutions[j]->iteration != iteration) {
        if (cells[j].G.rows() == 0 && n > 1) cells[j] = build_cell_problem(X, static_cast<Eigen::Index>(j), a, m, r);
        if (!detail::in_cell(cells[j], xj, feas_tol) || (xj - m).norm() > r + feas_tol) continue;
      }
      const double violation = (xj - m_next).norm() - r;
      if (violation > worst) {
        worst = violation;
        at_risk = j;
      }
    }
    if (at_risk) {
      target = *at_risk;
      x_star = gs.cached_solutions[target]->point;
      info.override_applied = true;
    }
  }

  x_star = detail::settle_on_site(ws, target, std::move(x_star), m, r, cfg.nudge);
  info.score = (x_star - m).norm();

  Eigen::MatrixXd span(X.rows(), X.cols() + 1);
  span << a, X;
  info.representer_residual = span_residual(span, x_star);

  auto upd = update_finite(std::move(state), x_star, UpdateRule::nearest_out);
  state = std::move(upd.state);
  info.replaced_index = *upd.removed_index;
  info.objective_value = (x_star - upd.removed).dot(a);
  gs.cached_solutions[info.replaced_index].reset();
  gs.replaced_history.emplace_back(iteration, info.replaced_index);
  info.displacement = relative_displacement(state, ctx);
  gs.trace.push_back(info.displacement);
  gs.steps.push_back(info);
  return info;
}

inline GreedyStepInfo greedy_step_normalized(CentroidState& state, GreedyAttackState& gs, const AttackContext& ctx,
                                             const GreedyConfig& cfg = {}) {
  return greedy_step(state, gs, ctx, cfg, true);
}

/// Runs `iterations` greedy steps, stopping early on a stall.
inline GreedyAttackState run_greedy_attack(CentroidState& state, const AttackContext& ctx, std::size_t iterations,
                                           const GreedyConfig& cfg = {}, bool normalized = false) {
  GreedyAttackState gs;
  for (std::size_t k = 0; k < iterations; ++k) {
    const auto info = greedy_step(state, gs, ctx, cfg, normalized);
    if (info.stalled) break;
  }
  return gs;
}

/// Trace CSV: iteration,displacement,replaced_index,objective_value,skipped_cells
inline void write_attack_trace(std::ostream& os, const GreedyAttackState& gs) {
  CsvWriter csv(os, {"iteration", "displacement", "replaced_index", "objective_value", "skipped_cells"});
  for (const auto& s : gs.steps)
    csv.row(s.iteration + 1, s.displacement, s.replaced_index, s.objective_value, s.skipped_cells);
}

}  // namespace csec
