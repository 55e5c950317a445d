#pragma once

#include "core.hpp"
#include "random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace csec {

enum class UpdateRule { infinite, average_out, oldest_out, random_out, nearest_out };

inline std::string_view to_string(UpdateRule rule) {
  switch (rule) {
    case UpdateRule::infinite: return "infinite";
    case UpdateRule::average_out: return "average_out";
    case UpdateRule::oldest_out: return "oldest_out";
    case UpdateRule::random_out: return "random_out";
    case UpdateRule::nearest_out: return "nearest_out";
  }
  return "unknown";
}

inline UpdateRule parse_update_rule(std::string_view s) {
  if (s == "infinite") return UpdateRule::infinite;
  if (s == "average_out" || s == "average-out") return UpdateRule::average_out;
  if (s == "oldest_out" || s == "oldest-out") return UpdateRule::oldest_out;
  if (s == "random_out" || s == "random-out") return UpdateRule::random_out;
  if (s == "nearest_out" || s == "nearest-out") return UpdateRule::nearest_out;
  throw std::invalid_argument("unknown update rule: " + std::string(s));
}

inline bool needs_working_set(UpdateRule rule) {
  return rule == UpdateRule::oldest_out || rule == UpdateRule::random_out ||
         rule == UpdateRule::nearest_out;
}

/// Infinite-horizon learner whose center is the mean of `seen` points.
/// The window is the divisor of the next update, so it starts at seen + 1.
inline CentroidState running_mean_state(Point center, double radius, std::size_t seen) {
  return CentroidState::from_center(std::move(center), radius, seen + 1);
}

/// c' = (1 - 1/n) c + x/n, then n grows by one.
inline CentroidState update_infinite(CentroidState state, const Point& x) {
  require_same_dim(state.center, x, "update_infinite");
  const double inv_n = 1.0 / static_cast<double>(state.window);
  state.center = (1.0 - inv_n) * state.center + inv_n * x;
  state.window += 1;
  if (state.working_set) state.working_set->push(x);
  return state;
}

struct FiniteUpdate {
  CentroidState state;
  Point removed;
  /// Slot that received x; absent for average-out.
  std::optional<std::size_t> removed_index;
};

/// c' = c + (x - x_removed)/n with the outgoing point picked by the rule.
/// random_out draws its index from rng.
inline FiniteUpdate update_finite(CentroidState state, const Point& x, UpdateRule rule,
                                  RandomSource* rng = nullptr) {
  require_same_dim(state.center, x, "update_finite");
  if (rule == UpdateRule::infinite)
    throw std::invalid_argument("update_finite: infinite rule has no outgoing point");
  const double inv_n = 1.0 / static_cast<double>(state.window);

  if (rule == UpdateRule::average_out) {
    Point removed = state.center;
    state.center += inv_n * (x - removed);
    return {std::move(state), std::move(removed), std::nullopt};
  }

  if (!state.working_set || state.working_set->empty())
    throw std::invalid_argument("update_finite: rule requires a non-empty working set");
  WorkingSet& ws = *state.working_set;
  std::size_t idx = 0;
  switch (rule) {
    case UpdateRule::oldest_out: idx = ws.oldest(); break;
    case UpdateRule::nearest_out: idx = ws.nearest(x); break;
    case UpdateRule::random_out:
      if (rng == nullptr) throw std::invalid_argument("update_finite: random_out needs a RandomSource");
      idx = static_cast<std::size_t>(rng->uniform_index(ws.size()));
      break;
    default: break;
  }
  Point removed = ws.replace(idx, x);
  state.center += inv_n * (x - removed);
  return {std::move(state), std::move(removed), idx};
}

/// Replaces a chosen slot directly; the attack engine uses this after it has
/// verified that x's nearest neighbour is that slot.
inline FiniteUpdate replace_slot(CentroidState state, std::size_t idx, const Point& x) {
  if (!state.working_set) throw std::invalid_argument("replace_slot: no working set");
  const double inv_n = 1.0 / static_cast<double>(state.window);
  Point removed = state.working_set->replace(idx, x);
  state.center += inv_n * (x - removed);
  return {std::move(state), std::move(removed), idx};
}

/// Empirical (1 - alpha)-quantile of distances to center, with linear
/// interpolation between order statistics.
inline double radius_from_quantile(std::span<const Point> points, const Point& center, double alpha) {
  if (points.empty()) throw std::invalid_argument("radius_from_quantile: empty input");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("radius_from_quantile: alpha must lie in (0, 1)");
  std::vector<double> d;
  d.reserve(points.size());
  for (const auto& p : points) {
    require_same_dim(p, center, "radius_from_quantile");
    d.push_back((p - center).norm());
  }
  std::sort(d.begin(), d.end());
  const double pos = (1.0 - alpha) * static_cast<double>(d.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, d.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return d[lo] + frac * (d[hi] - d[lo]);
}

/// Fraction of holdout points the state would reject.
inline double estimate_fp_rate(const CentroidState& state, std::span<const Point> holdout) {
  if (holdout.empty()) throw std::invalid_argument("estimate_fp_rate: empty holdout");
  std::size_t out = 0;
  for (const auto& p : holdout)
    if (anomaly_score(state, p) > state.radius) ++out;
  return static_cast<double>(out) / static_cast<double>(holdout.size());
}

/// Learner with false-positive protection: innocuous points are applied only
/// when accepted, and an estimated FP rate above alpha reloads the safe state
/// and suspends online updates.
struct ProtectedLearnerState {
  CentroidState state;
  double alpha = 0.0;
  CentroidState safe_state;
  std::vector<Point> holdout;
  /// Steps without updates after a reset; SIZE_MAX keeps updates off for good.
  std::size_t lockout_steps = std::numeric_limits<std::size_t>::max();
  std::size_t lockout_remaining = 0;
  std::size_t resets = 0;
  double last_fp = 0.0;  ///< holdout FP of the current state
  double safe_fp = 0.0;

  static ProtectedLearnerState make(CentroidState initial, double alpha, std::vector<Point> holdout) {
    if (holdout.empty()) throw std::invalid_argument("ProtectedLearnerState: empty holdout");
    if (!(alpha >= 0.0 && alpha < 1.0))
      throw std::invalid_argument("ProtectedLearnerState: alpha must lie in [0, 1)");
    ProtectedLearnerState p{initial, alpha, initial, std::move(holdout)};
    p.last_fp = p.safe_fp = estimate_fp_rate(p.state, p.holdout);
    return p;
  }

  bool locked() const { return lockout_remaining > 0; }
};

struct ProtectedStepResult {
  bool applied = false;
  bool reset = false;
  double fp = 0.0;  ///< estimate that was compared against alpha
};

/// One step of the protected learner. Adversarial points move the center by
/// (x - c)/n unconditionally (the attacker only emits accepted points);
/// innocuous points only when |x - c| <= r. The FP rate is then re-estimated
/// on the holdout; exceeding alpha restores the safe state.
inline ProtectedStepResult protected_step(ProtectedLearnerState& p, const Point& incoming,
                                          bool is_adversarial) {
  ProtectedStepResult res;
  if (p.locked()) {
    if (p.lockout_remaining != std::numeric_limits<std::size_t>::max()) --p.lockout_remaining;
    return res;
  }
  const bool accept = is_adversarial || anomaly_score(p.state, incoming) <= p.state.radius;
  if (accept) {
    p.state = update_finite(std::move(p.state), incoming, UpdateRule::average_out).state;
    res.applied = true;
  }
  res.fp = p.last_fp = estimate_fp_rate(p.state, p.holdout);
  if (res.fp > p.alpha) {
    p.state = p.safe_state;
    p.last_fp = p.safe_fp;
    p.lockout_remaining = p.lockout_steps;
    ++p.resets;
    res.reset = true;
  }
  return res;
}

// Snapshot serialization ---------------------------------------------------

inline nlohmann::json point_to_json(const Point& p) {
  return nlohmann::json(std::vector<double>(p.data(), p.data() + p.size()));
}

inline Point point_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Point>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json to_json(const CentroidState& s) {
  nlohmann::json j;
  j["format"] = "centroid-state";
  j["version"] = 1;
  j["center"] = point_to_json(s.center);
  j["radius"] = s.radius;
  j["window"] = s.window;
  if (s.working_set) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : s.working_set->points()) pts.push_back(point_to_json(p));
    j["working_set"] = {{"points", pts},
                        {"timestamps", s.working_set->timestamps()},
                        {"next_timestamp", s.working_set->next_timestamp()}};
  }
  return j;
}

inline CentroidState centroid_state_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "centroid-state" || j.value("version", 0) != 1)
    throw std::invalid_argument("centroid state snapshot: unsupported format or version");
  CentroidState s;
  s.center = point_from_json(j.at("center"));
  s.radius = j.at("radius").get<double>();
  s.window = j.at("window").get<std::size_t>();
  if (j.contains("working_set")) {
    const auto& w = j.at("working_set");
    std::vector<Point> pts;
    for (const auto& p : w.at("points")) pts.push_back(point_from_json(p));
    s.working_set = WorkingSet::restore(std::move(pts), w.at("timestamps").get<std::vector<std::uint64_t>>(),
                                        w.at("next_timestamp").get<std::uint64_t>());
  }
  return s;
}

}  // namespace csec
