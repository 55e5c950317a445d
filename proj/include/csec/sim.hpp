#pragma once

// Monte Carlo harness for the stochastic attack models (limited control,
// false-positive protection), the Gaussian greedy-attack experiment, the
// false-positive sensitivity sweep and the traffic-ratio sweep.

#include "attack.hpp"
#include "bounds.hpp"
#include "core.hpp"
#include "corpus.hpp"
#include "csv.hpp"
#include "kernel.hpp"
#include "kernel_pca.hpp"
#include "learner.hpp"
#include "random.hpp"
#include "stats.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace csec {

enum class SimModel { axiom6, axiom7, greedy_gaussian, fp_sensitivity, nu_sweep };
enum class InnocuousSource { uniform_ball, uniform_circle, corpus_embedding };

inline std::string_view to_string(SimModel m) {
  switch (m) {
    case SimModel::axiom6: return "axiom6";
    case SimModel::axiom7: return "axiom7";
    case SimModel::greedy_gaussian: return "greedy";
    case SimModel::fp_sensitivity: return "fp-sensitivity";
    case SimModel::nu_sweep: return "nu-sweep";
  }
  return "unknown";
}

inline SimModel parse_sim_model(std::string_view s) {
  if (s == "axiom6") return SimModel::axiom6;
  if (s == "axiom7") return SimModel::axiom7;
  if (s == "greedy" || s == "greedy_gaussian") return SimModel::greedy_gaussian;
  if (s == "fp-sensitivity" || s == "fp_sensitivity") return SimModel::fp_sensitivity;
  if (s == "nu-sweep" || s == "nu_sweep") return SimModel::nu_sweep;
  throw std::invalid_argument("unknown model '" + std::string(s) + "'");
}

inline std::string_view to_string(InnocuousSource s) {
  switch (s) {
    case InnocuousSource::uniform_ball: return "uniform_ball";
    case InnocuousSource::uniform_circle: return "uniform_circle";
    case InnocuousSource::corpus_embedding: return "corpus_embedding";
  }
  return "unknown";
}

inline InnocuousSource parse_innocuous_source(std::string_view s) {
  if (s == "uniform_ball" || s == "ball") return InnocuousSource::uniform_ball;
  if (s == "uniform_circle" || s == "circle" || s == "sphere") return InnocuousSource::uniform_circle;
  if (s == "corpus_embedding" || s == "corpus") return InnocuousSource::corpus_embedding;
  throw std::invalid_argument("unknown innocuous source '" + std::string(s) + "'");
}

struct SimConfig {
  SimModel model = SimModel::axiom6;
  double nu = 0.05;
  double alpha = 0.0;
  double eps_second_moment = 1.0;
  std::size_t n = 1000;
  std::size_t iterations = 50000;
  std::size_t repetitions = 10;
  InnocuousSource source = InnocuousSource::uniform_circle;
  /// Innocuous points are drawn from the source scaled by this factor (<= 1).
  double source_radius = 1.0;
  std::size_t dimension = 2;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  /// 0 picks ceil(iterations / 1000).
  std::size_t log_stride = 0;
  /// Holdout sample that estimates the false-positive rate.
  std::size_t holdout_size = 500;
  /// Steps without updates after a false-positive breach; 0 restarts at once.
  std::size_t lockout_steps = 0;

  // Greedy experiment.
  double calibration_alpha = 0.001;
  std::size_t calibration_size = 20000;
  double burn_in_fraction = 0.1;
  bool safeguard = true;

  // Sweeps.
  std::vector<double> nu_grid{0.05, 0.10, 0.14, 0.16};
  double d_crit = 0.18;
  std::size_t training_size = 1000;

  // Corpus-embedding source.
  std::size_t corpus_size = 400;
  std::size_t corpus_k = 3;
  double corpus_diversity = 0.5;

  std::size_t stride() const {
    if (log_stride) return log_stride;
    return std::max<std::size_t>(1, (iterations + 999) / 1000);
  }

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("simulate: iterations must be >= 1");
    if (repetitions < 1) throw std::invalid_argument("simulate: repetitions must be >= 1");
    if (n < 1) throw std::invalid_argument("simulate: n must be >= 1");
    if (dimension < 1) throw std::invalid_argument("simulate: dimension must be >= 1");
    if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("simulate: nu must lie in [0, 1]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("simulate: alpha must lie in [0, 1]");
    if (!(source_radius > 0.0 && source_radius <= 1.0))
      throw std::invalid_argument("simulate: source radius must lie in (0, 1]");
    if (holdout_size < 1) throw std::invalid_argument("simulate: holdout size must be >= 1");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
      throw std::invalid_argument("simulate: burn-in fraction must lie in [0, 1)");
    if (model == SimModel::greedy_gaussian && (dimension < 2 || dimension > n))
      throw std::invalid_argument("simulate: greedy model needs 2 <= d <= n");
    if (model == SimModel::greedy_gaussian && !(calibration_alpha > 0.0 && calibration_alpha < 1.0))
      throw std::invalid_argument("simulate: calibration alpha must lie in (0, 1)");
    for (double v : nu_grid)
      if (!(v >= 0.0 && v < 1.0)) throw std::invalid_argument("simulate: nu grid values must lie in [0, 1)");
  }
};

/// Desk-scale defaults per model.
inline SimConfig default_config(SimModel model) {
  SimConfig c;
  c.model = model;
  switch (model) {
    case SimModel::axiom6:
    case SimModel::axiom7: break;
    case SimModel::greedy_gaussian:
      c.n = 100;
      c.iterations = 500;
      break;
    case SimModel::fp_sensitivity:
      c.iterations = 10000;
      c.holdout_size = 500;
      c.source = InnocuousSource::corpus_embedding;
      c.dimension = 10;
      c.nu_grid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2};
      break;
    case SimModel::nu_sweep:
      c.n = 10000;
      c.iterations = 100000;
      break;
  }
  return c;
}

/// Displacement statistics across repetitions at the logged iterations.
struct Trace {
  std::vector<std::size_t> iteration;
  std::vector<double> mean_D, std_D, se_D, var_D, var_se;
  std::vector<double> bound_E, bound_E_lower, bound_Var;
  std::vector<double> fp_rate;  ///< mean holdout FP estimate (NaN when not tracked)
  std::vector<std::size_t> resets;  ///< repetitions that reset within the logging window
  /// Per repetition: displacement at each logged iteration.
  std::vector<std::vector<double>> per_rep;
  std::size_t total_resets = 0;

  std::size_t size() const { return iteration.size(); }
};

/// Runs fn(rep) for rep = 0..count-1 on up to `threads` workers. Results go
/// to per-repetition slots, so the outcome does not depend on scheduling.
inline void for_each_repetition(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t r = 0; r < count; ++r) fn(r);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t r = t; r < count; r += threads) fn(r);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Samples innocuous points with E(eps) = 0, symmetric law and |eps| <= scale.
class InnocuousSampler {
 public:
  InnocuousSampler(InnocuousSource src, std::size_t dim, double scale, std::vector<Point> pool = {})
      : src_(src), dim_(dim), scale_(scale), pool_(std::move(pool)) {
    if (src_ == InnocuousSource::corpus_embedding && pool_.empty())
      throw std::invalid_argument("InnocuousSampler: corpus source needs an embedded pool");
  }

  Point sample(RandomSource& rng) const {
    const auto d = static_cast<Eigen::Index>(dim_);
    switch (src_) {
      case InnocuousSource::uniform_circle: return scale_ * unit_vector(rng, d);
      case InnocuousSource::uniform_ball: {
        const double rad = std::pow(rng.uniform(), 1.0 / static_cast<double>(dim_));
        return scale_ * rad * unit_vector(rng, d);
      }
      case InnocuousSource::corpus_embedding: {
        const Point& p = pool_[rng.uniform_index(pool_.size())];
        // A random sign symmetrises the empirical law.
        return (rng.bernoulli(0.5) ? scale_ : -scale_) * p;
      }
    }
    return Point::Zero(d);
  }

  std::size_t dim() const { return dim_; }

  static Point unit_vector(RandomSource& rng, Eigen::Index d) {
    if (d == 2) {
      const double t = 2.0 * M_PI * rng.uniform();
      Point p(2);
      p << std::cos(t), std::sin(t);
      return p;
    }
    Point p(d);
    double len = 0.0;
    do {
      for (Eigen::Index k = 0; k < d; ++k) p(k) = rng.normal();
      len = p.norm();
    } while (len == 0.0);
    return p / len;
  }

 private:
  InnocuousSource src_;
  std::size_t dim_;
  double scale_;
  std::vector<Point> pool_;
};

/// Kernel-PCA coordinates of a synthetic corpus, centred and rescaled so the
/// largest norm is 1.
inline std::vector<Point> embedded_corpus_pool(const SimConfig& cfg) {
  RandomSource rng(cfg.seed, 0xC0B5ULL);
  const auto seqs = synth_corpus(rng, cfg.corpus_size, SynthParams{cfg.corpus_diversity, cfg.corpus_k});
  const auto spectra = extract_spectra(seqs, cfg.corpus_k);
  KernelConfig kc;
  kc.k = cfg.corpus_k;
  const Eigen::MatrixXd K = kernel_matrix(spectra, kc);
  const auto pca = kernel_pca_components(K, cfg.dimension);
  Eigen::MatrixXd Y = embed_training(K, pca);
  std::vector<Point> pool;
  double top = 0.0;
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    Point p = Point::Zero(static_cast<Eigen::Index>(cfg.dimension));
    p.head(Y.cols()) = Y.row(i).transpose();
    top = std::max(top, p.norm());
    pool.push_back(std::move(p));
  }
  if (top > 0.0)
    for (auto& p : pool) p /= top;
  return pool;
}

inline InnocuousSampler make_sampler(const SimConfig& cfg) {
  std::vector<Point> pool;
  if (cfg.source == InnocuousSource::corpus_embedding) pool = embedded_corpus_pool(cfg);
  return InnocuousSampler(cfg.source, cfg.dimension, cfg.source_radius, std::move(pool));
}

namespace detail {

inline bool logged(std::size_t i, std::size_t stride, std::size_t iterations) {
  return i % stride == 0 || i == iterations;
}

inline std::vector<std::size_t> logged_steps(std::size_t iterations, std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i <= iterations; ++i)
    if (logged(i, stride, iterations)) out.push_back(i);
  return out;
}

struct RepRecord {
  std::vector<double> D;
  std::vector<double> fp;
  std::vector<std::uint8_t> reset;  ///< a reset happened since the previous logged step
  std::size_t resets = 0;
};

inline Trace aggregate(const std::vector<std::size_t>& steps, std::vector<RepRecord>& reps, bool track_fp) {
  Trace t;
  t.iteration = steps;
  const std::size_t L = steps.size();
  std::vector<double> col(reps.size());
  for (std::size_t k = 0; k < L; ++k) {
    for (std::size_t r = 0; r < reps.size(); ++r) col[r] = reps[r].D[k];
    const auto s = stats::summarize(col);
    t.mean_D.push_back(s.mean);
    t.std_D.push_back(s.std_dev);
    t.se_D.push_back(s.std_error);
    t.var_D.push_back(s.variance);
    t.var_se.push_back(s.variance_std_error);
    double fp = std::numeric_limits<double>::quiet_NaN();
    if (track_fp) {
      fp = 0.0;
      for (const auto& rep : reps) fp += rep.fp[k];
      fp /= static_cast<double>(reps.size());
    }
    t.fp_rate.push_back(fp);
    std::size_t rs = 0;
    for (const auto& rep : reps) rs += rep.reset[k];
    t.resets.push_back(rs);
  }
  for (auto& rep : reps) {
    t.total_resets += rep.resets;
    t.per_rep.push_back(std::move(rep.D));
  }
  return t;
}

}  // namespace detail

/// Limited-control and protected stochastic models with f(X) = X + a and
/// r = 1; a is the first coordinate axis.
///
/// Without protection every innocuous point is applied. With protection an
/// innocuous point is applied only if |eps - X| <= 1, and when the holdout
/// FP estimate of the updated center exceeds alpha the center returns to 0.
inline Trace run_stochastic_model(const SimConfig& cfg, bool protect) {
  cfg.validate();
  const auto d = static_cast<Eigen::Index>(cfg.dimension);
  const std::size_t stride = cfg.stride();
  const auto steps = detail::logged_steps(cfg.iterations, stride);
  const auto sampler = make_sampler(cfg);
  Point a = Point::Zero(d);
  a(0) = 1.0;
  const auto ctx = AttackContext::from_direction(a, Point::Zero(d));
  const RandomSource root(cfg.seed, static_cast<std::uint64_t>(cfg.model));

  std::vector<detail::RepRecord> reps(cfg.repetitions);
  for_each_repetition(cfg.repetitions, cfg.threads, [&](std::size_t rep) {
    RandomSource rng = root.split(rep);
    auto& rec = reps[rep];
    const auto initial = CentroidState::from_center(Point::Zero(d), 1.0, cfg.n);
    std::optional<ProtectedLearnerState> guard;
    if (protect) {
      RandomSource hold_rng = root.split(1000003 + rep);
      std::vector<Point> holdout;
      for (std::size_t h = 0; h < cfg.holdout_size; ++h) holdout.push_back(sampler.sample(hold_rng));
      guard = ProtectedLearnerState::make(initial, cfg.alpha, std::move(holdout));
      guard->lockout_steps = cfg.lockout_steps;
    }
    CentroidState plain = initial;
    bool reset_pending = false;
    auto record = [&](const CentroidState& s, double fp) {
      rec.D.push_back(relative_displacement(s, ctx));
      rec.fp.push_back(fp);
      rec.reset.push_back(reset_pending ? 1 : 0);
      reset_pending = false;
    };
    record(initial, protect ? guard->last_fp : 0.0);
    for (std::size_t i = 1; i <= cfg.iterations; ++i) {
      const bool adversarial = rng.bernoulli(cfg.nu);
      const CentroidState& cur = protect ? guard->state : plain;
      const Point x = adversarial ? limited_control_strategy(cur.center, ctx) : sampler.sample(rng);
      if (protect) {
        const auto res = protected_step(*guard, x, adversarial);
        if (res.reset) {
          ++rec.resets;
          reset_pending = true;
        }
      } else {
        plain = update_finite(std::move(plain), x, UpdateRule::average_out).state;
      }
      if (detail::logged(i, stride, cfg.iterations)) record(protect ? guard->state : plain, protect ? guard->last_fp : 0.0);
    }
  });

  Trace t = detail::aggregate(steps, reps, protect);
  const bool bounds_defined = cfg.nu > 0.0 && cfg.nu < 1.0 && cfg.n >= 2 && cfg.alpha < 1.0;
  for (std::size_t i : t.iteration) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (!bounds_defined) {
      t.bound_E.push_back(nan);
      t.bound_E_lower.push_back(nan);
      t.bound_Var.push_back(nan);
      continue;
    }
    bounds::MixModel mm{cfg.nu, protect ? cfg.alpha : 0.0, static_cast<double>(cfg.n), cfg.eps_second_moment};
    if (protect) {
      const auto pm = bounds::protected_moments(static_cast<double>(i), mm);
      t.bound_E.push_back(pm.expectation_upper);
      t.bound_E_lower.push_back(pm.expectation_lower);
      t.bound_Var.push_back(pm.variance_bound);
    } else {
      const auto lm = bounds::limited_moments(static_cast<double>(i), mm);
      t.bound_E.push_back(lm.expectation);
      t.bound_E_lower.push_back(lm.expectation);
      t.bound_Var.push_back(lm.variance_bound);
    }
  }
  return t;
}

inline Trace run_axiom6(const SimConfig& cfg) {
  if (cfg.model != SimModel::axiom6) throw std::invalid_argument("run_axiom6: model must be axiom6");
  return run_stochastic_model(cfg, false);
}

inline Trace run_axiom7(const SimConfig& cfg) {
  if (cfg.model != SimModel::axiom7) throw std::invalid_argument("run_axiom7: model must be axiom7");
  return run_stochastic_model(cfg, true);
}

/// Checks of a stochastic trace against its theoretical bounds; every
/// comparison uses the 3-standard-error band.
struct DominanceReport {
  bool mean_within_band = true;  ///< |mean - E| <= 3 SE (limited) or E_lower - 3SE <= mean <= E_upper + 3SE (protected)
  bool mean_below_upper_strict = true;  ///< mean <= E_upper without a band
  bool variance_dominated = true;  ///< var <= bound + 3 SE(var)
  double worst_mean_excess = -std::numeric_limits<double>::infinity();  ///< max (mean - E_upper)/SE
  double worst_mean_deficit = -std::numeric_limits<double>::infinity();  ///< max (E_lower - mean)/SE
  double worst_variance_excess = -std::numeric_limits<double>::infinity();
  std::size_t first_failure = std::numeric_limits<std::size_t>::max();
};

inline DominanceReport check_dominance(const Trace& t, double k = 3.0, double floor_se = 1e-12) {
  DominanceReport rep;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (std::isnan(t.bound_E[j])) continue;
    const double se = std::max(t.se_D[j], floor_se);
    const double excess = (t.mean_D[j] - t.bound_E[j]) / se;
    const double deficit = (t.bound_E_lower[j] - t.mean_D[j]) / se;
    rep.worst_mean_excess = std::max(rep.worst_mean_excess, excess);
    rep.worst_mean_deficit = std::max(rep.worst_mean_deficit, deficit);
    const bool ok_mean = excess <= k && deficit <= k;
    if (t.mean_D[j] > t.bound_E[j] + floor_se) rep.mean_below_upper_strict = false;
    const double vse = std::max(t.var_se[j], floor_se);
    const double vex = (t.var_D[j] - t.bound_Var[j]) / vse;
    rep.worst_variance_excess = std::max(rep.worst_variance_excess, vex);
    const bool ok_var = vex <= k;
    if (!ok_mean) rep.mean_within_band = false;
    if (!ok_var) rep.variance_dominated = false;
    if ((!ok_mean || !ok_var) && rep.first_failure == std::numeric_limits<std::size_t>::max())
      rep.first_failure = t.iteration[j];
  }
  return rep;
}

/// Mean displacement over logged iterations in [from, to].
inline double plateau_mean(const Trace& t, std::size_t from, std::size_t to) {
  double s = 0.0;
  std::size_t c = 0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    if (t.iteration[j] < from || t.iteration[j] > to) continue;
    s += t.mean_D[j];
    ++c;
  }
  if (c == 0) throw std::invalid_argument("plateau_mean: no logged iterations in range");
  return s / static_cast<double>(c);
}

struct GreedyResult {
  Trace trace;
  std::size_t dimension = 0;
  double radius = 0.0;  ///< radius of the first repetition
  stats::LinearFit fit;  ///< on the repetition-mean trace after burn-in
  std::vector<double> rep_slopes;
  double max_representer_residual = 0.0;
  double max_score_excess = -std::numeric_limits<double>::infinity();  ///< max(score - r) over emitted points
  double min_step = std::numeric_limits<double>::infinity();  ///< smallest per-step change in D
  double max_step = -std::numeric_limits<double>::infinity();  ///< largest per-step change in D, in units of 2/n
  std::size_t overrides = 0;
  std::size_t stalls = 0;
  std::size_t skipped_cells = 0;
  std::size_t solved_cells = 0;
};

/// Gaussian working set of n points in d dimensions, radius at the
/// (1 - calibration_alpha) quantile of fresh Gaussian draws around the
/// working-set mean, a random unit attack direction, and greedy steps.
inline GreedyResult run_greedy_gaussian(const SimConfig& cfg) {
  cfg.validate();
  if (cfg.model != SimModel::greedy_gaussian) throw std::invalid_argument("run_greedy_gaussian: wrong model");
  const auto d = static_cast<Eigen::Index>(cfg.dimension);
  const std::size_t stride = cfg.stride();
  const auto steps = detail::logged_steps(cfg.iterations, stride);
  const RandomSource root(cfg.seed, 0x6E33ULL + cfg.dimension);

  std::vector<detail::RepRecord> reps(cfg.repetitions);
  std::vector<GreedyResult> partial(cfg.repetitions);
  for_each_repetition(cfg.repetitions, cfg.threads, [&](std::size_t rep) {
    RandomSource rng = root.split(rep);
    auto gaussian = [&] {
      Point p(d);
      for (Eigen::Index k = 0; k < d; ++k) p(k) = rng.normal();
      return p;
    };
    WorkingSet ws;
    for (std::size_t i = 0; i < cfg.n; ++i) ws.push(gaussian());
    const Point c0 = ws.mean();
    std::vector<Point> calib;
    calib.reserve(cfg.calibration_size);
    for (std::size_t i = 0; i < cfg.calibration_size; ++i) calib.push_back(gaussian());
    const double r = radius_from_quantile(calib, c0, cfg.calibration_alpha);
    auto state = CentroidState::from_working_set(std::move(ws), r);
    const auto ctx = AttackContext::from_direction(InnocuousSampler::unit_vector(rng, d), c0);

    GreedyConfig gc;
    gc.safeguard = cfg.safeguard;
    GreedyAttackState gs;
    auto& out = partial[rep];
    out.radius = r;
    auto& rec = reps[rep];
    rec.D.push_back(0.0);
    rec.fp.push_back(0.0);
    rec.reset.push_back(0);
    double prev = 0.0;
    for (std::size_t i = 1; i <= cfg.iterations; ++i) {
      const auto info = greedy_step(state, gs, ctx, gc);
      if (info.stalled) {
        ++out.stalls;
      } else {
        out.max_representer_residual = std::max(out.max_representer_residual, info.representer_residual);
        out.max_score_excess = std::max(out.max_score_excess, info.score - r);
        out.overrides += info.override_applied ? 1 : 0;
        out.skipped_cells += info.skipped_cells;
        out.solved_cells += info.solved_cells;
      }
      out.min_step = std::min(out.min_step, info.displacement - prev);
      out.max_step = std::max(out.max_step, (info.displacement - prev) * static_cast<double>(cfg.n) / 2.0);
      prev = info.displacement;
      if (detail::logged(i, stride, cfg.iterations)) {
        rec.D.push_back(info.displacement);
        rec.fp.push_back(0.0);
        rec.reset.push_back(0);
      }
    }
  });

  GreedyResult res;
  res.dimension = cfg.dimension;
  res.radius = partial.front().radius;
  for (const auto& p : partial) {
    res.max_representer_residual = std::max(res.max_representer_residual, p.max_representer_residual);
    res.max_score_excess = std::max(res.max_score_excess, p.max_score_excess);
    res.min_step = std::min(res.min_step, p.min_step);
    res.max_step = std::max(res.max_step, p.max_step);
    res.overrides += p.overrides;
    res.stalls += p.stalls;
    res.skipped_cells += p.skipped_cells;
    res.solved_cells += p.solved_cells;
  }
  res.trace = detail::aggregate(steps, reps, false);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double per_step = bounds::voronoi_slope(static_cast<double>(cfg.n), static_cast<double>(cfg.dimension)) /
                          static_cast<double>(cfg.n);
  for (std::size_t i : res.trace.iteration) {
    res.trace.bound_E.push_back(per_step * static_cast<double>(i));
    res.trace.bound_E_lower.push_back(nan);
    res.trace.bound_Var.push_back(nan);
  }

  const auto burn = static_cast<std::size_t>(std::ceil(cfg.burn_in_fraction * static_cast<double>(cfg.iterations)));
  auto fit_after_burn_in = [&](const std::vector<double>& ys) {
    std::vector<double> x, y;
    for (std::size_t j = 0; j < res.trace.size(); ++j) {
      if (res.trace.iteration[j] < burn) continue;
      x.push_back(static_cast<double>(res.trace.iteration[j]));
      y.push_back(ys[j]);
    }
    return stats::fit_line(x, y);
  };
  res.fit = fit_after_burn_in(res.trace.mean_D);
  for (const auto& rep : res.trace.per_rep) res.rep_slopes.push_back(fit_after_burn_in(rep).slope);
  return res;
}

struct FpSensitivityPoint {
  double nu = 0.0;
  double max_fp = 0.0;
  double mean_final_D = 0.0;
};

/// For each nu: a centroid over `training_size` innocuous points, radius at
/// the (1 - calibration_alpha) quantile of a large innocuous sample, then an
/// average-out learner fed the optimal attack point with probability nu and
/// an innocuous point otherwise (accepted only inside the radius). Records
/// the largest holdout FP rate over all iterations and repetitions.
inline std::vector<FpSensitivityPoint> run_fp_sensitivity(const SimConfig& cfg) {
  cfg.validate();
  const auto sampler = make_sampler(cfg);
  const auto d = static_cast<Eigen::Index>(cfg.dimension);
  std::vector<FpSensitivityPoint> out;
  for (std::size_t g = 0; g < cfg.nu_grid.size(); ++g) {
    const double nu = cfg.nu_grid[g];
    const RandomSource root(cfg.seed, 0xF95EULL);
    std::vector<double> max_fp(cfg.repetitions, 0.0), final_D(cfg.repetitions, 0.0);
    for_each_repetition(cfg.repetitions, cfg.threads, [&](std::size_t rep) {
      // Same innocuous draws for every nu; only the attack stream differs.
      RandomSource rng = root.split(rep);
      RandomSource mix = RandomSource(cfg.seed, 0xA77AULL + g).split(rep);
      WorkingSet train;
      for (std::size_t i = 0; i < cfg.training_size; ++i) train.push(sampler.sample(rng));
      const Point c0 = train.mean();
      std::vector<Point> calib;
      for (std::size_t i = 0; i < cfg.calibration_size; ++i) calib.push_back(sampler.sample(rng));
      const double r = radius_from_quantile(calib, c0, cfg.calibration_alpha);
      std::vector<Point> holdout;
      for (std::size_t i = 0; i < cfg.holdout_size; ++i) holdout.push_back(sampler.sample(rng));
      auto state = CentroidState::from_center(c0, r, cfg.n);
      const auto ctx = AttackContext::from_direction(InnocuousSampler::unit_vector(rng, d), c0);
      double worst = estimate_fp_rate(state, holdout);
      for (std::size_t i = 1; i <= cfg.iterations; ++i) {
        const bool adversarial = mix.bernoulli(nu);
        const Point x = adversarial ? optimal_attack_point(state, ctx) : sampler.sample(rng);
        if (adversarial || !is_anomalous(state, x))
          state = update_finite(std::move(state), x, UpdateRule::average_out).state;
        worst = std::max(worst, estimate_fp_rate(state, holdout));
      }
      max_fp[rep] = worst;
      final_D[rep] = relative_displacement(state, ctx);
    });
    FpSensitivityPoint p;
    p.nu = nu;
    p.max_fp = *std::max_element(max_fp.begin(), max_fp.end());
    for (double v : final_D) p.mean_final_D += v / static_cast<double>(final_D.size());
    out.push_back(p);
  }
  return out;
}

struct NuSweepOutcome {
  double nu = 0.0;
  bool reached = false;  ///< the repetition-mean displacement reached D_crit at a logged step
  double first_reach = std::numeric_limits<double>::quiet_NaN();
  double final_D = 0.0;
  double max_mean_D = 0.0;
  double reps_reached = 0.0;  ///< fraction of single repetitions that touched D_crit
  double asymptote = 0.0;
};

/// Limited-control model for each nu of the grid, judged against D_crit.
inline std::vector<NuSweepOutcome> run_nu_sweep(const SimConfig& cfg) {
  cfg.validate();
  std::vector<NuSweepOutcome> out;
  for (std::size_t g = 0; g < cfg.nu_grid.size(); ++g) {
    SimConfig c = cfg;
    c.model = SimModel::axiom6;
    c.nu = cfg.nu_grid[g];
    c.seed = RandomSource::splitmix64(cfg.seed + g);
    const Trace t = run_stochastic_model(c, false);
    NuSweepOutcome o;
    o.nu = c.nu;
    o.final_D = t.mean_D.back();
    o.asymptote = c.nu < 1.0 ? bounds::limited_asymptote(c.nu) : std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < t.size(); ++j) {
      o.max_mean_D = std::max(o.max_mean_D, t.mean_D[j]);
      if (!o.reached && t.mean_D[j] >= cfg.d_crit) {
        o.reached = true;
        o.first_reach = static_cast<double>(t.iteration[j]);
      }
    }
    std::size_t hit = 0;
    for (const auto& rep : t.per_rep)
      if (*std::max_element(rep.begin(), rep.end()) >= cfg.d_crit) ++hit;
    o.reps_reached = static_cast<double>(hit) / static_cast<double>(t.per_rep.size());
    out.push_back(o);
  }
  return out;
}

/// Trace CSV: iteration,mean_D,std_D,bound_E,bound_Var,fp_rate,reset_flag
inline void write_trace_csv(std::ostream& os, const Trace& t) {
  CsvWriter csv(os, {"iteration", "mean_D", "std_D", "bound_E", "bound_Var", "fp_rate", "reset_flag"});
  for (std::size_t j = 0; j < t.size(); ++j)
    csv.row(t.iteration[j], t.mean_D[j], t.std_D[j], t.bound_E[j], t.bound_Var[j], t.fp_rate[j], t.resets[j]);
}

inline nlohmann::json config_to_json(const SimConfig& c) {
  return nlohmann::json{{"model", std::string(to_string(c.model))},
                        {"nu", c.nu},
                        {"alpha", c.alpha},
                        {"eps_second_moment", c.eps_second_moment},
                        {"n", c.n},
                        {"iterations", c.iterations},
                        {"repetitions", c.repetitions},
                        {"source", std::string(to_string(c.source))},
                        {"source_radius", c.source_radius},
                        {"dimension", c.dimension},
                        {"seed", c.seed},
                        {"log_stride", c.stride()},
                        {"holdout_size", c.holdout_size},
                        {"lockout_steps", c.lockout_steps},
                        {"calibration_alpha", c.calibration_alpha},
                        {"calibration_size", c.calibration_size},
                        {"burn_in_fraction", c.burn_in_fraction},
                        {"safeguard", c.safeguard},
                        {"nu_grid", c.nu_grid},
                        {"d_crit", c.d_crit},
                        {"training_size", c.training_size}};
}

}  // namespace csec
