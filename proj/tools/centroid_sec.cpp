// centroid-sec: bounds, simulations, corpus tools and single greedy attacks
// for the online centroid anomaly detector.

#include "csec/csec.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Global {
  std::size_t threads = 0;
  int precision = 4;
};

std::string fmt(double v, int precision) { return csec::format_significant(v, precision); }

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  return os;
}

void finish(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

void write_json(const std::string& path, const nlohmann::json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
  finish(os, path);
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------- bounds

struct BoundsOpts {
  std::string variant = "infinite";
  double n = 100;
  double i = 0;
  double nu = 0.05;
  double alpha = 0.0;
  double eps2 = 1.0;
  double displacement = 0.0;
  double d = 2;
  std::size_t stride = 0;
  std::string out;
};

void add_bounds(CLI::App& app, BoundsOpts& o) {
  app.add_option("--variant", o.variant, "Curve or value to evaluate")
      ->check(CLI::IsMember({"infinite", "finite", "limited", "protected", "nu-crit", "voronoi", "effort"}))
      ->capture_default_str();
  app.add_option("--n", o.n, "Window size")->capture_default_str();
  app.add_option("--i", o.i, "Attack iteration (last row of a curve)")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--nu", o.nu, "Adversarial traffic fraction")->capture_default_str();
  app.add_option("--alpha", o.alpha, "False-positive cap")->capture_default_str();
  app.add_option("--eps2", o.eps2, "Second moment of innocuous points, E(eps^2)")->capture_default_str();
  app.add_option("--displacement", o.displacement, "Relative displacement (nu-crit, effort)")->capture_default_str();
  app.add_option("--d", o.d, "Dimension (voronoi)")->capture_default_str();
  app.add_option("--stride", o.stride, "Row spacing of curve CSVs; 0 keeps at most ~1000 rows")->capture_default_str();
  app.add_option("--out", o.out, "Write a CSV here");
}

int run_bounds(const BoundsOpts& o, const Global& g) {
  namespace b = csec::bounds;
  const int p = g.precision;
  const csec::bounds::MixModel mm{o.nu, o.alpha, o.n, o.eps2};
  const bool curve = o.variant == "infinite" || o.variant == "finite" || o.variant == "limited" || o.variant == "protected";
  const auto last = static_cast<std::uint64_t>(o.i);
  if (curve && o.i != std::floor(o.i)) throw std::invalid_argument("bounds: --i must be an integer");

  std::vector<std::uint64_t> rows;
  if (curve) {
    const std::uint64_t stride = o.stride ? o.stride : std::max<std::uint64_t>(1, (last + 999) / 1000);
    for (std::uint64_t i = 0; i <= last; i += stride) rows.push_back(i);
    if (rows.back() != last) rows.push_back(last);
  }

  std::ofstream os;
  if (!o.out.empty()) os = open_out(o.out);

  if (o.variant == "infinite") {
    if (o.n < 1.0 || o.n != std::floor(o.n)) throw std::invalid_argument("bounds: --n must be a positive integer");
    std::cout << fmt(b::bound_infinite(o.i, o.n), p) << '\n';
    if (os.is_open()) {
      csec::CsvWriter csv(os, {"i", "bound", "exact"});
      double exact = 0.0;
      std::uint64_t k = 0;
      for (auto i : rows) {
        for (; k < i; ++k) exact += 1.0 / (o.n + static_cast<double>(k + 1));
        csv.row(i, b::bound_infinite(static_cast<double>(i), o.n), exact);
      }
    }
  } else if (o.variant == "finite") {
    std::cout << fmt(b::displacement_finite(o.i, o.n), p) << '\n';
    if (os.is_open()) {
      csec::CsvWriter csv(os, {"i", "displacement"});
      for (auto i : rows) csv.row(i, b::displacement_finite(static_cast<double>(i), o.n));
    }
  } else if (o.variant == "limited") {
    if (o.alpha != 0.0) throw std::invalid_argument("bounds: the limited variant has no false-positive cap; use protected");
    const auto m = b::limited_moments(o.i, mm);
    std::cout << "expectation " << fmt(m.expectation, p) << '\n' << "variance_bound " << fmt(m.variance_bound, p) << '\n';
    if (os.is_open()) {
      csec::CsvWriter csv(os, {"i", "expectation", "variance_bound"});
      for (auto i : rows) {
        const auto r = b::limited_moments(static_cast<double>(i), mm);
        csv.row(i, r.expectation, r.variance_bound);
      }
    }
  } else if (o.variant == "protected") {
    const auto m = b::protected_moments(o.i, mm);
    std::cout << "expectation_upper " << fmt(m.expectation_upper, p) << '\n'
              << "expectation_lower " << fmt(m.expectation_lower, p) << '\n'
              << "variance_bound " << fmt(m.variance_bound, p) << '\n';
    if (os.is_open()) {
      csec::CsvWriter csv(os, {"i", "expectation_upper", "expectation_lower", "variance_bound"});
      for (auto i : rows) {
        const auto r = b::protected_moments(static_cast<double>(i), mm);
        csv.row(i, r.expectation_upper, r.expectation_lower, r.variance_bound);
      }
    }
  } else if (o.variant == "nu-crit") {
    const double v = b::nu_crit(o.displacement);
    std::cout << fmt(v, p) << '\n';
    if (os.is_open()) csec::CsvWriter(os, {"displacement", "nu_crit"}).row(o.displacement, v);
  } else if (o.variant == "voronoi") {
    const double s = b::voronoi_slope(o.n, o.d);
    std::cout << fmt(s, p) << '\n';
    if (os.is_open()) csec::CsvWriter(os, {"n", "d", "slope", "per_step"}).row(o.n, o.d, s, s / o.n);
  } else {
    const auto it = b::effort_inverse(o.displacement, o.n);
    std::cout << it << '\n';
    if (os.is_open()) csec::CsvWriter(os, {"displacement", "n", "iterations"}).row(o.displacement, o.n, it);
  }
  if (os.is_open()) finish(os, o.out);
  return 0;
}

// -------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string model = "axiom6";
  std::string source;
  std::string trace = "trace.csv";
  std::string summary = "summary.json";
  bool no_safeguard = false;
  // Set only when given, so model defaults survive.
  std::optional<double> nu, alpha, eps2, source_radius, calib_alpha, burn_in, dcrit, diversity;
  std::optional<std::size_t> n, iters, reps, d, stride, holdout, lockout, calib_size, training_size, corpus_size, corpus_k;
  std::optional<std::uint64_t> seed;
  std::vector<double> grid;
};

void add_simulate(CLI::App& app, SimulateOpts& o) {
  app.add_option("--model", o.model, "axiom6, axiom7, greedy, fp-sensitivity or nu-sweep")
      ->check(CLI::IsMember({"axiom6", "axiom7", "greedy", "fp-sensitivity", "nu-sweep"}))
      ->capture_default_str();
  app.add_option("--nu", o.nu, "Adversarial traffic fraction");
  app.add_option("--alpha", o.alpha, "False-positive cap of the protected learner");
  app.add_option("--eps2", o.eps2, "E(eps^2) used by the variance bound");
  app.add_option("--n", o.n, "Window size");
  app.add_option("--iters", o.iters, "Iterations per repetition");
  app.add_option("--reps", o.reps, "Repetitions");
  app.add_option("--seed", o.seed, "Random seed");
  app.add_option("--source", o.source, "Innocuous source: uniform_ball, uniform_circle or corpus_embedding")
      ->check(CLI::IsMember({"uniform_ball", "uniform_circle", "corpus_embedding", "ball", "circle", "corpus"}));
  app.add_option("--source-radius", o.source_radius, "Scale of innocuous points, in (0, 1]");
  app.add_option("--d", o.d, "Dimension");
  app.add_option("--stride", o.stride, "Logging stride; 0 logs about 1000 steps");
  app.add_option("--holdout", o.holdout, "Holdout size of the false-positive estimate");
  app.add_option("--lockout", o.lockout, "Steps without updates after a reset");
  app.add_option("--calib-alpha", o.calib_alpha, "False-positive rate of the radius calibration");
  app.add_option("--calib-size", o.calib_size, "Sample size of the radius calibration");
  app.add_option("--burn-in", o.burn_in, "Fraction of iterations dropped before the slope fit");
  app.add_flag("--no-safeguard", o.no_safeguard, "Disable the immune-point safeguard (greedy)");
  app.add_option("--grid", o.grid, "Comma-separated nu grid (fp-sensitivity, nu-sweep)")->delimiter(',');
  app.add_option("--dcrit", o.dcrit, "Required displacement (nu-sweep)");
  app.add_option("--training-size", o.training_size, "Training points (fp-sensitivity)");
  app.add_option("--corpus-size", o.corpus_size, "Synthetic corpus size (corpus source)");
  app.add_option("--corpus-k", o.corpus_k, "Gram length (corpus source)");
  app.add_option("--diversity", o.diversity, "Synthetic corpus diversity in [0, 1] (corpus source)");
  app.add_option("--trace", o.trace, "Trace CSV path")->capture_default_str();
  app.add_option("--summary", o.summary, "Summary JSON path")->capture_default_str();
}

csec::SimConfig resolve(const SimulateOpts& o, const Global& g) {
  auto c = csec::default_config(csec::parse_sim_model(o.model));
  if (o.nu) c.nu = *o.nu;
  if (o.alpha) c.alpha = *o.alpha;
  if (o.eps2) c.eps_second_moment = *o.eps2;
  if (o.n) c.n = *o.n;
  if (o.iters) c.iterations = *o.iters;
  if (o.reps) c.repetitions = *o.reps;
  if (o.seed) c.seed = *o.seed;
  if (!o.source.empty()) c.source = csec::parse_innocuous_source(o.source);
  if (o.source_radius) c.source_radius = *o.source_radius;
  if (o.d) c.dimension = *o.d;
  if (o.stride) c.log_stride = *o.stride;
  if (o.holdout) c.holdout_size = *o.holdout;
  if (o.lockout) c.lockout_steps = *o.lockout;
  if (o.calib_alpha) c.calibration_alpha = *o.calib_alpha;
  if (o.calib_size) c.calibration_size = *o.calib_size;
  if (o.burn_in) c.burn_in_fraction = *o.burn_in;
  if (o.no_safeguard) c.safeguard = false;
  if (!o.grid.empty()) c.nu_grid = o.grid;
  if (o.dcrit) c.d_crit = *o.dcrit;
  if (o.training_size) c.training_size = *o.training_size;
  if (o.corpus_size) c.corpus_size = *o.corpus_size;
  if (o.corpus_k) c.corpus_k = *o.corpus_k;
  if (o.diversity) c.corpus_diversity = *o.diversity;
  c.threads = resolve_threads(g.threads);
  c.validate();
  return c;
}

std::string pass(bool ok) { return ok ? "pass" : "fail"; }

int run_simulate(const SimulateOpts& o, const Global& g) {
  const auto cfg = resolve(o, g);
  const int p = g.precision;
  nlohmann::json summary;
  summary["config"] = csec::config_to_json(cfg);

  if (cfg.model == csec::SimModel::axiom6 || cfg.model == csec::SimModel::axiom7) {
    const bool protect = cfg.model == csec::SimModel::axiom7;
    const auto t = protect ? csec::run_axiom7(cfg) : csec::run_axiom6(cfg);
    auto os = open_out(o.trace);
    csec::write_trace_csv(os, t);
    finish(os, o.trace);
    const auto rep = csec::check_dominance(t);
    const double plateau = csec::plateau_mean(t, cfg.iterations - cfg.iterations / 5, cfg.iterations);
    nlohmann::json checks;
    if (protect) {
      checks["mean_below_upper_3se"] = rep.worst_mean_excess <= 3.0;
      checks["mean_below_upper_strict"] = rep.mean_below_upper_strict;
      checks["mean_above_lower_3se"] = rep.worst_mean_deficit <= 3.0;
    } else {
      checks["mean_within_3se"] = rep.mean_within_band;
    }
    checks["variance_within_bound_3se"] = rep.variance_dominated;
    summary["checks"] = checks;
    summary["result"] = {{"final_mean_D", t.mean_D.back()},
                         {"plateau_mean_D", plateau},
                         {"final_bound_E", t.bound_E.back()},
                         {"worst_mean_excess_se", rep.worst_mean_excess},
                         {"worst_mean_deficit_se", rep.worst_mean_deficit},
                         {"worst_variance_excess_se", rep.worst_variance_excess},
                         {"resets", t.total_resets}};
    std::cout << "final mean D " << fmt(t.mean_D.back(), p) << " (bound " << fmt(t.bound_E.back(), p) << ")\n"
              << "plateau mean D " << fmt(plateau, p) << '\n';
    if (protect) std::cout << "resets " << t.total_resets << '\n';
    for (const auto& [name, ok] : checks.items()) std::cout << name << ": " << pass(ok.get<bool>()) << '\n';
  } else if (cfg.model == csec::SimModel::greedy_gaussian) {
    const auto r = csec::run_greedy_gaussian(cfg);
    auto os = open_out(o.trace);
    csec::write_trace_csv(os, r.trace);
    finish(os, o.trace);
    const double heuristic =
        csec::bounds::voronoi_slope(static_cast<double>(cfg.n), static_cast<double>(cfg.dimension)) /
        static_cast<double>(cfg.n);
    summary["result"] = {{"slope", r.fit.slope},
                         {"intercept", r.fit.intercept},
                         {"r_squared", r.fit.r_squared},
                         {"rep_slopes", r.rep_slopes},
                         {"voronoi_slope_per_step", heuristic},
                         {"final_mean_D", r.trace.mean_D.back()},
                         {"max_representer_residual", r.max_representer_residual},
                         {"max_score_excess", r.max_score_excess},
                         {"min_step", r.min_step},
                         {"overrides", r.overrides},
                         {"stalls", r.stalls},
                         {"radius", r.radius}};
    summary["checks"] = {{"linear_r2_0.99", r.fit.r_squared >= 0.99},
                         {"representer_residual_1e-6", r.max_representer_residual <= 1e-6},
                         {"points_accepted", r.max_score_excess <= 1e-9}};
    std::cout << "slope " << fmt(r.fit.slope, p) << " per iteration (heuristic " << fmt(heuristic, p) << ")\n"
              << "r_squared " << fmt(r.fit.r_squared, p) << '\n'
              << "final mean D " << fmt(r.trace.mean_D.back(), p) << '\n';
    for (const auto& [name, ok] : summary["checks"].items()) std::cout << name << ": " << pass(ok.get<bool>()) << '\n';
  } else if (cfg.model == csec::SimModel::fp_sensitivity) {
    const auto pts = csec::run_fp_sensitivity(cfg);
    auto os = open_out(o.trace);
    csec::CsvWriter csv(os, {"nu", "max_fp", "mean_final_D"});
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& pt : pts) {
      csv.row(pt.nu, pt.max_fp, pt.mean_final_D);
      rows.push_back({{"nu", pt.nu}, {"max_fp", pt.max_fp}, {"mean_final_D", pt.mean_final_D}});
      std::cout << "nu " << fmt(pt.nu, p) << " max_fp " << fmt(pt.max_fp, p) << '\n';
    }
    finish(os, o.trace);
    summary["result"] = rows;
  } else {
    const auto out = csec::run_nu_sweep(cfg);
    auto os = open_out(o.trace);
    csec::CsvWriter csv(os, {"nu", "reached", "first_reach", "final_D", "max_mean_D", "reps_reached", "asymptote"});
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : out) {
      csv.row(r.nu, r.reached, r.first_reach, r.final_D, r.max_mean_D, r.reps_reached, r.asymptote);
      rows.push_back({{"nu", r.nu},
                      {"reached", r.reached},
                      {"first_reach", r.first_reach},
                      {"final_D", r.final_D},
                      {"max_mean_D", r.max_mean_D},
                      {"reps_reached", r.reps_reached},
                      {"asymptote", r.asymptote}});
      std::cout << "nu " << fmt(r.nu, p) << " reached=" << (r.reached ? "true" : "false") << " max mean D "
                << fmt(r.max_mean_D, p) << '\n';
    }
    finish(os, o.trace);
    summary["result"] = rows;
    summary["nu_crit"] = csec::bounds::nu_crit(cfg.d_crit);
  }
  write_json(o.summary, summary);
  return 0;
}

// ---------------------------------------------------------------- corpus

struct CorpusOpts {
  std::size_t size = 1000;
  std::uint64_t seed = 42;
  std::size_t k = 3;
  double diversity = 0.5;
  std::string in = "corpus.txt";
  std::string out;
  std::size_t pca = 10;
  double variance = 0.99;
  std::optional<double> sigma;
  bool no_normalize = false;
  bool no_center = false;
  std::size_t kernel_k = 0;
};

struct KernelResult {
  Eigen::MatrixXd K;
  std::size_t k = 0;
  std::size_t n = 0;
};

KernelResult load_kernel(const CorpusOpts& o) {
  const auto corpus = csec::load_corpus(o.in);
  if (corpus.records.empty()) throw std::runtime_error(o.in + ": corpus has no records");
  csec::KernelConfig kc;
  kc.k = o.kernel_k ? o.kernel_k : corpus.k;
  kc.sigma = o.sigma;
  kc.normalize = !o.no_normalize;
  kc.validate();
  std::vector<csec::SparseSpectrum> spectra;
  for (std::size_t r = 0; r < corpus.records.size(); ++r) {
    if (corpus.records[r].size() < kc.k)
      throw std::invalid_argument(o.in + ": record " + std::to_string(r + 1) + " is shorter than k=" +
                                  std::to_string(kc.k));
    spectra.push_back(csec::extract_spectrum(corpus.records[r], kc.k));
  }
  return {csec::kernel_matrix(spectra, kc), kc.k, corpus.records.size()};
}

int run_corpus_generate(const CorpusOpts& o, const Global&) {
  csec::RandomSource rng(o.seed, 0xC0B5ULL);
  const csec::Corpus c{o.k, csec::synth_corpus(rng, o.size, {o.diversity, o.k})};
  const std::string path = o.out.empty() ? "corpus.txt" : o.out;
  csec::save_corpus(path, c);
  std::cout << c.records.size() << " records written to " << path << '\n';
  return 0;
}

int run_corpus_embed(const CorpusOpts& o, const Global&) {
  const auto kr = load_kernel(o);
  csec::KernelPcaOptions opt;
  opt.center = !o.no_center;
  const auto e = csec::kernel_pca_components(kr.K, o.pca, opt);
  const Eigen::MatrixXd Y = csec::embed_training(kr.K, e);
  const std::string path = o.out.empty() ? "embedding.csv" : o.out;
  auto os = open_out(path);
  std::vector<std::string> header;
  for (std::size_t c = 0; c < o.pca; ++c) header.push_back("x" + std::to_string(c + 1));
  csec::CsvWriter csv(os, header);
  std::vector<double> row(o.pca, 0.0);
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    // Components beyond the rank carry no variance and are written as zeros.
    std::fill(row.begin(), row.end(), 0.0);
    for (Eigen::Index c = 0; c < Y.cols(); ++c) row[static_cast<std::size_t>(c)] = Y(i, c);
    csv.row(row);
  }
  finish(os, path);
  std::cout << kr.n << " x " << o.pca << " embedding written to " << path << '\n';
  if (e.components < o.pca)
    std::cerr << "note: kernel rank is " << e.rank << "; columns beyond it are zero\n";
  return 0;
}

int run_corpus_dim(const CorpusOpts& o, const Global& g) {
  const auto kr = load_kernel(o);
  csec::KernelPcaOptions opt;
  opt.center = !o.no_center;
  const auto e = csec::kernel_pca(kr.K, o.variance, opt);
  std::cout << e.components << '\n';
  const std::string path = o.out.empty() ? "variance.csv" : o.out;
  auto os = open_out(path);
  csec::CsvWriter csv(os, {"component", "eigenvalue", "variance_fraction"});
  for (Eigen::Index c = 0; c < e.eigenvalues.size(); ++c)
    csv.row(static_cast<std::size_t>(c + 1), e.eigenvalues(c), e.variance_fraction(c));
  finish(os, path);
  std::cerr << "rank " << e.rank << ", " << e.components << " components reach " << fmt(o.variance, g.precision)
            << " of the variance\n";
  return 0;
}

// ---------------------------------------------------------------- attack

struct AttackOpts {
  std::size_t n = 100;
  std::size_t d = 2;
  std::size_t iters = 500;
  std::uint64_t seed = 42;
  double calib_alpha = 0.001;
  std::size_t calib_size = 20000;
  bool no_safeguard = false;
  bool no_prune = false;
  bool normalized = false;
  std::string out = "attack_trace.csv";
  std::string state_out;
};

int run_attack(const AttackOpts& o, const Global& g) {
  if (o.n < 1 || o.d < 1 || o.iters < 1) throw std::invalid_argument("attack: --n, --d and --iters must be >= 1");
  if (!(o.calib_alpha > 0.0 && o.calib_alpha < 1.0)) throw std::invalid_argument("attack: --calib-alpha must lie in (0, 1)");
  const auto d = static_cast<Eigen::Index>(o.d);
  csec::RandomSource rng(o.seed, 0xA77CULL);
  auto draw = [&] {
    csec::Point p(d);
    for (Eigen::Index k = 0; k < d; ++k) p(k) = rng.normal();
    return o.normalized ? csec::Point(p.normalized()) : p;
  };
  csec::WorkingSet ws;
  for (std::size_t i = 0; i < o.n; ++i) ws.push(draw());
  const csec::Point c0 = ws.mean();
  std::vector<csec::Point> calib;
  for (std::size_t i = 0; i < o.calib_size; ++i) calib.push_back(draw());
  const double r = csec::radius_from_quantile(calib, c0, o.calib_alpha);
  auto state = csec::CentroidState::from_working_set(std::move(ws), r);
  const auto ctx = csec::AttackContext::from_direction(csec::InnocuousSampler::unit_vector(rng, d), c0);

  csec::GreedyConfig gc;
  gc.safeguard = !o.no_safeguard;
  gc.prune = !o.no_prune;
  const auto gs = csec::run_greedy_attack(state, ctx, o.iters, gc, o.normalized);

  auto os = open_out(o.out);
  csec::write_attack_trace(os, gs);
  finish(os, o.out);
  if (!o.state_out.empty()) write_json(o.state_out, csec::to_json(state));

  const int p = g.precision;
  std::cout << "radius " << fmt(r, p) << '\n'
            << "iterations " << gs.iterations() << '\n'
            << "final D " << fmt(gs.trace.empty() ? 0.0 : gs.trace.back(), p) << '\n';
  if (gs.trace.size() >= 2) {
    std::vector<double> x(gs.trace.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<double>(k + 1);
    const auto fit = csec::stats::fit_line(x, gs.trace);
    std::cout << "slope " << fmt(fit.slope, p) << '\n';
  }
  if (gs.stalled) std::cout << "stalled: no cell of the working set reaches the ball\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Poisoning attacks and bounds for online centroid anomaly detection", "centroid-sec"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Flat key = value file; keys take a section prefix such as simulate.nu")
      ->check(CLI::ExistingFile);
  app.allow_config_extras(CLI::config_extras_mode::error);

  Global g;
  auto* threads = app.add_option("--threads", g.threads, "Worker threads, 0 for all cores (env CENTROID_SEC_THREADS)")
                      ->check(CLI::NonNegativeNumber);
  app.add_option("--precision", g.precision, "Significant digits on stdout")->check(CLI::Range(1, 17))->capture_default_str();

  BoundsOpts bo;
  auto* bounds = app.add_subcommand("bounds", "Closed-form bounds, exact progress and critical ratios");
  add_bounds(*bounds, bo);

  SimulateOpts so;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo runs of the attack models");
  add_simulate(*simulate, so);

  CorpusOpts co;
  auto* corpus = app.add_subcommand("corpus", "Synthetic corpora, kernel-PCA embeddings and intrinsic dimension");
  corpus->require_subcommand(1);
  auto* generate = corpus->add_subcommand("generate", "Write a synthetic request corpus");
  generate->add_option("--size", co.size, "Number of records")->check(CLI::PositiveNumber)->capture_default_str();
  generate->add_option("--seed", co.seed, "Random seed")->capture_default_str();
  generate->add_option("--k", co.k, "Gram length recorded in the header")->check(CLI::PositiveNumber)->capture_default_str();
  generate->add_option("--diversity", co.diversity, "Template diversity in [0, 1]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  generate->add_option("--out", co.out, "Corpus path (default corpus.txt)");
  auto kernel_flags = [&co](CLI::App* sc) {
    sc->add_option("--in", co.in, "Corpus path")->capture_default_str();
    sc->add_option("--k", co.kernel_k, "Gram length (default: the corpus header)");
    sc->add_option("--sigma", co.sigma, "RBF bandwidth on top of the spectrum kernel")->check(CLI::PositiveNumber);
    sc->add_flag("--no-normalize", co.no_normalize, "Use raw spectrum inner products");
    sc->add_flag("--no-center", co.no_center, "Skip kernel centering before the eigendecomposition");
  };
  auto* embed = corpus->add_subcommand("embed", "Kernel-PCA coordinates of every record");
  kernel_flags(embed);
  embed->add_option("--pca", co.pca, "Number of components")->check(CLI::PositiveNumber)->capture_default_str();
  embed->add_option("--out", co.out, "Embedding CSV (default embedding.csv)");
  auto* dim = corpus->add_subcommand("dim", "Components needed for a share of the kernel variance");
  kernel_flags(dim);
  dim->add_option("--variance", co.variance, "Target variance fraction")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  dim->add_option("--out", co.out, "Variance curve CSV (default variance.csv)");

  AttackOpts ao;
  auto* attack = app.add_subcommand("attack", "One greedy attack on a Gaussian nearest-out learner");
  attack->add_option("--n", ao.n, "Working-set size")->capture_default_str();
  attack->add_option("--d", ao.d, "Dimension")->capture_default_str();
  attack->add_option("--iters", ao.iters, "Greedy iterations")->capture_default_str();
  attack->add_option("--seed", ao.seed, "Random seed")->capture_default_str();
  attack->add_option("--calib-alpha", ao.calib_alpha, "False-positive rate of the radius calibration")->capture_default_str();
  attack->add_option("--calib-size", ao.calib_size, "Sample size of the radius calibration")->capture_default_str();
  attack->add_flag("--no-safeguard", ao.no_safeguard, "Disable the immune-point safeguard");
  attack->add_flag("--no-prune", ao.no_prune, "Solve every cell");
  attack->add_flag("--normalized", ao.normalized, "Unit-sphere data with projected cell solutions");
  attack->add_option("--out", ao.out, "Trace CSV path")->capture_default_str();
  attack->add_option("--state-out", ao.state_out, "Write the final learner state as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  // CLI11 silently drops environment values that fail validation.
  if (threads->count() == 0) {
    if (const char* env = std::getenv("CENTROID_SEC_THREADS"); env && *env) {
      const std::string text(env);
      if (text.find_first_not_of("0123456789") != std::string::npos) {
        std::cerr << "error: CENTROID_SEC_THREADS must be a nonnegative integer, got '" << text << "'\n";
        return kExitUsage;
      }
      g.threads = static_cast<std::size_t>(std::stoull(text));
    }
  }

  try {
    if (bounds->parsed()) return run_bounds(bo, g);
    if (simulate->parsed()) return run_simulate(so, g);
    if (generate->parsed()) return run_corpus_generate(co, g);
    if (embed->parsed()) return run_corpus_embed(co, g);
    if (dim->parsed()) return run_corpus_dim(co, g);
    if (attack->parsed()) return run_attack(ao, g);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
