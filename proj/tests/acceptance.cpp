// Acceptance gate: one PASS/FAIL line per criterion, indented detail lines
// below it. Exit status is nonzero when any criterion fails.

#include "csec/csec.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sys/wait.h>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace {

using csec::AttackContext;
using csec::Bytes;
using csec::CentroidState;
using csec::Point;
using csec::RandomSource;
using csec::SimConfig;
using csec::SimModel;

namespace fs = std::filesystem;

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    pass = pass && ok;
  }
  void info(const std::string& what) { notes.push_back("info " + what); }
};

std::string num(double v, int digits = 6) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

std::size_t worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

Point vec2(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

// ---------------------------------------------------------------------------

void average_out(Verdict& v) {
  const std::size_t n = 100;
  const auto ctx = AttackContext::from_direction(vec2(1, 0), vec2(0, 0));
  auto s = CentroidState::from_center(vec2(0, 0), 1.0, n);
  double worst = 0.0;
  for (std::size_t i = 1; i <= 500; ++i) {
    s = csec::update_finite(s, csec::optimal_attack_point(s, ctx), csec::UpdateRule::average_out).state;
    worst = std::max(worst, std::abs(csec::relative_displacement(s, ctx) - static_cast<double>(i) / n));
  }
  v.require(worst <= 1e-12, "max |D_i - i/n| over i <= 500 is " + num(worst));
}

void infinite_horizon(Verdict& v) {
  for (std::size_t n : {10u, 100u, 1000u}) {
    const auto ctx = AttackContext::from_direction(vec2(0, 1), vec2(0, 0));
    auto s = csec::running_mean_state(vec2(0, 0), 1.0, n);
    double harmonic = 0.0, worst = 0.0, slack = INFINITY;
    for (std::size_t i = 1; i <= 10000; ++i) {
      s = csec::update_infinite(s, csec::optimal_attack_point(s, ctx));
      harmonic += 1.0 / static_cast<double>(n + i);
      const double d = csec::relative_displacement(s, ctx);
      worst = std::max(worst, std::abs(d - harmonic));
      slack = std::min(slack, std::log1p(static_cast<double>(i) / n) - d);
    }
    v.require(worst <= 1e-12, "n=" + std::to_string(n) + ": max |D_i - sum 1/(n+k)| = " + num(worst));
    v.require(slack >= 0.0, "n=" + std::to_string(n) + ": min ln(1+i/n) - D_i = " + num(slack));
  }
}

void random_out(Verdict& v) {
  const std::size_t n = 100, steps = 200, reps = 1000;
  std::vector<double> finals;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    RandomSource rng(2024, rep);
    csec::WorkingSet ws;
    for (std::size_t k = 0; k < n; ++k) ws.push(vec2(rng.normal(), rng.normal()));
    auto s = CentroidState::from_working_set(std::move(ws), 1.0);
    const auto ctx = AttackContext::from_direction(vec2(1, 0), s.center);
    for (std::size_t i = 0; i < steps; ++i)
      s = csec::update_finite(std::move(s), csec::optimal_attack_point(s, ctx), csec::UpdateRule::random_out, &rng)
              .state;
    finals.push_back(csec::relative_displacement(s, ctx));
  }
  double mean = 0.0;
  for (double d : finals) mean += d / reps;
  double ss = 0.0;
  for (double d : finals) ss += (d - mean) * (d - mean);
  const double se = std::sqrt(ss / (reps - 1) / reps);
  const double target = static_cast<double>(steps) / n;
  v.require(std::abs(mean - target) <= 3.0 * se,
            "mean D_200 = " + num(mean) + ", target " + num(target) + ", SE " + num(se) + ", z = " +
                num((mean - target) / se, 3));
}

// Grid oracle for a 2-D cell: full sweep at coarse pitch, then a fine sweep
// around the best coarse point. Feasible regions here contain a disc of
// radius 0.05, so the coarse sweep always lands inside.
double grid_maximum(const csec::QclpProblem& p) {
  auto feasible = [&](double x, double y) {
    const double dx = x - p.ball_center(0), dy = y - p.ball_center(1);
    if (dx * dx + dy * dy > p.ball_radius * p.ball_radius) return false;
    for (Eigen::Index j = 0; j < p.G.rows(); ++j)
      if (p.G(j, 0) * x + p.G(j, 1) * y > p.h(j)) return false;
    return true;
  };
  auto value = [&](double x, double y) {
    return (x - p.offset(0)) * p.objective(0) + (y - p.offset(1)) * p.objective(1);
  };
  double best = -INFINITY, bx = 0.0, by = 0.0;
  auto sweep = [&](double x0, double y0, double half, double pitch) {
    const long m = static_cast<long>(std::ceil(2.0 * half / pitch));
    for (long u = 0; u <= m; ++u)
      for (long w = 0; w <= m; ++w) {
        const double x = x0 - half + u * pitch, y = y0 - half + w * pitch;
        if (!feasible(x, y)) continue;
        const double f = value(x, y);
        if (f > best) best = f, bx = x, by = y;
      }
  };
  sweep(p.ball_center(0), p.ball_center(1), p.ball_radius, 2e-3);
  sweep(bx, by, 4e-3, 2e-5);
  return best;
}

void qclp_vs_grid(Verdict& v) {
  RandomSource rng(77, 4);
  double worst_gap = 0.0, worst_res = 0.0;
  std::size_t failures = 0;
  for (int t = 0; t < 50; ++t) {
    Point a(2);
    a << rng.normal(), rng.normal();
    a.normalize();
    csec::QclpProblem p;
    p.objective = a;
    p.ball_center = Point::Zero(2);
    p.ball_radius = 1.0;
    const Point inner = vec2(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
    p.offset = inner;
    const auto m = 1 + rng.uniform_index(20);
    p.G.resize(static_cast<Eigen::Index>(m), 2);
    p.h.resize(static_cast<Eigen::Index>(m));
    for (std::uint64_t j = 0; j < m; ++j) {
      const Point g = vec2(rng.normal(), rng.normal());
      p.G.row(static_cast<Eigen::Index>(j)) = g.transpose();
      p.h(static_cast<Eigen::Index>(j)) = g.dot(inner) + rng.uniform(0.05, 0.6) * g.norm();
    }
    const auto s = csec::solve_qclp(p);
    if (!s.optimal()) {
      ++failures;
      continue;
    }
    const double oracle = grid_maximum(p);
    worst_gap = std::max(worst_gap, std::abs(s.objective_value - oracle));
    double res = std::max(0.0, s.point.norm() - 1.0);
    for (Eigen::Index j = 0; j < p.G.rows(); ++j) res = std::max(res, p.G.row(j).dot(s.point) - p.h(j));
    worst_res = std::max(worst_res, res);
  }
  v.require(failures == 0, std::to_string(failures) + " of 50 instances not solved to optimality");
  v.require(worst_gap <= 1e-3, "max |solver - grid| = " + num(worst_gap));
  v.require(worst_res <= 1e-7, "max constraint residual = " + num(worst_res));
}

void greedy_dimension(Verdict& v) {
  std::vector<double> slopes;
  double worst_residual = 0.0;
  for (std::size_t d : {2u, 10u, 50u, 100u}) {
    auto c = csec::default_config(SimModel::greedy_gaussian);
    c.dimension = d;
    c.repetitions = 10;
    c.threads = worker_threads();
    const auto g = csec::run_greedy_gaussian(c);
    slopes.push_back(g.fit.slope);
    worst_residual = std::max(worst_residual, g.max_representer_residual);
    v.require(g.fit.r_squared >= 0.99, "d=" + std::to_string(d) + ": R^2 = " + num(g.fit.r_squared) + ", slope " +
                                           num(g.fit.slope) + ", stalls " + std::to_string(g.stalls));
  }
  bool increasing = true;
  for (std::size_t k = 1; k < slopes.size(); ++k) increasing = increasing && slopes[k] > slopes[k - 1];
  v.require(increasing, "slope strictly increasing over d = 2, 10, 50, 100");
  v.require(worst_residual <= 1e-6, "max representer residual = " + num(worst_residual));
}

void limited_control(Verdict& v) {
  auto c = csec::default_config(SimModel::axiom6);
  c.threads = worker_threads();
  const auto t = csec::run_axiom6(c);
  const auto rep = csec::check_dominance(t, 3.0);
  std::size_t outside = 0;
  for (std::size_t j = 0; j < t.size(); ++j)
    if (std::abs(t.mean_D[j] - t.bound_E[j]) > 3.0 * std::max(t.se_D[j], 1e-12)) ++outside;
  v.require(rep.mean_within_band, "mean within 3 SE of the expectation at every logged step: worst z = " +
                                      num(std::max(rep.worst_mean_excess, rep.worst_mean_deficit), 3) + ", " +
                                      std::to_string(outside) + " of " + std::to_string(t.size()) + " steps outside");
  const double plateau = csec::plateau_mean(t, c.iterations / 2, c.iterations);
  const double asym = csec::bounds::limited_asymptote(c.nu);
  v.require(std::abs(plateau - asym) <= 0.05 * asym, "plateau " + num(plateau) + " vs " + num(asym));
  v.require(rep.variance_dominated, "variance <= bound + 3 SE: worst excess " + num(rep.worst_variance_excess, 3) + " SE");
}

void protected_learner(Verdict& v) {
  for (double alpha : {0.0, 0.005, 0.025}) {
    auto c = csec::default_config(SimModel::axiom7);
    c.alpha = alpha;
    c.source = csec::InnocuousSource::uniform_ball;
    c.threads = worker_threads();
    const auto t = csec::run_axiom7(c);
    const auto rep = csec::check_dominance(t, 3.0);
    const std::string tag = "alpha=" + num(alpha) + ": ";
    v.require(rep.mean_below_upper_strict, tag + "mean <= E_upper at every logged step, worst (mean - E_upper)/SE = " +
                                               num(rep.worst_mean_excess, 3));
    v.require(rep.worst_mean_deficit <= 3.0, tag + "mean >= E_lower - 3 SE, worst (E_lower - mean)/SE = " +
                                                 num(rep.worst_mean_deficit, 3) + ", resets " +
                                                 std::to_string(t.total_resets) + ", final mean " + num(t.mean_D.back()));
    c.source_radius = 0.5;
    const auto inner = csec::run_axiom7(c);
    const auto ri = csec::check_dominance(inner, 3.0);
    v.info(tag + "innocuous ball of radius 0.5: worst excess " + num(ri.worst_mean_excess, 3) + " SE, worst deficit " +
           num(ri.worst_mean_deficit, 3) + " SE, resets " + std::to_string(inner.total_resets));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i <= 50000; i += 7) {
    const csec::bounds::MixModel m{0.05, 0.0, 1000.0, 1.0};
    const auto p = csec::bounds::protected_moments(static_cast<double>(i), m);
    const double e = csec::bounds::limited_moments(static_cast<double>(i), m).expectation;
    worst = std::max({worst, std::abs(p.expectation_upper - e), std::abs(p.expectation_lower - e)});
  }
  v.require(worst <= 1e-12, "alpha=0: protected and limited expectations differ by at most " + num(worst));
}

void critical_ratio(Verdict& v) {
  const double nc = csec::bounds::nu_crit(0.179);
  v.require(std::abs(nc - 0.152) <= 0.001, "nu_crit(0.179) = " + num(nc));
  auto c = csec::default_config(SimModel::nu_sweep);
  c.d_crit = 0.18;
  c.iterations = 100000;
  c.nu_grid = {0.14, 0.16};
  c.threads = worker_threads();
  const auto out = csec::run_nu_sweep(c);
  v.require(!out[0].reached, "nu=0.14 stays below 0.18, max mean D " + num(out[0].max_mean_D));
  v.require(out[1].reached, "nu=0.16 reaches 0.18 at iteration " + num(out[1].first_reach));
}

// Squared distance between unit-normalized spectra, straight from gram counts.
double normalized_distance2(const Bytes& x, const Bytes& y, std::size_t k) {
  std::unordered_map<Bytes, double> cx, cy;
  for (std::size_t p = 0; p + k <= x.size(); ++p) cx[x.substr(p, k)] += 1.0;
  for (std::size_t p = 0; p + k <= y.size(); ++p) cy[y.substr(p, k)] += 1.0;
  double nx = 0.0, ny = 0.0;
  for (const auto& [g, c] : cx) nx += c * c;
  for (const auto& [g, c] : cy) ny += c * c;
  nx = std::sqrt(nx);
  ny = std::sqrt(ny);
  std::map<Bytes, double> diff;
  for (const auto& [g, c] : cx) diff[g] += c / nx;
  for (const auto& [g, c] : cy) diff[g] -= c / ny;
  double s = 0.0;
  for (const auto& [g, d] : diff) s += d * d;
  return s;
}

void kernel_layer(Verdict& v) {
  const std::size_t k = 3;
  RandomSource rng(5, 5);
  const auto seqs = csec::synth_corpus(rng, 1000);
  const auto sp = csec::extract_spectra(seqs, k);
  const csec::KernelConfig cfg{k, std::nullopt, true};
  std::size_t off_one = 0;
  for (const auto& s : sp)
    if (csec::kernel_value(s, s, cfg) != 1.0) ++off_one;
  v.require(off_one == 0, std::to_string(off_one) + " of 1000 normalized self-kernels differ from 1");

  std::size_t mismatched = 0;
  for (std::size_t t = 0; t < 1000; ++t) {
    const auto i = rng.uniform_index(seqs.size()), j = rng.uniform_index(seqs.size());
    std::unordered_map<Bytes, double> ci, cj;
    for (std::size_t p = 0; p + k <= seqs[i].size(); ++p) ci[seqs[i].substr(p, k)] += 1.0;
    for (std::size_t p = 0; p + k <= seqs[j].size(); ++p) cj[seqs[j].substr(p, k)] += 1.0;
    double naive = 0.0;
    for (const auto& [g, c] : ci)
      if (auto it = cj.find(g); it != cj.end()) naive += c * it->second;
    if (csec::spectrum_dot(sp[i], sp[j]) != naive) ++mismatched;
  }
  v.require(mismatched == 0, std::to_string(mismatched) + " of 1000 spectrum dot products differ from the naive count");

  const std::size_t m = 250;
  const std::span<const csec::SparseSpectrum> head(sp.data(), m);
  const auto K = csec::kernel_matrix(head, cfg);
  const auto e = csec::kernel_pca(K, 1.0);
  bool monotone = true;
  for (Eigen::Index q = 1; q < e.variance_fraction.size(); ++q)
    monotone = monotone && e.variance_fraction(q) >= e.variance_fraction(q - 1);
  const double last = e.variance_fraction(e.variance_fraction.size() - 1);
  v.require(monotone && std::abs(last - 1.0) <= 1e-12,
            "variance curve nondecreasing, ends at " + num(last, 15) + " with rank " + std::to_string(e.rank));
  const Eigen::MatrixXd Z = csec::embed_training(K, e);
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      worst = std::max(worst, std::abs((Z.row(static_cast<Eigen::Index>(i)) - Z.row(static_cast<Eigen::Index>(j)))
                                           .squaredNorm() -
                                       normalized_distance2(seqs[i], seqs[j], k)));
  v.require(worst <= 1e-6, "full-rank embedding: max squared-distance error " + num(worst));
}

// Runs the CLI inside `dir`, capturing stdout to stdout.txt.
int cli(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(CSEC_CLI_PATH) + "' " + args +
                          " >>stdout.txt 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void cli_determinism(Verdict& v) {
  const std::vector<std::string> commands{
      "bounds --variant infinite --n 100 --i 1000 --out b1.csv",
      "bounds --variant finite --n 100 --i 500 --out b2.csv",
      "bounds --variant limited --nu 0.05 --n 1000 --i 20000 --out b3.csv",
      "bounds --variant protected --nu 0.05 --alpha 0.005 --n 1000 --i 20000 --out b4.csv",
      "bounds --variant nu-crit --displacement 0.179 --out b5.csv",
      "bounds --variant voronoi --n 100 --d 10 --out b6.csv",
      "bounds --variant effort --n 100 --displacement 1 --out b7.csv",
      "--threads 2 simulate --model axiom6 --n 200 --iters 5000 --reps 4 --seed 3 --trace s1.csv --summary s1.json",
      "--threads 2 simulate --model axiom7 --alpha 0.005 --n 200 --iters 5000 --reps 4 --seed 3 --trace s2.csv "
      "--summary s2.json",
      "--threads 2 simulate --model greedy --n 40 --d 5 --iters 80 --reps 2 --seed 3 --calib-size 4000 --trace s3.csv "
      "--summary s3.json",
      "--threads 2 simulate --model fp-sensitivity --iters 1000 --reps 2 --grid 0,0.1 --corpus-size 120 --seed 3 "
      "--trace s4.csv --summary s4.json",
      "--threads 2 simulate --model nu-sweep --n 500 --iters 5000 --reps 3 --seed 3 --trace s5.csv --summary s5.json",
      "corpus generate --size 150 --seed 3 --out corpus.txt",
      "corpus embed --in corpus.txt --pca 8 --out embedding.csv",
      "corpus dim --in corpus.txt --variance 0.95 --out variance.csv",
      "attack --n 30 --d 4 --iters 40 --seed 3 --out attack.csv --state-out state.json",
  };
  const fs::path root = fs::temp_directory_path() / "csec_acceptance_cli";
  fs::remove_all(root);
  const fs::path a = root / "a", b = root / "b";
  fs::create_directories(a);
  fs::create_directories(b);
  for (const auto& cmd : commands) {
    const int ra = cli(a, cmd), rb = cli(b, cmd);
    if (ra != 0 || rb != 0) v.require(false, "exit status " + std::to_string(ra) + "/" + std::to_string(rb) + ": " + cmd);
  }
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    const auto name = entry.path().filename();
    if (!fs::exists(b / name) || slurp(a / name) != slurp(b / name)) {
      ++differing;
      v.info("differs: " + name.string());
    }
  }
  v.require(files >= commands.size() && differing == 0,
            std::to_string(files) + " output files across " + std::to_string(commands.size()) + " commands, " +
                std::to_string(differing) + " differ");
  fs::remove_all(root);
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<void(Verdict&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "average-out progress is exactly i/n", 1.0, average_out},
      {2, "infinite-horizon progress is the harmonic tail and below ln(1+i/n)", 1.0, infinite_horizon},
      {3, "random-out progress matches i/n in expectation", 30.0, random_out},
      {4, "cell QCLP solver agrees with a grid oracle in 2-D", 60.0, qclp_vs_grid},
      {5, "greedy nearest-out attack is linear and faster in higher dimension", 900.0, greedy_dimension},
      {6, "limited-control learner follows its expectation and variance bound", 300.0, limited_control},
      {7, "protected learner stays between its expectation bounds", 600.0, protected_learner},
      {8, "critical traffic ratio separates 0.14 from 0.16", 300.0, critical_ratio},
      {9, "spectrum kernel, normalization and kernel PCA", 30.0, kernel_layer},
      {10, "CLI output is byte-identical across reruns", 600.0, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    v.require(secs < c.limit_seconds, "runtime " + num(secs, 3) + " s, limit " + num(c.limit_seconds) + " s");
    if (!v.pass) ++failed;
    std::printf("criterion %2d %s  %s\n", c.id, v.pass ? "PASS" : "FAIL", c.name.c_str());
    for (const auto& note : v.notes) std::printf("    %s\n", note.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
