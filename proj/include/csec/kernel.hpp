#pragma once

// k-gram spectrum features for byte sequences and the kernels built on them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csec {

using Bytes = std::string;

/// Sorted (k-gram, count) list; every count is at least 1.
struct SparseSpectrum {
  std::size_t k = 1;
  std::vector<std::pair<Bytes, std::uint64_t>> entries;

  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (const auto& e : entries) s += e.second;
    return s;
  }
};

struct KernelConfig {
  std::size_t k = 3;
  std::optional<double> sigma;  ///< RBF bandwidth; plain (normalized) dot product when absent
  bool normalize = true;

  void validate() const {
    if (k < 1) throw std::invalid_argument("kernel: k must be >= 1");
    if (sigma && !(*sigma > 0.0)) throw std::invalid_argument("kernel: sigma must be positive");
  }
};

inline SparseSpectrum extract_spectrum(std::string_view bytes, std::size_t k) {
  if (k < 1) throw std::invalid_argument("extract_spectrum: k must be >= 1");
  if (bytes.size() < k)
    throw std::invalid_argument("extract_spectrum: sequence of length " + std::to_string(bytes.size()) +
                                " is shorter than k=" + std::to_string(k));
  std::vector<std::string_view> grams;
  grams.reserve(bytes.size() - k + 1);
  for (std::size_t p = 0; p + k <= bytes.size(); ++p) grams.push_back(bytes.substr(p, k));
  std::sort(grams.begin(), grams.end());
  SparseSpectrum s;
  s.k = k;
  for (std::size_t p = 0; p < grams.size();) {
    std::size_t q = p;
    while (q < grams.size() && grams[q] == grams[p]) ++q;
    s.entries.emplace_back(Bytes(grams[p]), static_cast<std::uint64_t>(q - p));
    p = q;
  }
  return s;
}

/// Inner product by a linear merge of the two sorted entry lists.
inline double spectrum_dot(const SparseSpectrum& s1, const SparseSpectrum& s2) {
  if (s1.k != s2.k) throw std::invalid_argument("spectrum_dot: mismatched k");
  double acc = 0.0;
  auto p = s1.entries.begin();
  auto q = s2.entries.begin();
  while (p != s1.entries.end() && q != s2.entries.end()) {
    const int c = p->first.compare(q->first);
    if (c < 0) {
      ++p;
    } else if (c > 0) {
      ++q;
    } else {
      acc += static_cast<double>(p->second) * static_cast<double>(q->second);
      ++p;
      ++q;
    }
  }
  return acc;
}

inline double normalize_dot(double kxy, double kxx, double kyy) {
  if (!(kxx > 0.0) || !(kyy > 0.0)) throw std::invalid_argument("normalize_dot: self-kernel must be positive");
  if (kxx == kyy && kxy == kxx) return 1.0;
  return kxy / std::sqrt(kxx * kyy);
}

inline double rbf_from_dots(double kxy, double kxx, double kyy, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("rbf_from_dots: sigma must be positive");
  const double dist2 = std::max(0.0, kxx - 2.0 * kxy + kyy);
  return std::exp(-dist2 / (2.0 * sigma * sigma));
}

/// Kernel value between two spectra under a configuration.
inline double kernel_value(const SparseSpectrum& x, const SparseSpectrum& y, const KernelConfig& cfg) {
  double kxy = spectrum_dot(x, y);
  double kxx = spectrum_dot(x, x);
  double kyy = spectrum_dot(y, y);
  if (cfg.normalize) {
    kxy = normalize_dot(kxy, kxx, kyy);
    kxx = 1.0;
    kyy = 1.0;
  }
  return cfg.sigma ? rbf_from_dots(kxy, kxx, kyy, *cfg.sigma) : kxy;
}

inline std::vector<SparseSpectrum> extract_spectra(std::span<const Bytes> seqs, std::size_t k) {
  std::vector<SparseSpectrum> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) out.push_back(extract_spectrum(s, k));
  return out;
}

/// Cross-kernel rows(a) x cols(b). Entries are computed independently in a
/// fixed order, so the result does not depend on scheduling.
inline Eigen::MatrixXd cross_kernel(std::span<const SparseSpectrum> a, std::span<const SparseSpectrum> b,
                                    const KernelConfig& cfg) {
  cfg.validate();
  std::vector<double> self_a(a.size()), self_b(b.size());
  for (std::size_t i = 0; i < a.size(); ++i) self_a[i] = spectrum_dot(a[i], a[i]);
  for (std::size_t j = 0; j < b.size(); ++j) self_b[j] = spectrum_dot(b[j], b[j]);
  Eigen::MatrixXd K(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      double kxy = spectrum_dot(a[i], b[j]);
      double kxx = self_a[i];
      double kyy = self_b[j];
      if (cfg.normalize) {
        kxy = (&a[i] == &b[j]) ? 1.0 : normalize_dot(kxy, kxx, kyy);
        kxx = kyy = 1.0;
      }
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cfg.sigma ? rbf_from_dots(kxy, kxx, kyy, *cfg.sigma) : kxy;
    }
  }
  return K;
}

/// Symmetric Gram matrix; only the upper triangle is evaluated.
inline Eigen::MatrixXd kernel_matrix(std::span<const SparseSpectrum> xs, const KernelConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(xs.size());
  std::vector<double> self(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    self[i] = spectrum_dot(xs[i], xs[i]);
    if (cfg.normalize && !(self[i] > 0.0)) throw std::invalid_argument("kernel_matrix: empty spectrum");
  }
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (Eigen::Index j = i; j < n; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      double kxy = i == j ? self[ui] : spectrum_dot(xs[ui], xs[uj]);
      double kxx = self[ui];
      double kyy = self[uj];
      if (cfg.normalize) {
        kxy = i == j ? 1.0 : normalize_dot(kxy, kxx, kyy);
        kxx = kyy = 1.0;
      }
      const double v = cfg.sigma ? rbf_from_dots(kxy, kxx, kyy, *cfg.sigma) : kxy;
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

/// Squared feature-space distance implied by a Gram matrix.
inline double kernel_distance2(const Eigen::MatrixXd& K, Eigen::Index i, Eigen::Index j) {
  return std::max(0.0, K(i, i) - 2.0 * K(i, j) + K(j, j));
}

}  // namespace csec
