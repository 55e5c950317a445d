#pragma once

// Kernel PCA: explicit coordinates for kernel-defined feature vectors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>

namespace csec {

struct KernelPcaOptions {
  bool center = true;
  double rank_tolerance = 1e-10;  ///< eigenvalues below this fraction of the largest count as zero
  double symmetry_tolerance = 1e-8;
};

struct PcaEmbedding {
  Eigen::MatrixXd basis;  ///< n x m eigenvectors scaled by 1/sqrt(eigenvalue)
  Eigen::VectorXd eigenvalues;  ///< all n, nonincreasing, zeroed below the rank tolerance
  Eigen::VectorXd variance_fraction;  ///< cumulative explained variance per component
  std::size_t components = 0;
  std::size_t rank = 0;
  bool centered = true;
  Eigen::VectorXd train_column_means;
  double train_grand_mean = 0.0;

  /// Coordinates of new points from their kernel rows against the training set.
  Eigen::MatrixXd project(const Eigen::MatrixXd& cross) const {
    if (cross.cols() != basis.rows()) throw std::invalid_argument("PcaEmbedding::project: kernel row width mismatch");
    if (!centered) return cross * basis;
    Eigen::MatrixXd c = cross;
    const Eigen::VectorXd row_means = cross.rowwise().mean();
    c.rowwise() -= train_column_means.transpose();
    c.colwise() -= row_means;
    c.array() += train_grand_mean;
    return c * basis;
  }
};

namespace detail {

inline PcaEmbedding decompose(const Eigen::MatrixXd& K, const KernelPcaOptions& opt) {
  const Eigen::Index n = K.rows();
  if (n == 0 || K.cols() != n) throw std::invalid_argument("kernel_pca: kernel matrix must be square and nonempty");
  const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > opt.symmetry_tolerance * scale)
    throw std::invalid_argument("kernel_pca: kernel matrix is not symmetric");
  if (K.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("kernel_pca: kernel matrix is all zero");

  PcaEmbedding e;
  e.centered = opt.center;
  Eigen::MatrixXd Kc = K;
  if (opt.center) {
    e.train_column_means = K.colwise().mean().transpose();
    e.train_grand_mean = K.mean();
    Kc.rowwise() -= e.train_column_means.transpose();
    Kc.colwise() -= e.train_column_means;
    Kc.array() += e.train_grand_mean;
    Kc = 0.5 * (Kc + Kc.transpose());
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Kc);
  if (es.info() != Eigen::Success) throw std::runtime_error("kernel_pca: eigendecomposition failed");
  const Eigen::VectorXd vals = es.eigenvalues().reverse();
  const Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
  const double top = vals(0);
  if (!(top > 0.0)) throw std::invalid_argument("kernel_pca: centered kernel matrix is zero");
  if (vals(n - 1) < -opt.symmetry_tolerance * scale * static_cast<double>(n))
    throw std::invalid_argument("kernel_pca: kernel matrix is not positive semidefinite");

  e.eigenvalues = vals;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (vals(k) < opt.rank_tolerance * top) e.eigenvalues(k) = 0.0;
    else ++e.rank;
  }
  const double total = e.eigenvalues.sum();
  e.variance_fraction.resize(n);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    acc += e.eigenvalues(k);
    e.variance_fraction(k) = k + 1 >= static_cast<Eigen::Index>(e.rank) ? 1.0 : std::min(1.0, acc / total);
  }
  e.basis = vecs;  // scaled once the component count is known
  return e;
}

inline void truncate(PcaEmbedding& e, std::size_t m) {
  const auto mm = static_cast<Eigen::Index>(std::min(m, e.rank));
  Eigen::MatrixXd b = e.basis.leftCols(mm);
  for (Eigen::Index k = 0; k < mm; ++k) b.col(k) /= std::sqrt(e.eigenvalues(k));
  e.basis = std::move(b);
  e.components = static_cast<std::size_t>(mm);
}

}  // namespace detail

/// Smallest number of components whose cumulative eigenvalue mass reaches
/// target_variance, with the matching projection basis.
inline PcaEmbedding kernel_pca(const Eigen::MatrixXd& K, double target_variance, const KernelPcaOptions& opt = {}) {
  if (!(target_variance > 0.0 && target_variance <= 1.0))
    throw std::invalid_argument("kernel_pca: target variance must be in (0, 1]");
  auto e = detail::decompose(K, opt);
  std::size_t m = e.rank;
  for (Eigen::Index k = 0; k < e.variance_fraction.size(); ++k) {
    if (e.variance_fraction(k) >= target_variance * (1.0 - 1e-12)) {
      m = static_cast<std::size_t>(k) + 1;
      break;
    }
  }
  detail::truncate(e, m);
  return e;
}

/// Fixed number of components; fewer are returned when the rank is lower.
inline PcaEmbedding kernel_pca_components(const Eigen::MatrixXd& K, std::size_t m, const KernelPcaOptions& opt = {}) {
  if (m < 1) throw std::invalid_argument("kernel_pca: at least one component required");
  auto e = detail::decompose(K, opt);
  detail::truncate(e, m);
  return e;
}

/// Training-set coordinates (n x components).
inline Eigen::MatrixXd embed_training(const Eigen::MatrixXd& K, const PcaEmbedding& e) { return e.project(K); }

}  // namespace csec
