#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "lidkit/error.hpp"
#include "lidkit/rng.hpp"

namespace lidkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues of a symmetric matrix in descending order together with the
/// matrix trace. `vectors` holds matching unit eigenvectors in its columns
/// when they were requested, and is empty otherwise.
template <typename Scalar>
struct BasicSpectrum {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eigenvalues;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;
  Scalar trace = Scalar(0);

  Eigen::Index size() const { return eigenvalues.size(); }
  Scalar sum() const { return eigenvalues.sum(); }

  /// Number of eigenvalues strictly above rel_cutoff times the largest one.
  Eigen::Index count_above(Scalar rel_cutoff) const {
    if (eigenvalues.size() == 0) return 0;
    const Scalar top = eigenvalues[0];
    if (!(top > Scalar(0))) return 0;
    return static_cast<Eigen::Index>(
        std::count_if(eigenvalues.begin(), eigenvalues.end(), [&](Scalar v) { return v > rel_cutoff * top; }));
  }
};

using Spectrum = BasicSpectrum<double>;

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Sweeps until the
/// off-diagonal Frobenius norm is at most `tol` times the full Frobenius norm.
template <typename Derived>
BasicSpectrum<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& g, bool want_vectors = false,
                                                typename Derived::Scalar tol = 1e-12) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = g.rows();
  require(n == g.cols() && n > 0, ErrorKind::kShape, "sym_eig: matrix must be square and non-empty");
  const Scalar scale = g.cwiseAbs().maxCoeff();
  require(((g - g.transpose()).cwiseAbs().maxCoeff() <= Scalar(1e-9) * std::max(scale, Scalar(1))),
          ErrorKind::kShape, "sym_eig: matrix is not symmetric");

  Mat a = (g + g.transpose()) / Scalar(2);
  Mat v;
  if (want_vectors) v = Mat::Identity(n, n);

  const Scalar total = a.norm();
  auto off_norm = [&] {
    Scalar s = 0;
    for (Eigen::Index q = 0; q < n; ++q)
      for (Eigen::Index p = 0; p < q; ++p) s += Scalar(2) * a(p, q) * a(p, q);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < 100 && total > Scalar(0); ++sweep) {
    if (off_norm() <= tol * total) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        // Symmetric Schur rotation zeroing a(p, q).
        const Scalar tau = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (tau >= 0 ? Scalar(1) : Scalar(-1)) / (std::abs(tau) + std::sqrt(Scalar(1) + tau * tau));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = Scalar(0);
        if (want_vectors) {
          for (Eigen::Index k = 0; k < n; ++k) {
            const Scalar vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - s * vkq;
            v(k, q) = s * vkp + c * vkq;
          }
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) > a(j, j); });

  BasicSpectrum<Scalar> out;
  out.eigenvalues.resize(n);
  if (want_vectors) out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues[i] = a(order[i], order[i]);
    if (want_vectors) out.vectors.col(i) = v.col(order[i]);
  }
  out.trace = g.trace();
  return out;
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of R's diagonal folded into Q.
inline Matrix random_orthogonal(RngStream& rng, Eigen::Index n) {
  require(n >= 1, ErrorKind::kDomain, "random_orthogonal: n must be >= 1");
  const Matrix g = gaussian_matrix(rng, n, n);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

/// Mean and standard error of a sample.
struct MeanSe {
  double mean = 0.0;
  double stddev = 0.0;
  double se = 0.0;
};

template <typename Range>
MeanSe mean_se(const Range& xs) {
  MeanSe out;
  double n = 0;
  for (double x : xs) {
    out.mean += x;
    n += 1;
  }
  if (n == 0) return out;
  out.mean /= n;
  double ss = 0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stddev = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  out.se = out.stddev / std::sqrt(n);
  return out;
}

}  // namespace lidkit
