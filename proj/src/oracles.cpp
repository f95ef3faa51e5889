#include "lidkit/oracles.hpp"

#include <cmath>
#include <numbers>

namespace lidkit {

namespace {

void check_sigma(double sigma) {
  require(sigma > 0 && std::isfinite(sigma), ErrorKind::kDomain, "sigma must be positive and finite");
}

void check_dim(Eigen::Index expected, Eigen::Index got) {
  require(expected == got, ErrorKind::kShape,
          "dimension mismatch: expected " + std::to_string(expected) + ", got " + std::to_string(got));
}

// Sigma^-1 r = sigma^-2 (r - U U^T r / (1 + sigma^2)).
Vector apply_precision(const AffineGaussianOracle& o, const Vector& r, double sigma) {
  const double s2 = sigma * sigma;
  if (o.frame.cols() == 0) return r / s2;
  return (r - o.frame * (o.frame.transpose() * r) / (1.0 + s2)) / s2;
}

struct Responsibilities {
  Vector w;       // posterior weights over anchors
  double log_z;   // log sum_i w_i exp(-|x - a_i|^2 / 2 sigma^2)
};

Responsibilities responsibilities(const PointMixtureOracle& o, const Vector& x, double sigma) {
  const Eigen::Index m = o.anchors.rows();
  Vector logits(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double w = o.weights[i];
    logits[i] = w > 0 ? std::log(w) - (o.anchors.row(i).transpose() - x).squaredNorm() / (2.0 * sigma * sigma)
                      : -std::numeric_limits<double>::infinity();
  }
  const double top = logits.maxCoeff();
  Vector r = (logits.array() - top).exp().matrix();
  const double z = r.sum();
  return {r / z, top + std::log(z)};
}

}  // namespace

AffineGaussianOracle::AffineGaussianOracle(Matrix u, Vector b) : frame(std::move(u)), offset(std::move(b)) {
  require(frame.rows() == offset.size() || frame.cols() == 0, ErrorKind::kShape,
          "affine oracle: frame rows must equal offset size");
  if (frame.cols() == 0) frame.resize(offset.size(), 0);
  if (frame.cols() > 0) {
    const double err =
        (frame.transpose() * frame - Matrix::Identity(frame.cols(), frame.cols())).cwiseAbs().maxCoeff();
    require(err <= 1e-10, ErrorKind::kShape, "affine oracle: frame columns are not orthonormal");
  }
}

PointMixtureOracle::PointMixtureOracle(Matrix a, Vector w) : anchors(std::move(a)), weights(std::move(w)) {
  require(anchors.rows() >= 1 && anchors.rows() == weights.size(), ErrorKind::kShape,
          "mixture oracle: need one weight per anchor");
  require((weights.array() >= 0).all() && std::abs(weights.sum() - 1.0) <= 1e-12, ErrorKind::kDomain,
          "mixture oracle: weights must lie on the simplex");
}

Vector affine_score(const AffineGaussianOracle& o, const Vector& noised, double sigma) {
  check_sigma(sigma);
  check_dim(o.dim(), noised.size());
  return -apply_precision(o, noised - o.offset, sigma);
}

Vector affine_score_jvp(const AffineGaussianOracle& o, const Vector& noised, double sigma, const Vector& v) {
  check_sigma(sigma);
  check_dim(o.dim(), noised.size());
  check_dim(o.dim(), v.size());
  return -apply_precision(o, v, sigma);
}

double affine_log_density(const AffineGaussianOracle& o, const Vector& noised, double sigma) {
  check_sigma(sigma);
  const double s2 = sigma * sigma;
  const auto n = static_cast<double>(o.dim());
  const auto d = static_cast<double>(o.intrinsic_dim());
  const Vector r = noised - o.offset;
  const double quad = r.dot(apply_precision(o, r, sigma));
  const double logdet = d * std::log(1.0 + s2) + (n - d) * std::log(s2);
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

Vector mixture_score(const PointMixtureOracle& o, const Vector& noised, double sigma) {
  check_sigma(sigma);
  check_dim(o.dim(), noised.size());
  const Responsibilities r = responsibilities(o, noised, sigma);
  Vector s = Vector::Zero(noised.size());
  for (Eigen::Index i = 0; i < o.anchors.rows(); ++i) s += r.w[i] * (o.anchors.row(i).transpose() - noised);
  return s / (sigma * sigma);
}

Vector mixture_score_jvp(const PointMixtureOracle& o, const Vector& noised, double sigma, const Vector& v) {
  check_sigma(sigma);
  check_dim(o.dim(), noised.size());
  check_dim(o.dim(), v.size());
  // J = -I / sigma^2 + (sum_i w_i d_i d_i^T - mu mu^T) / sigma^4, d_i = a_i - x.
  const Responsibilities r = responsibilities(o, noised, sigma);
  const double s2 = sigma * sigma;
  Vector mu = Vector::Zero(noised.size());
  Vector weighted = Vector::Zero(noised.size());
  for (Eigen::Index i = 0; i < o.anchors.rows(); ++i) {
    const Vector di = o.anchors.row(i).transpose() - noised;
    mu += r.w[i] * di;
    weighted += r.w[i] * di.dot(v) * di;
  }
  return -v / s2 + (weighted - mu * mu.dot(v)) / (s2 * s2);
}

double mixture_log_density(const PointMixtureOracle& o, const Vector& noised, double sigma) {
  check_sigma(sigma);
  const auto n = static_cast<double>(o.dim());
  return responsibilities(o, noised, sigma).log_z - 0.5 * n * std::log(2.0 * std::numbers::pi * sigma * sigma);
}

Vector AffineField::epsilon(const Vector& noised, double sigma) const {
  return sigma * apply_precision(oracle_, noised - oracle_.offset, sigma);
}

Matrix AffineField::epsilon_batch(const Matrix& noised, double sigma) const {
  check_sigma(sigma);
  check_dim(oracle_.dim(), noised.rows());
  const Matrix r = noised.colwise() - oracle_.offset;
  const double s2 = sigma * sigma;
  if (oracle_.frame.cols() == 0) return r / sigma;
  return (r - oracle_.frame * (oracle_.frame.transpose() * r) / (1.0 + s2)) / sigma;
}

Matrix AffineField::epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs) const {
  check_sigma(sigma);
  check_dim(oracle_.dim(), noised.size());
  check_dim(oracle_.dim(), dirs.rows());
  const double s2 = sigma * sigma;
  if (oracle_.frame.cols() == 0) return dirs / sigma;
  return (dirs - oracle_.frame * (oracle_.frame.transpose() * dirs) / (1.0 + s2)) / sigma;
}

Vector MixtureField::epsilon(const Vector& noised, double sigma) const {
  return -sigma * mixture_score(oracle_, noised, sigma);
}

Matrix MixtureField::epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs) const {
  Matrix out(dirs.rows(), dirs.cols());
  for (Eigen::Index j = 0; j < dirs.cols(); ++j) out.col(j) = -sigma * mixture_score_jvp(oracle_, noised, sigma, dirs.col(j));
  return out;
}

Vector ShiftedField::epsilon(const Vector& noised, double sigma) const {
  return base_->epsilon(noised, sigma) - sigma * shift_;
}

AffineGaussianOracle affine_oracle_for(const ManifoldSpec& spec) {
  require(spec.family == Family::kAffineGaussian, ErrorKind::kSpec, "affine oracle requires an affine_gaussian spec");
  spec.validate();
  return AffineGaussianOracle(embedding_map(spec).leftCols(spec.d), Vector::Zero(spec.n));
}

PointMixtureOracle mixture_oracle_for(const ManifoldSpec& spec) {
  spec.validate();
  return PointMixtureOracle(mixture_anchors(spec), Vector::Constant(spec.anchors, 1.0 / static_cast<double>(spec.anchors)));
}

}  // namespace lidkit
