#pragma once

#include <memory>

#include "lidkit/manifolds.hpp"
#include "lidkit/score_field.hpp"

namespace lidkit {

/// x = U z + b with z ~ N(0, I_d) and U an n x d orthonormal frame. The
/// smoothed density is N(b, U U^T + sigma^2 I), whose inverse covariance is
/// sigma^-2 (I - U U^T / (1 + sigma^2)).
struct AffineGaussianOracle {
  Matrix frame;   // n x d, orthonormal columns (d may be 0)
  Vector offset;  // n

  AffineGaussianOracle(Matrix u, Vector b);
  Eigen::Index dim() const { return offset.size(); }
  Eigen::Index intrinsic_dim() const { return frame.cols(); }
};

/// Equal or weighted point masses; LID 0 everywhere.
struct PointMixtureOracle {
  Matrix anchors;  // m x n, one anchor per row
  Vector weights;  // m, on the simplex

  PointMixtureOracle(Matrix a, Vector w);
  Eigen::Index dim() const { return anchors.cols(); }
};

Vector affine_score(const AffineGaussianOracle& o, const Vector& noised, double sigma);
Vector affine_score_jvp(const AffineGaussianOracle& o, const Vector& noised, double sigma, const Vector& v);
/// log N(noised; b, Sigma) including the normalizing constant.
double affine_log_density(const AffineGaussianOracle& o, const Vector& noised, double sigma);

Vector mixture_score(const PointMixtureOracle& o, const Vector& noised, double sigma);
Vector mixture_score_jvp(const PointMixtureOracle& o, const Vector& noised, double sigma, const Vector& v);
double mixture_log_density(const PointMixtureOracle& o, const Vector& noised, double sigma);

class AffineField final : public ScoreField {
 public:
  explicit AffineField(AffineGaussianOracle o) : oracle_(std::move(o)) {}
  const AffineGaussianOracle& oracle() const { return oracle_; }

  Eigen::Index dim() const override { return oracle_.dim(); }
  std::string name() const override { return "oracle_affine"; }
  bool has_jvp() const override { return true; }
  Vector epsilon(const Vector& noised, double sigma) const override;
  Matrix epsilon_batch(const Matrix& noised, double sigma) const override;
  Matrix epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs) const override;

 private:
  AffineGaussianOracle oracle_;
};

class MixtureField final : public ScoreField {
 public:
  explicit MixtureField(PointMixtureOracle o) : oracle_(std::move(o)) {}
  const PointMixtureOracle& oracle() const { return oracle_; }

  Eigen::Index dim() const override { return oracle_.dim(); }
  std::string name() const override { return "oracle_mixture"; }
  bool has_jvp() const override { return true; }
  Vector epsilon(const Vector& noised, double sigma) const override;
  Matrix epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs) const override;

 private:
  PointMixtureOracle oracle_;
};

/// Score shifted by a constant vector: s'(x~) = s(x~) + c.
class ShiftedField final : public ScoreField {
 public:
  ShiftedField(std::shared_ptr<const ScoreField> base, Vector shift) : base_(std::move(base)), shift_(std::move(shift)) {}
  Eigen::Index dim() const override { return base_->dim(); }
  std::string name() const override { return base_->name() + "+shift"; }
  bool has_jvp() const override { return base_->has_jvp(); }
  Vector epsilon(const Vector& noised, double sigma) const override;
  Matrix epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs) const override {
    return base_->epsilon_jvp(noised, sigma, dirs);
  }

 private:
  std::shared_ptr<const ScoreField> base_;
  Vector shift_;
};

/// Base field queried at a wrong noise level: eps'(x~; sigma) = eps(x~; factor sigma).
class MisscaledField final : public ScoreField {
 public:
  MisscaledField(std::shared_ptr<const ScoreField> base, double factor) : base_(std::move(base)), factor_(factor) {}
  Eigen::Index dim() const override { return base_->dim(); }
  std::string name() const override { return base_->name() + "@sigma*" + std::to_string(factor_); }
  bool has_jvp() const override { return base_->has_jvp(); }
  Vector epsilon(const Vector& noised, double sigma) const override { return base_->epsilon(noised, factor_ * sigma); }
  Matrix epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs) const override {
    return base_->epsilon_jvp(noised, factor_ * sigma, dirs);
  }

 private:
  std::shared_ptr<const ScoreField> base_;
  double factor_;
};

/// Exact oracle for an affine_gaussian spec (same frame as sample()).
AffineGaussianOracle affine_oracle_for(const ManifoldSpec& spec);
/// Equal-weight oracle over the anchors of a point_mixture spec.
PointMixtureOracle mixture_oracle_for(const ManifoldSpec& spec);

}  // namespace lidkit
