#include "lidkit/score_field.hpp"

#include "lidkit/error.hpp"

namespace lidkit {

Matrix ScoreField::epsilon_batch(const Matrix& noised, double sigma) const {
  Matrix out(noised.rows(), noised.cols());
  for (Eigen::Index j = 0; j < noised.cols(); ++j) out.col(j) = epsilon(noised.col(j), sigma);
  return out;
}

Matrix ScoreField::epsilon_jvp(const Vector&, double, const Matrix&) const {
  fail(ErrorKind::kCapability, name() + ": field does not expose input Jacobian-vector products");
}

void FieldProbe::require_epsilon() const {
  require(field_->has_epsilon(), ErrorKind::kCapability, field_->name() + ": field exposes neither score nor epsilon");
}

void FieldProbe::require_jvp() const {
  require(field_->has_jvp(), ErrorKind::kCapability,
          field_->name() + ": field does not expose input Jacobian-vector products");
}

Vector FieldProbe::epsilon(const Vector& noised, double sigma) {
  require_epsilon();
  counts_.score += 1;
  return field_->epsilon(noised, sigma);
}

Matrix FieldProbe::epsilon_batch(const Matrix& noised, double sigma) {
  require_epsilon();
  counts_.score += static_cast<std::uint64_t>(noised.cols());
  return field_->epsilon_batch(noised, sigma);
}

Matrix FieldProbe::epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs) {
  require_jvp();
  counts_.jvp += static_cast<std::uint64_t>(dirs.cols());
  return field_->epsilon_jvp(noised, sigma, dirs);
}

}  // namespace lidkit
