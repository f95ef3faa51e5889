#pragma once

#include <atomic>
#include <cstdint>
#include <string>

#include "lidkit/linalg.hpp"

namespace lidkit {

struct EvalCounts {
  std::uint64_t score = 0;  // noise-prediction / score evaluations
  std::uint64_t jvp = 0;    // input Jacobian-vector products

  EvalCounts& operator+=(const EvalCounts& o) {
    score += o.score;
    jvp += o.jvp;
    return *this;
  }
  friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

/// A learned or analytic score s(x~; sigma) of the Gaussian-smoothed data
/// distribution, exposed in noise-prediction form eps(x~; sigma) = -sigma s(x~; sigma).
///
/// Implementations must be safe for concurrent const evaluation.
class ScoreField {
 public:
  virtual ~ScoreField() = default;

  virtual Eigen::Index dim() const = 0;
  virtual std::string name() const = 0;

  virtual bool has_epsilon() const { return true; }
  virtual bool has_jvp() const { return false; }

  /// Noise prediction at one noised point.
  virtual Vector epsilon(const Vector& noised, double sigma) const = 0;

  /// Noise predictions for the columns of `noised`.
  virtual Matrix epsilon_batch(const Matrix& noised, double sigma) const;

  /// Directional derivatives d eps / d x~ at `noised` along each column of `dirs`.
  virtual Matrix epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs) const;

  /// Coefficient alpha(sigma) of the clean point in x~ = alpha x + sigma eps.
  /// 1 for variance-exploding fields, 1 - sigma for rectified-flow fields.
  virtual double signal_scale(double /*sigma*/) const { return 1.0; }

  Vector score(const Vector& noised, double sigma) const { return -epsilon(noised, sigma) / sigma; }
};

/// Evaluation front-end that counts every call made through it. Estimators
/// only talk to fields through a probe, so the counts are exact.
class FieldProbe {
 public:
  explicit FieldProbe(const ScoreField& field) : field_(&field) {}

  const ScoreField& field() const { return *field_; }
  Eigen::Index dim() const { return field_->dim(); }
  const EvalCounts& counts() const { return counts_; }

  void require_epsilon() const;
  void require_jvp() const;

  Vector epsilon(const Vector& noised, double sigma);
  Matrix epsilon_batch(const Matrix& noised, double sigma);
  Matrix epsilon_jvp(const Vector& noised, double sigma, const Matrix& dirs);

 private:
  const ScoreField* field_;
  EvalCounts counts_;
};

}  // namespace lidkit
