#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lidkit/manifolds.hpp"
#include "lidkit/score_field.hpp"

namespace lidkit {

enum class DivergenceMethod { kExact, kHutchinson };

struct EstimatorParams {
  double sigma = 0.01;
  int m = 8;  // noise samples per point
  DivergenceMethod divergence = DivergenceMethod::kExact;
  int probes = 64;         // Hutchinson probe count
  double nb_tau = 0.1;     // relative singular-value cutoff (normal bundle)
  double eb_tau = 0.01;    // relative eigenvalue cutoff (error bundle)
  bool noised_flipd = false;
  int k = 50;              // neighborhood size for the non-parametric estimators
  std::uint64_t seed = 0;

  void validate() const;
};

/// The m noise vectors used at point `point_index`, one per column. Every
/// estimator that needs noise at that point uses exactly these draws.
Matrix noise_draws(const EstimatorParams& p, std::uint64_t point_index, Eigen::Index n);

/// (1/m) sum_j |eps_j - eps_theta(alpha x + sigma eps_j)|^2.
double dsm_lid(FieldProbe& field, const Vector& x, const EstimatorParams& p, std::uint64_t point_index = 0);

/// Half-scaled DSM, 1/2 dsm_lid; pairs with the 1/2-convention ESM and ISM.
inline double dsm_half(FieldProbe& field, const Vector& x, const EstimatorParams& p, std::uint64_t point_index = 0) {
  return 0.5 * dsm_lid(field, x, p, point_index);
}

/// (sigma^2/m) sum_j |s_theta(x~_j) - s_true(x~_j)|^2 over the dsm_lid draws.
double esm_loss(FieldProbe& field, FieldProbe& oracle, const Vector& x, const EstimatorParams& p,
                std::uint64_t point_index = 0);

/// sigma^2 (div s_theta(x~) + 1/2 |s_theta(x~)|^2) at a noised point. The
/// Hutchinson variant draws Rademacher probes from `probe_stream`.
double ism_value(FieldProbe& field, const Vector& noised, double sigma, DivergenceMethod method, int probes = 64,
                 std::uint64_t seed = 0, std::uint64_t probe_stream = 0);

/// Divergence of the score at a point, with per-probe terms when Hutchinson
/// is used (for standard errors).
struct Divergence {
  double value = 0.0;
  std::vector<double> probe_terms;
};
Divergence score_divergence(FieldProbe& field, const Vector& noised, double sigma, DivergenceMethod method,
                            int probes = 64, std::uint64_t seed = 0, std::uint64_t probe_stream = 0);

/// ism_value(x) + (sigma^2/2)|s_theta(x)|^2 + n at the given point.
double flipd(FieldProbe& field, const Vector& x, double sigma, DivergenceMethod method, int probes = 64,
             std::uint64_t seed = 0, std::uint64_t probe_stream = 0);

struct NormalBundleResult {
  int lid = 0;
  Eigen::Index normal_count = 0;
  Vector singular_values;    // descending
  Eigen::Index largest_gap = 0;  // count that the largest log-gap would select
  bool saturated = false;        // normal_count == m: more samples could raise it
};

/// Counts singular values of the m x n matrix of noise predictions above
/// tau * max(s_max, sqrt(m)) and returns n minus the count.
NormalBundleResult normal_bundle(FieldProbe& field, const Vector& x, const EstimatorParams& p,
                                 std::uint64_t point_index = 0);
int normal_bundle_lid(FieldProbe& field, const Vector& x, const EstimatorParams& p, std::uint64_t point_index = 0);

/// Spectrum of C' = B^T B / m, rows of B the residuals eps_j - eps_theta(x~_j)
/// over the dsm_lid draws. trace equals dsm_lid at the same point and seed.
Spectrum error_bundle_spectrum(FieldProbe& field, const Vector& x, const EstimatorParams& p,
                               std::uint64_t point_index = 0);

/// Eigenvalues of the error-bundle spectrum above eb_tau * max(lambda_max, 1).
/// Residual eigenvalues are in units of the noise variance, so the floor keeps
/// rounding-level spectra (a point mass) from counting as tangent directions.
int error_bundle_lid(FieldProbe& field, const Vector& x, const EstimatorParams& p, std::uint64_t point_index = 0);

enum class EstimatorId { kDsm, kFlipd, kNormalBundle, kErrorBundle, kMle, kTwoNn };

std::string_view estimator_name(EstimatorId id);
EstimatorId parse_estimator(std::string_view name);
bool needs_field(EstimatorId id);
bool needs_jvp(EstimatorId id);

struct LIDReport {
  std::string estimator;
  EstimatorParams params;
  std::vector<double> estimates;
  std::vector<int> true_lid;  // empty when the cloud is unlabeled
  std::vector<EvalCounts> counts;
  double runtime_ms = 0.0;
  std::size_t negative_estimates = 0;

  std::optional<double> mae() const;
  double mean() const;
  double stddev() const;
  EvalCounts total_counts() const;
};

/// Runs one estimator at every point of the cloud. Point i draws its noise
/// from substream i of p.seed, so results do not depend on the thread count.
/// `field` may be null for the non-parametric estimators.
LIDReport estimate_cloud(const ScoreField* field, const PointCloud& cloud, EstimatorId id, const EstimatorParams& p,
                         int threads = 0);

// LIDReport serialization. CSV: point_index,estimate,true_lid,score_evals,jvp_evals.
// JSON summary: {estimator, params, mae, mean, stddev, runtime_ms}.
void write_report_csv(const LIDReport& r, const std::string& path);
void write_report_json(const LIDReport& r, const std::string& path);
std::string report_json(const LIDReport& r);

/// Shortest round-trip decimal for a double ("nan" for NaN).
std::string format_double(double v);

}  // namespace lidkit
