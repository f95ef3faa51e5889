#include "lidkit/estimators.hpp"

#include <array>
#include <chrono>
#include <cmath>

#include "lidkit/knn.hpp"
#include "lidkit/nonparametric.hpp"
#include "lidkit/parallel.hpp"

namespace lidkit {

namespace {

constexpr std::array<std::pair<EstimatorId, std::string_view>, 6> kEstimatorNames{{
    {EstimatorId::kDsm, "dsm"},
    {EstimatorId::kFlipd, "flipd"},
    {EstimatorId::kNormalBundle, "nb"},
    {EstimatorId::kErrorBundle, "eb"},
    {EstimatorId::kMle, "mle"},
    {EstimatorId::kTwoNn, "twonn"},
}};

void check_point(const FieldProbe& field, const Vector& x) {
  require(x.size() == field.dim(), ErrorKind::kShape,
          "point dimension " + std::to_string(x.size()) + " does not match field dimension " +
              std::to_string(field.dim()));
}

// Residual matrix B (n x m), column j = eps_j - eps_theta(alpha x + sigma eps_j).
Matrix residuals(FieldProbe& field, const Vector& x, const EstimatorParams& p, std::uint64_t point_index) {
  field.require_epsilon();
  check_point(field, x);
  const Matrix eps = noise_draws(p, point_index, x.size());
  const double alpha = field.field().signal_scale(p.sigma);
  Matrix noised = p.sigma * eps;
  noised.colwise() += alpha * x;
  return eps - field.epsilon_batch(noised, p.sigma);
}

// Eigenvalues of (1/m) M M^T for an n x m matrix M via the smaller Gram
// matrix; zero-padded to n entries.
Vector gram_eigenvalues(const Matrix& mat) {
  const Eigen::Index n = mat.rows(), m = mat.cols();
  const double inv_m = 1.0 / static_cast<double>(m);
  Vector ev = Vector::Zero(n);
  if (m < n) {
    const Vector small = sym_eig(Matrix(mat.transpose() * mat * inv_m)).eigenvalues;
    ev.head(m) = small;
  } else {
    ev = sym_eig(Matrix(mat * mat.transpose() * inv_m)).eigenvalues;
  }
  return ev;
}

}  // namespace

void EstimatorParams::validate() const {
  require(sigma > 0 && std::isfinite(sigma), ErrorKind::kDomain, "sigma must be positive and finite");
  require(m >= 1, ErrorKind::kParam, "m (noise samples) must be >= 1");
  require(probes >= 1, ErrorKind::kParam, "Hutchinson probe count must be >= 1");
  require(nb_tau > 0 && nb_tau < 1, ErrorKind::kParam, "nb threshold tau must lie in (0, 1)");
  require(eb_tau > 0 && eb_tau < 1, ErrorKind::kParam, "eb threshold tau must lie in (0, 1)");
}

Matrix noise_draws(const EstimatorParams& p, std::uint64_t point_index, Eigen::Index n) {
  RngStream rng(p.seed, make_stream(stream_tag::kEstimator, point_index));
  return gaussian_matrix(rng, n, p.m);
}

double dsm_lid(FieldProbe& field, const Vector& x, const EstimatorParams& p, std::uint64_t point_index) {
  p.validate();
  const Matrix b = residuals(field, x, p, point_index);
  double total = 0.0;
  for (Eigen::Index j = 0; j < b.cols(); ++j) total += b.col(j).squaredNorm();
  return total / static_cast<double>(b.cols());
}

double esm_loss(FieldProbe& field, FieldProbe& oracle, const Vector& x, const EstimatorParams& p,
                std::uint64_t point_index) {
  p.validate();
  field.require_epsilon();
  oracle.require_epsilon();
  check_point(field, x);
  check_point(oracle, x);
  const Matrix eps = noise_draws(p, point_index, x.size());
  Matrix noised = p.sigma * eps;
  noised.colwise() += field.field().signal_scale(p.sigma) * x;
  // sigma^2 |s - s*|^2 = |eps_theta - eps*|^2 since s = -eps / sigma.
  const Matrix diff = field.epsilon_batch(noised, p.sigma) - oracle.epsilon_batch(noised, p.sigma);
  double total = 0.0;
  for (Eigen::Index j = 0; j < diff.cols(); ++j) total += diff.col(j).squaredNorm();
  return total / static_cast<double>(diff.cols());
}

Divergence score_divergence(FieldProbe& field, const Vector& noised, double sigma, DivergenceMethod method,
                            int probes, std::uint64_t seed, std::uint64_t probe_stream) {
  field.require_jvp();
  check_point(field, noised);
  require(sigma > 0, ErrorKind::kDomain, "sigma must be positive");
  const Eigen::Index n = noised.size();
  Divergence out;
  // div s = -(1/sigma) div eps.
  if (method == DivergenceMethod::kExact) {
    const Matrix jac = field.epsilon_jvp(noised, sigma, Matrix::Identity(n, n));
    out.value = -jac.trace() / sigma;
    return out;
  }
  require(probes >= 1, ErrorKind::kParam, "Hutchinson probe count must be >= 1");
  RngStream rng(seed, make_stream(stream_tag::kProbe, probe_stream));
  Matrix dirs(n, probes);
  for (int k = 0; k < probes; ++k) dirs.col(k) = rademacher_vector(rng, n);
  const Matrix jv = field.epsilon_jvp(noised, sigma, dirs);
  out.probe_terms.resize(static_cast<std::size_t>(probes));
  double total = 0.0;
  for (int k = 0; k < probes; ++k) {
    const double term = -dirs.col(k).dot(jv.col(k)) / sigma;
    out.probe_terms[static_cast<std::size_t>(k)] = term;
    total += term;
  }
  out.value = total / probes;
  return out;
}

double ism_value(FieldProbe& field, const Vector& noised, double sigma, DivergenceMethod method, int probes,
                 std::uint64_t seed, std::uint64_t probe_stream) {
  const double div = score_divergence(field, noised, sigma, method, probes, seed, probe_stream).value;
  const Vector eps = field.epsilon(noised, sigma);
  // sigma^2 |s|^2 = |eps|^2
  return sigma * sigma * div + 0.5 * eps.squaredNorm();
}

double flipd(FieldProbe& field, const Vector& x, double sigma, DivergenceMethod method, int probes,
             std::uint64_t seed, std::uint64_t probe_stream) {
  const double div = score_divergence(field, x, sigma, method, probes, seed, probe_stream).value;
  const double eps_sq = field.epsilon(x, sigma).squaredNorm();
  return sigma * sigma * div + eps_sq + static_cast<double>(x.size());
}

NormalBundleResult normal_bundle(FieldProbe& field, const Vector& x, const EstimatorParams& p,
                                 std::uint64_t point_index) {
  p.validate();
  field.require_epsilon();
  check_point(field, x);
  const Eigen::Index n = x.size();
  const Matrix eps = noise_draws(p, point_index, n);
  Matrix noised = p.sigma * eps;
  noised.colwise() += field.field().signal_scale(p.sigma) * x;
  const Matrix preds = field.epsilon_batch(noised, p.sigma);  // n x m, A^T

  // Singular values of A from the eigenvalues of A A^T or A^T A.
  const Vector ev = gram_eigenvalues(preds) * static_cast<double>(p.m);
  const Eigen::Index rank_cap = std::min<Eigen::Index>(n, p.m);
  NormalBundleResult out;
  out.singular_values = ev.head(rank_cap).cwiseMax(0.0).cwiseSqrt();
  const double top = out.singular_values.size() ? out.singular_values[0] : 0.0;
  if (top <= 1e-12) {
    out.lid = static_cast<int>(n);
    return out;
  }
  const double cutoff = p.nb_tau * std::max(top, std::sqrt(static_cast<double>(p.m)));
  out.normal_count = (out.singular_values.array() > cutoff).count();
  out.lid = static_cast<int>(n - out.normal_count);
  out.saturated = out.normal_count == p.m && p.m < n;

  double best = -1.0;
  for (Eigen::Index i = 0; i + 1 < out.singular_values.size(); ++i) {
    const double a = out.singular_values[i], b = std::max(out.singular_values[i + 1], 1e-300);
    const double gap = std::log(a / b);
    if (a > 0 && gap > best) {
      best = gap;
      out.largest_gap = i + 1;
    }
  }
  return out;
}

int normal_bundle_lid(FieldProbe& field, const Vector& x, const EstimatorParams& p, std::uint64_t point_index) {
  return normal_bundle(field, x, p, point_index).lid;
}

Spectrum error_bundle_spectrum(FieldProbe& field, const Vector& x, const EstimatorParams& p,
                               std::uint64_t point_index) {
  p.validate();
  const Matrix b = residuals(field, x, p, point_index);
  Spectrum s;
  s.eigenvalues = gram_eigenvalues(b);
  double total = 0.0;
  for (Eigen::Index j = 0; j < b.cols(); ++j) total += b.col(j).squaredNorm();
  s.trace = total / static_cast<double>(b.cols());
  return s;
}

int error_bundle_lid(FieldProbe& field, const Vector& x, const EstimatorParams& p, std::uint64_t point_index) {
  const Spectrum s = error_bundle_spectrum(field, x, p, point_index);
  if (s.size() == 0) return 0;
  const double cutoff = p.eb_tau * std::max(s.eigenvalues[0], 1.0);
  return static_cast<int>((s.eigenvalues.array() > cutoff).count());
}

std::string_view estimator_name(EstimatorId id) {
  for (const auto& [e, name] : kEstimatorNames)
    if (e == id) return name;
  return "unknown";
}

EstimatorId parse_estimator(std::string_view name) {
  for (const auto& [e, n] : kEstimatorNames)
    if (n == name) return e;
  fail(ErrorKind::kParam, "unknown estimator: " + std::string(name));
}

bool needs_field(EstimatorId id) { return id != EstimatorId::kMle && id != EstimatorId::kTwoNn; }
bool needs_jvp(EstimatorId id) { return id == EstimatorId::kFlipd; }

std::optional<double> LIDReport::mae() const {
  if (true_lid.size() != estimates.size() || estimates.empty()) return std::nullopt;
  double total = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) total += std::abs(estimates[i] - true_lid[i]);
  return total / static_cast<double>(estimates.size());
}

double LIDReport::mean() const { return mean_se(estimates).mean; }
double LIDReport::stddev() const { return mean_se(estimates).stddev; }

EvalCounts LIDReport::total_counts() const {
  EvalCounts total;
  for (const auto& c : counts) total += c;
  return total;
}

LIDReport estimate_cloud(const ScoreField* field, const PointCloud& cloud, EstimatorId id, const EstimatorParams& p,
                         int threads) {
  const auto start = std::chrono::steady_clock::now();
  p.validate();
  if (needs_field(id)) {
    require(field != nullptr, ErrorKind::kCapability,
            std::string(estimator_name(id)) + " needs a score field (oracle or checkpoint)");
    require(field->has_epsilon(), ErrorKind::kCapability, field->name() + ": field exposes neither score nor epsilon");
    if (needs_jvp(id))
      require(field->has_jvp(), ErrorKind::kCapability,
              field->name() + ": " + std::string(estimator_name(id)) + " needs input Jacobian-vector products");
    require(field->dim() == cloud.dim(), ErrorKind::kShape, "field dimension does not match the cloud");
  }

  const auto count = static_cast<std::size_t>(cloud.size());
  LIDReport report;
  report.estimator = std::string(estimator_name(id));
  report.params = p;
  report.estimates.assign(count, 0.0);
  report.counts.assign(count, {});
  if (cloud.true_lid.size() == count) report.true_lid = cloud.true_lid;

  if (id == EstimatorId::kMle || id == EstimatorId::kTwoNn) {
    require(p.k >= 3 && p.k < cloud.size(), ErrorKind::kParam, "k must satisfy 3 <= k < N");
    const auto table = knn_table(cloud.points, id == EstimatorId::kMle ? p.k : p.k - 1, threads);
    if (id == EstimatorId::kMle) {
      parallel_for(count, [&](std::size_t i) { report.estimates[i] = mle_from_neighbors(table[i], p.k); }, threads);
    } else {
      const auto ratios = twonn_ratios(cloud.points, threads);
      parallel_for(
          count, [&](std::size_t i) { report.estimates[i] = twonn_from_neighborhood(ratios, i, table[i], p.k); },
          threads);
    }
  } else {
    parallel_for(
        count,
        [&](std::size_t i) {
          FieldProbe probe(*field);
          const Vector x = cloud.points.row(static_cast<Eigen::Index>(i)).transpose();
          double est = 0.0;
          try {
            switch (id) {
              case EstimatorId::kDsm:
                est = dsm_lid(probe, x, p, i);
                break;
              case EstimatorId::kFlipd:
                if (p.noised_flipd) {
                  const Matrix eps = noise_draws(p, i, x.size());
                  const double alpha = field->signal_scale(p.sigma);
                  for (int j = 0; j < p.m; ++j)
                    est += flipd(probe, alpha * x + p.sigma * eps.col(j), p.sigma, p.divergence, p.probes, p.seed,
                                 i * static_cast<std::uint64_t>(p.m) + static_cast<std::uint64_t>(j));
                  est /= p.m;
                } else {
                  est = flipd(probe, x, p.sigma, p.divergence, p.probes, p.seed, i);
                }
                break;
              case EstimatorId::kNormalBundle:
                est = normal_bundle_lid(probe, x, p, i);
                break;
              case EstimatorId::kErrorBundle:
                est = error_bundle_lid(probe, x, p, i);
                break;
              default:
                break;
            }
          } catch (const Error& e) {
            throw Error(e.kind(), "point " + std::to_string(i) + ": " + e.what());
          }
          report.estimates[i] = est;
          report.counts[i] = probe.counts();
        },
        threads);
  }

  for (double e : report.estimates)
    if (e < 0) ++report.negative_estimates;
  report.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace lidkit
