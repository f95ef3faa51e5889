#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "lidkit/estimators.hpp"
#include "lidkit/mlp.hpp"

namespace lidkit {

/// Where the score field of a benchmark manifold comes from.
enum class FieldSource { kTrained, kOracle, kRandomInit };

struct BenchConfig {
  std::vector<ManifoldSpec> manifolds;
  std::vector<std::string> estimators;  // dsm, flipd, nb, eb, mle, twonn
  std::vector<double> sigmas;
  int m = 8;
  std::vector<int> ks{50, 100};  // neighborhood sizes for mle / twonn
  FieldSource field = FieldSource::kTrained;
  MlpConfig mlp;                 // input_dim is taken from each manifold
  TrainConfig train;
  DivergenceMethod divergence = DivergenceMethod::kExact;
  int probes = 64;
  std::uint64_t seed = 0;
  std::string output_dir = ".";

  void validate() const;
};

/// A manifold spec as a JSON object (keys as in the bench "manifolds" list).
std::string manifold_json(const ManifoldSpec& spec);
ManifoldSpec parse_manifold_json(const std::string& json_text);

/// Parses the JSON bench document. Missing keys keep the defaults above,
/// except that "manifolds", "estimators" and (for parametric estimators)
/// "sigmas" are required.
BenchConfig parse_bench_config(const std::string& json_text);

struct BenchRow {
  std::string manifold;
  Eigen::Index d = 0;
  Eigen::Index n = 0;
  std::string estimator;  // e.g. "dsm" or "mle_k50"
  double sigma = 0.0;     // 0 for non-parametric rows
  int m = 0;              // 0 for non-parametric rows
  double mae = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::uint64_t score_evals = 0;
  std::uint64_t jvp_evals = 0;
  double runtime_ms = 0.0;
  std::string error;  // non-empty when the cell failed
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::size_t failures() const;
};

/// Builds the score field for one manifold per the config.
std::shared_ptr<const ScoreField> make_field(const BenchConfig& cfg, const PointCloud& cloud, std::ostream* log);

BenchResult run_bench(const BenchConfig& cfg, int threads = 0, std::ostream* log = nullptr);

/// CSV with header manifold,d,n,estimator,sigma,m,mae,mean,stddev,score_evals,jvp_evals,runtime_ms.
std::string bench_csv(const BenchResult& r, bool timing = true);
/// Text table: one line per manifold, one column per (estimator, sigma/k),
/// and an Average row of per-column mean MAE.
std::string bench_table(const BenchResult& r);

struct SpectrumEntry {
  int m = 0;
  Spectrum spectrum;
  double dsm = 0.0;  // dsm_lid with the same draws
};

/// Error-bundle spectra at one point for each m in `ms`.
std::vector<SpectrumEntry> spectrum_study(const ScoreField& field, const Vector& x, double sigma, std::uint64_t seed,
                                          std::uint64_t point_index, const std::vector<int>& ms);
/// CSV with columns m,rank,eigenvalue (rank is 1-based).
std::string spectrum_csv(const std::vector<SpectrumEntry>& entries);

struct ScalingConfig {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;  // (d, n) with n = 2d
  int m = 8;
  double sigma = 0.05;
  DivergenceMethod divergence = DivergenceMethod::kExact;
  int probes = 64;
  int points = 16;
  std::string field = "oracle";  // "oracle" (affine) or "mlp" (random init)
  Eigen::Index width = 64;
  int depth = 2;
  std::uint64_t seed = 0;

  void validate() const;
};

ScalingConfig parse_scaling_config(const std::string& json_text);

struct ScalingRow {
  Eigen::Index d = 0;
  Eigen::Index n = 0;
  int m = 0;
  std::uint64_t dsm_score_evals = 0;   // per point
  std::uint64_t dsm_jvp_evals = 0;
  std::uint64_t flipd_score_evals = 0;
  std::uint64_t flipd_jvp_evals = 0;
  long peak_rss_kb = -1;  // -1 when unavailable
};

std::vector<ScalingRow> scaling_study(const ScalingConfig& cfg, int threads = 0);
std::string scaling_csv(const std::vector<ScalingRow>& rows, const ScalingConfig& cfg, bool timing = true);

/// Peak resident set size of this process in KiB, or -1.
long peak_rss_kb();

}  // namespace lidkit
