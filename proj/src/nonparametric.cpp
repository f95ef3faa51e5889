#include "lidkit/nonparametric.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "lidkit/parallel.hpp"

namespace lidkit {

namespace {

void warn_once(const char* what) {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true)) std::cerr << "warning: " << what << '\n';
}

double pareto_mle(double count, double log_sum) {
  require(count > 0 && log_sum > 0, ErrorKind::kDegenerate, "twonn: degenerate neighborhood (no distance spread)");
  return count / log_sum;
}

}  // namespace

double mle_from_neighbors(const std::vector<Neighbor>& nb, int k) {
  require(k >= 3, ErrorKind::kParam, "mle: k must be >= 3");
  require(nb.size() >= static_cast<std::size_t>(k), ErrorKind::kParam, "mle: fewer than k neighbors");
  const double tk = nb[static_cast<std::size_t>(k - 1)].distance;
  require(tk > 0, ErrorKind::kDegenerate, "mle: degenerate neighborhood (all neighbor distances are zero)");
  double sum = 0.0;
  int kept = 0;
  for (int j = 0; j < k - 1; ++j) {
    const double tj = nb[static_cast<std::size_t>(j)].distance;
    if (tj <= 0) continue;
    sum += std::log(tk / tj);
    ++kept;
  }
  if (kept < k - 1) warn_once("mle: duplicate points excluded from neighborhoods");
  require(kept > 0 && sum > 0, ErrorKind::kDegenerate, "mle: degenerate neighborhood (no distance spread)");
  return static_cast<double>(kept) / sum;
}

double mle_lid(const PointCloud& cloud, Eigen::Index query, int k) {
  require(k >= 3, ErrorKind::kParam, "mle: k must be >= 3");
  return mle_from_neighbors(knn(cloud.points, query, k), k);
}

std::vector<double> twonn_ratios(const Matrix& points, int threads) {
  const auto table = knn_table(points, 2, threads);
  std::vector<double> ratios(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double r1 = table[i][0].distance, r2 = table[i][1].distance;
    ratios[i] = r1 > 0 ? r2 / r1 : std::numeric_limits<double>::quiet_NaN();
  }
  return ratios;
}

double twonn_from_neighborhood(const std::vector<double>& ratios, std::size_t query,
                               const std::vector<Neighbor>& nb, int k) {
  require(k >= 3, ErrorKind::kParam, "twonn: k must be >= 3");
  require(nb.size() + 1 >= static_cast<std::size_t>(k), ErrorKind::kParam, "twonn: fewer than k-1 neighbors");
  double sum = 0.0, count = 0.0;
  auto add = [&](std::size_t i) {
    const double mu = ratios[i];
    if (std::isnan(mu)) return;
    sum += std::log(mu);
    count += 1;
  };
  add(query);
  for (int j = 0; j < k - 1; ++j) add(static_cast<std::size_t>(nb[static_cast<std::size_t>(j)].index));
  if (count < k) warn_once("twonn: points with a zero first-neighbor distance dropped from the pool");
  return pareto_mle(count, sum);
}

double twonn_lid(const PointCloud& cloud, Eigen::Index query, int k) {
  require(k >= 3, ErrorKind::kParam, "twonn: k must be >= 3");
  require(k <= cloud.size(), ErrorKind::kParam, "twonn: insufficient points");
  const auto ratios = twonn_ratios(cloud.points, 1);
  return twonn_from_neighborhood(ratios, static_cast<std::size_t>(query), knn(cloud.points, query, k - 1), k);
}

double twonn_global(const PointCloud& cloud) {
  require(cloud.size() >= 3, ErrorKind::kParam, "twonn: insufficient points");
  double sum = 0.0, count = 0.0;
  for (double mu : twonn_ratios(cloud.points, 0)) {
    if (std::isnan(mu)) continue;
    sum += std::log(mu);
    count += 1;
  }
  return pareto_mle(count, sum);
}

}  // namespace lidkit
