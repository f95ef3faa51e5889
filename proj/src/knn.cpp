#include "lidkit/knn.hpp"

#include <algorithm>
#include <string>

#include "lidkit/parallel.hpp"

namespace lidkit {

namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
}

}  // namespace

std::vector<Neighbor> knn(const Matrix& points, Eigen::Index query, Eigen::Index k) {
  const Eigen::Index n_points = points.rows();
  require(query >= 0 && query < n_points, ErrorKind::kParam, "knn: query index out of range");
  require(k >= 1, ErrorKind::kParam, "knn: k must be >= 1");
  require(k < n_points, ErrorKind::kParam,
          "knn: insufficient points (k=" + std::to_string(k) + ", N=" + std::to_string(n_points) + ")");

  std::vector<Neighbor> all;
  all.reserve(static_cast<std::size_t>(n_points - 1));
  const Eigen::Index dim = points.cols();
  for (Eigen::Index i = 0; i < n_points; ++i) {
    if (i == query) continue;
    double s = 0.0;
    for (Eigen::Index c = 0; c < dim; ++c) {
      const double diff = points(i, c) - points(query, c);
      s += diff * diff;
    }
    all.push_back({std::sqrt(s), i});
  }
  std::partial_sort(all.begin(), all.begin() + k, all.end(), closer);
  all.resize(static_cast<std::size_t>(k));
  return all;
}

std::vector<double> knn_distances(const Matrix& points, Eigen::Index query, Eigen::Index k) {
  std::vector<double> out;
  for (const auto& nb : knn(points, query, k)) out.push_back(nb.distance);
  return out;
}

std::vector<std::vector<Neighbor>> knn_table(const Matrix& points, Eigen::Index k, int threads) {
  std::vector<std::vector<Neighbor>> table(static_cast<std::size_t>(points.rows()));
  parallel_for(
      table.size(), [&](std::size_t i) { table[i] = knn(points, static_cast<Eigen::Index>(i), k); }, threads);
  return table;
}

}  // namespace lidkit
