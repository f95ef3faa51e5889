#pragma once

#include <vector>

#include "lidkit/linalg.hpp"

namespace lidkit {

struct Neighbor {
  double distance;
  Eigen::Index index;
};

/// k nearest neighbors of row `query` among the rows of `points`, excluding the
/// query row itself. Exhaustive search; ascending by distance, ties broken by
/// the smaller row index.
std::vector<Neighbor> knn(const Matrix& points, Eigen::Index query, Eigen::Index k);

/// Distances only, as returned by knn().
std::vector<double> knn_distances(const Matrix& points, Eigen::Index query, Eigen::Index k);

/// knn() for every row. Row i of the result lists the k neighbors of point i.
std::vector<std::vector<Neighbor>> knn_table(const Matrix& points, Eigen::Index k, int threads = 0);

}  // namespace lidkit
