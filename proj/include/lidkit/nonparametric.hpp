#pragma once

#include <vector>

#include "lidkit/knn.hpp"
#include "lidkit/manifolds.hpp"

namespace lidkit {

/// Levina-Bickel MLE with the MacKay-Ghahramani 1/(k-1) normalization:
///   [ (1/(k-1)) sum_{j<k} ln(T_k / T_j) ]^-1
/// over the k nearest-neighbor distances of the query point. Zero distances
/// (duplicate points) are dropped from the sum.
double mle_lid(const PointCloud& cloud, Eigen::Index query, int k);
double mle_from_neighbors(const std::vector<Neighbor>& neighbors, int k);

/// Second-to-first nearest-neighbor distance ratio of every point; NaN where
/// the first distance is zero.
std::vector<double> twonn_ratios(const Matrix& points, int threads = 0);

/// TwoNN, pooled over the query and its k-1 nearest neighbors: the Pareto
/// maximum-likelihood estimate K / sum ln(mu_i) over the K members whose
/// ratio is defined.
double twonn_lid(const PointCloud& cloud, Eigen::Index query, int k);
double twonn_from_neighborhood(const std::vector<double>& ratios, std::size_t query,
                               const std::vector<Neighbor>& neighbors, int k);

/// TwoNN pooled over the whole cloud.
double twonn_global(const PointCloud& cloud);

}  // namespace lidkit
