#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lidkit/linalg.hpp"

namespace lidkit {

enum class Family {
  kHypersphere,
  kHyperball,
  kTwinPeaksGraph,
  kCliffordTorus,
  kNonlinear,
  kAffineGaussian,
  kPointMixture,
};

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

struct ManifoldSpec {
  Family family = Family::kHypersphere;
  Eigen::Index d = 1;   // intrinsic dimension
  Eigen::Index n = 2;   // ambient dimension
  Eigen::Index N = 2000;
  std::uint64_t seed = 0;
  bool rotate = true;         // apply the seeded random rotation
  bool permute_dims = false;  // apply a seeded coordinate permutation after rotating
  double radius = 1.0;        // hypersphere radius, hyperball radius
  double height = 0.3;        // twinpeaks_graph bump height
  double scale = 1.0;         // point_mixture anchor scale
  Eigen::Index anchors = 4;   // point_mixture anchor count

  /// Throws Error(kSpec) when the dimension constraints of the family fail.
  void validate() const;
  /// Dimension of the latent construction before zero padding to n.
  Eigen::Index latent_dim() const;
  /// Short label such as "hypersphere_d4_n16".
  std::string label() const;
};

struct PointCloud {
  Matrix points;                  // N x n, one point per row
  std::vector<int> true_lid;      // per-point labels
  ManifoldSpec spec;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

/// The n x n linear map taking zero-padded latent coordinates to ambient
/// coordinates: rotation followed by the optional permutation. Identity when
/// neither is enabled.
Matrix embedding_map(const ManifoldSpec& spec);

/// Anchors of a point_mixture spec, one per row.
Matrix mixture_anchors(const ManifoldSpec& spec);

/// Draws spec.N points. Point i uses its own substream of spec.seed.
PointCloud sample(const ManifoldSpec& spec);

/// Latent-to-ambient map of a differentiable family, evaluated at a latent
/// point; used by jacobian_rank_check. Throws for families without a chart.
Vector latent_to_ambient(const ManifoldSpec& spec, const Vector& latent);

/// Minimum numerical rank of the chart Jacobian over `probes` random latent
/// points (central differences, singular values above 1e-6 of the largest).
Eigen::Index jacobian_rank_check(const ManifoldSpec& spec, int probes);

// Serialization. CSV: header x0..x{n-1},true_lid. Binary: "LIDC1", u32 N,
// u32 n, f64 row-major points, u32 labels, all little-endian.
void write_cloud_csv(const PointCloud& cloud, const std::string& path);
void write_cloud_binary(const PointCloud& cloud, const std::string& path);
PointCloud read_cloud(const std::string& path);
/// Picks CSV when the path ends in ".csv", binary otherwise.
void write_cloud(const PointCloud& cloud, const std::string& path);

}  // namespace lidkit
