#include "lidkit/manifolds.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <numeric>


namespace lidkit {

namespace {

constexpr std::array<std::pair<Family, std::string_view>, 7> kFamilyNames{{
    {Family::kHypersphere, "hypersphere"},
    {Family::kHyperball, "hyperball"},
    {Family::kTwinPeaksGraph, "twinpeaks_graph"},
    {Family::kCliffordTorus, "clifford_torus"},
    {Family::kNonlinear, "nonlinear"},
    {Family::kAffineGaussian, "affine_gaussian"},
    {Family::kPointMixture, "point_mixture"},
}};

void constraint(bool ok, const ManifoldSpec& spec, const char* rule) {
  if (!ok)
    fail(ErrorKind::kSpec, "d must satisfy family constraint for " + std::string(family_name(spec.family)) + " (" +
                               rule + "; got d=" + std::to_string(spec.d) + ", n=" + std::to_string(spec.n) + ")");
}

struct NonlinearWeights {
  Matrix w1;  // 2d x d
  Matrix w2;  // n x 2d
};

NonlinearWeights nonlinear_weights(const ManifoldSpec& spec) {
  RngStream rng(spec.seed, make_stream(stream_tag::kFamily, 0));
  NonlinearWeights w;
  w.w1 = gaussian_matrix(rng, 2 * spec.d, spec.d) / std::sqrt(static_cast<double>(spec.d));
  w.w2 = gaussian_matrix(rng, spec.n, 2 * spec.d) / std::sqrt(static_cast<double>(2 * spec.d));
  return w;
}

// Latent construction (before padding/embedding) from chart coordinates.
Vector chart(const ManifoldSpec& spec, const Vector& latent, const NonlinearWeights* nl) {
  const Eigen::Index d = spec.d;
  switch (spec.family) {
    case Family::kTwinPeaksGraph: {
      Vector x(d + 1);
      x.head(d) = latent;
      double prod = 1.0;
      for (Eigen::Index i = 0; i < d; ++i) prod *= std::sin(2.0 * std::numbers::pi * latent[i]);
      x[d] = spec.height * prod;
      return x;
    }
    case Family::kCliffordTorus: {
      Vector x(2 * d);
      const double s = 1.0 / std::sqrt(static_cast<double>(d));
      for (Eigen::Index i = 0; i < d; ++i) {
        x[2 * i] = s * std::cos(latent[i]);
        x[2 * i + 1] = s * std::sin(latent[i]);
      }
      return x;
    }
    case Family::kNonlinear:
      return (nl->w2 * (nl->w1 * latent).array().tanh().matrix()).array().tanh().matrix();
    case Family::kAffineGaussian:
      return latent;
    default:
      fail(ErrorKind::kSpec, "family " + std::string(family_name(spec.family)) + " has no differentiable chart");
  }
}

Vector draw_latent_chart(const ManifoldSpec& spec, RngStream& rng) {
  const Eigen::Index d = spec.d;
  Vector u(d);
  switch (spec.family) {
    case Family::kTwinPeaksGraph:
      for (Eigen::Index i = 0; i < d; ++i) u[i] = rng.uniform();
      return u;
    case Family::kCliffordTorus:
      for (Eigen::Index i = 0; i < d; ++i) u[i] = 2.0 * std::numbers::pi * rng.uniform();
      return u;
    case Family::kNonlinear:
    case Family::kAffineGaussian:
      for (Eigen::Index i = 0; i < d; ++i) u[i] = rng.normal();
      return u;
    default:
      fail(ErrorKind::kSpec, "family " + std::string(family_name(spec.family)) + " has no differentiable chart");
  }
}

Vector embed(const Matrix& map, const Vector& latent) {
  return map.leftCols(latent.size()) * latent;
}

}  // namespace

std::string_view family_name(Family f) {
  for (const auto& [fam, name] : kFamilyNames)
    if (fam == f) return name;
  return "unknown";
}

Family parse_family(std::string_view name) {
  for (const auto& [fam, n] : kFamilyNames)
    if (n == name) return fam;
  fail(ErrorKind::kSpec, "unknown manifold family: " + std::string(name));
}

void ManifoldSpec::validate() const {
  require(N >= 1, ErrorKind::kSpec, "N must be >= 1");
  require(n >= 1, ErrorKind::kSpec, "n must be >= 1");
  constraint(d >= 0 && d <= n, *this, "0 <= d <= n");
  switch (family) {
    case Family::kHypersphere:
      constraint(d >= 1 && n >= d + 1, *this, "n >= d+1");
      require(radius > 0, ErrorKind::kSpec, "radius must be positive");
      break;
    case Family::kHyperball:
      constraint(d >= 1, *this, "d >= 1");
      require(radius > 0, ErrorKind::kSpec, "radius must be positive");
      break;
    case Family::kTwinPeaksGraph:
      constraint(d >= 1 && n >= d + 1, *this, "n >= d+1");
      break;
    case Family::kCliffordTorus:
      constraint(d >= 1 && n >= 2 * d, *this, "n >= 2d");
      break;
    case Family::kNonlinear:
      constraint(d >= 1, *this, "d >= 1");
      break;
    case Family::kAffineGaussian:
      break;
    case Family::kPointMixture:
      constraint(d == 0, *this, "d == 0");
      require(anchors >= 1, ErrorKind::kSpec, "point_mixture needs at least one anchor");
      require(scale >= 0, ErrorKind::kSpec, "anchor scale must be non-negative");
      break;
  }
}

Eigen::Index ManifoldSpec::latent_dim() const {
  switch (family) {
    case Family::kHypersphere:
    case Family::kTwinPeaksGraph:
      return d + 1;
    case Family::kCliffordTorus:
      return 2 * d;
    case Family::kNonlinear:
    case Family::kPointMixture:
      return n;
    case Family::kHyperball:
    case Family::kAffineGaussian:
      return d;
  }
  return n;
}

std::string ManifoldSpec::label() const {
  return std::string(family_name(family)) + "_d" + std::to_string(d) + "_n" + std::to_string(n);
}

Matrix embedding_map(const ManifoldSpec& spec) {
  Matrix map = Matrix::Identity(spec.n, spec.n);
  if (spec.rotate) {
    RngStream rng(spec.seed, make_stream(stream_tag::kEmbedding, 0));
    map = random_orthogonal(rng, spec.n);
  }
  if (spec.permute_dims) {
    RngStream rng(spec.seed, make_stream(stream_tag::kEmbedding, 1));
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(spec.n));
    std::iota(perm.begin(), perm.end(), Eigen::Index(0));
    // Fisher-Yates
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    Matrix permuted(spec.n, spec.n);
    for (Eigen::Index r = 0; r < spec.n; ++r) permuted.row(r) = map.row(perm[static_cast<std::size_t>(r)]);
    map = std::move(permuted);
  }
  return map;
}

Matrix mixture_anchors(const ManifoldSpec& spec) {
  require(spec.family == Family::kPointMixture, ErrorKind::kSpec, "mixture_anchors: not a point_mixture spec");
  RngStream rng(spec.seed, make_stream(stream_tag::kFamily, 1));
  return spec.scale * gaussian_matrix(rng, spec.n, spec.anchors).transpose();
}

PointCloud sample(const ManifoldSpec& spec) {
  spec.validate();
  PointCloud cloud;
  cloud.spec = spec;
  cloud.points.resize(spec.N, spec.n);
  cloud.true_lid.assign(static_cast<std::size_t>(spec.N), static_cast<int>(spec.d));

  if (spec.family == Family::kPointMixture) {
    const Matrix anchors = mixture_anchors(spec);
    for (Eigen::Index i = 0; i < spec.N; ++i) {
      RngStream rng(spec.seed, make_stream(stream_tag::kPoint, static_cast<std::uint64_t>(i)));
      cloud.points.row(i) = anchors.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(spec.anchors))));
    }
    return cloud;
  }

  const Matrix map = embedding_map(spec);
  NonlinearWeights nl;
  if (spec.family == Family::kNonlinear) nl = nonlinear_weights(spec);

  for (Eigen::Index i = 0; i < spec.N; ++i) {
    RngStream rng(spec.seed, make_stream(stream_tag::kPoint, static_cast<std::uint64_t>(i)));
    Vector latent;
    switch (spec.family) {
      case Family::kHypersphere: {
        const Vector z = gaussian_vector(rng, spec.d + 1);
        latent = spec.radius * z / z.norm();
        break;
      }
      case Family::kHyperball: {
        const Vector z = gaussian_vector(rng, spec.d);
        const double rho = std::pow(rng.uniform(), 1.0 / static_cast<double>(spec.d));
        latent = spec.radius * rho * z / z.norm();
        break;
      }
      case Family::kAffineGaussian:
        latent = spec.d > 0 ? draw_latent_chart(spec, rng) : Vector();
        break;
      default:
        latent = chart(spec, draw_latent_chart(spec, rng), &nl);
        break;
    }
    cloud.points.row(i) = latent.size() > 0 ? embed(map, latent) : Vector(Vector::Zero(spec.n));
  }
  return cloud;
}

Vector latent_to_ambient(const ManifoldSpec& spec, const Vector& latent) {
  spec.validate();
  NonlinearWeights nl;
  if (spec.family == Family::kNonlinear) nl = nonlinear_weights(spec);
  return embed(embedding_map(spec), chart(spec, latent, &nl));
}

Eigen::Index jacobian_rank_check(const ManifoldSpec& spec, int probes) {
  spec.validate();
  switch (spec.family) {
    case Family::kTwinPeaksGraph:
    case Family::kNonlinear:
    case Family::kCliffordTorus:
    case Family::kAffineGaussian:
      break;
    default:
      fail(ErrorKind::kSpec, "jacobian_rank_check: unsupported family " + std::string(family_name(spec.family)));
  }
  require(probes >= 1, ErrorKind::kParam, "jacobian_rank_check: probes must be >= 1");
  if (spec.d == 0) return 0;

  const Matrix map = embedding_map(spec);
  NonlinearWeights nl;
  if (spec.family == Family::kNonlinear) nl = nonlinear_weights(spec);
  auto f = [&](const Vector& u) { return embed(map, chart(spec, u, &nl)); };

  constexpr double kStep = 1e-5;
  Eigen::Index min_rank = spec.d;
  for (int p = 0; p < probes; ++p) {
    RngStream rng(spec.seed, make_stream(stream_tag::kAux, static_cast<std::uint64_t>(p)));
    const Vector u = draw_latent_chart(spec, rng);
    Matrix jac(spec.n, spec.d);
    for (Eigen::Index k = 0; k < spec.d; ++k) {
      Vector up = u, dn = u;
      up[k] += kStep;
      dn[k] -= kStep;
      jac.col(k) = (f(up) - f(dn)) / (2.0 * kStep);
    }
    const Vector sv = Eigen::JacobiSVD<Matrix>(jac).singularValues();
    const Eigen::Index rank = (sv.array() > 1e-6 * sv[0]).count();
    min_rank = std::min(min_rank, rank);
  }
  return min_rank;
}

}  // namespace lidkit
