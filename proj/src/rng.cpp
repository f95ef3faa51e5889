#include "lidkit/rng.hpp"

#include <cmath>
#include <numbers>

#include "lidkit/error.hpp"

namespace lidkit {

namespace {

constexpr std::uint32_t kWeylA = 0x9E3779B9;
constexpr std::uint32_t kWeylB = 0xBB67AE85;
constexpr std::uint32_t kMulA = 0xD2511F53;
constexpr std::uint32_t kMulB = 0xCD9E8D57;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kMulA, ctr[0], lo0, hi0);
    mulhilo(kMulB, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
  }
  return ctr;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t block = counter_ >> 1;
  if (block != cached_block_) {
    block_ = philox4x32({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                         static_cast<std::uint32_t>(stream_),
                         static_cast<std::uint32_t>(stream_ >> 32)},
                        {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
    cached_block_ = block;
  }
  const std::size_t w = (counter_ & 1) * 2;
  ++counter_;
  return static_cast<std::uint64_t>(block_[w]) | (static_cast<std::uint64_t>(block_[w + 1]) << 32);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform_pos() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; both outputs are used so the stream position stays a simple
  // function of the number of normals drawn.
  const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  require(bound > 0, ErrorKind::kDomain, "RngStream::below: bound must be positive");
  // Lemire's multiply-shift with rejection.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t x = next_u64();
    const unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    if (static_cast<std::uint64_t>(m) >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

RngStream RngStream::split(std::uint64_t child) const {
  // Mix (key, stream, child) into a new key with one Philox block so that
  // children of different parents do not collide.
  const auto b = philox4x32({static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                             static_cast<std::uint32_t>(child), static_cast<std::uint32_t>(child >> 32)},
                            {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
  const std::uint64_t new_key = static_cast<std::uint64_t>(b[0]) | (static_cast<std::uint64_t>(b[1]) << 32);
  return RngStream(new_key, child);
}

Eigen::VectorXd gaussian_vector(RngStream& rng, Eigen::Index dim) {
  require(dim >= 1, ErrorKind::kDomain, "gaussian_vector: empty dimension");
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  return v;
}

Eigen::MatrixXd gaussian_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols) {
  require(rows >= 1 && cols >= 1, ErrorKind::kDomain, "gaussian_matrix: empty dimension");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

Eigen::VectorXd rademacher_vector(RngStream& rng, Eigen::Index dim) {
  require(dim >= 1, ErrorKind::kDomain, "rademacher_vector: empty dimension");
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; i += 64) {
    const std::uint64_t bits = rng.next_u64();
    for (Eigen::Index b = 0; b < 64 && i + b < dim; ++b) v[i + b] = ((bits >> b) & 1) ? 1.0 : -1.0;
  }
  return v;
}

}  // namespace lidkit
