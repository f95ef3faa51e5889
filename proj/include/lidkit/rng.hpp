#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace lidkit {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: the output is a
/// function of (counter, key) only.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Substream tags. The top 16 bits of a stream id name what the draws are
/// used for, the low 48 bits index the item (point, batch, layer, ...).
namespace stream_tag {
inline constexpr std::uint64_t kPoint = 0x0001;
inline constexpr std::uint64_t kEmbedding = 0x0002;
inline constexpr std::uint64_t kFamily = 0x0003;
inline constexpr std::uint64_t kEstimator = 0x0004;
inline constexpr std::uint64_t kInit = 0x0005;
inline constexpr std::uint64_t kBatch = 0x0006;
inline constexpr std::uint64_t kProbe = 0x0007;
inline constexpr std::uint64_t kAux = 0x00ff;
}  // namespace stream_tag

constexpr std::uint64_t make_stream(std::uint64_t tag, std::uint64_t index) {
  return (tag << 48) | (index & 0xffffffffffffULL);
}

/// Counter-based random stream. Draw i of (key, stream) is a pure function of
/// (key, stream, i), so substreams can be handed to threads in any order.
class RngStream {
 public:
  RngStream(std::uint64_t key, std::uint64_t stream) : key_(key), stream_(stream) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t stream() const { return stream_; }
  /// Number of 64-bit words consumed so far.
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_pos();
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  /// A fresh stream keyed on this one; does not advance this stream.
  RngStream split(std::uint64_t child) const;

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::uint64_t cached_block_ = ~0ULL;
  std::array<std::uint32_t, 4> block_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// dim independent standard normal draws.
Eigen::VectorXd gaussian_vector(RngStream& rng, Eigen::Index dim);

/// rows x cols matrix of independent standard normals, filled column by column.
Eigen::MatrixXd gaussian_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols);

/// Vector of +-1 entries.
Eigen::VectorXd rademacher_vector(RngStream& rng, Eigen::Index dim);

}  // namespace lidkit
