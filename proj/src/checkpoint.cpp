#include <fstream>

#include "lidkit/binary_io.hpp"
#include "lidkit/mlp.hpp"

namespace lidkit {

namespace {
constexpr char kModelMagic[6] = "LIDM1";
}

void write_checkpoint(const MlpModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot open " + path + " for writing");
  const MlpConfig& c = model.config();
  binary::put_magic(os, kModelMagic);
  binary::put_u32(os, static_cast<std::uint32_t>(c.input_dim));
  binary::put_u32(os, static_cast<std::uint32_t>(c.width));
  binary::put_u32(os, static_cast<std::uint32_t>(c.depth));
  binary::put_u32(os, static_cast<std::uint32_t>(c.activation));
  binary::put_u32(os, static_cast<std::uint32_t>(c.embedding));
  binary::put_u32(os, static_cast<std::uint32_t>(c.frequencies));
  binary::put_u32(os, static_cast<std::uint32_t>(c.target));
  binary::put_f64(os, model.trained_sigma_min);
  binary::put_f64(os, model.trained_sigma_max);
  binary::put_u64(os, static_cast<std::uint64_t>(model.param_count()));
  for (Eigen::Index i = 0; i < model.param_count(); ++i) binary::put_f64(os, model.params()[i]);
  require(static_cast<bool>(os), ErrorKind::kIo, "write failed: " + path);
}

MlpModel read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::kIo, "cannot open " + path);
  binary::expect_magic(is, kModelMagic, path);
  MlpConfig c;
  c.input_dim = binary::get_u32(is);
  c.width = binary::get_u32(is);
  c.depth = static_cast<int>(binary::get_u32(is));
  const auto act = binary::get_u32(is);
  const auto emb = binary::get_u32(is);
  c.frequencies = static_cast<int>(binary::get_u32(is));
  const auto target = binary::get_u32(is);
  require(act <= 2 && emb <= 1 && target <= 1, ErrorKind::kIo, path + ": unknown config enumerator");
  c.activation = static_cast<Activation>(act);
  c.embedding = static_cast<SigmaEmbedding>(emb);
  c.target = static_cast<Target>(target);
  MlpModel model(c);
  model.trained_sigma_min = binary::get_f64(is);
  model.trained_sigma_max = binary::get_f64(is);
  const auto count = binary::get_u64(is);
  require(count == static_cast<std::uint64_t>(model.param_count()), ErrorKind::kIo,
          path + ": parameter count does not match config");
  for (Eigen::Index i = 0; i < model.param_count(); ++i) model.params()[i] = binary::get_f64(is);
  require(model.params().allFinite(), ErrorKind::kIo, path + ": non-finite parameters");
  return model;
}

}  // namespace lidkit
