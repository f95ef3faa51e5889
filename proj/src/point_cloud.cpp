#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lidkit/binary_io.hpp"
#include "lidkit/manifolds.hpp"

namespace lidkit {

namespace {

constexpr char kCloudMagic[6] = "LIDC1";

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

PointCloud read_cloud_csv(std::istream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::kIo, path + ": empty file");
  Eigen::Index cols = 0;
  {
    std::stringstream header(line);
    std::string field;
    bool saw_label = false;
    while (std::getline(header, field, ',')) {
      if (field == "true_lid") {
        saw_label = true;
      } else {
        require(field == "x" + std::to_string(cols), ErrorKind::kIo, path + ": unexpected header field " + field);
        ++cols;
      }
    }
    require(saw_label && cols > 0, ErrorKind::kIo, path + ": header must be x0..x{n-1},true_lid");
  }
  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    for (Eigen::Index c = 0; c <= cols; ++c) {
      if (c == cols) {
        int lab = 0;
        auto [q, ec] = std::from_chars(p, end, lab);
        require(ec == std::errc() && q == end, ErrorKind::kIo, path + ": bad label field");
        labels.push_back(lab);
      } else {
        double v = 0;
        auto [q, ec] = std::from_chars(p, end, v);
        require(ec == std::errc() && q < end && *q == ',', ErrorKind::kIo, path + ": bad numeric field");
        values.push_back(v);
        p = q + 1;
      }
    }
  }
  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(labels.size()), cols);
  for (Eigen::Index r = 0; r < cloud.points.rows(); ++r)
    for (Eigen::Index c = 0; c < cols; ++c) cloud.points(r, c) = values[static_cast<std::size_t>(r * cols + c)];
  cloud.true_lid = std::move(labels);
  cloud.spec.N = cloud.points.rows();
  cloud.spec.n = cols;
  return cloud;
}

}  // namespace

void write_cloud_csv(const PointCloud& cloud, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot open " + path + " for writing");
  for (Eigen::Index c = 0; c < cloud.dim(); ++c) os << 'x' << c << ',';
  os << "true_lid\n";
  char buf[32];
  for (Eigen::Index r = 0; r < cloud.size(); ++r) {
    for (Eigen::Index c = 0; c < cloud.dim(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", cloud.points(r, c));
      os << buf << ',';
    }
    os << cloud.true_lid[static_cast<std::size_t>(r)] << '\n';
  }
  require(static_cast<bool>(os), ErrorKind::kIo, "write failed: " + path);
}

void write_cloud_binary(const PointCloud& cloud, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), ErrorKind::kIo, "cannot open " + path + " for writing");
  binary::put_magic(os, kCloudMagic);
  binary::put_u32(os, static_cast<std::uint32_t>(cloud.size()));
  binary::put_u32(os, static_cast<std::uint32_t>(cloud.dim()));
  for (Eigen::Index r = 0; r < cloud.size(); ++r)
    for (Eigen::Index c = 0; c < cloud.dim(); ++c) binary::put_f64(os, cloud.points(r, c));
  for (int lab : cloud.true_lid) binary::put_u32(os, static_cast<std::uint32_t>(lab));
  require(static_cast<bool>(os), ErrorKind::kIo, "write failed: " + path);
}

void write_cloud(const PointCloud& cloud, const std::string& path) {
  if (ends_with(path, ".csv"))
    write_cloud_csv(cloud, path);
  else
    write_cloud_binary(cloud, path);
}

PointCloud read_cloud(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), ErrorKind::kIo, "cannot open " + path);
  if (ends_with(path, ".csv")) return read_cloud_csv(is, path);

  binary::expect_magic(is, kCloudMagic, path);
  const auto rows = static_cast<Eigen::Index>(binary::get_u32(is));
  const auto cols = static_cast<Eigen::Index>(binary::get_u32(is));
  PointCloud cloud;
  cloud.points.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) cloud.points(r, c) = binary::get_f64(is);
  cloud.true_lid.resize(static_cast<std::size_t>(rows));
  for (auto& lab : cloud.true_lid) lab = static_cast<int>(binary::get_u32(is));
  cloud.spec.N = rows;
  cloud.spec.n = cols;
  return cloud;
}

}  // namespace lidkit
