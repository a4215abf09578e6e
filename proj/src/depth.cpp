#include "hpn/depth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "hpn/io_util.hpp"
#include "hpn/parallel.hpp"

namespace hpn {

namespace {

// Sphere-traces the +z ray from (x,y,0). Returns the hit depth or a negative
// value when the ray leaves the unit cube without a hit.
double trace_pixel(const SceneSpec& scene, double x, double y, const RenderOptions& opt) {
  double t = 0.0;
  for (int step = 0; step < opt.max_steps; ++step) {
    double d = scene_sdf(scene, Vec3{x, y, t});
    if (d < opt.surface_tol) return t;
    t += d;
    if (t > 1.0) return -1.0;
  }
  return -1.0;
}

}  // namespace

DepthMap render_depth(const SceneSpec& scene, int width, int height, const RenderOptions& opt) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("render_depth: bad image size");
  DepthMap dm;
  dm.width = width;
  dm.height = height;
  dm.depth.assign(static_cast<std::size_t>(width) * height, 1.0f);
  dm.valid.assign(static_cast<std::size_t>(width) * height, 0);

  parallel_for(static_cast<std::size_t>(height), opt.workers, [&](std::size_t row) {
    double y = 1.0 - (static_cast<double>(row) + 0.5) / height;
    for (int u = 0; u < width; ++u) {
      double x = (static_cast<double>(u) + 0.5) / width;
      double t = trace_pixel(scene, x, y, opt);
      if (t >= 0.0) {
        dm.depth[row * width + u] = static_cast<float>(std::min(t, 1.0));
        dm.valid[row * width + u] = 1;
      }
    }
  });
  return dm;
}

std::vector<VisLabel> label_visibility(const DepthMap& depth, const std::vector<Vec3>& points,
                                       double eps) {
  std::vector<VisLabel> labels(points.size(), VisLabel::Invisible);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3& p = points[i];
    int u = static_cast<int>(std::floor(p.x * depth.width));
    int v = static_cast<int>(std::floor((1.0 - p.y) * depth.height));
    u = std::clamp(u, 0, depth.width - 1);
    v = std::clamp(v, 0, depth.height - 1);
    if (depth.is_valid(u, v) && std::abs(p.z - depth.at(u, v)) <= eps)
      labels[i] = VisLabel::Visible;
  }
  return labels;
}

void write_hpnd(const DepthMap& depth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_hpnd: cannot open " + path);
  out.write("HPND", 4);
  write_u32(out, static_cast<std::uint32_t>(depth.width));
  write_u32(out, static_cast<std::uint32_t>(depth.height));
  write_f32_array(out, depth.depth.data(), depth.depth.size());
  out.write(reinterpret_cast<const char*>(depth.valid.data()),
            static_cast<std::streamsize>(depth.valid.size()));
  if (!out) throw std::runtime_error("write_hpnd: write failed for " + path);
}

DepthMap read_hpnd(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_hpnd: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HPND", 4) != 0)
    throw std::runtime_error("read_hpnd: bad magic in " + path);
  DepthMap dm;
  dm.width = static_cast<int>(read_u32(in));
  dm.height = static_cast<int>(read_u32(in));
  if (dm.width <= 0 || dm.height <= 0 || dm.width > 1 << 16 || dm.height > 1 << 16)
    throw std::runtime_error("read_hpnd: implausible dimensions in " + path);
  std::size_t n = static_cast<std::size_t>(dm.width) * dm.height;
  dm.depth.resize(n);
  read_f32_array(in, dm.depth.data(), n);
  dm.valid.resize(n);
  in.read(reinterpret_cast<char*>(dm.valid.data()), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("read_hpnd: truncated file " + path);
  return dm;
}

void write_pgm16(const DepthMap& depth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm16: cannot open " + path);
  out << "P5\n" << depth.width << " " << depth.height << "\n65535\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(depth.width) * 2);
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      std::uint16_t q = 65535;
      if (depth.is_valid(u, v)) {
        double d = std::clamp(static_cast<double>(depth.at(u, v)), 0.0, 1.0);
        q = static_cast<std::uint16_t>(std::lround(d * 65534.0));
      }
      row[2 * u] = static_cast<unsigned char>(q >> 8);  // PGM is big-endian
      row[2 * u + 1] = static_cast<unsigned char>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("write_pgm16: write failed for " + path);
}

}  // namespace hpn
