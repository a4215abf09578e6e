#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hpn/geometry.hpp"

namespace hpn {

// Orthographic depth image. Row 0 is the top of the image; pixel (u,v) sees
// the ray from (x,y,0) along +z with x=(u+0.5)/W, y=1-(v+0.5)/H. Depth is the
// distance from the z=0 plane, in [0,1]. Invalid (background) pixels carry
// depth 1.0.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> depth;       // row-major, row 0 = top
  std::vector<std::uint8_t> valid;  // 1 = hit

  float at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  bool is_valid(int u, int v) const {
    return valid[static_cast<std::size_t>(v) * width + u] != 0;
  }
};

struct RenderOptions {
  int max_steps = 256;
  double surface_tol = 1e-5;
  int workers = 1;
};

DepthMap render_depth(const SceneSpec& scene, int width, int height,
                      const RenderOptions& opt = {});

enum class VisLabel : std::uint8_t { Invisible = 0, Visible = 1 };

// A point is visible when its pixel is valid and |p.z - depth| <= eps;
// otherwise it is invisible (including points behind the surface and points
// over background pixels).
std::vector<VisLabel> label_visibility(const DepthMap& depth, const std::vector<Vec3>& points,
                                       double eps);

// "HPND": magic, u32 W, u32 H, W*H f32 depths (row 0 = top), W*H u8 validity.
// Little-endian throughout.
void write_hpnd(const DepthMap& depth, const std::string& path);
DepthMap read_hpnd(const std::string& path);

// 16-bit PGM for quick inspection; depth quantized to [0,65534], invalid pixels
// stored as 65535.
void write_pgm16(const DepthMap& depth, const std::string& path);

}  // namespace hpn
