#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hpn/depth.hpp"
#include "hpn/vec3.hpp"

namespace hpn {

// One hierarchy level: square patches of side `n` pixels, slid over the image
// with a stride. n == image width means the single global patch.
struct LevelConfig {
  int n = 256;
  int stride_infer = 0;  // 0 -> n/2 (or 1 for n == 1)
  int stride_train = 0;  // unused at inference; kept for bank construction
  int level_id = 0;

  int effective_stride() const { return stride_infer > 0 ? stride_infer : std::max(1, n / 2); }
};

// N x N crop of the depth map. Pixels outside the source image are padded as
// background (depth 1.0, invalid). Carries the source image size so the
// patch -> part mapping needs no extra context.
struct Patch {
  int level_id = 0;
  int n = 0;
  int left = 0;  // top-left corner, pixels
  int top = 0;
  int source_w = 0;
  int source_h = 0;
  std::vector<float> pixels;        // n*n, row-major
  std::vector<std::uint8_t> valid;  // n*n

  double center_u() const { return left + n * 0.5; }
  double center_v() const { return top + n * 0.5; }
  std::string id() const;
  bool all_background() const;
};

// Axis-aligned part cuboid [x0,x0+m] x [y0,y0+m] x [0,1] in the unit cube.
struct PartRegion {
  double x0 = 0.0;
  double y0 = 0.0;
  double m = 1.0;

  bool contains(const Vec3& p, double tol = 1e-12) const {
    return p.x >= x0 - tol && p.x <= x0 + m + tol && p.y >= y0 - tol && p.y <= y0 + m + tol &&
           p.z >= -tol && p.z <= 1.0 + tol;
  }
};

// Part-local coordinates live in [-0.5,0.5]^3.
Vec3 to_local(const PartRegion& part, const Vec3& p);
Vec3 from_local(const PartRegion& part, const Vec3& q);

// Patch top-left corners at {0, s, 2s, ...}, clamped so the last patch ends
// exactly at the image border. Row-major order. ceil((W-N)/s)+1 per axis.
std::vector<int> patch_positions(int image_size, int patch_size, int stride);

std::vector<Patch> enumerate_patches(const DepthMap& depth, const LevelConfig& cfg, int stride);

PartRegion part_for_patch(const Patch& patch);

// One fusion-grid voxel whose center falls inside a part.
struct QueryPoint {
  int ix = 0, iy = 0, iz = 0;  // voxel indices in the global grid
  Vec3 global;
  Vec3 local;
};

// The subset of global voxel centers (resolution `grid_res` per axis over
// [0,1]^3) inside the part, in x-fastest order. Intervals are half-open in x
// and y so parts meeting at a face do not share voxels. Throws when the part
// contains no voxel center (only possible when m*grid_res < 1).
std::vector<QueryPoint> grid_query_points(const PartRegion& part, int grid_res);

// Training-style alternative: k points drawn uniformly inside the part,
// deterministic for a given seed.
std::vector<QueryPoint> random_query_points(const PartRegion& part, int k, std::uint64_t seed);

// Pads a non-square depth map to square with background pixels on the
// right/bottom; returns the input unchanged when already square.
DepthMap pad_to_square(const DepthMap& depth);

}  // namespace hpn
