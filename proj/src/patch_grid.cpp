#include "hpn/patch_grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hpn/rng.hpp"

namespace hpn {

std::string Patch::id() const {
  return "L" + std::to_string(level_id) + "(" + std::to_string(left) + "," +
         std::to_string(top) + ")";
}

bool Patch::all_background() const {
  return std::all_of(valid.begin(), valid.end(), [](std::uint8_t v) { return v == 0; });
}

Vec3 to_local(const PartRegion& part, const Vec3& p) {
  if (!part.contains(p, 1e-9))
    throw std::invalid_argument("to_local: point outside part region");
  return {(p.x - part.x0) / part.m - 0.5, (p.y - part.y0) / part.m - 0.5, p.z - 0.5};
}

Vec3 from_local(const PartRegion& part, const Vec3& q) {
  return {part.x0 + (q.x + 0.5) * part.m, part.y0 + (q.y + 0.5) * part.m, q.z + 0.5};
}

std::vector<int> patch_positions(int image_size, int patch_size, int stride) {
  if (patch_size < 1 || patch_size > image_size)
    throw std::invalid_argument("patch_positions: patch size out of range");
  if (stride < 1 || stride > patch_size)
    throw std::invalid_argument("patch_positions: stride out of range");
  std::vector<int> positions;
  int last = image_size - patch_size;
  for (int p = 0; p < last; p += stride) positions.push_back(p);
  positions.push_back(last);  // final patch always ends at the border
  return positions;
}

std::vector<Patch> enumerate_patches(const DepthMap& depth, const LevelConfig& cfg, int stride) {
  if (depth.width != depth.height)
    throw std::invalid_argument("enumerate_patches: depth map must be square (pad first)");
  std::vector<int> cols = patch_positions(depth.width, cfg.n, stride);
  std::vector<int> rows = patch_positions(depth.height, cfg.n, stride);

  std::vector<Patch> patches;
  patches.reserve(cols.size() * rows.size());
  for (int top : rows) {
    for (int left : cols) {
      Patch p;
      p.level_id = cfg.level_id;
      p.n = cfg.n;
      p.left = left;
      p.top = top;
      p.source_w = depth.width;
      p.source_h = depth.height;
      p.pixels.assign(static_cast<std::size_t>(cfg.n) * cfg.n, 1.0f);
      p.valid.assign(static_cast<std::size_t>(cfg.n) * cfg.n, 0);
      for (int r = 0; r < cfg.n; ++r) {
        int src_v = top + r;
        if (src_v < 0 || src_v >= depth.height) continue;
        for (int c = 0; c < cfg.n; ++c) {
          int src_u = left + c;
          if (src_u < 0 || src_u >= depth.width) continue;
          p.pixels[static_cast<std::size_t>(r) * cfg.n + c] = depth.at(src_u, src_v);
          p.valid[static_cast<std::size_t>(r) * cfg.n + c] = depth.is_valid(src_u, src_v) ? 1 : 0;
        }
      }
      patches.push_back(std::move(p));
    }
  }
  return patches;
}

PartRegion part_for_patch(const Patch& patch) {
  PartRegion part;
  part.m = static_cast<double>(patch.n) / patch.source_w;
  part.x0 = static_cast<double>(patch.left) / patch.source_w;
  part.y0 = 1.0 - static_cast<double>(patch.top + patch.n) / patch.source_h;
  return part;
}

namespace {

// index range of voxel centers (i+0.5)/res inside [lo, lo+len), half-open
void center_range(double lo, double len, int res, int& first, int& last) {
  first = static_cast<int>(std::ceil(lo * res - 0.5));
  last = static_cast<int>(std::ceil((lo + len) * res - 0.5)) - 1;
  first = std::max(first, 0);
  last = std::min(last, res - 1);
}

}  // namespace

std::vector<QueryPoint> grid_query_points(const PartRegion& part, int grid_res) {
  if (grid_res < 2) throw std::invalid_argument("grid_query_points: grid_res must be >= 2");
  int x_first, x_last, y_first, y_last;
  center_range(part.x0, part.m, grid_res, x_first, x_last);
  center_range(part.y0, part.m, grid_res, y_first, y_last);
  if (x_first > x_last || y_first > y_last)
    throw std::invalid_argument("grid_query_points: part contains no voxel centers");

  std::vector<QueryPoint> points;
  points.reserve(static_cast<std::size_t>(x_last - x_first + 1) * (y_last - y_first + 1) *
                 grid_res);
  for (int iz = 0; iz < grid_res; ++iz) {
    double z = (iz + 0.5) / grid_res;
    for (int iy = y_first; iy <= y_last; ++iy) {
      double y = (iy + 0.5) / grid_res;
      for (int ix = x_first; ix <= x_last; ++ix) {
        double x = (ix + 0.5) / grid_res;
        QueryPoint q;
        q.ix = ix;
        q.iy = iy;
        q.iz = iz;
        q.global = {x, y, z};
        q.local = to_local(part, q.global);
        points.push_back(q);
      }
    }
  }
  return points;
}

std::vector<QueryPoint> random_query_points(const PartRegion& part, int k, std::uint64_t seed) {
  if (k <= 0) throw std::invalid_argument("random_query_points: k must be > 0");
  Rng rng(hash_mix(seed, 0x9a7cb001ULL));
  std::vector<QueryPoint> points;
  points.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    QueryPoint q;
    q.ix = q.iy = q.iz = -1;  // not grid-aligned
    q.local = {rng.next_double() - 0.5, rng.next_double() - 0.5, rng.next_double() - 0.5};
    q.global = from_local(part, q.local);
    points.push_back(q);
  }
  return points;
}

DepthMap pad_to_square(const DepthMap& depth) {
  if (depth.width == depth.height) return depth;
  int side = std::max(depth.width, depth.height);
  DepthMap out;
  out.width = side;
  out.height = side;
  out.depth.assign(static_cast<std::size_t>(side) * side, 1.0f);
  out.valid.assign(static_cast<std::size_t>(side) * side, 0);
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      out.depth[static_cast<std::size_t>(v) * side + u] = depth.at(u, v);
      out.valid[static_cast<std::size_t>(v) * side + u] = depth.is_valid(u, v) ? 1 : 0;
    }
  }
  return out;
}

}  // namespace hpn
