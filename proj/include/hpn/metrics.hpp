#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hpn/depth.hpp"
#include "hpn/geometry.hpp"

namespace hpn {

// Static KD-tree over a point set; queries return the exact nearest-neighbor
// distance (brute-force equivalent). Read-only and thread-safe after build.
class NNIndex {
 public:
  explicit NNIndex(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  // squared distance to the nearest stored point
  double nearest_sq(const Vec3& query) const;

 private:
  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0.0;
    std::uint32_t left = 0, right = 0;   // children for inner nodes
    std::uint32_t begin = 0, end = 0;    // point range for leaves
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t node, const Vec3& q, double& best_sq) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

// 0.5 * (mean_a min_b |a-b| + mean_b min_a |b-a|). Reported values are 100x.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// precision = fraction of a within d of b, recall the converse;
// F = 2PR/(P+R) in percent (0 when both vanish).
double fscore(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double d_thresh);

using OccupancyFn = std::function<bool(const Vec3&)>;

// Monte-Carlo intersection-over-union over the unit cube, in percent.
// Returns 100 when both solids are empty. Deterministic for a given seed.
double iou(const OccupancyFn& a, const OccupancyFn& b, std::size_t n_samples,
           std::uint64_t seed);

// occupancy lookup into a thresholded voxel grid (nearest voxel)
OccupancyFn grid_occupancy(const std::vector<std::uint8_t>& occ, int res);

struct SplitScores {
  double fscore = 0.0;
  double chamfer_x100 = 0.0;
  bool valid = false;  // false when a side of the split had no points
};

struct MetricReport {
  std::string scene_id;
  std::string backend;
  std::string hierarchy;
  SplitScores full;
  SplitScores visible;
  SplitScores invisible;
  double iou_percent = -1.0;  // negative when not evaluated
  bool valid = false;         // false for empty predictions

  static const char* csv_header();
  std::string csv_row() const;
  std::string pretty() const;
};

struct EvalOptions {
  std::size_t n_samples = 10000;
  double d_thresh = 0.01;
  double visibility_eps = 0.03125;  // 2 / default grid resolution 64
  std::uint64_t seed = 7;
  std::size_t iou_samples = 100000;
  // predicted-side occupancy for IoU; leave empty to skip IoU
  OccupancyFn pred_occupancy;
};

// Samples GT and predicted surfaces, labels both against the same input depth
// map, and scores Full / Visible / Invisible splits.
MetricReport evaluate_split(const Mesh& pred, const SceneSpec& gt_scene, const DepthMap& depth,
                            const EvalOptions& opt);

// worst-case chamfer sentinel for empty splits: unit-cube diameter, x100
constexpr double kChamferSentinelX100 = 173.20508075688772;

}  // namespace hpn
