#include "hpn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hpn/rng.hpp"

namespace hpn {

namespace {

constexpr std::uint32_t kLeafSize = 16;

double axis_of(const Vec3& p, int axis) { return axis == 0 ? p.x : (axis == 1 ? p.y : p.z); }

}  // namespace

NNIndex::NNIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("NNIndex: empty point set");
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<std::uint32_t>(points_.size()));
}

std::uint32_t NNIndex::build(std::uint32_t begin, std::uint32_t end) {
  std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  if (end - begin <= kLeafSize) {
    nodes_[id].axis = -1;
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.expand(points_[i]);
  Vec3 ext = box.size();
  int axis = 0;
  if (ext.y > ext.x) axis = 1;
  if (ext.z > axis_of(ext, axis)) axis = 2;
  std::uint32_t mid = (begin + end) / 2;
  std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                   [axis](const Vec3& a, const Vec3& b) { return axis_of(a, axis) < axis_of(b, axis); });
  double split = axis_of(points_[mid], axis);
  std::uint32_t left = build(begin, mid);
  std::uint32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NNIndex::search(std::uint32_t node, const Vec3& q, double& best_sq) const {
  const Node& n = nodes_[node];
  if (n.axis < 0) {
    for (std::uint32_t i = n.begin; i < n.end; ++i) {
      double d = length_sq(points_[i] - q);
      if (d < best_sq) best_sq = d;
    }
    return;
  }
  double delta = axis_of(q, n.axis) - n.split;
  std::uint32_t near = delta < 0.0 ? n.left : n.right;
  std::uint32_t far = delta < 0.0 ? n.right : n.left;
  search(near, q, best_sq);
  if (delta * delta < best_sq) search(far, q, best_sq);
}

double NNIndex::nearest_sq(const Vec3& query) const {
  double best = 1e300;
  search(root_, query, best);
  return best;
}

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("chamfer_distance: point sets must be non-empty");
  NNIndex ia(a);
  NNIndex ib(b);
  double sum_ab = 0.0;
  for (const Vec3& p : a) sum_ab += std::sqrt(ib.nearest_sq(p));
  double sum_ba = 0.0;
  for (const Vec3& p : b) sum_ba += std::sqrt(ia.nearest_sq(p));
  return 0.5 * (sum_ab / a.size() + sum_ba / b.size());
}

double fscore(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double d_thresh) {
  if (a.empty() || b.empty()) throw std::invalid_argument("fscore: point sets must be non-empty");
  if (d_thresh <= 0.0) throw std::invalid_argument("fscore: d_thresh must be > 0");
  NNIndex ia(a);
  NNIndex ib(b);
  double d2 = d_thresh * d_thresh;
  std::size_t hits_a = 0;
  for (const Vec3& p : a)
    if (ib.nearest_sq(p) <= d2) ++hits_a;
  std::size_t hits_b = 0;
  for (const Vec3& p : b)
    if (ia.nearest_sq(p) <= d2) ++hits_b;
  double precision = 100.0 * static_cast<double>(hits_a) / a.size();
  double recall = 100.0 * static_cast<double>(hits_b) / b.size();
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double iou(const OccupancyFn& a, const OccupancyFn& b, std::size_t n_samples,
           std::uint64_t seed) {
  if (n_samples < 1000) throw std::invalid_argument("iou: need at least 1000 samples");
  Rng rng(hash_mix(seed, 0x10aa10aaULL));
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    Vec3 p{rng.next_double(), rng.next_double(), rng.next_double()};
    bool oa = a(p);
    bool ob = b(p);
    if (oa && ob) ++inter;
    if (oa || ob) ++uni;
  }
  if (uni == 0) return 100.0;  // both empty
  return 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

OccupancyFn grid_occupancy(const std::vector<std::uint8_t>& occ, int res) {
  return [occ, res](const Vec3& p) {
    int ix = std::clamp(static_cast<int>(p.x * res), 0, res - 1);
    int iy = std::clamp(static_cast<int>(p.y * res), 0, res - 1);
    int iz = std::clamp(static_cast<int>(p.z * res), 0, res - 1);
    return occ[(static_cast<std::size_t>(iz) * res + iy) * res + ix] != 0;
  };
}

namespace {

SplitScores score_pair(const std::vector<Vec3>& pred, const std::vector<Vec3>& gt,
                       double d_thresh) {
  SplitScores s;
  if (pred.empty() || gt.empty()) {
    s.valid = false;
    s.fscore = 0.0;
    s.chamfer_x100 = kChamferSentinelX100;
    return s;
  }
  s.valid = true;
  s.fscore = fscore(pred, gt, d_thresh);
  s.chamfer_x100 = 100.0 * chamfer_distance(pred, gt);
  return s;
}

std::vector<Vec3> select(const std::vector<Vec3>& pts, const std::vector<VisLabel>& labels,
                         VisLabel want) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (labels[i] == want) out.push_back(pts[i]);
  return out;
}

}  // namespace

MetricReport evaluate_split(const Mesh& pred, const SceneSpec& gt_scene, const DepthMap& depth,
                            const EvalOptions& opt) {
  MetricReport report;
  std::vector<Vec3> gt_pts = sample_surface_points(gt_scene, opt.n_samples, opt.seed);
  if (pred.empty()) {
    report.valid = false;
    report.full = report.visible = report.invisible = SplitScores{0.0, kChamferSentinelX100, false};
    return report;
  }
  std::vector<Vec3> pred_pts = sample_surface_points(pred, opt.n_samples, opt.seed + 1);

  std::vector<VisLabel> gt_labels = label_visibility(depth, gt_pts, opt.visibility_eps);
  std::vector<VisLabel> pred_labels = label_visibility(depth, pred_pts, opt.visibility_eps);

  report.valid = true;
  report.full = score_pair(pred_pts, gt_pts, opt.d_thresh);
  report.visible = score_pair(select(pred_pts, pred_labels, VisLabel::Visible),
                              select(gt_pts, gt_labels, VisLabel::Visible), opt.d_thresh);
  report.invisible = score_pair(select(pred_pts, pred_labels, VisLabel::Invisible),
                                select(gt_pts, gt_labels, VisLabel::Invisible), opt.d_thresh);
  if (opt.pred_occupancy) {
    OccupancyFn gt_occ = [&gt_scene](const Vec3& p) { return scene_occupancy(gt_scene, p); };
    report.iou_percent = iou(gt_occ, opt.pred_occupancy, opt.iou_samples, opt.seed + 2);
  }
  return report;
}

const char* MetricReport::csv_header() {
  return "scene,backend,hierarchy,valid,fscore,chamfer_x100,iou,"
         "fscore_visible,chamfer_visible_x100,fscore_invisible,chamfer_invisible_x100";
}

std::string MetricReport::csv_row() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f",
                scene_id.c_str(), backend.c_str(), hierarchy.c_str(), valid ? 1 : 0, full.fscore,
                full.chamfer_x100, iou_percent, visible.fscore, visible.chamfer_x100,
                invisible.fscore, invisible.chamfer_x100);
  return buf;
}

std::string MetricReport::pretty() const {
  std::ostringstream os;
  os << scene_id << " [" << backend << " @ " << hierarchy << "]";
  if (!valid) {
    os << " INVALID (empty prediction)";
    return os.str();
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf), " F=%.2f CDx100=%.3f", full.fscore, full.chamfer_x100);
  os << buf;
  if (iou_percent >= 0.0) {
    std::snprintf(buf, sizeof(buf), " IoU=%.2f", iou_percent);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), " | vis F=%.2f CD=%.3f%s | invis F=%.2f CD=%.3f%s",
                visible.fscore, visible.chamfer_x100, visible.valid ? "" : " (empty)",
                invisible.fscore, invisible.chamfer_x100, invisible.valid ? "" : " (empty)");
  os << buf;
  return os.str();
}

}  // namespace hpn
