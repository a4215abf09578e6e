#include "hpn/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "hpn/io_util.hpp"
#include "hpn/parallel.hpp"

namespace hpn {

double FusedField::empty_value(FieldKind kind) {
  switch (kind) {
    case FieldKind::Logit: return -std::numeric_limits<double>::infinity();
    case FieldKind::Probability: return 0.0;
    case FieldKind::SignedDistance: return 0.5;
  }
  return 0.0;
}

AccumulatorGrid::AccumulatorGrid(int res)
    : res_(res),
      mean_(static_cast<std::size_t>(res) * res * res, 0.0),
      weight_(static_cast<std::size_t>(res) * res * res, 0.0) {
  if (res < 2) throw std::invalid_argument("AccumulatorGrid: resolution must be >= 2");
}

void AccumulatorGrid::add(std::size_t voxel, double value, double weight) {
  if (weight <= 0.0) throw std::invalid_argument("AccumulatorGrid::add: weight must be > 0");
  double w = weight_[voxel] + weight;
  mean_[voxel] += (weight / w) * (value - mean_[voxel]);
  weight_[voxel] = w;
}

void AccumulatorGrid::merge(const AccumulatorGrid& other) {
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    if (other.weight_[i] <= 0.0) continue;
    double w = weight_[i] + other.weight_[i];
    mean_[i] += (other.weight_[i] / w) * (other.mean_[i] - mean_[i]);
    weight_[i] = w;
  }
}

FusedField AccumulatorGrid::finalize(FieldKind kind) const {
  FusedField field;
  field.res = res_;
  field.kind = kind;
  field.values.resize(mean_.size());
  field.touched.resize(mean_.size());
  double empty = FusedField::empty_value(kind);
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    bool t = weight_[i] > 0.0;
    field.touched[i] = t ? 1 : 0;
    field.values[i] = t ? mean_[i] : empty;
  }
  return field;
}

double gaussian_weight(const Patch& patch, const Vec3& p_global, double sigma_scale) {
  double pu = p_global.x * patch.source_w;
  double pv = (1.0 - p_global.y) * patch.source_h;
  double du = pu - patch.center_u();
  double dv = pv - patch.center_v();
  double sigma = sigma_scale * patch.n;
  return std::exp(-(du * du + dv * dv) / (2.0 * sigma * sigma));
}

FusedField reconstruct_level(const DepthMap& depth, const LevelConfig& cfg,
                             const ImplicitBackend& backend, const FusionOptions& opt) {
  std::vector<Patch> patches = enumerate_patches(depth, cfg, cfg.effective_stride());
  FieldKind kind = backend.kind() == BackendOutputKind::SignedDistance
                       ? FieldKind::SignedDistance
                       : FieldKind::Logit;

  struct Contribution {
    std::uint32_t voxel;
    float weight;
    double value;
  };

  auto eval_patch = [&](const Patch& patch) {
    std::vector<Contribution> contribs;
    PartRegion part = part_for_patch(patch);
    std::vector<QueryPoint> points = grid_query_points(part, opt.grid_res);
    std::vector<Vec3> locals(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) locals[i] = points[i].local;
    std::vector<double> values;
    try {
      values = backend.eval(patch, locals);
    } catch (const std::exception& e) {
      throw BackendError("backend '" + backend.name() + "' failed on patch " + patch.id() +
                         ": " + e.what());
    }
    if (values.size() != points.size())
      throw BackendError("backend '" + backend.name() + "' returned " +
                         std::to_string(values.size()) + " values for " +
                         std::to_string(points.size()) + " points on patch " + patch.id());
    contribs.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const QueryPoint& q = points[i];
      std::size_t voxel =
          (static_cast<std::size_t>(q.iz) * opt.grid_res + q.iy) * opt.grid_res + q.ix;
      double w = gaussian_weight(patch, q.global, opt.sigma_scale);
      contribs.push_back({static_cast<std::uint32_t>(voxel), static_cast<float>(w), values[i]});
    }
    return contribs;
  };

  AccumulatorGrid grid(opt.grid_res);
  if (opt.deterministic || opt.workers == 1) {
    // evaluate in parallel, apply in patch order: results are independent of
    // the worker count
    std::vector<std::vector<Contribution>> per_patch(patches.size());
    parallel_for(patches.size(), opt.workers,
                 [&](std::size_t i) { per_patch[i] = eval_patch(patches[i]); });
    for (const auto& contribs : per_patch)
      for (const Contribution& c : contribs) grid.add(c.voxel, c.value, c.weight);
  } else {
    // per-worker partial grids merged in worker order
    int workers = opt.workers > 0 ? opt.workers : default_workers();
    std::size_t shards = std::min<std::size_t>(workers, std::max<std::size_t>(patches.size(), 1));
    std::vector<AccumulatorGrid> partial(shards, AccumulatorGrid(opt.grid_res));
    parallel_for(shards, static_cast<int>(shards), [&](std::size_t s) {
      std::size_t begin = patches.size() * s / shards;
      std::size_t end = patches.size() * (s + 1) / shards;
      for (std::size_t i = begin; i < end; ++i)
        for (const Contribution& c : eval_patch(patches[i]))
          partial[s].add(c.voxel, c.value, c.weight);
    });
    for (const AccumulatorGrid& p : partial) grid.merge(p);
  }
  return grid.finalize(kind);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double to_probability(double value, FieldKind kind, double sdf_beta) {
  switch (kind) {
    case FieldKind::Logit: return sigmoid(value);
    case FieldKind::Probability: return value;
    case FieldKind::SignedDistance: return sigmoid(-value / sdf_beta);
  }
  return 0.0;
}

FusedField fuse_hierarchy(const std::vector<FusedField>& levels,
                          const HierarchyFuseOptions& opt) {
  if (levels.empty()) throw std::invalid_argument("fuse_hierarchy: no levels");
  int res = levels[0].res;
  for (const FusedField& level : levels)
    if (level.res != res)
      throw std::invalid_argument("fuse_hierarchy: mismatched field resolutions");

  FusedField out;
  out.res = res;
  out.kind = FieldKind::Probability;
  std::size_t n = levels[0].values.size();
  out.values.assign(n, 0.0);
  out.touched.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    bool touched = false;
    for (const FusedField& level : levels) {
      if (level.touched[i]) {
        sum += to_probability(level.values[i], level.kind, opt.sdf_beta);
        touched = true;
      }
      // untouched level voxels contribute the empty probability 0
    }
    out.values[i] = sum / static_cast<double>(levels.size());
    out.touched[i] = touched ? 1 : 0;
  }
  return out;
}

std::vector<std::uint8_t> threshold_field(const FusedField& field, const ThresholdSpec& spec) {
  std::vector<std::uint8_t> occ(field.values.size(), 0);
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (!field.touched[i]) continue;
    double v = field.values[i];
    bool inside = false;
    switch (field.kind) {
      case FieldKind::Probability: inside = v >= spec.tau; break;
      case FieldKind::Logit: inside = sigmoid(v) >= spec.tau; break;
      case FieldKind::SignedDistance: inside = v <= spec.tau_sdf; break;
    }
    occ[i] = inside ? 1 : 0;
  }
  return occ;
}

void write_hpnf(const FusedField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_hpnf: cannot open " + path);
  out.write("HPNF", 4);
  write_u32(out, static_cast<std::uint32_t>(field.res));
  char kind = static_cast<char>(field.kind);
  out.write(&kind, 1);
  std::vector<float> packed(field.values.size());
  for (std::size_t i = 0; i < field.values.size(); ++i)
    packed[i] = static_cast<float>(field.values[i]);
  write_f32_array(out, packed.data(), packed.size());
  if (!out) throw std::runtime_error("write_hpnf: write failed for " + path);
}

FusedField read_hpnf(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_hpnf: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HPNF", 4) != 0)
    throw std::runtime_error("read_hpnf: bad magic in " + path);
  FusedField field;
  field.res = static_cast<int>(read_u32(in));
  char kind = 0;
  in.read(&kind, 1);
  if (!in || field.res < 2 || field.res > 4096 || kind < 0 || kind > 2)
    throw std::runtime_error("read_hpnf: bad header in " + path);
  field.kind = static_cast<FieldKind>(kind);
  std::size_t n = static_cast<std::size_t>(field.res) * field.res * field.res;
  std::vector<float> packed(n);
  read_f32_array(in, packed.data(), n);
  if (!in) throw std::runtime_error("read_hpnf: truncated file " + path);
  field.values.resize(n);
  field.touched.resize(n);
  double empty = FusedField::empty_value(field.kind);
  for (std::size_t i = 0; i < n; ++i) {
    field.values[i] = packed[i];
    field.touched[i] = field.values[i] == empty ? 0 : 1;
  }
  return field;
}

}  // namespace hpn
