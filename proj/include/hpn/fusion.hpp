#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hpn/backends.hpp"
#include "hpn/depth.hpp"
#include "hpn/patch_grid.hpp"

namespace hpn {

enum class FieldKind : std::uint8_t { Logit = 0, Probability = 1, SignedDistance = 2 };

// Dense R^3 scalar field over [0,1]^3, x fastest. Voxels never touched by any
// part carry the kind's empty value (logit -inf, probability 0, distance
// +0.5) and are flagged in `touched`.
struct FusedField {
  int res = 0;
  FieldKind kind = FieldKind::Logit;
  std::vector<double> values;
  std::vector<std::uint8_t> touched;

  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(iz) * res + iy) * res + ix;
  }
  double at(int ix, int iy, int iz) const { return values[index(ix, iy, iz)]; }
  static double empty_value(FieldKind kind);
};

// Per-voxel weighted running mean. Accumulation keeps the mean directly so
// that contributions with a common value finalize to exactly that value.
class AccumulatorGrid {
 public:
  explicit AccumulatorGrid(int res);

  int res() const { return res_; }
  void add(std::size_t voxel, double value, double weight);
  void merge(const AccumulatorGrid& other);
  FusedField finalize(FieldKind kind) const;
  double weight_at(std::size_t voxel) const { return weight_[voxel]; }

 private:
  int res_;
  std::vector<double> mean_;
  std::vector<double> weight_;
};

// w = exp(-(du^2+dv^2) / (2 sigma^2)) with (du,dv) the pixel offset between
// the point's image projection and the patch center; sigma = sigma_scale * N.
double gaussian_weight(const Patch& patch, const Vec3& p_global, double sigma_scale = 0.25);

struct FusionOptions {
  int grid_res = 64;
  double sigma_scale = 0.25;
  bool deterministic = false;
  int workers = 1;
};

// Slides the backend over the depth map at the level's inference stride and
// Gaussian-averages per-part predictions (logit or SDF space) into a field.
// Backend errors are rethrown with the failing patch identified.
FusedField reconstruct_level(const DepthMap& depth, const LevelConfig& cfg,
                             const ImplicitBackend& backend, const FusionOptions& opt);

struct HierarchyFuseOptions {
  double sdf_beta = 0.05;  // probability bridge sigma(-s/beta) for SDF levels
};

double sigmoid(double x);
// Per-level pseudo-probability of one voxel value under the level's kind.
double to_probability(double value, FieldKind kind, double sdf_beta);

// Arithmetic mean of the levels' pseudo-probabilities; untouched voxels
// contribute probability 0. All levels must share the resolution.
FusedField fuse_hierarchy(const std::vector<FusedField>& levels,
                          const HierarchyFuseOptions& opt = {});

struct ThresholdSpec {
  double tau = 0.5;        // probability/logit fields: occupied iff p >= tau
  double tau_sdf = -0.02;  // SDF fields: occupied iff s <= tau_sdf
};

std::vector<std::uint8_t> threshold_field(const FusedField& field, const ThresholdSpec& spec);

// "HPNF": magic, u32 R, u8 kind, R^3 f32 little-endian, x fastest. Untouched
// voxels are stored as the kind's empty value.
void write_hpnf(const FusedField& field, const std::string& path);
FusedField read_hpnf(const std::string& path);

}  // namespace hpn
