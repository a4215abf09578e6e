#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hpn/backends.hpp"
#include "hpn/depth.hpp"
#include "hpn/fusion.hpp"
#include "hpn/geometry.hpp"
#include "hpn/meshing.hpp"
#include "hpn/metrics.hpp"

namespace hpn {

// One hierarchy level bound to its evaluator.
struct LevelRun {
  LevelConfig cfg;
  std::shared_ptr<const ImplicitBackend> backend;
};

struct PipelineOptions {
  int image_size = 256;
  int grid_res = 64;
  double sigma_scale = 0.25;
  double tau = 0.5;
  double tau_sdf = -0.02;
  double sdf_beta = 0.05;
  bool deterministic = false;
  int workers = 1;
};

struct ReconstructionResult {
  DepthMap depth;
  std::vector<FusedField> level_fields;
  FusedField fused;                // probability, or the bare SDF field for a
                                   // single SDF-only hierarchy
  std::vector<std::uint8_t> occupancy;
  Mesh mesh;
};

// Validates level sizes against the image and the at-most-one-global rule.
void validate_hierarchy(const std::vector<LevelRun>& levels, int image_size);

// depth -> per-level fields -> hierarchy fusion -> threshold -> mesh.
ReconstructionResult reconstruct(const DepthMap& depth, const std::vector<LevelRun>& levels,
                                 const PipelineOptions& opt);

// Renders the scene first, then reconstructs.
ReconstructionResult reconstruct_scene(const SceneSpec& scene, const std::vector<LevelRun>& levels,
                                       const PipelineOptions& opt);

struct ComposeOptions {
  int max_objects = 3;
  // pairwise AABB x-overlap budget as a fraction of the smaller box, <= 0.1
  double max_overlap_fraction = 0.08;
};

// Scene generator: 1..max_objects random primitives with randomized
// azimuth/elevation, spaced along x so pairwise AABB x-overlap stays within
// the budget, then normalized into the unit cube. Deterministic per seed.
SceneSpec compose_scene(std::uint64_t seed, const ComposeOptions& opt = {});
std::vector<SceneSpec> compose_scenes(std::size_t n, std::uint64_t seed,
                                      const ComposeOptions& opt = {});

}  // namespace hpn
