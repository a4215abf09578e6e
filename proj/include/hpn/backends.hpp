#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "hpn/geometry.hpp"
#include "hpn/patch_grid.hpp"

namespace hpn {

enum class BackendOutputKind : std::uint8_t { OccupancyLogit = 0, SignedDistance = 1 };

// Error from a backend evaluation; reconstruct_level re-throws it with the
// failing patch attached.
struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// f^l: (patch, local query points) -> one scalar per point. Implementations
// must be safe to share read-only across threads after construction.
class ImplicitBackend {
 public:
  virtual ~ImplicitBackend() = default;
  virtual BackendOutputKind kind() const = 0;
  virtual std::string name() const = 0;
  virtual std::vector<double> eval(const Patch& patch, std::span<const Vec3> local_points) const = 0;
};

// Perfect prior: answers from the ground-truth scene. Occupancy mode maps the
// bit to +-logit_magnitude; SDF mode returns the scene SDF at the global
// point.
class OracleBackend : public ImplicitBackend {
 public:
  OracleBackend(SceneSpec scene, BackendOutputKind kind, double logit_magnitude = 10.0);
  BackendOutputKind kind() const override { return kind_; }
  std::string name() const override;
  std::vector<double> eval(const Patch& patch, std::span<const Vec3> local_points) const override;

 private:
  SceneSpec scene_;
  BackendOutputKind kind_;
  double logit_magnitude_;
};

// Oracle with each point's logit sign flipped independently with probability
// flip_p. Deterministic in (seed, patch position, point index) so results do
// not depend on evaluation order.
class NoisyOracleBackend : public ImplicitBackend {
 public:
  NoisyOracleBackend(SceneSpec scene, double flip_p, std::uint64_t seed,
                     double logit_magnitude = 10.0);
  BackendOutputKind kind() const override { return BackendOutputKind::OccupancyLogit; }
  std::string name() const override;
  std::vector<double> eval(const Patch& patch, std::span<const Vec3> local_points) const override;

 private:
  OracleBackend oracle_;
  double flip_p_;
  std::uint64_t seed_;
  double logit_magnitude_;
};

// One stored exemplar: a depth patch and its part's occupancy voxelization on
// a part-local grid (rx x ry x rz cells over [-0.5,0.5]^3, x fastest, bits
// packed to bytes).
struct BankEntry {
  std::vector<float> pixels;
  std::vector<std::uint8_t> valid;
  std::vector<std::uint8_t> occ_bits;  // packed
  std::uint32_t scene_id = 0;

  bool occ_at(int ix, int iy, int iz, int rx, int ry) const {
    std::size_t bit = (static_cast<std::size_t>(iz) * ry + iy) * rx + ix;
    return (occ_bits[bit >> 3] >> (bit & 7)) & 1;
  }
};

struct PatchBank {
  int n = 0;  // patch side in pixels
  int rx = 0, ry = 0, rz = 0;
  std::vector<BankEntry> entries;

  // Seeded subsample keeping max(1, round(fraction*count)) entries. Throws on
  // fraction <= 0.
  PatchBank subsample(double fraction, std::uint64_t seed) const;
};

struct BankBuildOptions {
  int image_size = 256;
  int bank_stride = 0;  // 0 -> n/2
  int part_res_xy = 0;  // 0 -> ceil(grid_res * m)
  int part_res_z = 0;   // 0 -> grid_res
  int grid_res = 64;
  int workers = 1;
};

// Renders each scene, enumerates patches, voxelizes every part's ground-truth
// occupancy on the part-local lattice.
PatchBank build_bank(const std::vector<SceneSpec>& scenes, const LevelConfig& cfg,
                     const BankBuildOptions& opt);

// "HPNK": magic, u32 N, u32 rx, u32 ry, u32 rz, u32 entry count, then per
// entry N^2 f32 pixels + N^2 u8 validity + packed occupancy bits.
void write_hpnk(const PatchBank& bank, const std::string& path);
PatchBank read_hpnk(const std::string& path);

// Exact L1 nearest-neighbor retrieval over depth pixels (background compared
// at the 1.0 far-plane value), ties broken toward the lowest entry index.
// Occupancy is sampled trilinearly from the winning entry's grid and mapped
// to a logit with probabilities clamped to [0.01, 0.99].
class RetrievalBackend : public ImplicitBackend {
 public:
  explicit RetrievalBackend(std::shared_ptr<const PatchBank> bank, bool prune = true);
  BackendOutputKind kind() const override { return BackendOutputKind::OccupancyLogit; }
  std::string name() const override { return "retrieval"; }
  std::vector<double> eval(const Patch& patch, std::span<const Vec3> local_points) const override;

  // index of the L1-nearest entry; exposed for tests and diagnostics
  std::size_t nearest_entry(const Patch& patch) const;

 private:
  std::shared_ptr<const PatchBank> bank_;
  bool prune_;
};

double l1_patch_distance(const std::vector<float>& a, const std::vector<float>& b);

// Child process speaking the HPNB protocol over stdin/stdout. One request in
// flight at a time; request = "HPNB", u32 version=1, u32 N, N^2 f32 pixels,
// N^2 u8 validity, u32 K, 3K f32 local coords; response = "HPNR", u32 K,
// K f32 values. Little-endian.
class ExternalBackend : public ImplicitBackend {
 public:
  ExternalBackend(const std::string& command, BackendOutputKind kind,
                  double timeout_seconds = 30.0);
  ~ExternalBackend() override;
  ExternalBackend(const ExternalBackend&) = delete;
  ExternalBackend& operator=(const ExternalBackend&) = delete;

  BackendOutputKind kind() const override { return kind_; }
  std::string name() const override { return "external"; }
  std::vector<double> eval(const Patch& patch, std::span<const Vec3> local_points) const override;

 private:
  void spawn();
  void shutdown();

  std::string command_;
  BackendOutputKind kind_;
  double timeout_seconds_;
  mutable std::mutex io_mutex_;
  int child_pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

constexpr std::uint32_t kHpnbVersion = 1;

}  // namespace hpn
