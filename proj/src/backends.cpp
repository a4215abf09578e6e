#include "hpn/backends.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "hpn/io_util.hpp"
#include "hpn/parallel.hpp"
#include "hpn/rng.hpp"

namespace hpn {

OracleBackend::OracleBackend(SceneSpec scene, BackendOutputKind kind, double logit_magnitude)
    : scene_(std::move(scene)), kind_(kind), logit_magnitude_(logit_magnitude) {}

std::string OracleBackend::name() const {
  return kind_ == BackendOutputKind::SignedDistance ? "oracle-sdf" : "oracle";
}

std::vector<double> OracleBackend::eval(const Patch& patch,
                                        std::span<const Vec3> local_points) const {
  PartRegion part = part_for_patch(patch);
  std::vector<double> out(local_points.size());
  for (std::size_t i = 0; i < local_points.size(); ++i) {
    Vec3 p = from_local(part, local_points[i]);
    if (kind_ == BackendOutputKind::SignedDistance) {
      out[i] = scene_sdf(scene_, p);
    } else {
      out[i] = scene_occupancy(scene_, p) ? logit_magnitude_ : -logit_magnitude_;
    }
  }
  return out;
}

NoisyOracleBackend::NoisyOracleBackend(SceneSpec scene, double flip_p, std::uint64_t seed,
                                       double logit_magnitude)
    : oracle_(std::move(scene), BackendOutputKind::OccupancyLogit, logit_magnitude),
      flip_p_(flip_p),
      seed_(seed),
      logit_magnitude_(logit_magnitude) {
  if (flip_p < 0.0 || flip_p >= 1.0)
    throw std::invalid_argument("noisy oracle: flip_p must be in [0,1)");
}

std::string NoisyOracleBackend::name() const { return "noisy-oracle"; }

std::vector<double> NoisyOracleBackend::eval(const Patch& patch,
                                             std::span<const Vec3> local_points) const {
  std::vector<double> out = oracle_.eval(patch, local_points);
  std::uint64_t patch_key =
      hash_mix(seed_, hash_mix(static_cast<std::uint64_t>(patch.level_id) << 40 |
                                   static_cast<std::uint64_t>(patch.top) << 20 |
                                   static_cast<std::uint64_t>(patch.left),
                               0xf11bULL));
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t s = hash_mix(patch_key, i);
    double u = static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
    if (u < flip_p_) out[i] = -out[i];
  }
  return out;
}

PatchBank PatchBank::subsample(double fraction, std::uint64_t seed) const {
  if (fraction <= 0.0) throw std::invalid_argument("bank subsample: fraction must be > 0");
  if (fraction >= 1.0) return *this;
  std::size_t keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(entries.size()))));
  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(hash_mix(seed, 0xba11cULL));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t j = rng.next_below(i);
    std::swap(order[i - 1], order[j]);
  }
  order.resize(keep);
  std::sort(order.begin(), order.end());
  PatchBank out;
  out.n = n;
  out.rx = rx;
  out.ry = ry;
  out.rz = rz;
  out.entries.reserve(keep);
  for (std::size_t idx : order) out.entries.push_back(entries[idx]);
  return out;
}

PatchBank build_bank(const std::vector<SceneSpec>& scenes, const LevelConfig& cfg,
                     const BankBuildOptions& opt) {
  if (scenes.empty()) throw std::invalid_argument("build_bank: need at least one scene");
  double m = static_cast<double>(cfg.n) / opt.image_size;
  PatchBank bank;
  bank.n = cfg.n;
  bank.rx = opt.part_res_xy > 0 ? opt.part_res_xy
                                : static_cast<int>(std::ceil(opt.grid_res * m - 1e-9));
  bank.ry = bank.rx;
  bank.rz = opt.part_res_z > 0 ? opt.part_res_z : opt.grid_res;
  int stride = opt.bank_stride > 0 ? opt.bank_stride : std::max(1, cfg.n / 2);

  std::vector<std::vector<BankEntry>> per_scene(scenes.size());
  parallel_for(scenes.size(), opt.workers, [&](std::size_t si) {
    RenderOptions ropt;
    ropt.workers = 1;
    DepthMap depth = render_depth(scenes[si], opt.image_size, opt.image_size, ropt);
    std::vector<Patch> patches = enumerate_patches(depth, cfg, stride);
    for (const Patch& patch : patches) {
      PartRegion part = part_for_patch(patch);
      BankEntry entry;
      entry.scene_id = static_cast<std::uint32_t>(si);
      entry.pixels = patch.pixels;
      entry.valid = patch.valid;
      std::size_t nbits = static_cast<std::size_t>(bank.rx) * bank.ry * bank.rz;
      entry.occ_bits.assign((nbits + 7) / 8, 0);
      std::size_t bit = 0;
      for (int iz = 0; iz < bank.rz; ++iz) {
        for (int iy = 0; iy < bank.ry; ++iy) {
          for (int ix = 0; ix < bank.rx; ++ix, ++bit) {
            Vec3 local{(ix + 0.5) / bank.rx - 0.5, (iy + 0.5) / bank.ry - 0.5,
                       (iz + 0.5) / bank.rz - 0.5};
            if (scene_occupancy(scenes[si], from_local(part, local)))
              entry.occ_bits[bit >> 3] |= static_cast<std::uint8_t>(1u << (bit & 7));
          }
        }
      }
      per_scene[si].push_back(std::move(entry));
    }
  });
  for (auto& batch : per_scene)
    for (auto& entry : batch) bank.entries.push_back(std::move(entry));
  return bank;
}

void write_hpnk(const PatchBank& bank, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_hpnk: cannot open " + path);
  out.write("HPNK", 4);
  write_u32(out, static_cast<std::uint32_t>(bank.n));
  write_u32(out, static_cast<std::uint32_t>(bank.rx));
  write_u32(out, static_cast<std::uint32_t>(bank.ry));
  write_u32(out, static_cast<std::uint32_t>(bank.rz));
  write_u32(out, static_cast<std::uint32_t>(bank.entries.size()));
  for (const BankEntry& e : bank.entries) {
    write_f32_array(out, e.pixels.data(), e.pixels.size());
    out.write(reinterpret_cast<const char*>(e.valid.data()),
              static_cast<std::streamsize>(e.valid.size()));
    out.write(reinterpret_cast<const char*>(e.occ_bits.data()),
              static_cast<std::streamsize>(e.occ_bits.size()));
  }
  if (!out) throw std::runtime_error("write_hpnk: write failed for " + path);
}

PatchBank read_hpnk(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_hpnk: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "HPNK", 4) != 0)
    throw std::runtime_error("read_hpnk: bad magic in " + path);
  PatchBank bank;
  bank.n = static_cast<int>(read_u32(in));
  bank.rx = static_cast<int>(read_u32(in));
  bank.ry = static_cast<int>(read_u32(in));
  bank.rz = static_cast<int>(read_u32(in));
  std::uint32_t count = read_u32(in);
  if (!in || bank.n <= 0 || bank.rx <= 0 || bank.ry <= 0 || bank.rz <= 0)
    throw std::runtime_error("read_hpnk: bad header in " + path);
  std::size_t npix = static_cast<std::size_t>(bank.n) * bank.n;
  std::size_t nbytes = (static_cast<std::size_t>(bank.rx) * bank.ry * bank.rz + 7) / 8;
  bank.entries.resize(count);
  for (BankEntry& e : bank.entries) {
    e.pixels.resize(npix);
    read_f32_array(in, e.pixels.data(), npix);
    e.valid.resize(npix);
    in.read(reinterpret_cast<char*>(e.valid.data()), static_cast<std::streamsize>(npix));
    e.occ_bits.resize(nbytes);
    in.read(reinterpret_cast<char*>(e.occ_bits.data()), static_cast<std::streamsize>(nbytes));
  }
  if (!in) throw std::runtime_error("read_hpnk: truncated file " + path);
  return bank;
}

double l1_patch_distance(const std::vector<float>& a, const std::vector<float>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(static_cast<double>(a[i]) - b[i]);
  return sum;
}

RetrievalBackend::RetrievalBackend(std::shared_ptr<const PatchBank> bank, bool prune)
    : bank_(std::move(bank)), prune_(prune) {
  if (!bank_ || bank_->entries.empty())
    throw BackendError("retrieval backend: empty patch bank");
}

std::size_t RetrievalBackend::nearest_entry(const Patch& patch) const {
  const auto& entries = bank_->entries;
  if (patch.pixels.size() != entries[0].pixels.size())
    throw BackendError("retrieval backend: patch size does not match bank (N=" +
                       std::to_string(bank_->n) + ")");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::max();
  const std::size_t npix = patch.pixels.size();
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const float* ep = entries[e].pixels.data();
    const float* qp = patch.pixels.data();
    double sum = 0.0;
    if (prune_) {
      // partial-sum early exit, checked once per block
      constexpr std::size_t kBlock = 256;
      std::size_t i = 0;
      for (; i + kBlock <= npix; i += kBlock) {
        for (std::size_t j = i; j < i + kBlock; ++j)
          sum += std::abs(static_cast<double>(qp[j]) - ep[j]);
        if (sum >= best_dist) break;
      }
      if (sum < best_dist)
        for (; i < npix; ++i) sum += std::abs(static_cast<double>(qp[i]) - ep[i]);
    } else {
      for (std::size_t i = 0; i < npix; ++i)
        sum += std::abs(static_cast<double>(qp[i]) - ep[i]);
    }
    if (sum < best_dist) {  // strict: ties keep the lowest index
      best_dist = sum;
      best = e;
    }
  }
  return best;
}

std::vector<double> RetrievalBackend::eval(const Patch& patch,
                                           std::span<const Vec3> local_points) const {
  const BankEntry& entry = bank_->entries[nearest_entry(patch)];
  const int rx = bank_->rx, ry = bank_->ry, rz = bank_->rz;
  std::vector<double> out(local_points.size());
  for (std::size_t i = 0; i < local_points.size(); ++i) {
    const Vec3& q = local_points[i];
    // cell centers at (i+0.5)/r - 0.5; clamp to the border cells
    double gx = (q.x + 0.5) * rx - 0.5;
    double gy = (q.y + 0.5) * ry - 0.5;
    double gz = (q.z + 0.5) * rz - 0.5;
    auto split = [](double g, int r, int& i0, int& i1, double& f) {
      if (g <= 0.0) {
        i0 = i1 = 0;
        f = 0.0;
        return;
      }
      if (g >= r - 1.0) {
        i0 = i1 = r - 1;
        f = 0.0;
        return;
      }
      double fl = std::floor(g);
      i0 = static_cast<int>(fl);
      i1 = i0 + 1;
      f = g - fl;
    };
    int x0, x1, y0, y1, z0, z1;
    double fx, fy, fz;
    split(gx, rx, x0, x1, fx);
    split(gy, ry, y0, y1, fy);
    split(gz, rz, z0, z1, fz);
    double p = 0.0;
    for (int dz = 0; dz < 2; ++dz) {
      double wz = dz ? fz : 1.0 - fz;
      if (wz == 0.0) continue;
      for (int dy = 0; dy < 2; ++dy) {
        double wy = dy ? fy : 1.0 - fy;
        if (wy == 0.0) continue;
        for (int dx = 0; dx < 2; ++dx) {
          double wx = dx ? fx : 1.0 - fx;
          if (wx == 0.0) continue;
          bool occ = entry.occ_at(dx ? x1 : x0, dy ? y1 : y0, dz ? z1 : z0, rx, ry);
          if (occ) p += wx * wy * wz;
        }
      }
    }
    p = std::clamp(p, 0.01, 0.99);
    out[i] = std::log(p / (1.0 - p));
  }
  return out;
}

}  // namespace hpn
