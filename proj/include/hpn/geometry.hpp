#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hpn/vec3.hpp"

namespace hpn {

enum class PrimitiveKind { Sphere, Box, Cylinder, Capsule };

const char* to_string(PrimitiveKind kind);
PrimitiveKind primitive_kind_from_string(const std::string& s);

// One analytic solid. The pose rotates the local frame by elevation about x,
// then azimuth about y (world y is up), and translates to `center`.
// Cylinder and capsule axes run along local y. All size parameters are
// half-extents except the radii.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Sphere;
  double radius = 0.25;          // sphere, cylinder, capsule
  Vec3 half_extents{0.25, 0.25, 0.25};  // box
  double half_height = 0.25;     // cylinder, capsule (along local y)
  double azimuth = 0.0;          // radians, about world y
  double elevation = 0.0;        // radians, about world x
  Vec3 center{0.5, 0.5, 0.5};

  // Signed distance in world units; exact for each solid.
  double sdf(const Vec3& p) const;
  Aabb aabb() const;
  double surface_area() const;
  // Uniform sample on the solid's surface, local randomness from `u` (five
  // uniforms in [0,1)).
  Vec3 sample_surface(const std::array<double, 5>& u) const;
};

struct SceneSpec {
  std::vector<Primitive> objects;
  std::uint64_t seed = 0;
};

// Union signed distance: min over member SDFs. Exact as an occupancy
// predicate; a conservative distance bound in overlap regions.
double scene_sdf(const SceneSpec& scene, const Vec3& p);

// 1 iff scene_sdf(p) <= 0. Boundaries count as inside.
bool scene_occupancy(const SceneSpec& scene, const Vec3& p);

Aabb scene_aabb(const SceneSpec& scene);

// Uniform scale plus translation so the union AABB is centered in [0,1]^3
// with its longest side spanning exactly 1. Aspect ratios are preserved.
// Throws std::invalid_argument on an empty object list. Idempotent.
SceneSpec normalize_scene(const std::vector<Primitive>& objects, std::uint64_t seed = 0);

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;

  bool empty() const { return faces.empty(); }
  double face_area(std::size_t f) const;
  double surface_area() const;
};

// n points drawn uniformly by area from the union surface of the scene.
// Deterministic for a given seed.
std::vector<Vec3> sample_surface_points(const SceneSpec& scene, std::size_t n, std::uint64_t seed);

// n points drawn area-weighted over mesh faces, barycentric-uniform per face.
std::vector<Vec3> sample_surface_points(const Mesh& mesh, std::size_t n, std::uint64_t seed);

// ASCII OBJ with `v`/`f` records, 1-based indices. Write is deterministic.
void write_obj(const Mesh& mesh, const std::string& path);
Mesh read_obj(const std::string& path);

}  // namespace hpn
