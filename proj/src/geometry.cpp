#include "hpn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hpn/rng.hpp"

namespace hpn {

namespace {

struct Rotation {
  // columns of the local->world rotation matrix
  Vec3 cx, cy, cz;
};

Rotation make_rotation(double azimuth, double elevation) {
  // local->world = Ry(azimuth) * Rx(elevation)
  double ca = std::cos(azimuth), sa = std::sin(azimuth);
  double ce = std::cos(elevation), se = std::sin(elevation);
  Rotation r;
  r.cx = {ca, 0.0, -sa};
  r.cy = {sa * se, ce, ca * se};
  r.cz = {sa * ce, -se, ca * ce};
  return r;
}

Vec3 to_world(const Rotation& r, const Vec3& q) { return r.cx * q.x + r.cy * q.y + r.cz * q.z; }

Vec3 to_local(const Rotation& r, const Vec3& p) {
  return {dot(r.cx, p), dot(r.cy, p), dot(r.cz, p)};
}

double sdf_box_local(const Vec3& q, const Vec3& h) {
  Vec3 d{std::abs(q.x) - h.x, std::abs(q.y) - h.y, std::abs(q.z) - h.z};
  Vec3 outside{std::max(d.x, 0.0), std::max(d.y, 0.0), std::max(d.z, 0.0)};
  double inside = std::min(std::max(d.x, std::max(d.y, d.z)), 0.0);
  return length(outside) + inside;
}

double sdf_cylinder_local(const Vec3& q, double radius, double half_height) {
  double dr = std::hypot(q.x, q.z) - radius;
  double dy = std::abs(q.y) - half_height;
  double outside = std::hypot(std::max(dr, 0.0), std::max(dy, 0.0));
  double inside = std::min(std::max(dr, dy), 0.0);
  return outside + inside;
}

double sdf_capsule_local(const Vec3& q, double radius, double half_height) {
  double y = q.y - std::clamp(q.y, -half_height, half_height);
  return std::sqrt(q.x * q.x + y * y + q.z * q.z) - radius;
}

}  // namespace

const char* to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Sphere: return "sphere";
    case PrimitiveKind::Box: return "box";
    case PrimitiveKind::Cylinder: return "cylinder";
    case PrimitiveKind::Capsule: return "capsule";
  }
  return "?";
}

PrimitiveKind primitive_kind_from_string(const std::string& s) {
  if (s == "sphere") return PrimitiveKind::Sphere;
  if (s == "box") return PrimitiveKind::Box;
  if (s == "cylinder") return PrimitiveKind::Cylinder;
  if (s == "capsule") return PrimitiveKind::Capsule;
  throw std::invalid_argument("unknown primitive kind: " + s);
}

double Primitive::sdf(const Vec3& p) const {
  Rotation r = make_rotation(azimuth, elevation);
  Vec3 q = to_local(r, p - center);
  switch (kind) {
    case PrimitiveKind::Sphere: return length(q) - radius;
    case PrimitiveKind::Box: return sdf_box_local(q, half_extents);
    case PrimitiveKind::Cylinder: return sdf_cylinder_local(q, radius, half_height);
    case PrimitiveKind::Capsule: return sdf_capsule_local(q, radius, half_height);
  }
  return 1e30;
}

Aabb Primitive::aabb() const {
  Rotation r = make_rotation(azimuth, elevation);
  Aabb box;
  switch (kind) {
    case PrimitiveKind::Sphere: {
      box.lo = center - Vec3{radius, radius, radius};
      box.hi = center + Vec3{radius, radius, radius};
      break;
    }
    case PrimitiveKind::Box: {
      // extent_i = sum_j |R_ij| h_j; rows of R are (cx_i, cy_i, cz_i)
      Vec3 e{std::abs(r.cx.x) * half_extents.x + std::abs(r.cy.x) * half_extents.y +
                 std::abs(r.cz.x) * half_extents.z,
             std::abs(r.cx.y) * half_extents.x + std::abs(r.cy.y) * half_extents.y +
                 std::abs(r.cz.y) * half_extents.z,
             std::abs(r.cx.z) * half_extents.x + std::abs(r.cy.z) * half_extents.y +
                 std::abs(r.cz.z) * half_extents.z};
      box.lo = center - e;
      box.hi = center + e;
      break;
    }
    case PrimitiveKind::Cylinder: {
      Vec3 a = r.cy;  // axis
      auto ext = [&](double ai) {
        return half_height * std::abs(ai) + radius * std::sqrt(std::max(0.0, 1.0 - ai * ai));
      };
      Vec3 e{ext(a.x), ext(a.y), ext(a.z)};
      box.lo = center - e;
      box.hi = center + e;
      break;
    }
    case PrimitiveKind::Capsule: {
      Vec3 a = r.cy;
      Vec3 e{half_height * std::abs(a.x) + radius, half_height * std::abs(a.y) + radius,
             half_height * std::abs(a.z) + radius};
      box.lo = center - e;
      box.hi = center + e;
      break;
    }
  }
  return box;
}

double Primitive::surface_area() const {
  constexpr double pi = std::numbers::pi;
  switch (kind) {
    case PrimitiveKind::Sphere: return 4.0 * pi * radius * radius;
    case PrimitiveKind::Box:
      return 8.0 * (half_extents.x * half_extents.y + half_extents.y * half_extents.z +
                    half_extents.z * half_extents.x);
    case PrimitiveKind::Cylinder:
      return 4.0 * pi * radius * half_height + 2.0 * pi * radius * radius;
    case PrimitiveKind::Capsule:
      return 4.0 * pi * radius * half_height + 4.0 * pi * radius * radius;
  }
  return 0.0;
}

Vec3 Primitive::sample_surface(const std::array<double, 5>& u) const {
  constexpr double pi = std::numbers::pi;
  Rotation r = make_rotation(azimuth, elevation);
  Vec3 q;
  switch (kind) {
    case PrimitiveKind::Sphere: {
      double z = 2.0 * u[0] - 1.0;
      double phi = 2.0 * pi * u[1];
      double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      q = Vec3{s * std::cos(phi), s * std::sin(phi), z} * radius;
      break;
    }
    case PrimitiveKind::Box: {
      const Vec3& h = half_extents;
      double ax = h.y * h.z, ay = h.x * h.z, az = h.x * h.y;  // face-pair areas / 4
      double total = ax + ay + az;
      double pick = u[0] * total;
      double sgn = u[1] < 0.5 ? -1.0 : 1.0;
      double a = 2.0 * u[2] - 1.0, b = 2.0 * u[3] - 1.0;
      if (pick < ax)
        q = {sgn * h.x, a * h.y, b * h.z};
      else if (pick < ax + ay)
        q = {a * h.x, sgn * h.y, b * h.z};
      else
        q = {a * h.x, b * h.y, sgn * h.z};
      break;
    }
    case PrimitiveKind::Cylinder: {
      double side = 4.0 * pi * radius * half_height;
      double caps = 2.0 * pi * radius * radius;
      double phi = 2.0 * pi * u[1];
      if (u[0] * (side + caps) < side) {
        q = {radius * std::cos(phi), (2.0 * u[2] - 1.0) * half_height, radius * std::sin(phi)};
      } else {
        double rr = radius * std::sqrt(u[2]);
        double sgn = u[3] < 0.5 ? -1.0 : 1.0;
        q = {rr * std::cos(phi), sgn * half_height, rr * std::sin(phi)};
      }
      break;
    }
    case PrimitiveKind::Capsule: {
      double side = 4.0 * pi * radius * half_height;
      double caps = 4.0 * pi * radius * radius;
      double phi = 2.0 * pi * u[1];
      if (u[0] * (side + caps) < side) {
        q = {radius * std::cos(phi), (2.0 * u[2] - 1.0) * half_height, radius * std::sin(phi)};
      } else {
        // hemispherical caps, together a full sphere offset by +-half_height
        double z = 2.0 * u[2] - 1.0;
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec3 dir{s * std::cos(phi), z, s * std::sin(phi)};
        double shift = dir.y >= 0.0 ? half_height : -half_height;
        q = dir * radius + Vec3{0.0, shift, 0.0};
      }
      break;
    }
  }
  return to_world(r, q) + center;
}

double scene_sdf(const SceneSpec& scene, const Vec3& p) {
  double d = 1e30;
  for (const Primitive& obj : scene.objects) d = std::min(d, obj.sdf(p));
  return d;
}

bool scene_occupancy(const SceneSpec& scene, const Vec3& p) { return scene_sdf(scene, p) <= 0.0; }

Aabb scene_aabb(const SceneSpec& scene) {
  Aabb box;
  for (const Primitive& obj : scene.objects) box.expand(obj.aabb());
  return box;
}

SceneSpec normalize_scene(const std::vector<Primitive>& objects, std::uint64_t seed) {
  if (objects.empty()) throw std::invalid_argument("normalize_scene: empty object list");
  Aabb box;
  for (const Primitive& obj : objects) box.expand(obj.aabb());
  double scale = 1.0 / box.max_side();
  Vec3 src_center = box.center();
  Vec3 dst_center{0.5, 0.5, 0.5};

  SceneSpec out;
  out.seed = seed;
  out.objects = objects;
  for (Primitive& obj : out.objects) {
    obj.center = (obj.center - src_center) * scale + dst_center;
    obj.radius *= scale;
    obj.half_height *= scale;
    obj.half_extents = obj.half_extents * scale;
  }
  return out;
}

double Mesh::face_area(std::size_t f) const {
  const auto& tri = faces[f];
  Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
  Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * length(cross(e1, e2));
}

double Mesh::surface_area() const {
  double total = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) total += face_area(f);
  return total;
}

std::vector<Vec3> sample_surface_points(const SceneSpec& scene, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_surface_points: n must be > 0");
  if (scene.objects.empty()) throw std::invalid_argument("sample_surface_points: empty scene");

  std::vector<double> cum_area;
  double total = 0.0;
  for (const Primitive& obj : scene.objects) {
    total += obj.surface_area();
    cum_area.push_back(total);
  }

  Rng rng(hash_mix(seed, 0x51f51a2bULL));
  std::vector<Vec3> points;
  points.reserve(n);
  // Draw on a member surface, reject samples buried inside the union.
  while (points.size() < n) {
    double pick = rng.next_double() * total;
    std::size_t idx =
        std::lower_bound(cum_area.begin(), cum_area.end(), pick) - cum_area.begin();
    if (idx >= scene.objects.size()) idx = scene.objects.size() - 1;
    std::array<double, 5> u;
    for (double& v : u) v = rng.next_double();
    Vec3 p = scene.objects[idx].sample_surface(u);
    if (scene_sdf(scene, p) < -1e-9) continue;  // interior of another object
    points.push_back(p);
  }
  return points;
}

std::vector<Vec3> sample_surface_points(const Mesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_surface_points: n must be > 0");
  if (mesh.empty()) throw std::invalid_argument("sample_surface_points: empty mesh");

  std::vector<double> cum_area(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cum_area[f] = total;
  }
  if (total <= 0.0) throw std::invalid_argument("sample_surface_points: degenerate mesh");

  Rng rng(hash_mix(seed, 0x3e51c0deULL));
  std::vector<Vec3> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double pick = rng.next_double() * total;
    std::size_t f = std::lower_bound(cum_area.begin(), cum_area.end(), pick) - cum_area.begin();
    if (f >= mesh.faces.size()) f = mesh.faces.size() - 1;
    double u = rng.next_double(), v = rng.next_double();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const auto& tri = mesh.faces[f];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    points.push_back(a + (b - a) * u + (c - a) * v);
  }
  return points;
}

void write_obj(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_obj: cannot open " + path);
  char buf[128];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& f : mesh.faces) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw std::runtime_error("write_obj: write failed for " + path);
}

Mesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_obj: cannot open " + path);
  Mesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    if (line.size() < 2) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x >> v.y >> v.z;
      if (ss.fail()) throw std::runtime_error("read_obj: bad vertex line: " + line);
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<std::uint32_t, 3> idx{};
      for (int k = 0; k < 3; ++k) {
        std::string tok;
        ss >> tok;
        if (tok.empty()) throw std::runtime_error("read_obj: bad face line: " + line);
        long v = std::stol(tok.substr(0, tok.find('/')));
        if (v < 1 || static_cast<std::size_t>(v) > mesh.vertices.size())
          throw std::runtime_error("read_obj: face index out of range: " + line);
        idx[k] = static_cast<std::uint32_t>(v - 1);
      }
      mesh.faces.push_back(idx);
    }
  }
  return mesh;
}

}  // namespace hpn
