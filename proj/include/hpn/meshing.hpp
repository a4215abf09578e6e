#pragma once

#include "hpn/fusion.hpp"
#include "hpn/geometry.hpp"

namespace hpn {

// Iso-crossing specification: `inside_above` says whether values >= iso count
// as interior (true for probability/logit fields, false for SDF).
struct IsoSpec {
  double iso = 0.5;
  bool inside_above = true;
};

inline IsoSpec iso_for_field(const FusedField& field, const ThresholdSpec& thresholds) {
  if (field.kind == FieldKind::SignedDistance) return {thresholds.tau_sdf, false};
  if (field.kind == FieldKind::Logit) {
    double t = std::clamp(thresholds.tau, 1e-9, 1.0 - 1e-9);
    return {std::log(t / (1.0 - t)), true};
  }
  return {thresholds.tau, true};
}

// Classic 256-case marching cubes with linear interpolation along edges. The
// field is virtually padded with one empty layer (pad samples clamped onto the
// cube boundary) so the output is closed and all vertices lie in [0,1]^3.
// Triangles are wound with outward-facing normals; faces with area < 1e-12
// are dropped.
Mesh marching_cubes(const FusedField& field, const IsoSpec& iso);

}  // namespace hpn
