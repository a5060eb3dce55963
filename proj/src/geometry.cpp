#include "gazedec/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace gazedec {

bool gaze_in_valid_range(const GazeAngle& a) {
  return std::isfinite(a.yaw) && std::isfinite(a.pitch) &&
         std::abs(a.yaw) <= 90.0 && std::abs(a.pitch) <= 90.0;
}

Vec3 to_unit_vector(const GazeAngle& a) {
  const double yaw = deg_to_rad(a.yaw);
  const double pitch = deg_to_rad(a.pitch);
  return {std::cos(pitch) * std::sin(yaw), std::sin(pitch), std::cos(pitch) * std::cos(yaw)};
}

double angular_error_deg(const GazeAngle& a, const GazeAngle& b) {
  const Vec3 u = to_unit_vector(a);
  const Vec3 v = to_unit_vector(b);
  const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  return rad_to_deg(std::acos(std::clamp(dot, -1.0, 1.0)));
}

GazeAngle flip_gaze(const GazeAngle& a) { return {-a.yaw, a.pitch}; }

}  // namespace gazedec
