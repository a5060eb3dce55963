#pragma once

#include <array>

namespace gazedec {

constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double d) { return d * kPi / 180.0; }
constexpr double rad_to_deg(double r) { return r * 180.0 / kPi; }

/// Yaw/pitch pair in degrees. Also used as an additive offset (bias) value,
/// in which case the magnitude bounds on pipeline samples do not apply.
struct GazeAngle {
  double yaw = 0.0;
  double pitch = 0.0;

  GazeAngle& operator+=(const GazeAngle& o) {
    yaw += o.yaw;
    pitch += o.pitch;
    return *this;
  }
  GazeAngle& operator-=(const GazeAngle& o) {
    yaw -= o.yaw;
    pitch -= o.pitch;
    return *this;
  }
  friend GazeAngle operator+(GazeAngle a, const GazeAngle& b) { return a += b; }
  friend GazeAngle operator-(GazeAngle a, const GazeAngle& b) { return a -= b; }
  friend GazeAngle operator*(double s, const GazeAngle& a) { return {s * a.yaw, s * a.pitch}; }
  friend bool operator==(const GazeAngle&, const GazeAngle&) = default;
};

using Vec3 = std::array<double, 3>;

/// Finite components with |yaw| <= 90 and |pitch| <= 90.
bool gaze_in_valid_range(const GazeAngle& a);

/// x = right, y = up, z = forward. Any self-consistent convention yields the
/// same angular errors; this one is fixed so values are reproducible.
Vec3 to_unit_vector(const GazeAngle& a);

/// Angle in degrees between the two gaze directions. The dot product is
/// clamped to [-1, 1] before acos so rounding cannot leave the domain.
double angular_error_deg(const GazeAngle& a, const GazeAngle& b);

/// Horizontal mirror: yaw negates, pitch is preserved. Involution.
GazeAngle flip_gaze(const GazeAngle& a);

}  // namespace gazedec
