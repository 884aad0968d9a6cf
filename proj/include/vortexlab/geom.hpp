#pragma once

#include <cmath>
#include <numbers>

#include "vortexlab/error.hpp"

namespace vortexlab {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Planar point or velocity.
struct Vec2 {
  double c1 = 0.0;
  double c2 = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { c1 += o.c1; c2 += o.c2; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { c1 -= o.c1; c2 -= o.c2; return *this; }
  constexpr Vec2& operator*=(double s) { c1 *= s; c2 *= s; return *this; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.c1 + b.c1, a.c2 + b.c2}; }
constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.c1 - b.c1, a.c2 - b.c2}; }
constexpr Vec2 operator-(Vec2 a) { return {-a.c1, -a.c2}; }
constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.c1, s * a.c2}; }
constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.c1, s * a.c2}; }
constexpr Vec2 operator/(Vec2 a, double s) { return {a.c1 / s, a.c2 / s}; }

constexpr double dot(Vec2 a, Vec2 b) { return a.c1 * b.c1 + a.c2 * b.c2; }
/// z-component of the 3D cross product a x b.
constexpr double cross(Vec2 a, Vec2 b) { return a.c1 * b.c2 - a.c2 * b.c1; }
constexpr double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::hypot(a.c1, a.c2); }
inline bool is_finite(Vec2 a) { return std::isfinite(a.c1) && std::isfinite(a.c2); }

/// Clockwise quarter turn, x-perp = (x2, -x1).
constexpr Vec2 perp(Vec2 v) { return {v.c2, -v.c1}; }

enum class Domain { Plane, UnitDisk };

const char* to_string(Domain d) noexcept;

/// Open disk Sigma(center | radius).
struct Disk {
  Vec2 center;
  double radius = 1.0;

  Disk() = default;
  Disk(Vec2 c, double r);

  bool contains(Vec2 x) const { return norm2(x - center) < radius * radius; }
};

/// True when x is an admissible position in the domain (strictly inside for the disk).
bool inside(Domain domain, Vec2 x);

/// Planar Biot-Savart kernel K(d) = -perp(d) / (2 pi |d|^2). Throws on d = 0.
Vec2 kernel_plane(Vec2 d);

/// Inversion in the unit circle, y / |y|^2. Throws on y = 0.
Vec2 mirror_point(Vec2 y);

/// Image part of the disk kernel, (1/2pi) perp(x - ybar) / |x - ybar|^2.
/// A source at the exact center has its image at infinity and contributes zero.
Vec2 disk_image_velocity(Vec2 x, Vec2 y);

/// Velocity kernel of the unit disk: plane kernel plus the negative mirror charge.
Vec2 kernel_disk(Vec2 x, Vec2 y);

/// perp-gradient of the Green regular part on the diagonal,
/// gamma(z) = (1/2pi) log(1 - |z|^2).
Vec2 disk_self_gradient(Vec2 z);

/// Planar Green function -(1/2pi) log|x - y|.
double green_plane(Vec2 x, Vec2 y);

/// Regular part of the disk Green function, (1/2pi) log(|y| |x - ybar|),
/// evaluated in the form (1/4pi) log(|x|^2 |y|^2 - 2 x.y + 1), which is
/// smooth at y = 0 and symmetric in x, y.
double green_disk_regular(Vec2 x, Vec2 y);

/// Full disk Green function G(x,y) = green_plane + green_disk_regular.
double green_disk(Vec2 x, Vec2 y);

/// gamma(z) = (1/2pi) log(1 - |z|^2).
double disk_self_potential(Vec2 z);

}  // namespace vortexlab
