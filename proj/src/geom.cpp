#include "vortexlab/geom.hpp"

#include <sstream>

namespace vortexlab {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SingularKernel: return "singular kernel";
    case ErrorCode::OutOfDomain: return "out of domain";
    case ErrorCode::MirrorOfCenter: return "mirror of center";
    case ErrorCode::SingularConfiguration: return "singular configuration";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::InternalConsistency: return "internal consistency";
    case ErrorCode::StepUnderflow: return "step-size underflow";
    case ErrorCode::WorkingRegion: return "working-region violation";
    case ErrorCode::NotNormalizable: return "profile not normalizable";
    case ErrorCode::Io: return "i/o";
  }
  return "unknown";
}

const char* to_string(Domain d) noexcept {
  return d == Domain::Plane ? "plane" : "disk";
}

Disk::Disk(Vec2 c, double r) : center(c), radius(r) {
  if (!(r > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "disk radius must be positive");
  }
}

bool inside(Domain domain, Vec2 x) {
  if (!is_finite(x)) return false;
  return domain == Domain::Plane || norm2(x) < 1.0;
}

namespace {

void require_in_disk(Vec2 x, const char* name) {
  if (!(norm2(x) < 1.0)) {
    std::ostringstream os;
    os << name << " = (" << x.c1 << ", " << x.c2 << ") is not inside the unit disk";
    throw Error(ErrorCode::OutOfDomain, os.str());
  }
}

}  // namespace

Vec2 kernel_plane(Vec2 d) {
  const double r2 = norm2(d);
  if (r2 == 0.0) throw Error(ErrorCode::SingularKernel, "kernel evaluated at zero separation");
  return -perp(d) / (kTwoPi * r2);
}

Vec2 mirror_point(Vec2 y) {
  const double r2 = norm2(y);
  if (r2 == 0.0) throw Error(ErrorCode::MirrorOfCenter, "the center has no finite mirror point");
  return y / r2;
}

Vec2 disk_image_velocity(Vec2 x, Vec2 y) {
  if (norm2(y) == 0.0) return {};
  const Vec2 d = x - mirror_point(y);
  return perp(d) / (kTwoPi * norm2(d));
}

Vec2 kernel_disk(Vec2 x, Vec2 y) {
  require_in_disk(x, "x");
  require_in_disk(y, "y");
  if (x == y) throw Error(ErrorCode::SingularKernel, "disk kernel evaluated at x = y");
  return kernel_plane(x - y) + disk_image_velocity(x, y);
}

Vec2 disk_self_gradient(Vec2 z) {
  require_in_disk(z, "z");
  const double s = 1.0 - norm2(z);
  return perp((-2.0 / s) * z) / kTwoPi;
}

double green_plane(Vec2 x, Vec2 y) {
  const double r2 = norm2(x - y);
  if (r2 == 0.0) throw Error(ErrorCode::SingularKernel, "Green function evaluated at x = y");
  return -std::log(r2) / (2.0 * kTwoPi);
}

double green_disk_regular(Vec2 x, Vec2 y) {
  const double q = norm2(x) * norm2(y) - 2.0 * dot(x, y) + 1.0;
  return std::log(q) / (2.0 * kTwoPi);
}

double green_disk(Vec2 x, Vec2 y) {
  require_in_disk(x, "x");
  require_in_disk(y, "y");
  return green_plane(x, y) + green_disk_regular(x, y);
}

double disk_self_potential(Vec2 z) {
  require_in_disk(z, "z");
  return std::log1p(-norm2(z)) / kTwoPi;
}

}  // namespace vortexlab
