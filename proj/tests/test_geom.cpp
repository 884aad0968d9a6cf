#include <cmath>

#include "doctest.h"
#include "vortexlab/geom.hpp"

using namespace vortexlab;

namespace {

// perp of the x-gradient of g by central differences.
template <class G>
Vec2 fd_perp_grad(G g, Vec2 x, double h = 1e-6) {
  const double gx = (g(x + Vec2{h, 0}) - g(x - Vec2{h, 0})) / (2 * h);
  const double gy = (g(x + Vec2{0, h}) - g(x - Vec2{0, h})) / (2 * h);
  return perp(Vec2{gx, gy});
}

}  // namespace

TEST_SUITE("geom") {
  TEST_CASE("perp is the clockwise quarter turn") {
    CHECK(perp({1, 0}) == Vec2{0, -1});
    CHECK(perp({0, 0}) == Vec2{0, 0});
    CHECK(perp({3, 4}) == Vec2{4, -3});
    CHECK(norm(perp({3, 4})) == doctest::Approx(5.0).epsilon(1e-15));
  }

  TEST_CASE("plane kernel values and antisymmetry") {
    const Vec2 a = kernel_plane({1, 0});
    CHECK(a.c1 == 0.0);
    CHECK(a.c2 == doctest::Approx(1.0 / kTwoPi).epsilon(1e-15));
    const Vec2 b = kernel_plane({0, 2});
    // -perp((0, 2)) / (2 pi 4) = (-2, 0) / (8 pi)
    CHECK(b.c1 == doctest::Approx(-1.0 / (4 * kPi)).epsilon(1e-15));
    CHECK(b.c2 == 0.0);
    const Vec2 d{0.3, -0.7};
    CHECK(kernel_plane(-d) == -kernel_plane(d));
    CHECK_THROWS_AS(kernel_plane({0, 0}), Error);
  }

  TEST_CASE("plane kernel is the perp gradient of the Green function") {
    const Vec2 y{0.2, -0.1};
    for (Vec2 x : {Vec2{0.5, 0.3}, Vec2{-0.4, 0.9}, Vec2{1.5, -2.0}}) {
      const Vec2 fd = fd_perp_grad([&](Vec2 p) { return green_plane(p, y); }, x);
      CHECK(norm(kernel_plane(x - y) - fd) < 1e-8);
    }
  }

  TEST_CASE("mirror point") {
    CHECK(mirror_point({0.5, 0}) == Vec2{2, 0});
    CHECK(mirror_point({0, -0.25}) == Vec2{0, -4});
    const Vec2 m = mirror_point({0.6, 0.8});
    CHECK(m.c1 == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(m.c2 == doctest::Approx(0.8).epsilon(1e-15));
    try {
      mirror_point({0, 0});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MirrorOfCenter);
    }
  }

  TEST_CASE("disk kernel at the center from a source at (0.5, 0)") {
    // K(-0.5, 0) = (0, -1/pi); image at (2, 0) adds (0, 1/(4 pi)).
    const Vec2 k = kernel_disk({0, 0}, {0.5, 0});
    CHECK(k.c1 == doctest::Approx(0.0));
    CHECK(k.c2 == doctest::Approx(-3.0 / (4 * kPi)).epsilon(1e-14));
    CHECK(k.c2 == doctest::Approx(-0.2387324).epsilon(1e-7));
  }

  TEST_CASE("disk kernel matches finite differences of the disk Green function") {
    const Vec2 pts[] = {{0.1, 0.2}, {-0.5, 0.3}, {0.7, -0.1}, {0.0, -0.8}, {0.35, 0.35}};
    for (Vec2 x : pts) {
      for (Vec2 y : pts) {
        if (x == y) continue;
        const Vec2 fd = fd_perp_grad([&](Vec2 p) { return green_disk(p, y); }, x);
        CHECK(norm(kernel_disk(x, y) - fd) < 1e-7);
        CHECK(green_disk(x, y) == doctest::Approx(green_disk(y, x)).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("disk kernel errors") {
    CHECK_THROWS_AS(kernel_disk({0.1, 0.1}, {0.1, 0.1}), Error);
    try {
      kernel_disk({1.0, 0.0}, {0.1, 0.1});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutOfDomain);
    }
  }

  TEST_CASE("image term recedes as the source approaches the center") {
    const Vec2 x{0.3, -0.4};
    double prev = norm(disk_image_velocity(x, {0.1, 0}));
    for (double r : {1e-2, 1e-3, 1e-4}) {
      const double cur = norm(disk_image_velocity(x, {r, 0}));
      CHECK(cur < prev);
      prev = cur;
    }
    CHECK(prev < 1e-4);
    CHECK(disk_image_velocity(x, {0, 0}) == Vec2{0, 0});
  }

  TEST_CASE("self gradient") {
    CHECK(disk_self_gradient({0, 0}) == Vec2{0, 0});
    const Vec2 z{0.5, 0};
    const Vec2 fd = fd_perp_grad(disk_self_potential, z);
    const Vec2 g = disk_self_gradient(z);
    CHECK(norm(g - fd) < 1e-8);
    CHECK(g.c2 == doctest::Approx(2.0 / (3 * kPi)).epsilon(1e-14));
    double prev = 0.0;
    for (double r : {0.5, 0.9, 0.99, 0.999}) {
      const double m = norm(disk_self_gradient({0, r}));
      CHECK(m > prev);
      prev = m;
    }
    CHECK_THROWS_AS(disk_self_gradient({0.6, 0.8}), Error);
  }

  TEST_CASE("domain membership") {
    CHECK(inside(Domain::Plane, {5, 5}));
    CHECK(inside(Domain::UnitDisk, {0.5, 0.5}));
    CHECK_FALSE(inside(Domain::UnitDisk, {1, 0}));
    const Disk d({1, 1}, 0.5);
    CHECK(d.contains({1.2, 1.2}));
    CHECK_FALSE(d.contains({1.5, 1.0}));
  }
}
