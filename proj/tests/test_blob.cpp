#include <cmath>
#include <algorithm>

#include "doctest.h"
#include "vortexlab/blob.hpp"
#include "vortexlab/fields.hpp"

using namespace vortexlab;
using namespace vortexlab::blob;

namespace {

BlobSpec uniform(double a, double eps, Vec2 c = {}) {
  BlobSpec s;
  s.center = c;
  s.radius = eps;
  s.circulation = a;
  return s;
}

BlobSpec smooth(double a, double eps, Vec2 c = {}) {
  BlobSpec s = uniform(a, eps, c);
  s.profile = {ProfileKind::RadialSmooth, 3.0};
  return s;
}

// Composite Simpson of 2 pi s omega(s) on [r0, r1].
double ring_circulation(const BlobSpec& spec, double r0, double r1, int n = 4000) {
  const double h = (r1 - r0) / n;
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double s = r0 + k * h;
    const double c = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    acc += c * kTwoPi * s * spec.vorticity(s);
  }
  return acc * h / 3.0;
}

IntegratorConfig tol(double t) {
  IntegratorConfig c;
  c.abs_tol = c.rel_tol = t;
  return c;
}

}  // namespace

TEST_SUITE("blob") {
  TEST_CASE("uniform sampling conserves circulation and the center") {
    const auto spec = uniform(kTwoPi, 0.1);
    const auto e = sample_blob(spec, 400, 1);
    CHECK(std::abs(e.circulation() - kTwoPi) <= 1e-12 * kTwoPi);
    const double h[] = {0.05};
    const auto d = diagnostics(std::span(&e, 1), 0.0, h, Domain::Plane);
    CHECK(norm(d.blobs[0].center_of_vorticity) < 1e-12);
    // Centroid placement drops each cell's own second moment, so the sampled
    // moment sits slightly below the disk value eps^2/2.
    const double exact = 0.1 * 0.1 / 2;
    CHECK(d.blobs[0].moment_of_inertia < exact);
    CHECK(d.blobs[0].moment_of_inertia > exact * (1 - 1e-2));
    CHECK(e.reg_length == doctest::Approx(2 * 0.1 / std::sqrt(double(e.size()))));
  }

  TEST_CASE("center of vorticity of any spec is the spec center") {
    for (const auto& spec : {uniform(1.0, 0.07, {0.3, -0.2}), smooth(2.0, 0.15, {-1.0, 0.5})}) {
      for (std::size_t n : {16u, 100u, 1000u}) {
        const auto e = sample_blob(spec, n, 2);
        const double h[] = {0.1};
        const auto d = diagnostics(std::span(&e, 1), 0.0, h, Domain::Plane);
        CHECK(norm(d.blobs[0].center_of_vorticity - spec.center) < 1e-12);
      }
    }
  }

  TEST_CASE("smooth weights reproduce ring circulations") {
    const auto spec = smooth(kTwoPi, 0.1);
    const std::size_t n = 800;
    const auto e = sample_blob(spec, n, 3);
    const int rings = static_cast<int>(std::lround(std::sqrt(n / kPi)));
    // Cells of one ring share a centroid radius up to rounding.
    std::vector<std::pair<double, double>> rw;
    for (std::size_t j = 0; j < e.size(); ++j) rw.emplace_back(norm(e.positions[j]), e.weights[j]);
    std::sort(rw.begin(), rw.end());
    std::vector<double> ring_weight;
    double last = -1.0;
    for (const auto& [r, w] : rw) {
      if (r - last > 1e-12) ring_weight.push_back(0.0);
      ring_weight.back() += w;
      last = r;
    }
    REQUIRE(ring_weight.size() == static_cast<std::size_t>(rings));
    // Sparse rings can sit below their inner neighbour, so match as sorted lists.
    std::vector<double> expect;
    for (int k = 0; k < rings; ++k) expect.push_back(ring_circulation(spec, 0.1 * k / rings, 0.1 * (k + 1) / rings));
    std::sort(ring_weight.begin(), ring_weight.end());
    std::sort(expect.begin(), expect.end());
    for (int k = 0; k < rings; ++k) CHECK(std::abs(ring_weight[k] - expect[k]) < 1e-10);
    CHECK(std::abs(e.circulation() - kTwoPi) <= 1e-12 * kTwoPi);
  }

  TEST_CASE("sampling errors") {
    CHECK_THROWS_AS(sample_blob(uniform(1.0, 0.1), 15, 1), Error);
    CHECK_THROWS_AS(sample_blob(uniform(1.0, -0.1), 100, 1), Error);
  }

  TEST_CASE("single unregularized particle gives the point-vortex speed") {
    ParticleEnsemble e;
    e.positions = {{0, 0}};
    e.weights = {kTwoPi};
    for (double r : {0.1, 0.5, 2.0}) {
      const Vec2 v = ensemble_velocity(e, {r, 0}, Domain::Plane);
      CHECK(norm(v) == doctest::Approx(1.0 / r).epsilon(1e-14));
      CHECK(std::abs(v.c1) < 1e-15);
    }
  }

  TEST_CASE("exterior velocity matches the radial profile") {
    for (const auto& spec : {uniform(1.0, 0.1), smooth(1.0, 0.1)}) {
      const auto e = sample_blob(spec, 4096, 4);
      fields::Uniform01 u(9);
      double worst = 0.0;
      for (int k = 0; k < 64; ++k) {
        const double r = 0.1 * (1.5 + 2.5 * u());
        const double th = kTwoPi * u();
        const Vec2 dir{std::cos(th), std::sin(th)};
        const Vec2 expect = radial_profile_oracle(spec, r) * Vec2{-dir.c2, dir.c1};
        worst = std::max(worst, norm(ensemble_velocity(e, r * dir, Domain::Plane) - expect) / norm(expect));
      }
      CHECK(worst < 1e-3);
    }
  }

  TEST_CASE("velocity is additive over ensembles") {
    const auto a = sample_blob(uniform(1.0, 0.1, {-0.3, 0}), 200, 1);
    const auto b = sample_blob(smooth(-0.5, 0.08, {0.3, 0.1}), 150, 2);
    const std::vector<ParticleEnsemble> both{a, b};
    for (Vec2 x : {Vec2{0, 0.5}, Vec2{0.1, -0.2}}) {
      for (Domain d : {Domain::Plane, Domain::UnitDisk}) {
        const Vec2 sum = ensemble_velocity(a, x, d) + ensemble_velocity(b, x, d);
        CHECK(norm(ensemble_velocity(both, x, d) - sum) < 1e-14);
      }
    }
  }

  TEST_CASE("radial profile oracle") {
    const auto u = uniform(kTwoPi, 0.1);
    CHECK(radial_profile_oracle(u, 0.2) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(radial_profile_oracle(u, 0.05) == doctest::Approx(5.0).epsilon(1e-14));
    const auto s = smooth(kTwoPi, 0.1);
    for (double r : {0.02, 0.05, 0.08, 0.1, 0.3}) {
      const double expect = ring_circulation(s, 0.0, std::min(r, 0.1)) / (kTwoPi * r);
      CHECK(radial_profile_oracle(s, r) == doctest::Approx(expect).epsilon(1e-11));
    }
  }

  TEST_CASE("mollifier profile") {
    CHECK(mollifier_psi(0.0) == 1.0);
    CHECK(mollifier_psi(1.0) == 1.0);
    CHECK(mollifier_psi(1.5) == doctest::Approx(0.5));
    CHECK(mollifier_psi(2.0) == 0.0);
    CHECK(mollifier_psi(7.0) == 0.0);
    double prev = 1.0;
    for (double s = 1.0; s <= 2.0; s += 0.01) {
      CHECK(mollifier_psi(s) <= prev);
      prev = mollifier_psi(s);
    }
    const Vec2 x{0.13, -0.07};
    const double h = 0.1, d = 1e-6;
    const Vec2 g = mollifier_gradient(x, h);
    CHECK(g.c1 == doctest::Approx((mollifier(x + Vec2{d, 0}, h) - mollifier(x - Vec2{d, 0}, h)) / (2 * d)).epsilon(1e-6));
    CHECK(g.c2 == doctest::Approx((mollifier(x + Vec2{0, d}, h) - mollifier(x - Vec2{0, d}, h)) / (2 * d)).epsilon(1e-6));
  }

  TEST_CASE("tail masses of simple configurations") {
    const double h = 0.1;
    // Both halves sit at distance 1.5h from the center of vorticity.
    ParticleEnsemble pair;
    pair.positions = {{-1.5 * h, 0}, {1.5 * h, 0}};
    pair.weights = {0.5, 0.5};
    const double hl[] = {h};
    const auto d = diagnostics(std::span(&pair, 1), 0.0, hl, Domain::Plane).blobs[0];
    CHECK(d.tail_mass[0] == 1.0);
    CHECK(d.mollified_tail[0] == doctest::Approx(1.0 - mollifier_psi(1.5)));
    CHECK(d.mollified_tail[0] > 0.0);
    CHECK(d.mollified_tail[0] < 1.0);

    // 24 rings, so eps/2 falls on a ring edge.
    const auto e = sample_blob(uniform(1.0, 0.1), 1810, 5);
    const double inner[] = {0.2, 0.05};
    const auto q = diagnostics(std::span(&e, 1), 0.0, inner, Domain::Plane).blobs[0];
    CHECK(q.tail_mass[0] == 0.0);
    CHECK(q.mollified_tail[0] == 0.0);
    CHECK(q.tail_mass[1] == doctest::Approx(0.75).epsilon(1e-12));
  }

  TEST_CASE("free blob conserves its center and moment of inertia") {
    const auto e = sample_blob(uniform(1.0, 0.1), 300, 6);
    EvolveOptions opt;
    opt.h_list = {0.025, 0.05, 0.1, 0.2};
    const auto res = evolve_blobs({e}, Domain::Plane, nullptr, tol(1e-9), 1.0, 0.1, opt);
    const auto& first = res.records.front().blobs[0];
    for (const auto& r : res.records) {
      const auto& d = r.blobs[0];
      CHECK(norm(d.center_of_vorticity - first.center_of_vorticity) < 1e-12);
      CHECK(std::abs(d.moment_of_inertia / first.moment_of_inertia - 1) < 1e-7);
      CHECK(std::isinf(r.min_blob_separation));
      for (std::size_t k = 0; k < opt.h_list.size(); ++k) {
        CHECK(d.mollified_tail[k] <= d.tail_mass[k]);
        if (k > 0) CHECK(d.tail_mass[k] <= d.mollified_tail[k - 1]);
      }
    }
  }

  TEST_CASE("smooth blob support growth shrinks under refinement") {
    const auto growth = [](std::size_t n) {
      const auto e = sample_blob(smooth(1.0, 0.1), n, 7);
      EvolveOptions opt;
      opt.h_list = {0.05};
      const auto res = evolve_blobs({e}, Domain::Plane, nullptr, tol(1e-8), 2.0, 0.2, opt);
      const double r0 = res.records.front().blobs[0].support_radius;
      double g = 0.0;
      for (const auto& r : res.records) g = std::max(g, r.blobs[0].support_radius / r0 - 1);
      return g;
    };
    const double coarse = growth(256);
    const double fine = growth(1024);
    CHECK(coarse < 0.15);
    CHECK(fine < 0.6 * coarse);
  }

  TEST_CASE("centered disk blob stays concentrated") {
    const auto e = sample_blob(uniform(1.0, 0.1), 200, 8);
    EvolveOptions opt;
    opt.h_list = {0.05};
    const auto res = evolve_blobs({e}, Domain::UnitDisk, nullptr, tol(1e-9), 1.0, 0.25, opt);
    CHECK_FALSE(res.boundary_contact);
    const double radii[] = {0.1};
    const auto rep = concentration_time(res.records, radii, 0.5);
    CHECK_FALSE(rep.exit_time[0].has_value());
    for (const auto& r : res.records) CHECK(r.min_blob_separation == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("exit time of a synthetically displaced blob") {
    const double eps = 0.1, beta = 0.5, step = 0.5;
    const auto e = sample_blob(uniform(1.0, eps), 200, 9);
    const Vec2 ref[] = {{0, 0}};
    const double h[] = {0.05};
    std::vector<DiagnosticsRecord> recs;
    for (double t = 0.0; t <= 6.0; t += step) {
      ParticleEnsemble moved = e;
      if (t >= 3.0) {
        for (auto& p : moved.positions) p += Vec2{std::pow(eps, beta), 0};
      }
      recs.push_back(diagnostics(std::span(&moved, 1), t, h, Domain::Plane, ref));
    }
    const double radii[] = {eps};
    const auto rep = concentration_time(recs, radii, beta);
    REQUIRE(rep.exit_time[0].has_value());
    CHECK(std::abs(*rep.exit_time[0] - 3.0) <= step);
    CHECK_THROWS_AS(concentration_time(recs, radii, 1.5), Error);
  }

  TEST_CASE("lemma bounds without a field") {
    const auto e = sample_blob(uniform(1.0, 0.1), 200, 10);
    EvolveOptions opt;
    opt.h_list = {0.05};
    const auto res = evolve_blobs({e}, Domain::Plane, nullptr, tol(1e-9), 1.0, 0.25, opt);
    const auto l = lemma1_check(res.records, [](double) { return 0.0; }, 0.1,
                                [](double) { return Vec2{0, 0}; });
    CHECK(l.iee_ok);
    CHECK(l.bee_ok);
    CHECK(l.iee_margin == doctest::Approx(1.0 / 8).epsilon(0.02));
  }

  TEST_CASE("checkpoint round trip is exact") {
    const auto e = sample_blob(smooth(1.3, 0.07, {0.1, 0.2}), 300, 12, 2);
    const auto back = read_checkpoint(write_checkpoint(e));
    CHECK(back.positions == e.positions);
    CHECK(back.weights == e.weights);
    CHECK(back.reg_length == e.reg_length);
    CHECK(back.parent == e.parent);
    CHECK(back.seed == e.seed);
    CHECK(back.spec.profile.kind == ProfileKind::RadialSmooth);
    CHECK_THROWS_AS(read_checkpoint("not a checkpoint"), Error);
  }

  TEST_CASE("diagnostics csv layout") {
    const auto e = sample_blob(uniform(1.0, 0.1), 100, 13);
    const double h[] = {0.05, 0.1};
    const DiagnosticsRecord r = diagnostics(std::span(&e, 1), 0.0, h, Domain::Plane);
    const std::string csv = diagnostics_csv(std::span(&r, 1), h);
    CHECK(csv.rfind("t,blob,Bx,By,I,R,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  }
}
