#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "vortexlab/blob.hpp"
#include "vortexlab/kernels.hpp"

using namespace vortexlab;
using namespace vortexlab::kernels;

namespace {

struct Cloud {
  std::vector<double> x, y, w, hd;
};

Cloud cloud(std::size_t n, std::uint64_t seed, bool with_hd) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(-1.0, 1.0), wt(-0.5, 1.0), h(1e-5, 1e-3);
  Cloud c;
  for (std::size_t i = 0; i < n; ++i) {
    c.x.push_back(pos(rng));
    c.y.push_back(pos(rng));
    c.w.push_back(wt(rng));
    c.hd.push_back(with_hd ? h(rng) : 0.0);
  }
  return c;
}

struct Result {
  std::vector<double> u, v;
  friend bool operator==(const Result&, const Result&) = default;
};

Result self_sum(const Cloud& c, Backend b) {
  Result r{std::vector<double>(c.x.size(), 0.0), std::vector<double>(c.x.size(), 0.0)};
  accumulate_velocity({c.x, c.y, c.hd}, {c.x, c.y, c.w, c.hd}, r.u, r.v, b);
  return r;
}

// Direct sum in long double, independent of the kernels.
Result oracle(const Cloud& c) {
  const std::size_t n = c.x.size();
  Result r{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    long double su = 0, sv = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const long double dx = (long double)c.x[i] - c.x[j];
      const long double dy = (long double)c.y[i] - c.y[j];
      const long double den = dx * dx + dy * dy + c.hd[i] + c.hd[j];
      if (den == 0) continue;
      const long double f = c.w[j] / (2 * 3.14159265358979323846264338327950288L * den);
      su -= dy * f;
      sv += dx * f;
    }
    r.u[i] = (double)su;
    r.v[i] = (double)sv;
  }
  return r;
}

std::vector<Backend> available() {
  std::vector<Backend> out;
  for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
    if (backend_available(b)) out.push_back(b);
  }
  return out;
}

struct BackendGuard {
  Backend saved = active_backend();
  ~BackendGuard() { set_active_backend(saved); }
};

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("every backend is bit-identical to the scalar reference") {
    // Sizes cover the 16-, 4- and scalar-tail paths.
    for (std::size_t n : {1u, 3u, 4u, 7u, 16u, 19u, 33u, 257u}) {
      for (bool hd : {false, true}) {
        const Cloud c = cloud(n, 7 + n, hd);
        const Result ref = self_sum(c, Backend::Scalar);
        for (Backend b : available()) {
          CAPTURE(n);
          CAPTURE(to_string(b));
          CHECK(self_sum(c, b) == ref);
        }
      }
    }
  }

  TEST_CASE("scalar reference agrees with the extended-precision direct sum") {
    const Cloud c = cloud(300, 11, true);
    const Result ref = self_sum(c, Backend::Scalar);
    const Result ora = oracle(c);
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      scale = std::max(scale, std::hypot(ora.u[i], ora.v[i]));
      err = std::max(err, std::hypot(ref.u[i] - ora.u[i], ref.v[i] - ora.v[i]));
    }
    CHECK(err / scale < 1e-12);
  }

  TEST_CASE("coincident points with zero regularization contribute nothing") {
    const std::vector<double> x{0.5, 0.5}, y{0.1, 0.1}, w{1.0, 2.0};
    for (Backend b : available()) {
      std::vector<double> u(2, 0.0), v(2, 0.0);
      accumulate_velocity({x, y, {}}, {x, y, w, {}}, u, v, b);
      CHECK(u == std::vector<double>{0.0, 0.0});
      CHECK(v == std::vector<double>{0.0, 0.0});
    }
  }

  TEST_CASE("results do not depend on the thread count") {
    const Cloud c = cloud(1000, 5, true);
    BackendGuard guard;
    for (Backend b : available()) {
      set_active_backend(b);
      Result one{std::vector<double>(1000, 0.0), std::vector<double>(1000, 0.0)};
      accumulate_velocity({c.x, c.y, c.hd}, {c.x, c.y, c.w, c.hd}, one.u, one.v, 1u);
      for (unsigned t : {2u, 3u, 4u}) {
        Result many{std::vector<double>(1000, 0.0), std::vector<double>(1000, 0.0)};
        accumulate_velocity({c.x, c.y, c.hd}, {c.x, c.y, c.w, c.hd}, many.u, many.v, t);
        CHECK(many == one);
      }
    }
  }

  TEST_CASE("blob mutual velocities are identical across backends and threads") {
    blob::BlobSpec spec;
    spec.radius = 0.1;
    spec.center = {0.2, -0.1};
    const auto e = blob::sample_blob(spec, 500, 3);
    const std::vector<blob::ParticleEnsemble> ens{e};
    BackendGuard guard;
    set_active_backend(Backend::Scalar);
    const auto ref = blob::mutual_velocities(ens, Domain::UnitDisk, 1);
    for (Backend b : available()) {
      set_active_backend(b);
      for (unsigned t : {1u, 4u}) CHECK(blob::mutual_velocities(ens, Domain::UnitDisk, t) == ref);
    }
  }

  TEST_CASE("accumulation adds onto existing values") {
    const Cloud c = cloud(20, 9, false);
    std::vector<double> u(20, 1.0), v(20, -1.0);
    accumulate_velocity({c.x, c.y, {}}, {c.x, c.y, c.w, {}}, u, v, Backend::Scalar);
    const Result r = self_sum(c, Backend::Scalar);
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(u[i] == 1.0 + r.u[i]);
      CHECK(v[i] == -1.0 + r.v[i]);
    }
  }
}
