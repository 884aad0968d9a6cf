#include <cmath>

#include "doctest.h"
#include "vortexlab/error.hpp"
#include "vortexlab/ode.hpp"

using namespace vortexlab;

namespace {

// y'' = -y as a first-order system; exact solution (cos t, -sin t).
void oscillator(double, std::span<const double> y, std::span<double> d) {
  d[0] = y[1];
  d[1] = -y[0];
}

double final_error(const IntegratorConfig& cfg, double t_end) {
  const double y0[] = {1.0, 0.0};
  const auto sol = solve_ode(oscillator, y0, 0.0, t_end, t_end, cfg);
  return std::hypot(sol.states.back()[0] - std::cos(t_end), sol.states.back()[1] + std::sin(t_end));
}

}  // namespace

TEST_SUITE("ode") {
  TEST_CASE("observation grid ends exactly at t_end") {
    const auto t = observation_times(0.0, 1.0, 0.3);
    REQUIRE(t.size() == 5);
    CHECK(t[0] == 0.0);
    CHECK(t[3] == doctest::Approx(0.9));
    CHECK(t[4] == 1.0);
  }

  TEST_CASE("fixed-step RK4 converges at fourth order") {
    IntegratorConfig cfg;
    cfg.method = Method::RK4Fixed;
    cfg.step = 0.1;
    const double e1 = final_error(cfg, 2.0);
    cfg.step = 0.05;
    const double e2 = final_error(cfg, 2.0);
    CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.05));
  }

  TEST_CASE("embedded adaptive method honours the tolerance") {
    IntegratorConfig cfg;
    for (double tol : {1e-6, 1e-9, 1e-12}) {
      cfg.abs_tol = cfg.rel_tol = tol;
      CHECK(final_error(cfg, 10.0) < 100 * tol);
    }
  }

  TEST_CASE("dense output between steps") {
    IntegratorConfig cfg;
    cfg.abs_tol = cfg.rel_tol = 1e-11;
    const double y0[] = {1.0, 0.0};
    SolveOptions opt;
    opt.keep_dense = true;
    const auto sol = solve_ode(oscillator, y0, 0.0, 5.0, 0.01, cfg, opt);
    REQUIRE_FALSE(sol.segments.empty());
    double worst = 0.0;
    double out[2];
    for (double t = 0.0; t <= 5.0; t += 0.0137) {
      evaluate_dense(sol.segments, t, out);
      worst = std::max(worst, std::abs(out[0] - std::cos(t)));
    }
    CHECK(worst < 1e-8);
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
      CHECK(sol.states[k][0] == doctest::Approx(std::cos(sol.times[k])).epsilon(1e-8));
    }
  }

  TEST_CASE("hook stops the run and records the stop state") {
    IntegratorConfig cfg;
    const double y0[] = {1.0, 0.0};
    SolveOptions opt;
    opt.hook = [](double, std::span<const double> y) { return y[0] > 0.0; };
    const auto sol = solve_ode(oscillator, y0, 0.0, 10.0, 0.1, cfg, opt);
    CHECK(sol.reason == StopReason::HookStopped);
    CHECK(sol.t_stop > 1.0);
    CHECK(sol.t_stop < 10.0);
    CHECK(sol.times.back() == sol.t_stop);
  }

  TEST_CASE("invalid configurations are rejected") {
    IntegratorConfig cfg;
    cfg.abs_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = IntegratorConfig{};
    cfg.rel_tol = 0.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = IntegratorConfig{};
    cfg.method = Method::RK4Fixed;
    cfg.step = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
  }
}
