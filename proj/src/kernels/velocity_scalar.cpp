#include <numbers>

#include "vortexlab/kernels.hpp"

namespace vortexlab::kernels::detail {

void velocity_scalar(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const std::size_t nt = t.x.size();
  const std::size_t ns = s.x.size();
  const bool thd = !t.hd.empty();
  const bool shd = !s.hd.empty();
  for (std::size_t i = 0; i < nt; ++i) {
    const double xi = t.x[i];
    const double yi = t.y[i];
    const double hdi = thd ? t.hd[i] : 0.0;
    double ui = 0.0;
    double vi = 0.0;
    for (std::size_t j = 0; j < ns; ++j) {
      const double dx = xi - s.x[j];
      const double dy = yi - s.y[j];
      const double r2 = dx * dx + dy * dy;
      const double den = r2 + (hdi + (shd ? s.hd[j] : 0.0));
      const double q = two_pi * den;
      const double f = den > 0.0 ? s.w[j] / q : 0.0;
      ui = ui - dy * f;
      vi = vi + dx * f;
    }
    u[i] += ui;
    v[i] += vi;
  }
}

}  // namespace vortexlab::kernels::detail
