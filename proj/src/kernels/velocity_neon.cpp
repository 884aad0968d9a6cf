#include <numbers>

#include "vortexlab/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>
#endif

namespace vortexlab::kernels::detail {

#if defined(__aarch64__)

bool neon_compiled() { return true; }

void velocity_neon(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v) {
  const std::size_t nt = t.x.size();
  const std::size_t ns = s.x.size();
  const bool thd = !t.hd.empty();
  const bool shd = !s.hd.empty();
  const float64x2_t two_pi = vdupq_n_f64(2.0 * std::numbers::pi);
  const float64x2_t zero = vdupq_n_f64(0.0);

  std::size_t i = 0;
  for (; i + 2 <= nt; i += 2) {
    const float64x2_t xi = vld1q_f64(&t.x[i]);
    const float64x2_t yi = vld1q_f64(&t.y[i]);
    const float64x2_t hdi = thd ? vld1q_f64(&t.hd[i]) : zero;
    float64x2_t ui = zero;
    float64x2_t vi = zero;
    for (std::size_t j = 0; j < ns; ++j) {
      const float64x2_t dx = vsubq_f64(xi, vdupq_n_f64(s.x[j]));
      const float64x2_t dy = vsubq_f64(yi, vdupq_n_f64(s.y[j]));
      const float64x2_t r2 = vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy));
      const float64x2_t den = vaddq_f64(r2, vaddq_f64(hdi, shd ? vdupq_n_f64(s.hd[j]) : zero));
      const float64x2_t q = vmulq_f64(two_pi, den);
      const uint64x2_t mask = vcgtq_f64(den, zero);
      const float64x2_t quot = vdivq_f64(vdupq_n_f64(s.w[j]), q);
      const float64x2_t f =
          vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(quot)));
      ui = vsubq_f64(ui, vmulq_f64(dy, f));
      vi = vaddq_f64(vi, vmulq_f64(dx, f));
    }
    vst1q_f64(&u[i], vaddq_f64(vld1q_f64(&u[i]), ui));
    vst1q_f64(&v[i], vaddq_f64(vld1q_f64(&v[i]), vi));
  }
  if (i < nt) {
    const std::size_t rest = nt - i;
    Targets tail{t.x.subspan(i, rest), t.y.subspan(i, rest),
                 thd ? t.hd.subspan(i, rest) : std::span<const double>{}};
    velocity_scalar(tail, s, u.subspan(i, rest), v.subspan(i, rest));
  }
}

#else

bool neon_compiled() { return false; }

void velocity_neon(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v) {
  velocity_scalar(t, s, u, v);
}

#endif

}  // namespace vortexlab::kernels::detail
