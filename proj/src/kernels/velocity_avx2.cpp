#include <numbers>

#include "vortexlab/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>
#define VORTEXLAB_HAVE_AVX2 1
#endif

namespace vortexlab::kernels::detail {

#ifdef VORTEXLAB_HAVE_AVX2

bool avx2_compiled() { return true; }

namespace {

// One lane group of four targets. Only the avx2 target is enabled (not fma),
// so the mul/add pairs below cannot be fused and each lane reproduces the
// scalar kernel exactly.
struct Lanes {
  __m256d x, y, hd, u, v;
};

__attribute__((target("avx2"))) inline void interact(Lanes& L, __m256d sx, __m256d sy, __m256d sw,
                                                     __m256d shd, __m256d two_pi, __m256d zero) {
  const __m256d dx = _mm256_sub_pd(L.x, sx);
  const __m256d dy = _mm256_sub_pd(L.y, sy);
  const __m256d r2 = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
  const __m256d den = _mm256_add_pd(r2, _mm256_add_pd(L.hd, shd));
  const __m256d q = _mm256_mul_pd(two_pi, den);
  const __m256d mask = _mm256_cmp_pd(den, zero, _CMP_GT_OQ);
  const __m256d f = _mm256_and_pd(mask, _mm256_div_pd(sw, q));
  L.u = _mm256_sub_pd(L.u, _mm256_mul_pd(dy, f));
  L.v = _mm256_add_pd(L.v, _mm256_mul_pd(dx, f));
}

__attribute__((target("avx2"))) inline Lanes load_group(const Targets& t, bool thd, std::size_t i) {
  Lanes L;
  L.x = _mm256_loadu_pd(&t.x[i]);
  L.y = _mm256_loadu_pd(&t.y[i]);
  L.hd = thd ? _mm256_loadu_pd(&t.hd[i]) : _mm256_setzero_pd();
  L.u = _mm256_setzero_pd();
  L.v = _mm256_setzero_pd();
  return L;
}

__attribute__((target("avx2"))) inline void store_group(const Lanes& L, std::span<double> u,
                                                        std::span<double> v, std::size_t i) {
  _mm256_storeu_pd(&u[i], _mm256_add_pd(_mm256_loadu_pd(&u[i]), L.u));
  _mm256_storeu_pd(&v[i], _mm256_add_pd(_mm256_loadu_pd(&v[i]), L.v));
}

}  // namespace

__attribute__((target("avx2"))) void velocity_avx2(const Targets& t, const Sources& s,
                                                    std::span<double> u, std::span<double> v) {
  const std::size_t nt = t.x.size();
  const std::size_t ns = s.x.size();
  const bool thd = !t.hd.empty();
  const bool shd = !s.hd.empty();
  const __m256d two_pi = _mm256_set1_pd(2.0 * std::numbers::pi);
  const __m256d zero = _mm256_setzero_pd();

  std::size_t i = 0;
  // Four independent groups per pass hide the divide latency.
  for (; i + 16 <= nt; i += 16) {
    Lanes g[4];
    for (int k = 0; k < 4; ++k) g[k] = load_group(t, thd, i + 4 * k);
    for (std::size_t j = 0; j < ns; ++j) {
      const __m256d sx = _mm256_broadcast_sd(&s.x[j]);
      const __m256d sy = _mm256_broadcast_sd(&s.y[j]);
      const __m256d sw = _mm256_broadcast_sd(&s.w[j]);
      const __m256d sh = shd ? _mm256_broadcast_sd(&s.hd[j]) : zero;
      for (int k = 0; k < 4; ++k) interact(g[k], sx, sy, sw, sh, two_pi, zero);
    }
    for (int k = 0; k < 4; ++k) store_group(g[k], u, v, i + 4 * k);
  }
  for (; i + 4 <= nt; i += 4) {
    Lanes a = load_group(t, thd, i);
    for (std::size_t j = 0; j < ns; ++j) {
      const __m256d sh = shd ? _mm256_broadcast_sd(&s.hd[j]) : zero;
      interact(a, _mm256_broadcast_sd(&s.x[j]), _mm256_broadcast_sd(&s.y[j]),
               _mm256_broadcast_sd(&s.w[j]), sh, two_pi, zero);
    }
    store_group(a, u, v, i);
  }
  if (i < nt) {
    const std::size_t rest = nt - i;
    Targets tail{t.x.subspan(i, rest), t.y.subspan(i, rest),
                 thd ? t.hd.subspan(i, rest) : std::span<const double>{}};
    velocity_scalar(tail, s, u.subspan(i, rest), v.subspan(i, rest));
  }
}

#else

bool avx2_compiled() { return false; }

void velocity_avx2(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v) {
  velocity_scalar(t, s, u, v);
}

#endif

}  // namespace vortexlab::kernels::detail
