#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "vortexlab/error.hpp"
#include "vortexlab/kernels.hpp"

namespace vortexlab::kernels {

std::string_view to_string(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return detail::avx2_compiled() && __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::Neon: return detail::neon_compiled();
  }
  return false;
}

namespace {

Backend detect() {
  if (const char* env = std::getenv("VORTEXLAB_SIMD")) {
    const std::string s(env);
    for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
      if (s == to_string(b) && backend_available(b)) return b;
    }
  }
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  if (backend_available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

std::atomic<Backend>& active() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

Backend active_backend() { return active().load(std::memory_order_relaxed); }

void set_active_backend(Backend b) {
  if (!backend_available(b)) {
    throw Error(ErrorCode::InvalidArgument,
                "backend " + std::string(to_string(b)) + " is not available on this machine");
  }
  active().store(b, std::memory_order_relaxed);
}

void accumulate_velocity(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v,
                         Backend backend) {
  switch (backend) {
    case Backend::Scalar: detail::velocity_scalar(t, s, u, v); return;
    case Backend::Avx2: detail::velocity_avx2(t, s, u, v); return;
    case Backend::Neon: detail::velocity_neon(t, s, u, v); return;
  }
}

void accumulate_velocity(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v,
                         unsigned threads) {
  const Backend backend = active_backend();
  const std::size_t nt = t.x.size();
  // Chunks are multiples of 8 targets; results do not depend on the split.
  const std::size_t min_chunk = 64;
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(threads, nt / min_chunk));
  if (workers <= 1) {
    accumulate_velocity(t, s, u, v, backend);
    return;
  }
  const std::size_t chunk = ((nt + workers - 1) / workers + 7) / 8 * 8;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t begin = 0; begin < nt; begin += chunk) {
    const std::size_t len = std::min(chunk, nt - begin);
    pool.emplace_back([&, begin, len] {
      Targets sub{t.x.subspan(begin, len), t.y.subspan(begin, len),
                  t.hd.empty() ? std::span<const double>{} : t.hd.subspan(begin, len)};
      accumulate_velocity(sub, s, u.subspan(begin, len), v.subspan(begin, len), backend);
    });
  }
}

}  // namespace vortexlab::kernels
