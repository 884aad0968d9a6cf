#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace vortexlab::kernels {

// Regularized Biot-Savart sums over structure-of-arrays particle data.
//
// For every target i:
//   den   = |x_i - x_j|^2 + (hd_i + hd_j)
//   u_i  -= (y_i - y_j) * w_j / (2 pi den)
//   v_i  += (x_i - x_j) * w_j / (2 pi den)
// summed over sources j = 0, 1, ... in index order; pairs with den == 0
// contribute nothing. hd is half the squared regularization length, so the
// pair length delta_ij^2 = (delta_i^2 + delta_j^2) / 2 is symmetric and the
// mutual interaction stays antisymmetric. An empty hd span means zeros.
//
// Every backend evaluates the same operation sequence per target and the
// build disables FMA contraction, so results are bit-identical across
// backends and independent of how targets are split between threads.

enum class Backend { Scalar, Avx2, Neon };

std::string_view to_string(Backend b);

struct Targets {
  std::span<const double> x, y, hd;
};

struct Sources {
  std::span<const double> x, y, w, hd;
};

/// Adds the source contributions into u, v (accumulates; does not clear).
void accumulate_velocity(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v,
                         Backend backend);

/// Same, on the runtime-selected backend, splitting targets across threads.
void accumulate_velocity(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v,
                         unsigned threads = 1);

bool backend_available(Backend b);

/// Best available backend, unless VORTEXLAB_SIMD=scalar|avx2|neon overrides it.
Backend active_backend();

/// Forces a backend for the rest of the process (tests, benchmarks).
void set_active_backend(Backend b);

namespace detail {
void velocity_scalar(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v);
void velocity_avx2(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v);
void velocity_neon(const Targets& t, const Sources& s, std::span<double> u, std::span<double> v);

bool avx2_compiled();
bool neon_compiled();
}  // namespace detail

}  // namespace vortexlab::kernels
