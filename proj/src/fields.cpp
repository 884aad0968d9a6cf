#include "vortexlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vortexlab/blob.hpp"
#include "vortexlab/error.hpp"

namespace vortexlab::fields {

FieldJet::Entries FieldJet::entries() const {
  return {hessian[0][0][0], -hessian[0][0][1], hessian[0][1][1], hessian[1][0][0]};
}

double FieldJet::entry_mismatch() const {
  // h read from H1[0][0] and -H2[0][1]; p read from -H1[0][1] and H2[1][1].
  const double dh = std::abs(hessian[0][0][0] + hessian[1][0][1]);
  const double dp = std::abs(-hessian[0][0][1] - hessian[1][1][1]);
  return std::max(dh, dp);
}

FieldJet& FieldJet::operator+=(const FieldJet& o) {
  value += o.value;
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a) {
      jacobian[c][a] += o.jacobian[c][a];
      for (int b = 0; b < 2; ++b) hessian[c][a][b] += o.hessian[c][a][b];
    }
  return *this;
}

FieldJet& FieldJet::operator*=(double s) {
  value *= s;
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a) {
      jacobian[c][a] *= s;
      for (int b = 0; b < 2; ++b) hessian[c][a][b] *= s;
    }
  return *this;
}

FieldJet kernel_jet(Vec2 d) {
  const double x = d.c1, y = d.c2;
  const double r2 = norm2(d);
  if (r2 == 0.0) throw Error(ErrorCode::SingularKernel, "kernel jet at zero separation");
  const double c = 1.0 / kTwoPi;
  const double r4 = r2 * r2, r6 = r4 * r2;
  FieldJet j;
  j.value = {-c * y / r2, c * x / r2};
  const double p = 2.0 * x * y / r4;        // d1 K1 / c
  const double q = (y * y - x * x) / r4;    // d2 K1 / c = d1 K2 / c
  j.jacobian = {{{c * p, c * q}, {c * q, -c * p}}};
  const double p1 = 2.0 * y * (y * y - 3.0 * x * x) / r6;  // d1 p
  const double p2 = 2.0 * x * (x * x - 3.0 * y * y) / r6;  // d2 p
  const double q1 = p2;                                    // d1 q
  const double q2 = -p1;                                   // d2 q
  j.hessian[0] = {{{c * p1, c * p2}, {c * p2, c * q2}}};
  j.hessian[1] = {{{c * q1, c * q2}, {c * q2, -c * p2}}};
  return j;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

FieldJet triple_jet(const SelfSimilarBackground& f, Vec2 x, double t) {
  const auto& traj = *f.trajectory;
  if (t > traj.t_stop * (1.0 + 1e-12) + 1e-12 || t < 0.0) {
    std::ostringstream os;
    os << "t = " << t << " outside the background trajectory [0, " << traj.t_stop << "]";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  const auto z = traj.positions_at(t);
  FieldJet total;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (j == f.excluded) continue;
    const Vec2 d = x - z[j];
    if (norm(d) < f.working_radius) {
      std::ostringstream os;
      os << "probe (" << x.c1 << ", " << x.c2 << ") within r_min/2 of vortex " << j + 1;
      throw Error(ErrorCode::WorkingRegion, os.str());
    }
    FieldJet kj = kernel_jet(d);
    kj *= traj.intensities[j];
    total += kj;
  }
  return total;
}

FieldJet mirror_jet(const MirrorSources& src, Vec2 x) {
  if (!(norm2(x) < 1.0)) throw Error(ErrorCode::OutOfDomain, "mirror field probe outside the disk");
  FieldJet total;
  for (std::size_t j = 0; j < src.positions.size(); ++j) {
    if (norm2(src.positions[j]) == 0.0) continue;
    FieldJet kj = kernel_jet(x - mirror_point(src.positions[j]));
    kj *= -src.weights[j];
    total += kj;
  }
  return total;
}

}  // namespace

std::string ExternalField::name() const {
  return std::visit(overloaded{
                        [](const Zero&) { return std::string("zero"); },
                        [](const LinearRotation&) { return std::string("rotation"); },
                        [](const LinearShear&) { return std::string("shear"); },
                        [](const Cellular&) { return std::string("cellular"); },
                        [](const SelfSimilarBackground&) { return std::string("selfsim-background"); },
                        [](const DiskMirror&) { return std::string("disk-mirror"); },
                    },
                    family_);
}

FieldJet ExternalField::jet(Vec2 x, double t) const {
  return std::visit(
      overloaded{
          [](const Zero&) { return FieldJet{}; },
          [x](const LinearRotation& f) {
            FieldJet j;
            j.value = {-f.rate * x.c2, f.rate * x.c1};
            j.jacobian = {{{0.0, -f.rate}, {f.rate, 0.0}}};
            return j;
          },
          [x](const LinearShear& f) {
            FieldJet j;
            j.value = {f.rate * x.c2, 0.0};
            j.jacobian = {{{0.0, f.rate}, {0.0, 0.0}}};
            return j;
          },
          [x](const Cellular& f) {
            const double a = f.amplitude, k = f.wavenumber;
            const double s1 = std::sin(k * x.c1), c1 = std::cos(k * x.c1);
            const double s2 = std::sin(k * x.c2), c2 = std::cos(k * x.c2);
            const double ak = a * k, ak2 = a * k * k;
            FieldJet j;
            j.value = {a * s1 * c2, -a * c1 * s2};
            j.jacobian = {{{ak * c1 * c2, -ak * s1 * s2}, {ak * s1 * s2, -ak * c1 * c2}}};
            j.hessian[0] = {{{-ak2 * s1 * c2, -ak2 * c1 * s2}, {-ak2 * c1 * s2, -ak2 * s1 * c2}}};
            j.hessian[1] = {{{ak2 * c1 * s2, ak2 * s1 * c2}, {ak2 * s1 * c2, ak2 * c1 * s2}}};
            return j;
          },
          [x, t](const SelfSimilarBackground& f) { return triple_jet(f, x, t); },
          [x](const DiskMirror& f) { return mirror_jet(*f.sources, x); },
      },
      family_);
}

Vec2 ExternalField::value(Vec2 x, double t) const {
  return std::visit(overloaded{
                        [](const Zero&) { return Vec2{}; },
                        [x](const LinearRotation& f) { return Vec2{-f.rate * x.c2, f.rate * x.c1}; },
                        [x](const LinearShear& f) { return Vec2{f.rate * x.c2, 0.0}; },
                        [x](const Cellular& f) {
                          const double k = f.wavenumber;
                          return Vec2{f.amplitude * std::sin(k * x.c1) * std::cos(k * x.c2),
                                      -f.amplitude * std::cos(k * x.c1) * std::sin(k * x.c2)};
                        },
                        [x, t](const SelfSimilarBackground& f) { return triple_jet(f, x, t).value; },
                        [x](const DiskMirror& f) { return mirror_field(*f.sources, x); },
                    },
                    family_);
}

double ExternalField::lipschitz_bound(double t) const {
  return std::visit(overloaded{
                        [](const Zero&) { return 0.0; },
                        [](const LinearRotation& f) { return std::abs(f.rate); },
                        [](const LinearShear& f) { return std::abs(f.rate); },
                        [](const Cellular& f) {
                          return std::abs(f.amplitude) * std::abs(f.wavenumber) * std::sqrt(2.0);
                        },
                        [t](const SelfSimilarBackground& f) {
                          return f.lipschitz_hat / (1.0 + f.growth_rate * t);
                        },
                        [](const DiskMirror& f) { return f.lipschitz_hat; },
                    },
                    family_);
}

double ExternalField::sup_bound(double t) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(overloaded{
                        [](const Zero&) { return 0.0; },
                        [](const LinearRotation&) { return inf; },
                        [](const LinearShear&) { return inf; },
                        [](const Cellular& f) { return std::abs(f.amplitude); },
                        [t](const SelfSimilarBackground& f) {
                          return f.sup_hat / std::sqrt(1.0 + f.growth_rate * t);
                        },
                        [](const DiskMirror&) { return inf; },
                    },
                    family_);
}

bool ExternalField::has_bounded_third_derivatives() const {
  return !std::holds_alternative<SelfSimilarBackground>(family_) &&
         !std::holds_alternative<DiskMirror>(family_);
}

Vec2 mirror_field(const MirrorSources& src, Vec2 x) {
  if (!(norm2(x) < 1.0)) throw Error(ErrorCode::OutOfDomain, "mirror field probe outside the disk");
  Vec2 v{};
  for (std::size_t j = 0; j < src.positions.size(); ++j) {
    v += src.weights[j] * disk_image_velocity(x, src.positions[j]);
  }
  return v;
}

Vec2 mirror_field(const blob::ParticleEnsemble& ens, Vec2 x) {
  for (const Vec2& p : ens.positions) {
    if (!(norm2(p) < 1.0)) throw Error(ErrorCode::OutOfDomain, "mirror source outside the disk");
  }
  MirrorSources src{ens.positions, ens.weights};
  return mirror_field(src, x);
}

Uniform01::Uniform01(std::uint64_t seed) : rng_(seed) {}

double Uniform01::operator()() {
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

Vec2 Uniform01::in_disk(const Disk& d) {
  const double r = d.radius * std::sqrt((*this)());
  const double th = kTwoPi * (*this)();
  return d.center + Vec2{r * std::cos(th), r * std::sin(th)};
}

namespace {

// Pairs alternate between two independent points and a short offset
// |d| in [1e-3 R, R], which resolves the local Jacobian norm.
template <class F>
double max_quotient(F&& value, const Disk& region, std::size_t pairs, std::uint64_t seed) {
  Uniform01 u(seed);
  double best = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    const Vec2 x = u.in_disk(region);
    Vec2 y;
    if (k % 2 == 0) {
      y = u.in_disk(region);
    } else {
      const double len = region.radius * std::pow(10.0, -3.0 * u());
      const double th = kTwoPi * u();
      const Vec2 d{len * std::cos(th), len * std::sin(th)};
      y = x + d;
      if (!region.contains(y)) y = x - d;
      if (!region.contains(y)) continue;
    }
    const double dist = norm(x - y);
    if (dist == 0.0) continue;
    best = std::max(best, norm(value(x) - value(y)) / dist);
  }
  return best;
}

}  // namespace

double sampled_lipschitz(const ExternalField& field, const Disk& region, double t,
                         std::size_t pairs, std::uint64_t seed) {
  return max_quotient([&](Vec2 x) { return field.value(x, t); }, region, pairs, seed);
}

double sampled_sup(const ExternalField& field, const Disk& region, double t, std::size_t probes,
                   std::uint64_t seed) {
  Uniform01 u(seed);
  double best = 0.0;
  for (std::size_t k = 0; k < probes; ++k) best = std::max(best, norm(field.value(u.in_disk(region), t)));
  return best;
}

double sampled_mirror_lipschitz(double delta, std::size_t sources, std::size_t pairs,
                                std::uint64_t seed) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must lie in (0,1)");
  const Disk region({0.0, 0.0}, delta);
  Uniform01 u(seed);
  double best = 0.0;
  for (std::size_t s = 0; s < sources; ++s) {
    // Sources are biased toward the rim, where the image is closest.
    const double r = delta * std::pow(u(), 0.25);
    const double th = kTwoPi * u();
    const Vec2 y{r * std::cos(th), r * std::sin(th)};
    const auto f1 = [y](Vec2 x) { return disk_image_velocity(x, y); };
    best = std::max(best, max_quotient(f1, region, pairs, seed + 1 + s));
  }
  return best;
}

PowerFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "power fit needs at least two matched points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "power fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  PowerFit fit;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

ExternalField disk_mirror(std::shared_ptr<const MirrorSources> sources, double working_radius,
                          std::uint64_t seed) {
  if (!(working_radius > 0.0 && working_radius < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "working radius must lie in (0,1)");
  }
  DiskMirror m;
  m.sources = std::move(sources);
  m.working_radius = working_radius;
  const Disk region({0.0, 0.0}, working_radius);
  const double raw = max_quotient([&](Vec2 x) { return mirror_field(*m.sources, x); }, region,
                                  4000, seed);
  m.lipschitz_hat = 1.05 * raw;
  return ExternalField(m);
}

ExternalField background_from_triple(std::shared_ptr<const pv::Trajectory> trajectory,
                                     std::size_t excluded, double growth_rate, std::uint64_t seed) {
  if (!trajectory || trajectory->intensities.size() != 3 || trajectory->dense.empty()) {
    throw Error(ErrorCode::InvalidArgument, "background needs a dense three-vortex trajectory");
  }
  if (excluded >= 3) throw Error(ErrorCode::InvalidArgument, "excluded index out of range");
  if (!(growth_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "background needs an expanding triple");

  SelfSimilarBackground f;
  f.trajectory = trajectory;
  f.excluded = excluded;
  f.growth_rate = growth_rate;
  // The sides only grow, so the initial minimum distance is r_min.
  f.working_radius = 0.5 * trajectory->snapshot(0).min_pairwise_distance();

  ExternalField provisional(f);
  const Disk region(trajectory->states.front()[excluded], f.working_radius);
  f.lipschitz_hat = 1.05 * sampled_lipschitz(provisional, region, 0.0, 4000, seed);
  f.sup_hat = 1.05 * sampled_sup(provisional, region, 0.0, 2000, seed + 1);
  return ExternalField(f);
}

Companion::Companion(const ExternalField& field, Vec2 start, double t_end,
                     const IntegratorConfig& cfg) {
  RhsFn f = [&field](double t, std::span<const double> y, std::span<double> dy) {
    const Vec2 v = field.value({y[0], y[1]}, t);
    dy[0] = v.c1;
    dy[1] = v.c2;
  };
  const double y0[2] = {start.c1, start.c2};
  SolveOptions so;
  so.keep_dense = true;
  dense_ = solve_ode(f, y0, 0.0, t_end, t_end, cfg, so).segments;
}

Vec2 Companion::at(double t) const {
  double y[2];
  evaluate_dense(dense_, t, y);
  return {y[0], y[1]};
}

}  // namespace vortexlab::fields
