#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "vortexlab/geom.hpp"
#include "vortexlab/ode.hpp"
#include "vortexlab/pv.hpp"

namespace vortexlab::blob {
struct ParticleEnsemble;
}

namespace vortexlab::fields {

using Mat2 = std::array<std::array<double, 2>, 2>;

/// Value, Jacobian J[c][a] = d_a F_c and Hessian H[c][a][b] = d_a d_b F_c.
struct FieldJet {
  Vec2 value;
  Mat2 jacobian{};
  std::array<Mat2, 2> hessian{};

  double divergence() const { return jacobian[0][0] + jacobian[1][1]; }

  /// Entries of H1 = [[h,-p],[-p,q]], H2 = [[r,-h],[-h,p]].
  struct Entries {
    double h, p, q, r;
  };
  /// Reads h and p from H1 (q from H1, r from H2).
  Entries entries() const;
  /// Largest mismatch between the two readings of h and p (H1 vs H2).
  double entry_mismatch() const;

  FieldJet& operator+=(const FieldJet& o);
  FieldJet& operator*=(double s);
};

/// Jet of the planar kernel K(d) = -perp(d)/(2 pi |d|^2) with respect to d.
FieldJet kernel_jet(Vec2 d);

struct Zero {};
struct LinearRotation {
  double rate = 1.0;  // F = rate (-x2, x1)
};
struct LinearShear {
  double rate = 1.0;  // F = (rate x2, 0)
};
struct Cellular {
  double amplitude = 1.0;  // F = A (sin kx1 cos kx2, -cos kx1 sin kx2)
  double wavenumber = 1.0;
};

/// Field of the other two vortices of a self-similar triple.
struct SelfSimilarBackground {
  std::shared_ptr<const pv::Trajectory> trajectory;
  std::size_t excluded = 0;
  double growth_rate = 0.0;
  double working_radius = 0.0;  // r_min / 2
  double lipschitz_hat = 0.0;   // calibrated at t = 0, safety margin included
  double sup_hat = 0.0;
};

/// Snapshot of mirror sources (positions and weights inside the unit disk).
struct MirrorSources {
  std::vector<Vec2> positions;
  std::vector<double> weights;
};

struct DiskMirror {
  std::shared_ptr<const MirrorSources> sources;
  double working_radius = 0.0;
  double lipschitz_hat = 0.0;
};

using Family = std::variant<Zero, LinearRotation, LinearShear, Cellular, SelfSimilarBackground,
                            DiskMirror>;

/// Divergence-free external field F(x, t). Immutable after construction.
class ExternalField {
 public:
  ExternalField() = default;
  explicit ExternalField(Family family) : family_(std::move(family)) {}

  static ExternalField zero() { return ExternalField(Zero{}); }
  static ExternalField rotation(double rate) { return ExternalField(LinearRotation{rate}); }
  static ExternalField shear(double rate) { return ExternalField(LinearShear{rate}); }
  static ExternalField cellular(double amplitude, double k) {
    return ExternalField(Cellular{amplitude, k});
  }

  const Family& family() const { return family_; }
  std::string name() const;

  FieldJet jet(Vec2 x, double t) const;
  Vec2 value(Vec2 x, double t) const;

  /// Certified bound D_t on the spatial Lipschitz constant over the working region.
  double lipschitz_bound(double t) const;
  /// Bound on |F| over the working region at time t (infinity when unbounded).
  double sup_bound(double t) const;

  bool has_bounded_third_derivatives() const;

 private:
  Family family_;
};

/// Image-charge field of an ensemble in the unit disk (no regularization).
Vec2 mirror_field(const blob::ParticleEnsemble& ens, Vec2 x);
Vec2 mirror_field(const MirrorSources& src, Vec2 x);

/// DiskMirror field with its Lipschitz bound calibrated over Sigma(0 | working_radius).
ExternalField disk_mirror(std::shared_ptr<const MirrorSources> sources, double working_radius,
                          std::uint64_t seed = 7);

/// Background for vortex `excluded` of a dense triple trajectory.
ExternalField background_from_triple(std::shared_ptr<const pv::Trajectory> trajectory,
                                     std::size_t excluded, double growth_rate,
                                     std::uint64_t seed = 11);

/// Largest difference quotient |F(x)-F(y)|/|x-y| over random pairs in `region`.
double sampled_lipschitz(const ExternalField& field, const Disk& region, double t,
                         std::size_t pairs, std::uint64_t seed);

/// Largest |F(x)| over random probes in `region`.
double sampled_sup(const ExternalField& field, const Disk& region, double t, std::size_t probes,
                   std::uint64_t seed);

/// Sampled Lipschitz constant of the single-source image field x -> F1(x, y)
/// with sources and probes drawn from Sigma(0 | delta).
double sampled_mirror_lipschitz(double delta, std::size_t sources, std::size_t pairs,
                                std::uint64_t seed);

/// Least-squares slope and intercept of log(y) against log(x).
struct PowerFit {
  double slope = 0.0;
  double intercept = 0.0;  // log prefactor
};
PowerFit fit_power_law(std::span<const double> x, std::span<const double> y);

/// Companion motion B' = F(B, t), B(0) = z, with dense output.
class Companion {
 public:
  Companion(const ExternalField& field, Vec2 start, double t_end, const IntegratorConfig& cfg);
  Vec2 at(double t) const;

 private:
  std::vector<DenseSegment> dense_;
};

/// Deterministic uniform sampler on [0,1) built on mt19937_64.
class Uniform01 {
 public:
  explicit Uniform01(std::uint64_t seed);
  double operator()();
  Vec2 in_disk(const Disk& d);

 private:
  std::mt19937_64 rng_;
};

}  // namespace vortexlab::fields
