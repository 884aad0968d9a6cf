#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "vortexlab/geom.hpp"
#include "vortexlab/ode.hpp"

namespace vortexlab::pv {

/// Point vortices z_i with intensities a_i.
struct PointVortexSystem {
  std::vector<Vec2> positions;
  std::vector<double> intensities;
  Domain domain = Domain::Plane;

  std::size_t size() const { return positions.size(); }

  /// Throws Error(Validation) on a size mismatch, zero intensity, a point
  /// outside the domain, or coincident vortices.
  void validate() const;
  double min_pairwise_distance() const;
};

/// Velocities of all vortices. Coincident vortices throw SingularConfiguration.
std::vector<Vec2> pv_rhs(const PointVortexSystem& sys, double t = 0.0);

struct Conserved {
  double hamiltonian = 0.0;
  Vec2 impulse;
  double angular_impulse = 0.0;
};

Conserved conserved(const PointVortexSystem& sys);

struct Trajectory {
  std::vector<double> intensities;
  Domain domain = Domain::Plane;
  std::vector<double> times;
  std::vector<std::vector<Vec2>> states;
  std::vector<DenseSegment> dense;
  bool close_approach = false;
  double guard_distance = 0.0;
  double t_stop = 0.0;

  PointVortexSystem snapshot(std::size_t sample) const;
  /// Positions at an arbitrary time inside the integrated interval.
  std::vector<Vec2> positions_at(double t) const;
};

struct IntegrateOptions {
  /// Close-approach guard as a fraction of the initial minimum distance.
  double guard_fraction = 1e-6;
  bool keep_dense = true;
};

/// Integrates the point-vortex ODE. A close approach stops the run early and
/// sets Trajectory::close_approach instead of throwing.
Trajectory integrate(const PointVortexSystem& sys, const IntegratorConfig& cfg, double t_end,
                     double observe_every, const IntegrateOptions& options = {});

enum class Orientation { Counterclockwise, Clockwise };

/// Index pairs (i,j) with third index k, in the order L12, L13, L23.
inline constexpr std::array<std::array<int, 3>, 3> kPairs{{{0, 1, 2}, {0, 2, 1}, {1, 2, 0}}};

struct SelfSimilarTriple {
  std::array<double, 3> intensities{};
  std::array<double, 3> sides{};  // L12, L13, L23 at scale
  Orientation orientation = Orientation::Counterclockwise;
  double growth_rate = 0.0;      // g
  double signed_area = 0.0;      // area of (1,2,3), positive when counterclockwise
  double harmonic_residual = 0.0;
  double moment_residual = 0.0;
};

/// Relative residuals of a1a2+a1a3+a2a3 = 0 and a1a2 L12^2 + a1a3 L13^2 + a2a3 L23^2 = 0.
std::array<double, 2> similarity_residuals(const std::array<double, 3>& a,
                                           const std::array<double, 3>& sides);

/// Signed area of the triangle (p, q, r), positive when counterclockwise.
double signed_area(Vec2 p, Vec2 q, Vec2 r);

/// d/dt L_ij^2 = (2 A_ijk a_k / pi) (L_jk^-2 - L_ki^-2) for the ordered triple (i, j, k).
double side_rate(const std::array<Vec2, 3>& z, const std::array<double, 3>& a, int i, int j, int k);

struct SelfSimilarBuild {
  PointVortexSystem system;
  SelfSimilarTriple triple;
};

/// Places vortex 1 at the origin, vortex 2 at (L12 scale, 0) and vortex 3
/// above (counterclockwise) or below (clockwise) that segment, then derives g.
SelfSimilarBuild build_self_similar(const std::array<double, 3>& intensities,
                                    const std::array<double, 3>& sides, Orientation orientation,
                                    double scale = 1.0, double cond_tol = 1e-12);

/// max over samples and pairs of |L_ij(t)^2 / L_ij(0)^2 - (1 + g t)|.
double growth_law_residual(const Trajectory& traj, const SelfSimilarTriple& triple);

/// Maximum relative mismatch between a centered finite-difference estimate of
/// d/dt L_ij^2 along the dense trajectory and the side-rate identity.
double rate_identity_residual(const Trajectory& traj, double fd_step = 1e-3);

/// CSV with columns t, z1x, z1y, ..., H, Px, Py, L, d12, d13, ...
std::string trajectory_csv(const Trajectory& traj);

}  // namespace vortexlab::pv
