#pragma once

#include <array>
#include <string>
#include <vector>

#include "vortexlab/fields.hpp"
#include "vortexlab/geom.hpp"
#include "vortexlab/ode.hpp"

namespace vortexlab::toy {

/// Point x driven by F plus the self field of a 2 pi intensity blob centered
/// at B(t), where B' = F(B, t) and B(0) = z_star.
struct ToyRun {
  fields::ExternalField field;
  Vec2 z_star;
  Vec2 x0;
  double beta = 0.5;
  double t_end = 0.0;  // 0 selects the horizon eps^-beta

  double epsilon() const { return norm(x0 - z_star); }
  double horizon() const;
  /// Throws Validation for eps outside (0, 0.5], beta outside (0,1), or a
  /// field whose Jacobian trace is not zero on a probe set around z_star.
  void validate() const;
};

/// x0 = z_star + eps (1, 0).
ToyRun make_run(const fields::ExternalField& field, Vec2 z_star, double eps, double beta);

struct ToyDerivative {
  Vec2 dx;
  Vec2 dB;
};

/// dB = F(B,t), dx = F(x,t) - perp(x-B)/|x-B|^2. Throws SingularKernel at x = B.
ToyDerivative toy_rhs(const ToyRun& run, Vec2 x, Vec2 B, double t);

/// rho = |xi| [1 - (eps^2/2) perp(xi).A xi + (eps^3/2)((r/3) xi1^3 - h xi1^2 xi2 + p xi1 xi2^2 - (q/3) xi2^3)].
double rho(Vec2 xi, const fields::FieldJet& jet, double eps);

struct ToySample {
  double t = 0.0;
  Vec2 x, B, xi;
  double rho = 0.0;
  double radius_dev = 0.0;
};

struct ToySummary {
  double max_radius_dev = 0.0;  // sup | |x-B| - eps |
  double max_rho_dev = 0.0;     // sup |rho(t) - rho(0)|
  double max_xi_dev = 0.0;      // sup | |xi| - 1 |
  bool rho_sandwich = true;     // 0.5 |xi| <= rho <= 1.5 |xi| at every step
  bool completed = false;
  double t_stop = 0.0;
  double last_xi_norm = 1.0;
  std::size_t steps = 0;
};

struct ToyResult {
  std::vector<ToySample> samples;
  ToySummary summary;
};

struct ToyOptions {
  /// Step ceiling c eps^2 on top of adaptive control.
  double step_ceiling = 0.2;
};

/// Integrates to the horizon or until |xi| leaves (1/2, 2). Sup deviations are
/// taken over accepted step endpoints; samples are uniform in t.
ToyResult run_toy(const ToyRun& run, const IntegratorConfig& cfg, std::size_t samples,
                  const ToyOptions& options = {});

struct SweepEntry {
  double eps = 0.0;
  double max_radius_dev = 0.0;
  double max_rho_dev = 0.0;
  bool completed = false;
  double rho_ratio = 0.0;  // max_rho_dev / eps^(2-beta)
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  double beta = 0.5;
  double fitted_exponent = 0.0;
  double fitted_c0 = 0.0;
  bool all_completed = false;
  bool degenerate = false;  // deviations below the noise floor
  double rho_c = 0.0;       // rho_ratio at the largest eps
  bool rho_stable = false;  // every rho_ratio <= 1.5 rho_c
  bool pass = false;        // completed, slope >= (3-beta) - 0.4, rho stable
};

inline constexpr double kNoiseFloor = 1e-9;

/// Throws InvalidArgument unless eps_list has >= 3 values, all <= 0.2, spanning an octave.
SweepResult theorem6_sweep(const fields::ExternalField& field, double beta,
                           const std::vector<double>& eps_list, const IntegratorConfig& cfg,
                           Vec2 z_star = {0.5, 0.25});

/// Columns t, x1, x2, B1, B2, xi1, xi2, rho, radius_dev.
std::string toy_csv(const std::vector<ToySample>& samples);
/// Columns eps, max_radius_dev, max_rho_dev, completed.
std::string sweep_csv(const SweepResult& sweep);
std::string sweep_summary(const SweepResult& sweep);

}  // namespace vortexlab::toy
