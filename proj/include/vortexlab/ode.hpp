#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace vortexlab {

enum class Method { RK4Fixed, EmbeddedAdaptive };

struct IntegratorConfig {
  Method method = Method::EmbeddedAdaptive;
  double step = 1e-3;      // RK4Fixed step
  double abs_tol = 1e-10;  // EmbeddedAdaptive
  double rel_tol = 1e-10;
  double max_step = 1.0;

  /// Throws Error(InvalidArgument) unless tolerances lie in (0, 1e-2] and steps are positive.
  void validate() const;
};

using RhsFn = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

/// Called after every accepted step with the new (t, y); return false to stop.
using StepHook = std::function<bool(double t, std::span<const double> y)>;

/// One accepted step's continuous extension,
///   y(t0 + theta h) = r1 + theta (r2 + (1-theta) (r3 + theta (r4 + (1-theta) r5))).
/// Dormand-Prince fills all five blocks; the RK4 Hermite interpolant leaves r5 = 0.
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  std::vector<double> coeffs;  // 5 * dim

  std::size_t dim() const { return coeffs.size() / 5; }
  void evaluate(double t, std::span<double> out) const;
};

enum class StopReason { Completed, HookStopped };

struct OdeSolution {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<DenseSegment> segments;  // empty unless keep_dense
  StopReason reason = StopReason::Completed;
  double t_stop = 0.0;
  std::vector<double> y_stop;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

struct SolveOptions {
  bool keep_dense = false;
  StepHook hook;
};

/// Observation grid {0, dt, 2dt, ...} on [t0, t_end) followed by t_end itself.
std::vector<double> observation_times(double t0, double t_end, double observe_every);

/// Integrates y' = f(t, y) from t0 to t_end, sampling at observation_times via
/// dense output. A hook stop records the state at the stop time as the last sample.
/// Throws Error(StepUnderflow) if the adaptive step collapses.
OdeSolution solve_ode(const RhsFn& f, std::span<const double> y0, double t0, double t_end,
                      double observe_every, const IntegratorConfig& cfg,
                      const SolveOptions& options = {});

/// Evaluates a dense trajectory at t (clamped to the covered interval).
void evaluate_dense(std::span<const DenseSegment> segments, double t, std::span<double> out);

}  // namespace vortexlab
