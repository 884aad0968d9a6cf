#include "vortexlab/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vortexlab/error.hpp"

namespace vortexlab {

void IntegratorConfig::validate() const {
  if (!(max_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_step must be positive");
  if (method == Method::RK4Fixed) {
    if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
    return;
  }
  auto check = [](double tol, const char* name) {
    if (!(tol > 0.0 && tol <= 1e-2)) {
      std::ostringstream os;
      os << name << " = " << tol << " must lie in (0, 1e-2]";
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
  };
  check(abs_tol, "abs_tol");
  check(rel_tol, "rel_tol");
}

void DenseSegment::evaluate(double t, std::span<double> out) const {
  const std::size_t n = dim();
  const double theta = (t - t0) / h;
  const double theta1 = 1.0 - theta;
  const double* r1 = coeffs.data();
  const double* r2 = r1 + n;
  const double* r3 = r2 + n;
  const double* r4 = r3 + n;
  const double* r5 = r4 + n;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
  }
}

void evaluate_dense(std::span<const DenseSegment> segments, double t, std::span<double> out) {
  if (segments.empty()) throw Error(ErrorCode::InvalidArgument, "empty dense trajectory");
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double v, const DenseSegment& s) { return v < s.t0; });
  const DenseSegment& seg = it == segments.begin() ? segments.front() : *std::prev(it);
  const double tc = std::clamp(t, seg.t0, seg.t0 + seg.h);
  seg.evaluate(tc, out);
}

std::vector<double> observation_times(double t0, double t_end, double observe_every) {
  if (!(t_end > t0)) throw Error(ErrorCode::InvalidArgument, "t_end must exceed the start time");
  if (!(observe_every > 0.0)) throw Error(ErrorCode::InvalidArgument, "observe_every must be positive");
  std::vector<double> times;
  for (std::size_t k = 0;; ++k) {
    const double t = t0 + static_cast<double>(k) * observe_every;
    // Skip grid points that would sit within rounding of t_end.
    if (t >= t_end - 1e-12 * std::max(1.0, std::abs(t_end))) break;
    times.push_back(t);
  }
  times.push_back(t_end);
  return times;
}

namespace {

// Dormand-Prince 5(4) tableau with Shampine's dense output.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

class Stepper {
 public:
  Stepper(const RhsFn& f, std::size_t n) : f_(f), n_(n) {
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &ynew_, &err_}) v->resize(n);
  }

  void eval(double t, std::span<const double> y, std::vector<double>& out) {
    f_(t, y, out);
    ++evals;
  }

  std::size_t evals = 0;

 protected:
  const RhsFn& f_;
  std::size_t n_;
  std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, ynew_, err_;
};

class DormandPrince : public Stepper {
 public:
  using Stepper::Stepper;

  void start(double t, std::span<const double> y) { eval(t, y, k1_); }

  // Attempts a step of size h; returns the weighted RMS error norm and leaves
  // the candidate in ynew_ / k7_.
  double attempt(double t, std::span<const double> y, double h, double atol, double rtol) {
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * (a21 * k1_[i]);
    eval(t + c2 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
    eval(t + c3 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n_; ++i)
      tmp_[i] = y[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
    eval(t + c4 * h, tmp_, k4_);
    for (std::size_t i = 0; i < n_; ++i)
      tmp_[i] = y[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
    eval(t + c5 * h, tmp_, k5_);
    for (std::size_t i = 0; i < n_; ++i)
      tmp_[i] = y[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] +
                            a65 * k5_[i]);
    eval(t + h, tmp_, k6_);
    for (std::size_t i = 0; i < n_; ++i)
      ynew_[i] = y[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] +
                             a76 * k6_[i]);
    eval(t + h, ynew_, k7_);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      err_[i] = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                     e7 * k7_[i]);
      const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew_[i]));
      const double q = err_[i] / sc;
      acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(n_));
  }

  void dense(double t, std::span<const double> y, double h, DenseSegment& seg) const {
    seg.t0 = t;
    seg.h = h;
    seg.coeffs.resize(5 * n_);
    double* r1 = seg.coeffs.data();
    double* r2 = r1 + n_;
    double* r3 = r2 + n_;
    double* r4 = r3 + n_;
    double* r5 = r4 + n_;
    for (std::size_t i = 0; i < n_; ++i) {
      const double dy = ynew_[i] - y[i];
      const double bspl = h * k1_[i] - dy;
      r1[i] = y[i];
      r2[i] = dy;
      r3[i] = bspl;
      r4[i] = dy - h * k7_[i] - bspl;
      r5[i] = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] +
                   d7 * k7_[i]);
    }
  }

  void accept() { k1_.swap(k7_); }
  const std::vector<double>& ynew() const { return ynew_; }
  const std::vector<double>& k1() const { return k1_; }
};

class ClassicalRk4 : public Stepper {
 public:
  using Stepper::Stepper;

  void start(double t, std::span<const double> y) { eval(t, y, k1_); }

  void step(double t, std::span<const double> y, double h) {
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + 0.5 * h * k1_[i];
    eval(t + 0.5 * h, tmp_, k2_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + 0.5 * h * k2_[i];
    eval(t + 0.5 * h, tmp_, k3_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = y[i] + h * k3_[i];
    eval(t + h, tmp_, k4_);
    for (std::size_t i = 0; i < n_; ++i)
      ynew_[i] = y[i] + (h / 6.0) * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    eval(t + h, ynew_, k7_);
  }

  // Cubic Hermite interpolant through both endpoint values and slopes.
  void dense(double t, std::span<const double> y, double h, DenseSegment& seg) const {
    seg.t0 = t;
    seg.h = h;
    seg.coeffs.assign(5 * n_, 0.0);
    double* r1 = seg.coeffs.data();
    double* r2 = r1 + n_;
    double* r3 = r2 + n_;
    double* r4 = r3 + n_;
    for (std::size_t i = 0; i < n_; ++i) {
      const double dy = ynew_[i] - y[i];
      r1[i] = y[i];
      r2[i] = dy;
      r3[i] = h * k1_[i] - dy;
      r4[i] = 2.0 * dy - h * k1_[i] - h * k7_[i];
    }
  }

  void accept() { k1_.swap(k7_); }
  const std::vector<double>& ynew() const { return ynew_; }
};

double rms_norm(std::span<const double> v, std::span<const double> y, double atol, double rtol) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double q = v[i] / (atol + rtol * std::abs(y[i]));
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

struct Sampler {
  std::vector<double> grid;
  std::size_t next = 0;
  OdeSolution* sol;

  // Emits every grid time in (t, t + h] using the step's dense segment.
  void emit(const DenseSegment& seg, std::span<const double> ynew, double t_new) {
    const std::size_t n = ynew.size();
    while (next < grid.size() && grid[next] <= t_new) {
      std::vector<double> s(n);
      if (grid[next] == t_new) {
        std::copy(ynew.begin(), ynew.end(), s.begin());
      } else {
        seg.evaluate(grid[next], s);
      }
      sol->times.push_back(grid[next]);
      sol->states.push_back(std::move(s));
      ++next;
    }
  }
};

}  // namespace

OdeSolution solve_ode(const RhsFn& f, std::span<const double> y0, double t0, double t_end,
                      double observe_every, const IntegratorConfig& cfg,
                      const SolveOptions& options) {
  cfg.validate();
  const std::size_t n = y0.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "empty state");

  OdeSolution sol;
  Sampler sampler{observation_times(t0, t_end, observe_every), 0, &sol};
  // Grid point t0 is the initial state.
  sol.times.push_back(t0);
  sol.states.emplace_back(y0.begin(), y0.end());
  sampler.next = 1;

  std::vector<double> y(y0.begin(), y0.end());
  double t = t0;
  DenseSegment seg;
  bool stopped = false;

  auto finish_step = [&](const std::vector<double>& ynew, double t_new) {
    sampler.emit(seg, ynew, t_new);
    if (options.keep_dense) sol.segments.push_back(seg);
    y = ynew;
    t = t_new;
    ++sol.accepted;
    if (options.hook && !options.hook(t, y)) stopped = true;
  };

  if (cfg.method == Method::RK4Fixed) {
    ClassicalRk4 rk(f, n);
    rk.start(t, y);
    while (!stopped && t < t_end) {
      double h = std::min(cfg.step, cfg.max_step);
      bool last = false;
      if (t + h >= t_end || t_end - (t + h) < 1e-12 * h) {
        h = t_end - t;
        last = true;
      }
      rk.step(t, y, h);
      rk.dense(t, y, h, seg);
      finish_step(rk.ynew(), last ? t_end : t + h);
      rk.accept();
    }
    sol.rhs_evals = rk.evals;
  } else {
    DormandPrince dp(f, n);
    dp.start(t, y);
    const double atol = cfg.abs_tol;
    const double rtol = cfg.rel_tol;
    const double span_len = t_end - t0;

    // Initial step guess from the derivative scale.
    double h;
    {
      const double d0 = rms_norm(y, y, atol, rtol);
      const double d1n = rms_norm(dp.k1(), y, atol, rtol);
      h = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
      h = std::min({h, cfg.max_step, span_len});
    }

    double err_prev = 1e-4;
    bool rejected_last = false;
    while (!stopped && t < t_end) {
      bool last = false;
      if (t + h >= t_end || t_end - (t + h) < 1e-12 * h) {
        h = t_end - t;
        last = true;
      }
      const double min_h = 16.0 * std::numeric_limits<double>::epsilon() *
                           std::max(std::abs(t), 1.0);
      if (h < min_h) {
        std::ostringstream os;
        os << "step " << h << " at t = " << t;
        throw Error(ErrorCode::StepUnderflow, os.str());
      }
      const double err = dp.attempt(t, y, h, atol, rtol);
      if (err <= 1.0 && std::isfinite(err)) {
        dp.dense(t, y, h, seg);
        finish_step(dp.ynew(), last ? t_end : t + h);
        dp.accept();
        // PI controller (Gustafsson), exponents 0.7/5 and 0.4/5.
        const double e = std::max(err, 1e-10);
        double fac = 0.9 * std::pow(e, -0.14) * std::pow(err_prev, 0.08);
        fac = std::clamp(fac, 0.2, 10.0);
        if (rejected_last) fac = std::min(fac, 1.0);
        err_prev = std::max(err, 1e-4);
        rejected_last = false;
        h = std::min(h * fac, cfg.max_step);
      } else {
        ++sol.rejected;
        const double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2)) : 0.1;
        h *= fac;
        rejected_last = true;
      }
    }
    sol.rhs_evals = dp.evals;
  }

  sol.reason = stopped ? StopReason::HookStopped : StopReason::Completed;
  sol.t_stop = t;
  sol.y_stop = y;
  if (stopped && (sol.times.empty() || sol.times.back() < t)) {
    sol.times.push_back(t);
    sol.states.push_back(y);
  }
  return sol;
}

}  // namespace vortexlab
