#include "vortexlab/toy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vortexlab/csv.hpp"
#include "vortexlab/error.hpp"

namespace vortexlab::toy {

double ToyRun::horizon() const {
  return t_end > 0.0 ? t_end : std::pow(epsilon(), -beta);
}

void ToyRun::validate() const {
  const double eps = epsilon();
  if (!(eps > 0.0 && eps <= 0.5)) throw Error(ErrorCode::Validation, "toy eps must lie in (0, 0.5]");
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::Validation, "beta must lie in (0,1)");
  if (t_end < 0.0 || !std::isfinite(t_end)) throw Error(ErrorCode::Validation, "t_end must be finite and >= 0");
  fields::Uniform01 u(1234);
  const Disk probes(z_star, 1.0);
  for (int k = 0; k < 100; ++k) {
    const auto jet = field.jet(u.in_disk(probes), 0.0);
    const double scale = 1.0 + std::abs(jet.jacobian[0][0]) + std::abs(jet.jacobian[1][1]);
    if (std::abs(jet.divergence()) > 1e-12 * scale) {
      throw Error(ErrorCode::Validation, "toy field is not divergence-free");
    }
  }
}

ToyRun make_run(const fields::ExternalField& field, Vec2 z_star, double eps, double beta) {
  ToyRun run;
  run.field = field;
  run.z_star = z_star;
  run.x0 = z_star + Vec2{eps, 0.0};
  run.beta = beta;
  return run;
}

ToyDerivative toy_rhs(const ToyRun& run, Vec2 x, Vec2 B, double t) {
  const Vec2 d = x - B;
  const double r2 = norm2(d);
  if (r2 == 0.0) throw Error(ErrorCode::SingularKernel, "toy point coincides with B");
  return {run.field.value(x, t) - perp(d) / r2, run.field.value(B, t)};
}

double rho(Vec2 xi, const fields::FieldJet& jet, double eps) {
  const double n = norm(xi);
  if (n == 0.0) throw Error(ErrorCode::SingularKernel, "rho at xi = 0");
  const auto& A = jet.jacobian;
  const Vec2 axi{A[0][0] * xi.c1 + A[0][1] * xi.c2, A[1][0] * xi.c1 + A[1][1] * xi.c2};
  const auto e = jet.entries();
  const double x1 = xi.c1, x2 = xi.c2;
  const double cubic =
      e.r / 3.0 * x1 * x1 * x1 - e.h * x1 * x1 * x2 + e.p * x1 * x2 * x2 - e.q / 3.0 * x2 * x2 * x2;
  return n * (1.0 - 0.5 * eps * eps * dot(perp(xi), axi) + 0.5 * eps * eps * eps * cubic);
}

ToyResult run_toy(const ToyRun& run, const IntegratorConfig& cfg, std::size_t samples,
                  const ToyOptions& options) {
  run.validate();
  cfg.validate();
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be positive");
  if (!(options.step_ceiling > 0.0)) throw Error(ErrorCode::InvalidArgument, "step ceiling must be positive");

  const double eps = run.epsilon();
  const double horizon = run.horizon();
  IntegratorConfig c = cfg;
  const double ceiling = options.step_ceiling * eps * eps;
  c.max_step = std::min(c.max_step, ceiling);
  c.step = std::min(c.step, ceiling);

  RhsFn f = [&run](double t, std::span<const double> y, std::span<double> dy) {
    const auto d = toy_rhs(run, {y[0], y[1]}, {y[2], y[3]}, t);
    dy[0] = d.dx.c1;
    dy[1] = d.dx.c2;
    dy[2] = d.dB.c1;
    dy[3] = d.dB.c2;
  };

  const auto observe = [&](double t, Vec2 x, Vec2 B) {
    ToySample s;
    s.t = t;
    s.x = x;
    s.B = B;
    s.xi = (x - B) / eps;
    s.rho = rho(s.xi, run.field.jet(B, t), eps);
    s.radius_dev = std::abs(norm(x - B) - eps);
    return s;
  };

  ToyResult res;
  auto& sum = res.summary;
  const ToySample first = observe(0.0, run.x0, run.z_star);
  const double rho0 = first.rho;
  sum.last_xi_norm = norm(first.xi);

  SolveOptions so;
  so.hook = [&](double t, std::span<const double> y) {
    const ToySample s = observe(t, {y[0], y[1]}, {y[2], y[3]});
    const double xn = norm(s.xi);
    ++sum.steps;
    sum.t_stop = t;
    sum.last_xi_norm = xn;
    sum.max_radius_dev = std::max(sum.max_radius_dev, s.radius_dev);
    sum.max_rho_dev = std::max(sum.max_rho_dev, std::abs(s.rho - rho0));
    sum.max_xi_dev = std::max(sum.max_xi_dev, std::abs(xn - 1.0));
    if (!(s.rho >= 0.5 * xn && s.rho <= 1.5 * xn)) sum.rho_sandwich = false;
    return xn > 0.5 && xn < 2.0;
  };

  const double y0[4] = {run.x0.c1, run.x0.c2, run.z_star.c1, run.z_star.c2};
  const double dt = horizon / static_cast<double>(samples);
  const OdeSolution sol = solve_ode(f, y0, 0.0, horizon, dt, c, so);
  sum.completed = sol.reason == StopReason::Completed;
  sum.t_stop = sol.t_stop;
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    const auto& y = sol.states[k];
    res.samples.push_back(observe(sol.times[k], {y[0], y[1]}, {y[2], y[3]}));
  }
  return res;
}

SweepResult theorem6_sweep(const fields::ExternalField& field, double beta,
                           const std::vector<double>& eps_list, const IntegratorConfig& cfg,
                           Vec2 z_star) {
  if (eps_list.size() < 3) throw Error(ErrorCode::InvalidArgument, "sweep needs at least three eps values");
  const auto [lo, hi] = std::minmax_element(eps_list.begin(), eps_list.end());
  if (*hi > 0.2) throw Error(ErrorCode::InvalidArgument, "sweep eps values must be <= 0.2");
  if (!(*lo > 0.0) || *hi < 2.0 * *lo) {
    throw Error(ErrorCode::InvalidArgument, "sweep eps values must span at least one octave");
  }

  SweepResult sw;
  sw.beta = beta;
  sw.all_completed = true;
  std::vector<double> xs, ys;
  for (double eps : eps_list) {
    const ToyResult r = run_toy(make_run(field, z_star, eps, beta), cfg, 16);
    SweepEntry e;
    e.eps = eps;
    e.max_radius_dev = r.summary.max_radius_dev;
    e.max_rho_dev = r.summary.max_rho_dev;
    e.completed = r.summary.completed;
    e.rho_ratio = e.max_rho_dev / std::pow(eps, 2.0 - beta);
    sw.all_completed = sw.all_completed && e.completed;
    sw.entries.push_back(e);
    xs.push_back(eps);
    ys.push_back(e.max_radius_dev);
  }
  sw.degenerate = std::all_of(ys.begin(), ys.end(), [](double y) { return y < kNoiseFloor; });
  if (!sw.degenerate && std::all_of(ys.begin(), ys.end(), [](double y) { return y > 0.0; })) {
    const auto fit = fields::fit_power_law(xs, ys);
    sw.fitted_exponent = fit.slope;
    sw.fitted_c0 = std::exp(fit.intercept);
  }
  const auto largest = std::max_element(sw.entries.begin(), sw.entries.end(),
                                        [](const SweepEntry& a, const SweepEntry& b) { return a.eps < b.eps; });
  sw.rho_c = largest->rho_ratio;
  sw.rho_stable = std::all_of(sw.entries.begin(), sw.entries.end(),
                              [&](const SweepEntry& e) { return e.rho_ratio <= 1.5 * sw.rho_c; });
  sw.pass = sw.all_completed && !sw.degenerate && sw.fitted_exponent >= (3.0 - beta) - 0.4 &&
            sw.rho_stable;
  return sw;
}

std::string toy_csv(const std::vector<ToySample>& samples) {
  CsvWriter w;
  w.header({"t", "x1", "x2", "B1", "B2", "xi1", "xi2", "rho", "radius_dev"});
  for (const auto& s : samples) {
    w.cell(s.t).cell(s.x.c1).cell(s.x.c2).cell(s.B.c1).cell(s.B.c2);
    w.cell(s.xi.c1).cell(s.xi.c2).cell(s.rho).cell(s.radius_dev);
    w.end_row();
  }
  return w.str();
}

std::string sweep_csv(const SweepResult& sweep) {
  CsvWriter w;
  w.header({"eps", "max_radius_dev", "max_rho_dev", "completed"});
  for (const auto& e : sweep.entries) {
    w.cell(e.eps).cell(e.max_radius_dev).cell(e.max_rho_dev).cell(e.completed ? "1" : "0");
    w.end_row();
  }
  return w.str();
}

std::string sweep_summary(const SweepResult& sweep) {
  std::ostringstream os;
  os << "{\n";
  os << "  beta: " << fmt(sweep.beta) << "\n";
  if (sweep.degenerate) {
    os << "  status: degenerate: below noise floor\n";
  } else {
    os << "  fitted_exponent: " << fmt(sweep.fitted_exponent) << "\n";
    os << "  fitted_c0: " << fmt(sweep.fitted_c0) << "\n";
  }
  os << "  threshold: " << fmt(3.0 - sweep.beta - 0.4) << "\n";
  os << "  rho_c: " << fmt(sweep.rho_c) << "\n";
  os << "  rho_stable: " << (sweep.rho_stable ? "true" : "false") << "\n";
  os << "  all_completed: " << (sweep.all_completed ? "true" : "false") << "\n";
  os << "  pass: " << (sweep.pass ? "true" : "false") << "\n";
  os << "}\n";
  return os.str();
}

}  // namespace vortexlab::toy
