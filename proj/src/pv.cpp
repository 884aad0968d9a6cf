#include "vortexlab/pv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vortexlab/csv.hpp"
#include "vortexlab/error.hpp"

namespace vortexlab::pv {

void PointVortexSystem::validate() const {
  if (positions.empty()) throw Error(ErrorCode::Validation, "system has no vortices");
  if (positions.size() != intensities.size()) {
    throw Error(ErrorCode::Validation, "positions and intensities differ in length");
  }
  for (std::size_t i = 0; i < size(); ++i) {
    if (!(intensities[i] != 0.0) || !std::isfinite(intensities[i])) {
      throw Error(ErrorCode::Validation, "vortex " + std::to_string(i + 1) + " has zero intensity");
    }
    if (!inside(domain, positions[i])) {
      throw Error(ErrorCode::Validation,
                  "vortex " + std::to_string(i + 1) + " is outside the " + to_string(domain));
    }
  }
  if (size() > 1 && !(min_pairwise_distance() > 0.0)) {
    throw Error(ErrorCode::SingularConfiguration, "coincident vortices");
  }
}

double PointVortexSystem::min_pairwise_distance() const {
  double d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i + 1; j < size(); ++j) d2 = std::min(d2, norm2(positions[i] - positions[j]));
  return std::sqrt(d2);
}

namespace {

// Raw right-hand side over interleaved (x, y) state; never throws, so an
// integrator stage that lands on a singular point just produces non-finite
// values and gets rejected.
void rhs_flat(std::span<const double> a, Domain domain, std::span<const double> y,
              std::span<double> dy) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 zi{y[2 * i], y[2 * i + 1]};
    Vec2 v{};
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Vec2 zj{y[2 * j], y[2 * j + 1]};
      const Vec2 d = zi - zj;
      v += (-a[j] / (kTwoPi * norm2(d))) * perp(d);
      if (domain == Domain::UnitDisk) {
        const double rj2 = norm2(zj);
        if (rj2 > 0.0) {
          const Vec2 di = zi - zj / rj2;
          v += (a[j] / (kTwoPi * norm2(di))) * perp(di);
        }
      }
    }
    if (domain == Domain::UnitDisk) {
      // (a_i / 2) perp-grad gamma(z_i)
      v += (-a[i] / (kTwoPi * (1.0 - norm2(zi)))) * perp(zi);
    }
    dy[2 * i] = v.c1;
    dy[2 * i + 1] = v.c2;
  }
}

std::vector<double> flatten(const std::vector<Vec2>& z) {
  std::vector<double> y(2 * z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    y[2 * i] = z[i].c1;
    y[2 * i + 1] = z[i].c2;
  }
  return y;
}

std::vector<Vec2> unflatten(std::span<const double> y) {
  std::vector<Vec2> z(y.size() / 2);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = {y[2 * i], y[2 * i + 1]};
  return z;
}

}  // namespace

std::vector<Vec2> pv_rhs(const PointVortexSystem& sys, double /*t*/) {
  sys.validate();
  std::vector<Vec2> v(sys.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    for (std::size_t j = 0; j < sys.size(); ++j) {
      if (j == i) continue;
      const Vec2 k = sys.domain == Domain::Plane
                         ? kernel_plane(sys.positions[i] - sys.positions[j])
                         : kernel_disk(sys.positions[i], sys.positions[j]);
      v[i] += sys.intensities[j] * k;
    }
    if (sys.domain == Domain::UnitDisk) {
      v[i] += (0.5 * sys.intensities[i]) * disk_self_gradient(sys.positions[i]);
    }
  }
  return v;
}

Conserved conserved(const PointVortexSystem& sys) {
  sys.validate();
  Conserved c;
  const auto& z = sys.positions;
  const auto& a = sys.intensities;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    for (std::size_t j = i + 1; j < sys.size(); ++j) {
      const double g = sys.domain == Domain::Plane ? green_plane(z[i], z[j]) : green_disk(z[i], z[j]);
      c.hamiltonian += a[i] * a[j] * g;
    }
    if (sys.domain == Domain::UnitDisk) c.hamiltonian += 0.5 * a[i] * a[i] * disk_self_potential(z[i]);
    c.impulse += a[i] * z[i];
    c.angular_impulse += a[i] * norm2(z[i]);
  }
  return c;
}

PointVortexSystem Trajectory::snapshot(std::size_t sample) const {
  return {states.at(sample), intensities, domain};
}

std::vector<Vec2> Trajectory::positions_at(double t) const {
  if (dense.empty()) throw Error(ErrorCode::InvalidArgument, "trajectory has no dense output");
  std::vector<double> y(2 * intensities.size());
  evaluate_dense(dense, t, y);
  return unflatten(y);
}

Trajectory integrate(const PointVortexSystem& sys, const IntegratorConfig& cfg, double t_end,
                     double observe_every, const IntegrateOptions& options) {
  sys.validate();
  if (!(t_end > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_end must be positive");

  Trajectory traj;
  traj.intensities = sys.intensities;
  traj.domain = sys.domain;
  const double d0 = sys.size() > 1 ? sys.min_pairwise_distance() : 1.0;
  traj.guard_distance = options.guard_fraction * d0;

  const std::vector<double> a = sys.intensities;
  const Domain domain = sys.domain;
  RhsFn f = [&a, domain](double, std::span<const double> y, std::span<double> dy) {
    rhs_flat(a, domain, y, dy);
  };

  const double guard2 = traj.guard_distance * traj.guard_distance;
  SolveOptions so;
  so.keep_dense = options.keep_dense;
  so.hook = [&](double, std::span<const double> y) {
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 zi{y[2 * i], y[2 * i + 1]};
      if (domain == Domain::UnitDisk && !(norm2(zi) < 1.0)) return false;
      for (std::size_t j = i + 1; j < n; ++j) {
        const Vec2 zj{y[2 * j], y[2 * j + 1]};
        if (norm2(zi - zj) < guard2) return false;
      }
    }
    return true;
  };

  const auto y0 = flatten(sys.positions);
  OdeSolution sol = solve_ode(f, y0, 0.0, t_end, observe_every, cfg, so);

  traj.times = std::move(sol.times);
  traj.states.reserve(sol.states.size());
  for (const auto& s : sol.states) traj.states.push_back(unflatten(s));
  traj.dense = std::move(sol.segments);
  traj.close_approach = sol.reason == StopReason::HookStopped;
  traj.t_stop = sol.t_stop;
  return traj;
}

double signed_area(Vec2 p, Vec2 q, Vec2 r) { return 0.5 * cross(q - p, r - p); }

std::array<double, 2> similarity_residuals(const std::array<double, 3>& a,
                                           const std::array<double, 3>& sides) {
  const std::array<double, 3> prod{a[0] * a[1], a[0] * a[2], a[1] * a[2]};
  double harm = 0.0, harm_scale = 0.0, mom = 0.0, mom_scale = 0.0;
  for (int p = 0; p < 3; ++p) {
    harm += prod[p];
    harm_scale = std::max(harm_scale, std::abs(prod[p]));
    const double m = prod[p] * sides[p] * sides[p];
    mom += m;
    mom_scale = std::max(mom_scale, std::abs(m));
  }
  return {std::abs(harm) / harm_scale, std::abs(mom) / mom_scale};
}

double side_rate(const std::array<Vec2, 3>& z, const std::array<double, 3>& a, int i, int j, int k) {
  const double area = signed_area(z[i], z[j], z[k]);
  const double ljk2 = norm2(z[j] - z[k]);
  const double lki2 = norm2(z[k] - z[i]);
  return (2.0 * area * a[k] / kPi) * (1.0 / ljk2 - 1.0 / lki2);
}

SelfSimilarBuild build_self_similar(const std::array<double, 3>& intensities,
                                    const std::array<double, 3>& sides, Orientation orientation,
                                    double scale, double cond_tol) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "scale must be positive");
  for (double a : intensities) {
    if (!(a != 0.0) || !std::isfinite(a)) throw Error(ErrorCode::Validation, "zero intensity");
  }
  for (double s : sides) {
    if (!(s > 0.0)) throw Error(ErrorCode::Validation, "sides must be positive");
  }
  const auto res = similarity_residuals(intensities, sides);
  if (res[0] > cond_tol || res[1] > cond_tol) {
    std::ostringstream os;
    os << "self-similarity conditions violated: harmonic residual " << res[0]
       << ", moment residual " << res[1] << " (tolerance " << cond_tol << ")";
    throw Error(ErrorCode::Validation, os.str());
  }
  const double l12 = sides[0] * scale, l13 = sides[1] * scale, l23 = sides[2] * scale;
  if (!(l12 < l13 + l23 && l13 < l12 + l23 && l23 < l12 + l13)) {
    throw Error(ErrorCode::Validation, "sides violate the strict triangle inequality");
  }

  const double x3 = (l12 * l12 + l13 * l13 - l23 * l23) / (2.0 * l12);
  const double y3 = std::sqrt(std::max(0.0, l13 * l13 - x3 * x3));
  const double sign = orientation == Orientation::Counterclockwise ? 1.0 : -1.0;
  const std::array<Vec2, 3> z{Vec2{0.0, 0.0}, Vec2{l12, 0.0}, Vec2{x3, sign * y3}};

  SelfSimilarBuild out;
  out.system = {{z[0], z[1], z[2]}, {intensities[0], intensities[1], intensities[2]}, Domain::Plane};
  auto& tr = out.triple;
  tr.intensities = intensities;
  tr.sides = {l12, l13, l23};
  tr.orientation = orientation;
  tr.signed_area = signed_area(z[0], z[1], z[2]);
  tr.harmonic_residual = res[0];
  tr.moment_residual = res[1];

  std::array<double, 3> g{};
  for (int p = 0; p < 3; ++p) {
    const auto [i, j, k] = kPairs[p];
    g[p] = side_rate(z, intensities, i, j, k) / norm2(z[i] - z[j]);
  }
  const double gmax = std::max({std::abs(g[0]), std::abs(g[1]), std::abs(g[2])});
  for (int p = 1; p < 3; ++p) {
    if (std::abs(g[p] - g[0]) > 1e-10 * gmax) {
      std::ostringstream os;
      os << "growth rates disagree across pairs: " << g[0] << ", " << g[1] << ", " << g[2];
      throw Error(ErrorCode::InternalConsistency, os.str());
    }
  }
  tr.growth_rate = g[0];
  return out;
}

double growth_law_residual(const Trajectory& traj, const SelfSimilarTriple& triple) {
  if (traj.states.empty()) return 0.0;
  const auto& z0 = traj.states.front();
  double worst = 0.0;
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const auto& z = traj.states[s];
    const double law = 1.0 + triple.growth_rate * traj.times[s];
    for (const auto& [i, j, k] : kPairs) {
      const double ratio = norm2(z[i] - z[j]) / norm2(z0[i] - z0[j]);
      worst = std::max(worst, std::abs(ratio - law));
    }
  }
  return worst;
}

double rate_identity_residual(const Trajectory& traj, double fd_step) {
  if (traj.intensities.size() != 3) throw Error(ErrorCode::InvalidArgument, "needs three vortices");
  const std::array<double, 3> a{traj.intensities[0], traj.intensities[1], traj.intensities[2]};
  auto as_array = [](const std::vector<Vec2>& v) { return std::array<Vec2, 3>{v[0], v[1], v[2]}; };
  const double t_lo = traj.times.front() + fd_step;
  const double t_hi = traj.t_stop - fd_step;
  double worst = 0.0;
  for (double t : traj.times) {
    if (t < t_lo || t > t_hi) continue;
    const auto zp = as_array(traj.positions_at(t + fd_step));
    const auto zm = as_array(traj.positions_at(t - fd_step));
    const auto z = as_array(traj.positions_at(t));
    for (const auto& [i, j, k] : kPairs) {
      const double fd = (norm2(zp[i] - zp[j]) - norm2(zm[i] - zm[j])) / (2.0 * fd_step);
      const double rate = side_rate(z, a, i, j, k);
      worst = std::max(worst, std::abs(fd - rate) / std::abs(rate));
    }
  }
  return worst;
}

std::string trajectory_csv(const Trajectory& traj) {
  const std::size_t n = traj.intensities.size();
  CsvWriter w;
  w.cell("t");
  for (std::size_t i = 1; i <= n; ++i) {
    w.cell("z" + std::to_string(i) + "x").cell("z" + std::to_string(i) + "y");
  }
  w.cell("H").cell("Px").cell("Py").cell("L");
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = i + 1; j <= n; ++j) w.cell("d" + std::to_string(i) + std::to_string(j));
  w.end_row();
  for (std::size_t s = 0; s < traj.states.size(); ++s) {
    const auto& z = traj.states[s];
    w.cell(traj.times[s]);
    for (const auto& p : z) w.cell(p.c1).cell(p.c2);
    double h = std::numeric_limits<double>::quiet_NaN();
    Conserved c;
    try {
      c = conserved(traj.snapshot(s));
      h = c.hamiltonian;
    } catch (const Error&) {
      // Last sample of a guarded run may sit on a near-collision.
    }
    w.cell(h).cell(c.impulse.c1).cell(c.impulse.c2).cell(c.angular_impulse);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) w.cell(norm(z[i] - z[j]));
    w.end_row();
  }
  return w.str();
}

}  // namespace vortexlab::pv
