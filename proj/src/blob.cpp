#include "vortexlab/blob.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "vortexlab/csv.hpp"
#include "vortexlab/error.hpp"
#include "vortexlab/kernels.hpp"

namespace vortexlab::blob {

namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14);
}

}  // namespace

void BlobSpec::validate() const {
  if (!is_finite(center)) fail(ErrorCode::Validation, "blob center must be finite");
  if (!(radius > 0.0 && radius < 1.0)) fail(ErrorCode::Validation, "blob radius must lie in (0,1)");
  if (!(std::isfinite(circulation) && circulation != 0.0)) {
    fail(ErrorCode::Validation, "blob circulation must be finite and nonzero");
  }
  if (profile.kind == ProfileKind::RadialSmooth) {
    if (!std::isfinite(profile.shape)) fail(ErrorCode::Validation, "profile shape must be finite");
    if (profile.shape <= -1.0) fail(ErrorCode::NotNormalizable, "profile shape must exceed -1");
    if (profile.shape < 0.0) fail(ErrorCode::Validation, "profile shape in (-1,0) is unbounded at the rim");
  }
}

double BlobSpec::vorticity(double r) const {
  if (r >= radius) return 0.0;
  const double e2 = radius * radius;
  if (profile.kind == ProfileKind::Uniform) return circulation / (kPi * e2);
  const double s = profile.shape;
  return circulation * (s + 1.0) / (kPi * e2) * std::pow(1.0 - r * r / e2, s);
}

double BlobSpec::enclosed(double r) const {
  if (r <= 0.0) return 0.0;
  if (r >= radius) return circulation;
  const double x = r * r / (radius * radius);
  if (profile.kind == ProfileKind::Uniform) return circulation * x;
  return circulation * -std::expm1((profile.shape + 1.0) * std::log1p(-x));
}

double BlobSpec::bound_m() const {
  if (profile.kind == ProfileKind::Uniform) return std::abs(circulation) / kPi;
  return std::abs(circulation) * (profile.shape + 1.0) / kPi;
}

double ParticleEnsemble::circulation() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

ParticleEnsemble sample_blob(const BlobSpec& spec, std::size_t n_target, std::uint64_t seed,
                             std::size_t parent, double reg_length) {
  spec.validate();
  if (n_target < 16) fail(ErrorCode::InvalidArgument, "n_target must be at least 16");

  const double eps = spec.radius;
  const double a = spec.circulation;
  const auto rings = static_cast<std::size_t>(
      std::max(1.0, std::round(std::sqrt(static_cast<double>(n_target) / kPi))));
  fields::Uniform01 u(seed);

  ParticleEnsemble ens;
  ens.spec = spec;
  ens.parent = parent;
  ens.seed = seed;
  for (std::size_t k = 0; k < rings; ++k) {
    const double r0 = eps * static_cast<double>(k) / static_cast<double>(rings);
    const double r1 = eps * static_cast<double>(k + 1) / static_cast<double>(rings);
    const double ck = spec.enclosed(r1) - spec.enclosed(r0);
    const std::size_t min_cells = k == 0 ? 1 : 4;
    const auto cells = std::max<std::size_t>(
        min_cells, static_cast<std::size_t>(std::llround(static_cast<double>(n_target) * ck / a)));

    double rbar;
    if (spec.profile.kind == ProfileKind::Uniform) {
      rbar = 2.0 / 3.0 * (r1 * r1 * r1 - r0 * r0 * r0) / (r1 * r1 - r0 * r0);
    } else {
      const auto w = [&](double r) { return spec.vorticity(r); };
      rbar = integrate([&](double r) { return r * r * w(r); }, r0, r1) /
             integrate([&](double r) { return r * w(r); }, r0, r1);
    }
    const double dtheta = kTwoPi / static_cast<double>(cells);
    const double rc = cells == 1 ? 0.0 : rbar * std::sin(0.5 * dtheta) / (0.5 * dtheta);
    const double phase = kTwoPi * u();
    const double wk = ck / static_cast<double>(cells);
    for (std::size_t j = 0; j < cells; ++j) {
      const double th = phase + (static_cast<double>(j) + 0.5) * dtheta;
      ens.positions.push_back(spec.center + Vec2{rc * std::cos(th), rc * std::sin(th)});
      ens.weights.push_back(wk);
    }
  }
  const double n = static_cast<double>(ens.size());
  ens.reg_length = reg_length > 0.0 ? reg_length : 2.0 * eps / std::sqrt(n);
  if (std::abs(ens.circulation() - a) > 1e-12 * std::abs(a)) {
    fail(ErrorCode::InternalConsistency, "sampled weights do not sum to the blob circulation");
  }
  return ens;
}

namespace {

struct Soa {
  std::vector<double> x, y, w, hd;

  void reserve(std::size_t n) {
    x.reserve(n);
    y.reserve(n);
    w.reserve(n);
    hd.reserve(n);
  }
  void push(Vec2 p, double weight, double half_delta2) {
    x.push_back(p.c1);
    y.push_back(p.c2);
    w.push_back(weight);
    hd.push_back(half_delta2);
  }
  kernels::Sources sources(bool with_hd) const {
    return {x, y, w, with_hd ? std::span<const double>(hd) : std::span<const double>{}};
  }
};

std::size_t total_size(std::span<const ParticleEnsemble> ens) {
  std::size_t n = 0;
  for (const auto& e : ens) n += e.size();
  return n;
}

// Images (ybar, -w) of every particle off the center, in particle order.
Soa image_sources(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  Soa img;
  img.reserve(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const Vec2 p{x[j], y[j]};
    if (norm2(p) == 0.0) continue;
    img.push(mirror_point(p), -w[j], 0.0);
  }
  return img;
}

}  // namespace

Vec2 ensemble_velocity(std::span<const ParticleEnsemble> ens, Vec2 x, Domain domain) {
  if (!inside(domain, x)) fail(ErrorCode::OutOfDomain, "probe outside the domain");
  Soa src;
  src.reserve(total_size(ens));
  for (const auto& e : ens) {
    for (std::size_t j = 0; j < e.size(); ++j) {
      src.push(e.positions[j], e.weights[j], e.reg_length * e.reg_length);
    }
  }
  const double tx[1] = {x.c1}, ty[1] = {x.c2};
  double u[1] = {0.0}, v[1] = {0.0};
  const kernels::Targets t{tx, ty, {}};
  const auto backend = kernels::active_backend();
  kernels::accumulate_velocity(t, src.sources(true), u, v, backend);
  if (domain == Domain::UnitDisk) {
    const Soa img = image_sources(src.x, src.y, src.w);
    kernels::accumulate_velocity(t, img.sources(false), u, v, backend);
  }
  return {u[0], v[0]};
}

Vec2 ensemble_velocity(const ParticleEnsemble& ens, Vec2 x, Domain domain) {
  return ensemble_velocity(std::span<const ParticleEnsemble>(&ens, 1), x, domain);
}

double radial_profile_oracle(const BlobSpec& spec, double r) {
  if (!(r > 0.0)) fail(ErrorCode::InvalidArgument, "oracle radius must be positive");
  return spec.enclosed(r) / (kTwoPi * r);
}

double mollifier_psi(double s) {
  if (s <= 1.0) return 1.0;
  if (s >= 2.0) return 0.0;
  const double u = s - 1.0;
  const double smooth = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  return std::clamp(1.0 - smooth, 0.0, 1.0);
}

double mollifier(Vec2 x, double h) { return mollifier_psi(norm(x) / h); }

Vec2 mollifier_gradient(Vec2 x, double h) {
  const double r = norm(x);
  const double s = r / h;
  if (s <= 1.0 || s >= 2.0) return {};
  const double u = s - 1.0;
  const double dpsi = -30.0 * u * u * (1.0 - u) * (1.0 - u);
  return (dpsi / (h * r)) * x;
}

DiagnosticsRecord diagnostics(std::span<const ParticleEnsemble> ens, double t,
                              std::span<const double> h_list, Domain domain,
                              std::span<const Vec2> reference_centers) {
  if (ens.empty()) fail(ErrorCode::InvalidArgument, "diagnostics need at least one ensemble");
  if (!reference_centers.empty() && reference_centers.size() != ens.size()) {
    fail(ErrorCode::InvalidArgument, "reference centers do not match the ensembles");
  }
  DiagnosticsRecord rec;
  rec.t = t;
  for (std::size_t b = 0; b < ens.size(); ++b) {
    const auto& e = ens[b];
    BlobDiagnostics d;
    double wsum = 0.0, abs_sum = 0.0;
    Vec2 moment{};
    for (std::size_t j = 0; j < e.size(); ++j) {
      wsum += e.weights[j];
      abs_sum += std::abs(e.weights[j]);
      moment += e.weights[j] * e.positions[j];
    }
    d.circulation = wsum;
    d.center_of_vorticity = moment / wsum;
    d.reference_center = reference_centers.empty() ? d.center_of_vorticity : reference_centers[b];
    d.tail_mass.assign(h_list.size(), 0.0);
    d.mollified_tail.assign(h_list.size(), 0.0);
    double inertia = 0.0;
    for (std::size_t j = 0; j < e.size(); ++j) {
      const Vec2 rel = e.positions[j] - d.center_of_vorticity;
      const double r = norm(rel);
      const double aw = std::abs(e.weights[j]);
      inertia += e.weights[j] * norm2(rel);
      d.support_radius = std::max(d.support_radius, r);
      d.max_reference_distance = std::max(d.max_reference_distance, norm(e.positions[j] - d.reference_center));
      for (std::size_t k = 0; k < h_list.size(); ++k) {
        if (r > h_list[k]) d.tail_mass[k] += aw;
        d.mollified_tail[k] += aw * (1.0 - mollifier_psi(r / h_list[k]));
      }
    }
    d.moment_of_inertia = inertia / wsum;
    for (std::size_t k = 0; k < h_list.size(); ++k) {
      d.tail_mass[k] /= abs_sum;
      d.mollified_tail[k] /= abs_sum;
    }
    rec.blobs.push_back(std::move(d));
  }
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < rec.blobs.size(); ++b) {
    const Vec2 cb = rec.blobs[b].center_of_vorticity;
    if (domain == Domain::UnitDisk) sep = std::min(sep, 1.0 - norm(cb));
    for (std::size_t c = b + 1; c < rec.blobs.size(); ++c) {
      sep = std::min(sep, norm(cb - rec.blobs[c].center_of_vorticity));
    }
  }
  rec.min_blob_separation = sep;
  return rec;
}

namespace {

struct Workspace {
  std::vector<double> x, y, w, hd, u, v;
};

void fill_mutual(Workspace& ws, Domain domain, unsigned threads) {
  const std::size_t n = ws.x.size();
  ws.u.assign(n, 0.0);
  ws.v.assign(n, 0.0);
  const kernels::Targets self{ws.x, ws.y, ws.hd};
  kernels::accumulate_velocity(self, {ws.x, ws.y, ws.w, ws.hd}, ws.u, ws.v, threads);
  if (domain == Domain::UnitDisk) {
    const Soa img = image_sources(ws.x, ws.y, ws.w);
    const kernels::Targets bare{ws.x, ws.y, {}};
    kernels::accumulate_velocity(bare, img.sources(false), ws.u, ws.v, threads);
  }
}

Workspace workspace_for(std::span<const ParticleEnsemble> ens) {
  Workspace ws;
  for (const auto& e : ens) {
    const double hd = 0.5 * e.reg_length * e.reg_length;
    for (std::size_t j = 0; j < e.size(); ++j) {
      ws.x.push_back(e.positions[j].c1);
      ws.y.push_back(e.positions[j].c2);
      ws.w.push_back(e.weights[j]);
      ws.hd.push_back(hd);
    }
  }
  return ws;
}

}  // namespace

std::vector<Vec2> mutual_velocities(std::span<const ParticleEnsemble> ens, Domain domain,
                                    unsigned threads) {
  Workspace ws = workspace_for(ens);
  fill_mutual(ws, domain, threads);
  std::vector<Vec2> out(ws.x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {ws.u[i], ws.v[i]};
  return out;
}

EvolveResult evolve_blobs(const std::vector<ParticleEnsemble>& ens, Domain domain,
                          const fields::ExternalField* external, const IntegratorConfig& cfg,
                          double t_end, double observe_every, const EvolveOptions& options) {
  cfg.validate();
  if (ens.empty()) fail(ErrorCode::InvalidArgument, "evolve needs at least one ensemble");
  if (!(t_end > 0.0)) fail(ErrorCode::InvalidArgument, "t_end must be positive");
  if (!(observe_every > 0.0)) fail(ErrorCode::InvalidArgument, "observe_every must be positive");
  for (const auto& e : ens) {
    if (e.positions.size() != e.weights.size() || e.size() == 0) {
      fail(ErrorCode::Validation, "ensemble positions and weights must match and be nonempty");
    }
    for (const Vec2& p : e.positions) {
      if (!inside(domain, p)) fail(ErrorCode::OutOfDomain, "initial particle outside the domain");
    }
  }
  const unsigned threads = std::max(1u, options.threads);

  Workspace ws = workspace_for(ens);
  const std::size_t n = ws.x.size();
  std::vector<double> y0(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y0[2 * i] = ws.x[i];
    y0[2 * i + 1] = ws.y[i];
  }

  RhsFn rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    for (std::size_t i = 0; i < n; ++i) {
      ws.x[i] = y[2 * i];
      ws.y[i] = y[2 * i + 1];
    }
    fill_mutual(ws, domain, threads);
    for (std::size_t i = 0; i < n; ++i) {
      Vec2 vel{ws.u[i], ws.v[i]};
      if (external) vel += external->value({ws.x[i], ws.y[i]}, t);
      dy[2 * i] = vel.c1;
      dy[2 * i + 1] = vel.c2;
    }
  };

  EvolveResult res;
  SolveOptions so;
  if (domain == Domain::UnitDisk) {
    so.hook = [&](double, std::span<const double> y) {
      for (std::size_t i = 0; i < n; ++i) {
        if (y[2 * i] * y[2 * i] + y[2 * i + 1] * y[2 * i + 1] >= 1.0) {
          res.boundary_contact = true;
          return false;
        }
      }
      return true;
    };
  }
  const OdeSolution sol = solve_ode(rhs, y0, 0.0, t_end, observe_every, cfg, so);
  res.t_stop = sol.t_stop;
  res.rhs_evals = sol.rhs_evals;

  std::vector<ParticleEnsemble> snap = ens;
  const auto load = [&](const std::vector<double>& y) {
    std::size_t i = 0;
    for (auto& e : snap) {
      for (auto& p : e.positions) {
        p = {y[2 * i], y[2 * i + 1]};
        ++i;
      }
    }
  };
  for (std::size_t s = 0; s < sol.times.size(); ++s) {
    load(sol.states[s]);
    std::vector<Vec2> refs;
    if (options.reference) refs = options.reference(sol.times[s]);
    res.records.push_back(diagnostics(snap, sol.times[s], options.h_list, domain, refs));
  }
  res.final_ensembles = std::move(snap);
  return res;
}

ConcentrationReport concentration_time(std::span<const DiagnosticsRecord> records,
                                       std::span<const double> radii, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) fail(ErrorCode::InvalidArgument, "beta must lie in (0,1)");
  ConcentrationReport rep;
  rep.beta = beta;
  rep.exit_time.assign(radii.size(), std::nullopt);
  if (records.empty()) return rep;
  rep.horizon = records.back().t;
  for (const auto& r : records) {
    if (r.blobs.size() != radii.size()) fail(ErrorCode::InvalidArgument, "record blob count mismatch");
  }
  for (std::size_t b = 0; b < radii.size(); ++b) {
    const double thr = std::pow(radii[b], beta);
    for (std::size_t s = 0; s < records.size(); ++s) {
      const double d = records[s].blobs[b].max_reference_distance;
      if (d <= thr) continue;
      if (s == 0) {
        rep.exit_time[b] = records[0].t;
      } else {
        const double d0 = records[s - 1].blobs[b].max_reference_distance;
        const double t0 = records[s - 1].t, t1 = records[s].t;
        rep.exit_time[b] = t0 + (thr - d0) / (d - d0) * (t1 - t0);
      }
      break;
    }
  }
  return rep;
}

Lemma1Result lemma1_check(std::span<const DiagnosticsRecord> records,
                          const std::function<double(double)>& lipschitz, double eps,
                          const std::function<Vec2(double)>& companion, std::size_t index) {
  Lemma1Result res;
  for (const auto& rec : records) {
    if (index >= rec.blobs.size()) fail(ErrorCode::InvalidArgument, "blob index out of range");
    const auto& d = rec.blobs[index];
    const double D = integrate(lipschitz, 0.0, rec.t);
    const double ibound = 4.0 * eps * eps * std::exp(2.0 * D);
    const double bbound = 2.0 * eps * (1.0 + D) * std::exp(D);
    const double iratio = d.moment_of_inertia / ibound;
    const double bratio = norm(d.center_of_vorticity - companion(rec.t)) / bbound;
    res.iee_margin = std::max(res.iee_margin, iratio);
    res.bee_margin = std::max(res.bee_margin, bratio);
    if (!(iratio <= 1.0)) res.iee_ok = false;
    if (!(bratio <= 1.0)) res.bee_ok = false;
  }
  return res;
}

std::string diagnostics_csv(std::span<const DiagnosticsRecord> records, std::span<const double> h_list) {
  CsvWriter w;
  w.cell("t").cell("blob").cell("Bx").cell("By").cell("I").cell("R");
  for (double h : h_list) w.cell("m@" + fmt(h));
  for (double h : h_list) w.cell("mu@" + fmt(h));
  w.cell("refdist").cell("sep");
  w.end_row();
  for (const auto& rec : records) {
    for (std::size_t b = 0; b < rec.blobs.size(); ++b) {
      const auto& d = rec.blobs[b];
      w.cell(rec.t).cell(b).cell(d.center_of_vorticity.c1).cell(d.center_of_vorticity.c2);
      w.cell(d.moment_of_inertia).cell(d.support_radius);
      for (double m : d.tail_mass) w.cell(m);
      for (double m : d.mollified_tail) w.cell(m);
      w.cell(d.max_reference_distance).cell(rec.min_blob_separation);
      w.end_row();
    }
  }
  return w.str();
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string write_checkpoint(const ParticleEnsemble& ens) {
  std::ostringstream os;
  os << "# vortexlab ensemble v1\n";
  os << "center " << g17(ens.spec.center.c1) << ' ' << g17(ens.spec.center.c2) << '\n';
  os << "radius " << g17(ens.spec.radius) << '\n';
  os << "circulation " << g17(ens.spec.circulation) << '\n';
  os << "profile "
     << (ens.spec.profile.kind == ProfileKind::Uniform ? "uniform" : "smooth") << ' '
     << g17(ens.spec.profile.shape) << '\n';
  os << "seed " << ens.seed << '\n';
  os << "reg_length " << g17(ens.reg_length) << '\n';
  os << "parent " << ens.parent << '\n';
  os << "particles " << ens.size() << '\n';
  for (std::size_t j = 0; j < ens.size(); ++j) {
    os << g17(ens.positions[j].c1) << ' ' << g17(ens.positions[j].c2) << ' ' << g17(ens.weights[j])
       << '\n';
  }
  return os.str();
}

ParticleEnsemble read_checkpoint(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "# vortexlab ensemble v1") {
    fail(ErrorCode::Io, "not a vortexlab ensemble checkpoint");
  }
  ParticleEnsemble ens;
  std::size_t count = 0;
  const auto expect = [&](const char* key) {
    std::string k;
    if (!(is >> k) || k != key) fail(ErrorCode::Io, std::string("checkpoint: expected ") + key);
  };
  std::string kind;
  expect("center");
  is >> ens.spec.center.c1 >> ens.spec.center.c2;
  expect("radius");
  is >> ens.spec.radius;
  expect("circulation");
  is >> ens.spec.circulation;
  expect("profile");
  is >> kind >> ens.spec.profile.shape;
  if (kind == "uniform") {
    ens.spec.profile.kind = ProfileKind::Uniform;
  } else if (kind == "smooth") {
    ens.spec.profile.kind = ProfileKind::RadialSmooth;
  } else {
    fail(ErrorCode::Io, "checkpoint: unknown profile " + kind);
  }
  expect("seed");
  is >> ens.seed;
  expect("reg_length");
  is >> ens.reg_length;
  expect("parent");
  is >> ens.parent;
  expect("particles");
  is >> count;
  if (!is) fail(ErrorCode::Io, "checkpoint: malformed header");
  ens.positions.resize(count);
  ens.weights.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    if (!(is >> ens.positions[j].c1 >> ens.positions[j].c2 >> ens.weights[j])) {
      fail(ErrorCode::Io, "checkpoint: truncated particle list");
    }
  }
  return ens;
}

}  // namespace vortexlab::blob
