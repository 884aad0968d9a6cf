#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vortexlab/fields.hpp"
#include "vortexlab/geom.hpp"
#include "vortexlab/ode.hpp"

namespace vortexlab::blob {

enum class ProfileKind { Uniform, RadialSmooth };

/// Uniform: omega = a / (pi eps^2).
/// RadialSmooth(s): omega = a (s+1) / (pi eps^2) (1 - r^2/eps^2)^s.
struct Profile {
  ProfileKind kind = ProfileKind::Uniform;
  double shape = 3.0;
};

struct BlobSpec {
  Vec2 center;
  double radius = 0.1;       // eps
  double circulation = 1.0;  // a
  Profile profile;

  /// Throws Validation for a bad radius or zero circulation, NotNormalizable for shape <= -1.
  void validate() const;
  double vorticity(double r) const;
  /// Circulation inside radius r about the center.
  double enclosed(double r) const;
  /// Constants of the bound max|omega| <= M eps^-nu.
  double bound_m() const;
  double bound_nu() const { return 2.0; }
};

struct ParticleEnsemble {
  std::vector<Vec2> positions;
  std::vector<double> weights;
  double reg_length = 0.0;
  std::size_t parent = 0;
  BlobSpec spec;
  std::uint64_t seed = 0;

  std::size_t size() const { return positions.size(); }
  double circulation() const;
};

/// Stratified polar sampling: equal-width rings, equal-circulation cells per
/// ring, one particle per cell at its circulation centroid carrying the exact
/// cell circulation. reg_length <= 0 selects 2 eps / sqrt(n).
ParticleEnsemble sample_blob(const BlobSpec& spec, std::size_t n_target, std::uint64_t seed,
                             std::size_t parent = 0, double reg_length = 0.0);

/// Regularized velocity of the ensembles at x, plus exact images in the disk.
Vec2 ensemble_velocity(std::span<const ParticleEnsemble> ens, Vec2 x, Domain domain);
Vec2 ensemble_velocity(const ParticleEnsemble& ens, Vec2 x, Domain domain);

/// Signed tangential speed enclosed(r) / (2 pi r) of the radially symmetric state.
double radial_profile_oracle(const BlobSpec& spec, double r);

/// Cutoff psi(s): 1 for s <= 1, 0 for s >= 2, quintic smoothstep between.
double mollifier_psi(double s);
/// W_h(x) = psi(|x| / h).
double mollifier(Vec2 x, double h);
Vec2 mollifier_gradient(Vec2 x, double h);
/// |grad W_h| <= C1 / h and Lip(grad W_h) <= C1 / h^2.
inline constexpr double kMollifierC1 = 6.0;

struct BlobDiagnostics {
  Vec2 center_of_vorticity;        // B_eps
  double moment_of_inertia = 0.0;  // I_eps, per unit circulation
  double support_radius = 0.0;     // R_t
  std::vector<double> tail_mass;   // m_t(h) per unit |circulation|, one per h
  std::vector<double> mollified_tail;
  double circulation = 0.0;
  Vec2 reference_center;
  double max_reference_distance = 0.0;
};

struct DiagnosticsRecord {
  double t = 0.0;
  std::vector<BlobDiagnostics> blobs;
  double min_blob_separation = 0.0;
};

/// Reference centers default to B_eps when none are given.
DiagnosticsRecord diagnostics(std::span<const ParticleEnsemble> ens, double t,
                              std::span<const double> h_list, Domain domain,
                              std::span<const Vec2> reference_centers = {});

/// Mutual regularized velocities (plus images in the disk) of all particles,
/// laid out as in the concatenated ensembles.
std::vector<Vec2> mutual_velocities(std::span<const ParticleEnsemble> ens, Domain domain,
                                    unsigned threads = 1);

using ReferenceFn = std::function<std::vector<Vec2>(double t)>;

struct EvolveOptions {
  std::vector<double> h_list;
  unsigned threads = 1;
  ReferenceFn reference;  // empty: measure about B_eps
};

struct EvolveResult {
  std::vector<DiagnosticsRecord> records;
  std::vector<ParticleEnsemble> final_ensembles;
  bool boundary_contact = false;
  double t_stop = 0.0;
  std::size_t rhs_evals = 0;
};

EvolveResult evolve_blobs(const std::vector<ParticleEnsemble>& ens, Domain domain,
                          const fields::ExternalField* external, const IntegratorConfig& cfg,
                          double t_end, double observe_every, const EvolveOptions& options = {});

struct ConcentrationReport {
  double beta = 0.5;
  double horizon = 0.0;
  std::vector<std::optional<double>> exit_time;  // empty optional: none within horizon
};

/// First time max_reference_distance exceeds radius^beta, linearly interpolated.
ConcentrationReport concentration_time(std::span<const DiagnosticsRecord> records,
                                       std::span<const double> radii, double beta);

struct Lemma1Result {
  bool iee_ok = true;
  bool bee_ok = true;
  double iee_margin = 0.0;  // max of I / bound
  double bee_margin = 0.0;  // max of |B_eps - B| / bound
};

/// Checks I <= 4 eps^2 exp(2 int D) and |B_eps - B| <= 2 eps (1 + int D) exp(int D)
/// for blob `index` of every record.
Lemma1Result lemma1_check(std::span<const DiagnosticsRecord> records,
                          const std::function<double(double)>& lipschitz, double eps,
                          const std::function<Vec2(double)>& companion, std::size_t index = 0);

/// Columns t, blob, Bx, By, I, R, m@h..., mu@h..., refdist, sep.
std::string diagnostics_csv(std::span<const DiagnosticsRecord> records, std::span<const double> h_list);

/// Plain-text header followed by "x y w" per particle at 17 significant digits.
std::string write_checkpoint(const ParticleEnsemble& ens);
ParticleEnsemble read_checkpoint(const std::string& text);

}  // namespace vortexlab::blob
