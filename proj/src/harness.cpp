#include "vortexlab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

#include "vortexlab/blob.hpp"
#include "vortexlab/csv.hpp"
#include "vortexlab/error.hpp"
#include "vortexlab/fields.hpp"
#include "vortexlab/kernels.hpp"
#include "vortexlab/pv.hpp"
#include "vortexlab/toy.hpp"

namespace vortexlab::harness {

namespace {

constexpr std::array<std::pair<Experiment, std::string_view>, 8> kExperiments{{
    {Experiment::PvRun, "pv-run"},
    {Experiment::PvSelfsim, "pv-selfsim"},
    {Experiment::BlobRun, "blob-run"},
    {Experiment::BlobThreeblob, "blob-threeblob"},
    {Experiment::DiskBlob, "disk-blob"},
    {Experiment::ToyRun, "toy-run"},
    {Experiment::ToySweep, "toy-sweep"},
    {Experiment::FieldLipschitz, "field-lipschitz"},
}};

constexpr unsigned bit(Experiment e) { return 1u << static_cast<unsigned>(e); }

constexpr unsigned kAll = 0xffu;
constexpr unsigned kPv = bit(Experiment::PvRun) | bit(Experiment::PvSelfsim);
constexpr unsigned kBlob = bit(Experiment::BlobRun) | bit(Experiment::BlobThreeblob) | bit(Experiment::DiskBlob);
constexpr unsigned kToy = bit(Experiment::ToyRun) | bit(Experiment::ToySweep);
constexpr unsigned kTimed = kPv | kBlob | bit(Experiment::ToyRun);
constexpr unsigned kField = kToy | bit(Experiment::BlobRun);
constexpr unsigned kTriple = bit(Experiment::PvSelfsim) | bit(Experiment::BlobThreeblob);

using Validator = std::function<std::string(const Value&)>;

struct KeySpec {
  std::string_view key;
  Kind kind;
  unsigned experiments;
  Validator check;
};

Validator any() {
  return [](const Value&) { return std::string(); };
}

Validator real_range(double lo, double hi, bool lo_open, bool hi_open, std::string msg) {
  return [=](const Value& v) {
    const auto bad = [&](double x) {
      return !std::isfinite(x) || (lo_open ? x <= lo : x < lo) || (hi_open ? x >= hi : x > hi);
    };
    if (v.kind == Kind::Real) return bad(v.real) ? msg : std::string();
    for (double x : v.list) {
      if (bad(x)) return msg;
    }
    return std::string();
  };
}

Validator int_min(long long lo, std::string msg) {
  return [=](const Value& v) { return v.integer < lo ? msg : std::string(); };
}

Validator words(std::vector<std::string> allowed) {
  return [=](const Value& v) {
    if (std::find(allowed.begin(), allowed.end(), v.word) != allowed.end()) return std::string();
    std::string msg = "must be one of";
    for (const auto& a : allowed) msg += " " + a;
    return msg;
  };
}

Validator list_size(std::size_t n, Validator inner = any()) {
  return [=](const Value& v) {
    if (v.list.size() != n) return "must have " + std::to_string(n) + " entries";
    return inner(v);
  };
}

Validator nonzero_list() {
  return [](const Value& v) {
    for (double x : v.list) {
      if (!std::isfinite(x) || x == 0.0) return std::string("entries must be finite and nonzero");
    }
    return std::string();
  };
}

const double kInf = std::numeric_limits<double>::infinity();

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"seed", Kind::Integer, kAll, int_min(0, "seed must be >= 0")},
      {"threads", Kind::Integer, kAll, int_min(1, "threads must be >= 1")},
      {"method", Kind::Word, kTimed | kToy, words({"dp", "rk4"})},
      {"abs_tol", Kind::Real, kTimed | kToy, real_range(0, 1e-2, true, false, "abs_tol must lie in (0, 1e-2]")},
      {"rel_tol", Kind::Real, kTimed | kToy, real_range(0, 1e-2, true, false, "rel_tol must lie in (0, 1e-2]")},
      {"step", Kind::Real, kTimed | kToy, real_range(0, kInf, true, true, "step must be positive")},
      {"max_step", Kind::Real, kTimed | kToy, real_range(0, kInf, true, true, "max_step must be positive")},
      {"t_end", Kind::Real, kTimed, real_range(0, 1e6, true, false, "t_end must lie in (0, 1e6]")},
      {"observe_every", Kind::Real, kPv | kBlob, real_range(0, kInf, true, true, "observe_every must be positive")},
      {"domain", Kind::Word, bit(Experiment::PvRun) | bit(Experiment::BlobRun), words({"plane", "disk"})},
      {"intensities", Kind::RealList, bit(Experiment::PvRun) | kTriple, nonzero_list()},
      {"positions", Kind::RealList, bit(Experiment::PvRun), any()},
      {"n_vortices", Kind::Integer, bit(Experiment::PvRun), int_min(2, "n_vortices must be >= 2")},
      {"sides", Kind::RealList, kTriple, list_size(3, real_range(0, kInf, true, true, "sides must be positive"))},
      {"orientation", Kind::Word, kTriple, words({"ccw", "cw"})},
      {"scale", Kind::Real, bit(Experiment::PvSelfsim), real_range(0, kInf, true, true, "scale must be positive")},
      {"eps", Kind::RealList, kBlob | kToy, real_range(0, 0.5, true, false, "eps must lie in (0, 0.5]")},
      {"beta", Kind::Real, kToy | bit(Experiment::BlobThreeblob) | bit(Experiment::DiskBlob),
       real_range(0, 1, true, true, "beta must lie in (0,1)")},
      {"n_particles", Kind::Integer, kBlob, int_min(16, "n_particles must be >= 16")},
      {"circulation", Kind::Real, bit(Experiment::BlobRun) | bit(Experiment::DiskBlob),
       [](const Value& v) { return std::isfinite(v.real) && v.real != 0.0 ? std::string() : std::string("circulation must be finite and nonzero"); }},
      {"center", Kind::RealList, bit(Experiment::BlobRun), list_size(2)},
      {"profile", Kind::Word, kBlob, words({"uniform", "smooth"})},
      {"shape", Kind::Real, kBlob, real_range(0, 1e3, false, false, "shape must lie in [0, 1000]")},
      {"reg_length", Kind::Real, bit(Experiment::BlobRun), real_range(0, 1, true, true, "reg_length must lie in (0,1)")},
      {"h_list", Kind::RealList, kBlob, real_range(0, kInf, true, true, "h_list entries must be positive")},
      {"probes", Kind::Integer, bit(Experiment::BlobRun), int_min(1, "probes must be >= 1")},
      {"field", Kind::Word, kField, words({"zero", "rotation", "shear", "cellular"})},
      {"rate", Kind::Real, kField, real_range(-1e6, 1e6, false, false, "rate must be finite")},
      {"amp", Kind::Real, kField, real_range(-1e6, 1e6, false, false, "amp must be finite")},
      {"k", Kind::Real, kField, real_range(-1e6, 1e6, false, false, "k must be finite")},
      {"z_star", Kind::RealList, kToy, list_size(2)},
      {"samples", Kind::Integer, bit(Experiment::ToyRun), int_min(1, "samples must be >= 1")},
      {"step_ceiling", Kind::Real, kToy, real_range(0, kInf, true, true, "step_ceiling must be positive")},
      {"delta", Kind::RealList, bit(Experiment::FieldLipschitz), real_range(0, 1, true, true, "delta must lie in (0,1)")},
      {"sources", Kind::Integer, bit(Experiment::FieldLipschitz), int_min(1, "sources must be >= 1")},
      {"pairs", Kind::Integer, bit(Experiment::FieldLipschitz), int_min(1, "pairs must be >= 1")},
  };
  return keys;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<long long> parse_int(std::string_view s) {
  s = trim(s);
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<Value> parse_value(Kind kind, std::string_view text) {
  Value v;
  v.kind = kind;
  switch (kind) {
    case Kind::Real: {
      auto r = parse_real(text);
      if (!r) return std::nullopt;
      v.real = *r;
      return v;
    }
    case Kind::Integer: {
      auto r = parse_int(text);
      if (!r) return std::nullopt;
      v.integer = *r;
      return v;
    }
    case Kind::RealList: {
      std::size_t start = 0;
      while (true) {
        const auto comma = text.find(',', start);
        const auto item = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
        auto r = parse_real(item);
        if (!r) return std::nullopt;
        v.list.push_back(*r);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      return v;
    }
    case Kind::Word:
      v.word = std::string(trim(text));
      if (v.word.empty()) return std::nullopt;
      return v;
  }
  return std::nullopt;
}

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::Real: return "a real number";
    case Kind::Integer: return "an integer";
    case Kind::RealList: return "a comma-separated list of reals";
    case Kind::Word: return "a word";
  }
  return "";
}

}  // namespace

std::string_view to_string(Experiment e) {
  for (const auto& [ex, name] : kExperiments) {
    if (ex == e) return name;
  }
  return "unknown";
}

std::string Value::text() const {
  switch (kind) {
    case Kind::Real: return fmt(real);
    case Kind::Integer: return std::to_string(integer);
    case Kind::RealList: {
      std::string s;
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (i) s += ',';
        s += fmt(list[i]);
      }
      return s;
    }
    case Kind::Word: return word;
  }
  return {};
}

double ExperimentConfig::real(const std::string& key, double fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  if (it->second.kind == Kind::RealList) return it->second.list.front();
  return it->second.real;
}

long long ExperimentConfig::integer(const std::string& key, long long fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second.integer;
}

std::vector<double> ExperimentConfig::list(const std::string& key, std::vector<double> fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second.list;
}

std::string ExperimentConfig::word(const std::string& key, std::string fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second.word;
}

std::string ExperimentConfig::echo() const {
  std::string s = "experiment=" + std::string(to_string(experiment)) + "\n";
  for (const auto& [k, v] : values) s += k + "=" + v.text() + "\n";
  return s;
}

ParseResult parse_config(std::string_view text) {
  ParseResult res;
  auto& errs = res.errors;
  std::optional<Experiment> experiment;
  struct Raw {
    std::string key;
    std::string value;
    int line;
  };
  std::vector<Raw> raw;
  std::map<std::string, int> seen;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == text.npos ? text.npos : nl - pos);
    pos = nl == text.npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == line.npos) {
      errs.push_back({line_no, "expected key=value, got '" + std::string(line) + "'"});
      continue;
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) {
      errs.push_back({line_no, "empty key"});
      continue;
    }
    if (auto it = seen.find(key); it != seen.end()) {
      errs.push_back({line_no, "duplicate key '" + key + "' (first on line " + std::to_string(it->second) + ")"});
      continue;
    }
    seen[key] = line_no;
    if (key == "experiment") {
      for (const auto& [ex, name] : kExperiments) {
        if (value == name) experiment = ex;
      }
      if (!experiment) errs.push_back({line_no, "unknown experiment '" + value + "'"});
      continue;
    }
    raw.push_back({key, value, line_no});
  }
  if (!experiment && !seen.count("experiment")) errs.push_back({0, "missing required key 'experiment'"});

  for (const auto& r : raw) {
    const auto& keys = schema();
    const auto spec = std::find_if(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.key == r.key; });
    if (spec == keys.end()) {
      errs.push_back({r.line, "unknown key '" + r.key + "'"});
      continue;
    }
    if (experiment && !(spec->experiments & bit(*experiment))) {
      errs.push_back({r.line, "key '" + r.key + "' is not used by experiment " +
                                  std::string(to_string(*experiment))});
      continue;
    }
    auto v = parse_value(spec->kind, r.value);
    if (!v) {
      errs.push_back({r.line, "'" + r.key + "' must be " + std::string(kind_name(spec->kind))});
      continue;
    }
    if (auto msg = spec->check(*v); !msg.empty()) {
      errs.push_back({r.line, msg.find(r.key) == 0 ? msg : r.key + ": " + msg});
      continue;
    }
    res.config.values[r.key] = std::move(*v);
  }

  if (experiment) {
    res.config.experiment = *experiment;
    const auto& c = res.config;
    const auto line_of = [&](const std::string& k) { return seen.count(k) ? seen.at(k) : 0; };
    switch (*experiment) {
      case Experiment::PvRun:
        if (!c.has("n_vortices") && !(c.has("intensities") && c.has("positions")) &&
            !seen.count("intensities") && !seen.count("n_vortices")) {
          errs.push_back({0, "missing required key: pv-run needs intensities and positions, or n_vortices"});
        }
        if (c.has("intensities") && c.has("positions") &&
            c.list("positions", {}).size() != 2 * c.list("intensities", {}).size()) {
          errs.push_back({line_of("positions"), "positions must hold two coordinates per intensity"});
        }
        if (c.has("intensities") != c.has("positions") && !c.has("n_vortices")) {
          errs.push_back({0, "intensities and positions must be given together"});
        }
        break;
      case Experiment::PvSelfsim:
      case Experiment::BlobThreeblob:
        if (c.has("intensities") && c.list("intensities", {}).size() != 3) {
          errs.push_back({line_of("intensities"), "intensities must have 3 entries for a triple"});
        }
        break;
      case Experiment::BlobRun:
      case Experiment::ToyRun:
        if (c.has("eps") && c.list("eps", {}).size() != 1) {
          errs.push_back({line_of("eps"), "eps must be a single value for this experiment"});
        }
        break;
      default:
        break;
    }
  }
  std::stable_sort(errs.begin(), errs.end(), [](const ConfigError& a, const ConfigError& b) { return a.line < b.line; });
  return res;
}

bool RunManifest::all_pass() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string RunManifest::text() const {
  std::ostringstream os;
  os << "vortexlab " << version << "\n";
  os << "platform: " << platform << "\n";
  os << "wall_time_s: " << fmt(wall_time) << "\n";
  os << "[config]\n" << config_echo;
  os << "[outputs]\n";
  for (const auto& o : outputs) os << o << "\n";
  os << "[checks]\n";
  for (const auto& c : checks) {
    os << "CHECK " << c.name << " " << (c.pass ? "PASS" : "FAIL") << " value=" << fmt(c.value)
       << " limit=" << fmt(c.limit);
    if (!c.detail.empty()) os << " " << c.detail;
    os << "\n";
  }
  os << "RESULT " << (all_pass() ? "PASS" : "FAIL") << "\n";
  return os.str();
}

namespace {

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, const RunContext& ctx, RunManifest& m)
      : cfg_(cfg), ctx_(ctx), m_(m) {}

  void run() {
    switch (cfg_.experiment) {
      case Experiment::PvRun: return pv_run();
      case Experiment::PvSelfsim: return pv_selfsim();
      case Experiment::BlobRun: return blob_run();
      case Experiment::BlobThreeblob: return blob_threeblob();
      case Experiment::DiskBlob: return disk_blob();
      case Experiment::ToyRun: return toy_run();
      case Experiment::ToySweep: return toy_sweep();
      case Experiment::FieldLipschitz: return field_lipschitz();
    }
  }

 private:
  const ExperimentConfig& cfg_;
  const RunContext& ctx_;
  RunManifest& m_;

  /// Passes when value <= limit.
  void check_le(const std::string& name, double value, double limit, std::string detail = {}) {
    m_.checks.push_back({name, value <= limit, value, limit, std::move(detail)});
  }
  void check_true(const std::string& name, bool ok, std::string detail = {}) {
    m_.checks.push_back({name, ok, ok ? 1.0 : 0.0, 1.0, std::move(detail)});
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = ctx_.out_dir / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    m_.outputs.push_back(name);
  }

  std::uint64_t seed() const { return static_cast<std::uint64_t>(cfg_.integer("seed", 1)); }
  unsigned threads() const {
    return cfg_.has("threads") ? static_cast<unsigned>(cfg_.integer("threads", 1)) : ctx_.threads;
  }

  IntegratorConfig integrator(double tol) const {
    IntegratorConfig c;
    c.method = cfg_.word("method", "dp") == "rk4" ? Method::RK4Fixed : Method::EmbeddedAdaptive;
    c.abs_tol = cfg_.real("abs_tol", tol);
    c.rel_tol = cfg_.real("rel_tol", tol);
    c.step = cfg_.real("step", c.step);
    c.max_step = cfg_.real("max_step", c.max_step);
    return c;
  }

  Domain domain() const { return cfg_.word("domain", "plane") == "disk" ? Domain::UnitDisk : Domain::Plane; }

  fields::ExternalField field() const {
    const std::string f = cfg_.word("field", "zero");
    if (f == "rotation") return fields::ExternalField::rotation(cfg_.real("rate", 1.0));
    if (f == "shear") return fields::ExternalField::shear(cfg_.real("rate", 1.0));
    if (f == "cellular") return fields::ExternalField::cellular(cfg_.real("amp", 1.0), cfg_.real("k", 1.0));
    return fields::ExternalField::zero();
  }

  blob::Profile profile() const {
    blob::Profile p;
    if (cfg_.word("profile", "uniform") == "smooth") {
      p.kind = blob::ProfileKind::RadialSmooth;
      p.shape = cfg_.real("shape", 3.0);
    }
    return p;
  }

  double observe_every(double t_end) const {
    return cfg_.real("observe_every", std::min(0.05, t_end / 2000.0));
  }

  std::vector<double> h_list(double eps) const {
    return cfg_.list("h_list", {0.5 * eps, eps, 2.0 * eps, 4.0 * eps});
  }

  static double rel_change(double q0, double q1, double scale) {
    return std::abs(q1 - q0) / std::max(std::abs(q0), scale);
  }

  void pv_conservation(const pv::Trajectory& traj) {
    const auto c0 = pv::conserved(traj.snapshot(0));
    double dh = 0.0, dp = 0.0, dl = 0.0;
    double sh = 0.0, sp = 0.0, sl = 0.0;
    const auto& a = traj.intensities;
    const auto& z0 = traj.states.front();
    for (std::size_t i = 0; i < a.size(); ++i) {
      sp += std::abs(a[i]) * norm(z0[i]);
      sl += std::abs(a[i]) * norm2(z0[i]);
      for (std::size_t j = i + 1; j < a.size(); ++j) sh += std::abs(a[i] * a[j]) / kTwoPi;
    }
    for (std::size_t s = 1; s < traj.states.size(); ++s) {
      const auto c = pv::conserved(traj.snapshot(s));
      dh = std::max(dh, rel_change(c0.hamiltonian, c.hamiltonian, 1e-3 * sh));
      dp = std::max(dp, norm(c.impulse - c0.impulse) / std::max(norm(c0.impulse), 1e-3 * sp));
      dl = std::max(dl, rel_change(c0.angular_impulse, c.angular_impulse, 1e-3 * sl));
    }
    check_le("hamiltonian_rel_drift", dh, 1e-8);
    if (traj.domain == Domain::Plane) check_le("impulse_rel_drift", dp, 1e-8);
    check_le("angular_impulse_rel_drift", dl, 1e-8);
  }

  void pv_run() {
    pv::PointVortexSystem sys;
    sys.domain = domain();
    if (cfg_.has("n_vortices")) {
      const auto n = static_cast<std::size_t>(cfg_.integer("n_vortices", 3));
      fields::Uniform01 u(seed());
      const Disk region({0.0, 0.0}, sys.domain == Domain::UnitDisk ? 0.7 : 1.0);
      while (sys.size() < n) {
        const Vec2 z = u.in_disk(region);
        bool far = true;
        for (const Vec2& p : sys.positions) far = far && norm(z - p) >= 0.2;
        const double a = (u() < 0.5 ? -1.0 : 1.0) * (0.5 + u());
        if (!far) continue;
        sys.positions.push_back(z);
        sys.intensities.push_back(a);
      }
    } else {
      sys.intensities = cfg_.list("intensities", {});
      const auto pos = cfg_.list("positions", {});
      for (std::size_t i = 0; i + 1 < pos.size(); i += 2) sys.positions.push_back({pos[i], pos[i + 1]});
    }
    const double t_end = cfg_.real("t_end", 100.0);
    const auto traj = pv::integrate(sys, integrator(1e-12), t_end, cfg_.real("observe_every", t_end / 1000.0));
    write("trajectory.csv", pv::trajectory_csv(traj));
    check_true("no_close_approach", !traj.close_approach, "t_stop=" + fmt(traj.t_stop));
    pv_conservation(traj);
  }

  pv::SelfSimilarBuild triple() const {
    const auto a = cfg_.list("intensities", {2.0, 2.0, -1.0});
    const auto s = cfg_.list("sides", {std::sqrt(2.0), 1.0, std::sqrt(3.0)});
    const auto o = cfg_.word("orientation", "ccw") == "cw" ? pv::Orientation::Clockwise
                                                           : pv::Orientation::Counterclockwise;
    return pv::build_self_similar({a[0], a[1], a[2]}, {s[0], s[1], s[2]}, o, cfg_.real("scale", 1.0));
  }

  void pv_selfsim() {
    const auto b = triple();
    check_le("harmonic_condition", b.triple.harmonic_residual, 1e-12);
    check_le("moment_condition", b.triple.moment_residual, 1e-12);
    const double t_end = cfg_.real("t_end", 50.0);
    const auto traj = pv::integrate(b.system, integrator(1e-10), t_end, cfg_.real("observe_every", 0.05));
    write("trajectory.csv", pv::trajectory_csv(traj));
    check_true("no_close_approach", !traj.close_approach, "g=" + fmt(b.triple.growth_rate));
    check_le("growth_law_residual", pv::growth_law_residual(traj, b.triple), 1e-6,
             "g=" + fmt(b.triple.growth_rate));
    check_le("rate_identity_rel_error", pv::rate_identity_residual(traj), 1e-5);
  }

  void sandwich_full(std::span<const blob::DiagnosticsRecord> records, std::span<const double> h,
                     const std::string& tag) {
    std::size_t violations = 0;
    for (const auto& r : records) {
      for (const auto& d : r.blobs) {
        for (std::size_t k = 0; k < h.size(); ++k) {
          if (!(d.mollified_tail[k] <= d.tail_mass[k])) ++violations;
          for (std::size_t j = 0; j < h.size(); ++j) {
            if (h[j] == 0.5 * h[k] && !(d.tail_mass[k] <= d.mollified_tail[j])) ++violations;
          }
        }
      }
    }
    check_le("mass_sandwich" + tag, static_cast<double>(violations), 0.0);
  }

  void blob_run() {
    blob::BlobSpec spec;
    const auto c = cfg_.list("center", {0.0, 0.0});
    spec.center = {c[0], c[1]};
    spec.radius = cfg_.real("eps", 0.1);
    spec.circulation = cfg_.real("circulation", 1.0);
    spec.profile = profile();
    const auto n = static_cast<std::size_t>(cfg_.integer("n_particles", 4096));
    const auto ens = blob::sample_blob(spec, n, seed(), 0, cfg_.real("reg_length", 0.0));
    const Domain dom = domain();

    // Oracle probes outside the support, r in [1.5 eps, 4 eps].
    const auto probes = static_cast<std::size_t>(cfg_.integer("probes", 64));
    fields::Uniform01 u(seed() + 101);
    double oracle_err = 0.0;
    for (std::size_t k = 0; k < probes; ++k) {
      const double r = spec.radius * (1.5 + 2.5 * u());
      const double th = kTwoPi * u();
      const Vec2 dir{std::cos(th), std::sin(th)};
      const Vec2 x = spec.center + r * dir;
      if (!inside(dom, x)) continue;
      const Vec2 expect = blob::radial_profile_oracle(spec, r) * Vec2{-dir.c2, dir.c1};
      const Vec2 got = blob::ensemble_velocity(ens, x, Domain::Plane);
      oracle_err = std::max(oracle_err, norm(got - expect) / norm(expect));
    }
    const double oracle_limit = 1e-3 * std::max(1.0, 4096.0 / static_cast<double>(n));
    check_le("profile_oracle_rel_error", oracle_err, oracle_limit,
             "n=" + std::to_string(ens.size()));

    const double t_end = cfg_.real("t_end", 10.0);
    const auto f = field();
    const bool has_field = !std::holds_alternative<fields::Zero>(f.family());
    const auto h = h_list(spec.radius);
    blob::EvolveOptions opt;
    opt.h_list = h;
    opt.threads = threads();
    const auto cfg = integrator(1e-8);
    const auto res = blob::evolve_blobs({ens}, dom, has_field ? &f : nullptr, cfg, t_end, observe_every(t_end), opt);
    write("diagnostics.csv", blob::diagnostics_csv(res.records, h));
    write("ensemble_final.txt", blob::write_checkpoint(res.final_ensembles.front()));
    if (dom == Domain::UnitDisk) check_true("no_boundary_contact", !res.boundary_contact);
    sandwich_full(res.records, h, "");

    const auto& first = res.records.front().blobs.front();
    if (!has_field && dom == Domain::Plane) {
      double db = 0.0, di = 0.0;
      for (const auto& r : res.records) {
        const auto& d = r.blobs.front();
        db = std::max(db, norm(d.center_of_vorticity - first.center_of_vorticity));
        di = std::max(di, std::abs(d.moment_of_inertia - first.moment_of_inertia) / first.moment_of_inertia);
      }
      check_le("center_drift", db, 1e-8);
      check_le("inertia_rel_drift", di, 1e-6);
    } else if (has_field) {
      const fields::Companion comp(f, spec.center, t_end, integrator(1e-12));
      const auto l1 = blob::lemma1_check(res.records, [&f](double t) { return f.lipschitz_bound(t); },
                                         spec.radius, [&comp](double t) { return comp.at(t); });
      check_le("lemma1_inertia_ratio", l1.iee_margin, 1.0);
      check_le("lemma1_center_ratio", l1.bee_margin, 1.0);
    }
  }

  // Exit times per eps (descending), none treated as +infinity.
  void monotone_exit_check(const std::vector<double>& eps, const std::vector<blob::ConcentrationReport>& reps) {
    std::vector<std::size_t> order(eps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return eps[a] > eps[b]; });
    bool ok = true;
    std::string detail;
    for (std::size_t k = 1; k < order.size(); ++k) {
      const auto& prev = reps[order[k - 1]];
      const auto& cur = reps[order[k]];
      for (std::size_t b = 0; b < cur.exit_time.size(); ++b) {
        const double tp = prev.exit_time[b].value_or(kInf);
        const double tc = cur.exit_time[b].value_or(kInf);
        if (!(tc >= tp)) {
          ok = false;
          detail += " blob" + std::to_string(b) + "@eps=" + fmt(eps[order[k]]);
        }
      }
    }
    check_true("exit_time_nondecreasing", ok, detail.empty() ? "" : "violations:" + detail);
  }

  std::string concentration_csv(const std::vector<double>& eps, const std::vector<blob::ConcentrationReport>& reps) {
    CsvWriter w;
    w.header({"eps", "blob", "exit_time", "horizon"});
    for (std::size_t i = 0; i < eps.size(); ++i) {
      for (std::size_t b = 0; b < reps[i].exit_time.size(); ++b) {
        w.cell(eps[i]).cell(b);
        if (reps[i].exit_time[b]) {
          w.cell(*reps[i].exit_time[b]);
        } else {
          w.cell(std::string_view("none"));
        }
        w.cell(reps[i].horizon);
        w.end_row();
      }
    }
    return w.str();
  }

  std::size_t particles_for(double eps, double eps_max) const {
    const double n0 = static_cast<double>(cfg_.integer("n_particles", 1000));
    return std::max<std::size_t>(16, static_cast<std::size_t>(std::llround(n0 * (eps / eps_max) * (eps / eps_max))));
  }

  void blob_threeblob() {
    const auto b = triple();
    const double t_end = cfg_.real("t_end", 5.0);
    const double beta = cfg_.real("beta", 0.5);
    IntegratorConfig pcfg = integrator(1e-12);
    pcfg.abs_tol = pcfg.rel_tol = 1e-12;
    const auto ref = pv::integrate(b.system, pcfg, t_end, t_end);
    check_true("reference_complete", !ref.close_approach);
    const auto eps = cfg_.list("eps", {0.08, 0.04, 0.02});
    const double eps_max = *std::max_element(eps.begin(), eps.end());
    const double rmin = b.system.min_pairwise_distance();
    std::vector<blob::ConcentrationReport> reps;
    for (double e : eps) {
      if (!(e < 0.5 * rmin)) throw Error(ErrorCode::Validation, "eps " + fmt(e) + " is not below r_min/2");
      std::vector<blob::ParticleEnsemble> ens;
      for (std::size_t i = 0; i < 3; ++i) {
        blob::BlobSpec spec;
        spec.center = b.system.positions[i];
        spec.radius = e;
        spec.circulation = b.system.intensities[i];
        spec.profile = profile();
        ens.push_back(blob::sample_blob(spec, particles_for(e, eps_max), seed() + i, i));
      }
      const auto h = h_list(e);
      blob::EvolveOptions opt;
      opt.h_list = h;
      opt.threads = threads();
      opt.reference = [&ref](double t) { return ref.positions_at(t); };
      const auto res = blob::evolve_blobs(ens, Domain::Plane, nullptr, integrator(1e-7), t_end, observe_every(t_end), opt);
      write("diagnostics_eps" + fmt(e) + ".csv", blob::diagnostics_csv(res.records, h));
      sandwich_full(res.records, h, "_eps" + fmt(e));
      const std::vector<double> radii(3, e);
      reps.push_back(blob::concentration_time(res.records, radii, beta));
    }
    write("concentration.csv", concentration_csv(eps, reps));
    monotone_exit_check(eps, reps);
  }

  void disk_blob() {
    const double t_end = cfg_.real("t_end", 5.0);
    const double beta = cfg_.real("beta", 0.5);
    const auto eps = cfg_.list("eps", {0.08, 0.04, 0.02});
    const double eps_max = *std::max_element(eps.begin(), eps.end());
    std::vector<blob::ConcentrationReport> reps;
    for (double e : eps) {
      blob::BlobSpec spec;
      spec.radius = e;
      spec.circulation = cfg_.real("circulation", 1.0);
      spec.profile = profile();
      const auto ens = blob::sample_blob(spec, particles_for(e, eps_max), seed());
      const auto h = h_list(e);
      blob::EvolveOptions opt;
      opt.h_list = h;
      opt.threads = threads();
      opt.reference = [](double) { return std::vector<Vec2>{Vec2{}}; };
      const auto res = blob::evolve_blobs({ens}, Domain::UnitDisk, nullptr, integrator(1e-7), t_end, observe_every(t_end), opt);
      write("diagnostics_eps" + fmt(e) + ".csv", blob::diagnostics_csv(res.records, h));
      check_true("no_boundary_contact_eps" + fmt(e), !res.boundary_contact);
      sandwich_full(res.records, h, "_eps" + fmt(e));
      const std::vector<double> radii(1, e);
      reps.push_back(blob::concentration_time(res.records, radii, beta));
    }
    write("concentration.csv", concentration_csv(eps, reps));
    monotone_exit_check(eps, reps);
  }

  Vec2 z_star() const {
    const auto z = cfg_.list("z_star", {0.5, 0.25});
    return {z[0], z[1]};
  }

  void toy_run() {
    const auto f = field();
    auto run = toy::make_run(f, z_star(), cfg_.real("eps", 0.1), cfg_.real("beta", 0.5));
    run.t_end = cfg_.real("t_end", 0.0);
    const auto cfg = integrator(1e-12);
    toy::ToyOptions opt;
    opt.step_ceiling = cfg_.real("step_ceiling", opt.step_ceiling);
    const auto res = toy::run_toy(run, cfg, static_cast<std::size_t>(cfg_.integer("samples", 1000)), opt);
    write("toy.csv", toy::toy_csv(res.samples));
    const auto& s = res.summary;
    check_true("completed_inside_guard", s.completed, "t_stop=" + fmt(s.t_stop) + " last_xi=" + fmt(s.last_xi_norm));
    check_true("rho_sandwich", s.rho_sandwich);
    const double tol = std::max(cfg.abs_tol, cfg.rel_tol);
    if (std::holds_alternative<fields::Zero>(f.family())) {
      check_le("radius_dev", s.max_radius_dev, 1e-9);
    } else if (std::holds_alternative<fields::LinearRotation>(f.family())) {
      check_le("xi_norm_drift", s.max_xi_dev, 10.0 * tol);
      check_le("radius_drift", s.max_radius_dev, 1e-8);
    }
  }

  void toy_sweep() {
    const auto f = field();
    const double beta = cfg_.real("beta", 0.5);
    const auto eps = cfg_.list("eps", {0.2, 0.1, 0.05});
    const auto sw = toy::theorem6_sweep(f, beta, eps, integrator(1e-12), z_star());
    write("sweep.csv", toy::sweep_csv(sw));
    write("summary.txt", toy::sweep_summary(sw));
    check_true("all_runs_complete", sw.all_completed);
    if (sw.degenerate) {
      check_true("noise_floor", true, "degenerate: below noise floor");
      return;
    }
    m_.checks.push_back({"decay_exponent", sw.fitted_exponent >= (3.0 - beta) - 0.4, sw.fitted_exponent,
                         (3.0 - beta) - 0.4, "passes when value >= limit"});
    check_true("rho_drift_stable", sw.rho_stable, "C=" + fmt(sw.rho_c));
  }

  void field_lipschitz() {
    const auto deltas = cfg_.list("delta", {0.05, 0.1, 0.2, 0.4});
    const auto sources = static_cast<std::size_t>(cfg_.integer("sources", 8));
    const auto pairs = static_cast<std::size_t>(cfg_.integer("pairs", 4000));
    std::vector<double> lips;
    CsvWriter w;
    w.header({"delta", "lipschitz"});
    for (double d : deltas) {
      lips.push_back(fields::sampled_mirror_lipschitz(d, sources, pairs, seed()));
      w.cell(d).cell(lips.back());
      w.end_row();
    }
    write("lipschitz.csv", w.str());
    if (deltas.size() < 2) throw Error(ErrorCode::InvalidArgument, "field-lipschitz needs at least two delta values");
    const auto fit = fields::fit_power_law(deltas, lips);
    check_le("lipschitz_slope_error", std::abs(fit.slope - 2.0), 0.2, "slope=" + fmt(fit.slope));
  }
};

std::string platform_note(unsigned threads) {
  std::string s;
#if defined(__linux__)
  s = "linux";
#elif defined(__APPLE__)
  s = "macos";
#else
  s = "other";
#endif
#if defined(__x86_64__)
  s += " x86_64";
#elif defined(__aarch64__)
  s += " aarch64";
#endif
  s += " simd=" + std::string(kernels::to_string(kernels::active_backend()));
  s += " threads=" + std::to_string(threads);
  return s;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& cfg, const RunContext& ctx) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.config_echo = cfg.echo();
  m.version = std::string(kVersion);
  const unsigned threads =
      cfg.has("threads") ? static_cast<unsigned>(cfg.integer("threads", 1)) : std::max(1u, ctx.threads);
  m.platform = platform_note(threads);
  try {
    std::filesystem::create_directories(ctx.out_dir);
    Runner(cfg, ctx, m).run();
  } catch (const Error& e) {
    m.checks.push_back({"run", false, 0.0, 0.0,
                        "error=" + std::string(to_string(e.code())) + ": " + e.what()});
  } catch (const std::exception& e) {
    m.checks.push_back({"run", false, 0.0, 0.0, std::string("error: ") + e.what()});
  }
  m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.outputs.push_back("manifest.txt");
  std::ofstream out(ctx.out_dir / "manifest.txt", std::ios::binary);
  out << m.text();
  return m;
}

}  // namespace vortexlab::harness
