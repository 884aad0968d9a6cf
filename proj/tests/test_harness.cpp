#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "vortexlab/harness.hpp"

using namespace vortexlab::harness;
namespace fs = std::filesystem;

namespace {

const Check* find(const RunManifest& m, const std::string& name) {
  for (const auto& c : m.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vortexlab_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VORTEXLAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("valid sweep config") {
    const auto r = parse_config("experiment=toy-sweep\nbeta=0.5\neps=0.2,0.1,0.05\nfield=cellular\namp=1\nk=1");
    REQUIRE(r.ok());
    CHECK(r.config.experiment == Experiment::ToySweep);
    CHECK(r.config.list("eps", {}) == std::vector<double>{0.2, 0.1, 0.05});
    CHECK(r.config.real("amp", 0.0) == 1.0);
    CHECK(r.config.word("field", "") == "cellular");
  }

  TEST_CASE("beta out of range") {
    const auto r = parse_config("experiment=toy-sweep\nbeta=1.5");
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].line == 2);
    CHECK(r.errors[0].message.find("beta must lie in (0,1)") != std::string::npos);
  }

  TEST_CASE("every error is reported with its line") {
    const auto r = parse_config("experiment=toy-run\nbogus=1\neps=0.1\neps=0.2\nbeta=x\nnoequals\nsides=1,1,1");
    REQUIRE(r.errors.size() == 5);
    CHECK(r.errors[0].line == 2);
    CHECK(r.errors[0].message.find("unknown key 'bogus'") != std::string::npos);
    CHECK(r.errors[1].line == 4);
    CHECK(r.errors[1].message.find("duplicate") != std::string::npos);
    CHECK(r.errors[2].line == 5);
    CHECK(r.errors[3].line == 6);
    CHECK(r.errors[4].line == 7);
  }

  TEST_CASE("missing keys") {
    const auto none = parse_config("eps=0.1");
    REQUIRE_FALSE(none.ok());
    CHECK(none.errors.back().message.find("missing required key 'experiment'") != std::string::npos);
    const auto pv = parse_config("experiment=pv-run\nt_end=1");
    REQUIRE_FALSE(pv.ok());
    CHECK(pv.errors[0].message.find("missing required key") != std::string::npos);
    const auto bad = parse_config("experiment=nonsense");
    REQUIRE_FALSE(bad.ok());
    CHECK(bad.errors[0].line == 1);
  }

  TEST_CASE("self-similar preset parses and echoes") {
    const auto r = parse_config(
        "experiment=pv-selfsim\nintensities=2,2,-1\nsides=1.4142135623730951,1,1.7320508075688772");
    REQUIRE(r.ok());
    const auto again = parse_config(r.config.echo());
    REQUIRE(again.ok());
    CHECK(again.config == r.config);
  }

  TEST_CASE("echo round trip keeps every value") {
    const std::string text =
        "# comment\nexperiment=blob-run\neps=0.05\nn_particles=256\ncenter=0.1,-0.2\nprofile=smooth\nshape=2.5\n"
        "t_end=0.5\nfield=rotation\nrate=0.7\nseed=3\n";
    const auto r = parse_config(text);
    REQUIRE(r.ok());
    const auto again = parse_config(r.config.echo());
    REQUIRE(again.ok());
    CHECK(again.config == r.config);
    CHECK(r.config.integer("n_particles", 0) == 256);
    CHECK(r.config.list("center", {}) == std::vector<double>{0.1, -0.2});
  }

  TEST_CASE("self-similar run passes with zero condition residuals") {
    const auto r = parse_config(
        "experiment=pv-selfsim\nintensities=2,2,-1\nsides=1.4142135623730951,1,1.7320508075688772\nt_end=5");
    REQUIRE(r.ok());
    const auto dir = scratch("selfsim");
    const auto m = run_experiment(r.config, {dir, 1});
    CHECK(m.all_pass());
    REQUIRE(find(m, "harmonic_condition"));
    CHECK(find(m, "harmonic_condition")->value == 0.0);
    CHECK(find(m, "growth_law_residual")->pass);
    CHECK(fs::exists(dir / "manifest.txt"));
    const auto text = slurp(dir / "manifest.txt");
    CHECK(text.find("RESULT PASS") != std::string::npos);
    CHECK(text.find("[config]\nexperiment=pv-selfsim") != std::string::npos);
  }

  TEST_CASE("toy run with a rotation field keeps the radius") {
    const auto r = parse_config("experiment=toy-run\nfield=rotation\nrate=1\neps=0.1\nbeta=0.5\nsamples=50");
    REQUIRE(r.ok());
    const auto m = run_experiment(r.config, {scratch("toyrot"), 1});
    REQUIRE(find(m, "radius_drift"));
    CHECK(find(m, "radius_drift")->pass);
    CHECK(find(m, "completed_inside_guard")->pass);
    CHECK(find(m, "xi_norm_drift") != nullptr);
  }

  TEST_CASE("small blob run passes its oracle") {
    const auto r = parse_config("experiment=blob-run\neps=0.1\nn_particles=4096\nt_end=0.02\nobserve_every=0.01");
    REQUIRE(r.ok());
    const auto m = run_experiment(r.config, {scratch("blob"), 1});
    REQUIRE(find(m, "profile_oracle_rel_error"));
    CHECK(find(m, "profile_oracle_rel_error")->pass);
    CHECK(find(m, "profile_oracle_rel_error")->limit == 1e-3);
    CHECK(find(m, "mass_sandwich")->pass);
    CHECK(m.all_pass());
  }

  TEST_CASE("module errors become failing checks") {
    auto r = parse_config("experiment=pv-run\nintensities=1,1\npositions=0,0,0,0");
    REQUIRE(r.ok());
    const auto m = run_experiment(r.config, {scratch("err"), 1});
    CHECK_FALSE(m.all_pass());
    REQUIRE(find(m, "run"));
    CHECK(find(m, "run")->detail.find("error") != std::string::npos);
  }

  TEST_CASE("command line exit codes") {
    const auto dir = scratch("cli");
    const std::string cfg_dir = VORTEXLAB_CONFIG_DIR;
    CHECK(run_cli(cfg_dir + "/selfsim.cfg --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "manifest.txt"));
    CHECK(run_cli("") == 2);
    CHECK(run_cli((dir / "missing.cfg").string()) == 2);
    {
      std::ofstream bad(dir / "bad.cfg");
      bad << "experiment=toy-sweep\nbeta=1.5\n";
    }
    CHECK(run_cli((dir / "bad.cfg").string()) == 2);
    {
      std::ofstream failing(dir / "fail.cfg");
      failing << "experiment=pv-run\nintensities=1,1\npositions=0,0,0,0\n";
    }
    CHECK(run_cli((dir / "fail.cfg").string() + " --out " + dir.string()) == 1);
    CHECK(run_cli(cfg_dir + "/selfsim.cfg --threads 0 --out " + dir.string()) == 2);
  }

  TEST_CASE("environment thread count is validated") {
    const auto dir = scratch("env");
    const std::string cfg = std::string(VORTEXLAB_CONFIG_DIR) + "/selfsim.cfg --out " + dir.string();
    const auto sh = [&](const std::string& env) {
      const std::string cmd = env + " " + VORTEXLAB_CLI + " " + cfg + " >/dev/null 2>&1";
      const int rc = std::system(cmd.c_str());
      return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    CHECK(sh("VORTEXLAB_THREADS=abc") == 2);
    CHECK(sh("VORTEXLAB_THREADS=2") == 0);
  }
}
