// vortexlab <config-path> [--out DIR] [--threads N] [--seed S]
//
// Exit codes: 0 all checks pass, 1 any check fails, 2 config or usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "vortexlab/harness.hpp"

namespace hx = vortexlab::harness;

int main(int argc, char** argv) {
  CLI::App app{"Vortex concentration experiments"};
  std::string config_path;
  std::string out_dir = ".";
  unsigned threads = 0;
  long long seed = -1;
  app.add_option("config", config_path, "Experiment config (flat key=value)")->required();
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", threads, "Worker threads for blob runs (default: VORTEXLAB_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "Override the config seed")->check(CLI::NonNegativeNumber);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << config_path << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();

  std::string text = buf.str();
  auto parsed = hx::parse_config(text);
  if (!parsed.ok()) {
    for (const auto& e : parsed.errors) {
      std::cerr << config_path;
      if (e.line > 0) std::cerr << ":" << e.line;
      std::cerr << ": " << e.message << "\n";
    }
    return 2;
  }
  if (seed >= 0) {
    hx::Value v;
    v.kind = hx::Kind::Integer;
    v.integer = seed;
    parsed.config.values["seed"] = v;
  }

  hx::RunContext ctx;
  ctx.out_dir = out_dir;
  if (threads == 0) {
    if (const char* env = std::getenv("VORTEXLAB_THREADS")) {
      char* end = nullptr;
      const long n = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || n < 1) {
        std::cerr << "error: VORTEXLAB_THREADS must be a positive integer\n";
        return 2;
      }
      threads = static_cast<unsigned>(n);
    }
  }
  ctx.threads = threads == 0 ? 1 : threads;
  if (threads != 0) parsed.config.values.erase("threads");

  const auto manifest = hx::run_experiment(parsed.config, ctx);
  std::cout << manifest.text();
  return manifest.all_pass() ? 0 : 1;
}
