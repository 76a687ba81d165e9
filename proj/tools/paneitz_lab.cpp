// paneitz-lab <config> [--out DIR] [--workers N] [--seed S]
//
// Precedence for out/workers: command line, then PANEITZ_LAB_OUT /
// PANEITZ_LAB_WORKERS, then the config file.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "paneitz/cli/run.hpp"

namespace {

int fail(const std::exception& e, const std::string& out_dir) {
  const auto j = paneitz::cli::error_json(e);
  std::cerr << j.dump() << "\n";
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream os(std::filesystem::path(out_dir) / "error.json");
    if (os) os << j.dump(2) << "\n";
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for fourth-order singular Paneitz-type equations"};
  std::string config_path;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  app.add_option("config", config_path, "experiment config (key = value)")->required();
  app.add_option("--out", out, "output directory");
  app.add_option("--workers", workers, "sweep worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "seed for randomized diagnostics");
  app.set_version_flag("--version", PANEITZ_LAB_VERSION);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::string out_dir = out.value_or("");
  try {
    paneitz::cli::ExperimentConfig cfg = paneitz::cli::load_config(config_path);
    if (const char* env = std::getenv("PANEITZ_LAB_OUT"); env && *env) cfg.out = env;
    if (const char* env = std::getenv("PANEITZ_LAB_WORKERS"); env && *env) {
      const int w = std::atoi(env);
      if (w < 1) throw paneitz::InvalidArgument(std::string("PANEITZ_LAB_WORKERS must be a positive integer, got ") + env);
      cfg.workers = w;
    }
    if (out) cfg.out = *out;
    if (workers) cfg.workers = *workers;
    if (seed) cfg.seed = *seed;
    out_dir = cfg.out;

    const auto man = paneitz::cli::run(cfg);
    std::cout << man.status << " (exit " << man.exit_code << "), " << man.artifacts.size() << " artifacts in " << cfg.out
              << "\n";
    if (man.exit_code == 2) {
      const auto err = std::filesystem::path(cfg.out) / "error.json";
      if (std::ifstream is(err); is) std::cerr << is.rdbuf() << "\n";
    }
    return man.exit_code;
  } catch (const std::exception& e) {
    return fail(e, out_dir);
  }
}
