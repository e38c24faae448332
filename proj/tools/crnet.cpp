// Command-line entry point: runs one experiment kind against a JSON config
// and writes CSV reports. Exit codes: 0 all checks passed, 1 check failure,
// 2 usage or config error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "crnet/experiments.hpp"

namespace {

int run(const std::string& kind, const std::string& config_path,
        std::uint64_t seed, bool seed_set, const std::string& out_dir,
        bool out_set) {
  crnet::ExperimentConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::fprintf(stderr, "error: cannot open config %s\n", config_path.c_str());
      return 2;
    }
    nlohmann::json j;
    try {
      in >> j;
      cfg = j.get<crnet::ExperimentConfig>();
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: bad config: %s\n", e.what());
      return 2;
    }
  }
  cfg.kind = kind;
  if (seed_set) cfg.seed = seed;
  if (out_set) cfg.out_dir = out_dir;

  try {
    const crnet::ExperimentReport rep = crnet::run_experiment(cfg);
    for (const auto& c : rep.checks) {
      std::printf("[%s] %-40s measured=%.6g threshold=%.6g %s\n",
                  c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured,
                  c.threshold, c.note.c_str());
    }
    for (const auto& [name, _] : rep.files) {
      std::printf("wrote %s/%s\n", cfg.out_dir.c_str(), name.c_str());
    }
    return rep.ok() ? 0 : 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"complex-reaction network laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false, out_set = false;

  const std::vector<std::string> kinds{"probe",    "construct", "separation",
                                       "flow",     "symmetry",  "density"};
  for (const auto& kind : kinds) {
    auto* sub = app.add_subcommand(kind);
    sub->add_option("--config", config_path, "JSON config path");
    sub->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--out", out_dir, "output directory")->each(
        [&](const std::string&) { out_set = true; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string kind = app.get_subcommands().front()->get_name();
  return run(kind, config_path, seed, seed_set, out_dir, out_set);
}
