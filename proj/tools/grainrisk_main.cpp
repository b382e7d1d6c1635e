#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "grainrisk/pipeline.hpp"

namespace {

grainrisk::RunConfig load_config(const std::string& path, std::uint64_t* seed,
                                 int* threads, std::string* out_dir) {
  grainrisk::RunConfig cfg = grainrisk::parse_run_config(path);
  if (seed) cfg.seed = *seed;
  if (threads) cfg.threads = *threads;
  if (out_dir && !out_dir->empty()) cfg.out_dir = *out_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale grain-market risk spillover analytics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  bool threads_set = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "run configuration file")->required();
    cmd->add_option("-o,--out", out_dir, "output root (overrides config and GRAINRISK_OUT)");
    cmd->add_option("--seed", seed, "master seed (overrides config)")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--threads", threads, "worker cap; 0 = all cores")
        ->each([&](const std::string&) { threads_set = true; });
  };

  CLI::App* stats = app.add_subcommand("stats", "descriptive statistics of returns");
  CLI::App* decompose = app.add_subcommand("decompose", "ICEEMDAN decomposition");
  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "run-length GMM component reconstruction");
  CLI::App* connect = app.add_subcommand("connect", "static and rolling connectedness");
  CLI::App* network = app.add_subcommand("network", "net spillover network export");
  CLI::App* drivers = app.add_subcommand("drivers", "random-forest factor analysis");
  CLI::App* all = app.add_subcommand("all", "full pipeline");
  for (CLI::App* cmd : {stats, decompose, reconstruct, connect, network, drivers, all})
    add_common(cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    grainrisk::RunConfig cfg = load_config(config_path, seed_set ? &seed : nullptr,
                                           threads_set ? &threads : nullptr, &out_dir);
    if (stats->parsed()) grainrisk::cmd_stats(cfg);
    if (decompose->parsed()) grainrisk::cmd_decompose(cfg);
    if (reconstruct->parsed()) grainrisk::cmd_reconstruct(cfg);
    if (connect->parsed()) grainrisk::cmd_connect(cfg);
    if (network->parsed()) grainrisk::cmd_network(cfg);
    if (drivers->parsed()) grainrisk::cmd_drivers(cfg);
    if (all->parsed()) grainrisk::cmd_all(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
