#include <ostream>

#include <CLI11.hpp>
#include <omp.h>

#include "ise/error.hpp"
#include "ise/pipeline.hpp"

namespace ise::pipeline {

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Company goal scoring from employee reviews", "ise"};
  std::string command;
  std::string config;
  Overrides ov;
  std::string out_dir;
  int threads = 0;
  std::uint64_t seed = 0;
  std::uint32_t dim = 0;
  app.add_option("command", command, "Stage to run")->required()->check(CLI::IsMember(commands()));
  app.add_option("-c,--config", config, "Pipeline config (JSON)")->required();
  auto* o_threads = app.add_option("--threads", threads, "OpenMP threads (0: default)");
  auto* o_seed = app.add_option("--seed", seed, "Seed for stub embeddings and RBO baselines");
  auto* o_out = app.add_option("--out", out_dir, "Output directory");
  auto* o_dim = app.add_option("--dim", dim, "Stub embedding dimension");
  app.add_flag("--strict", ov.strict, "Fail on the first malformed record");
  app.set_version_flag("--version", std::string(kVersion));

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  if (*o_threads) ov.threads = threads;
  if (*o_seed) ov.seed = seed;
  if (*o_out) ov.out_dir = out_dir;
  if (*o_dim) ov.dim = dim;

  try {
    const auto cfg = load_config(config, ov);
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
    run_command(command, cfg, err);
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace ise::pipeline
