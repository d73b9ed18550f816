#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

// Exit codes: 0 success, 1 check failure, 2 config error, 3 IO error.
int dispatch(const std::string& cmd, const std::string& config_path, const std::string& out_dir,
             bool have_seed, std::uint64_t seed, bool inject_fault) {
  using namespace faseg::cli;
  CliConfig cfg = config_path.empty() ? CliConfig{} : load_cli_config(config_path);
  if (have_seed) cfg.decoder.seed = seed;
  const std::string out = out_dir.empty() ? cfg.out_dir : out_dir;
  if (cmd == "demo") return run_demo(cfg, out, std::cout);
  if (cmd == "gradcheck") return run_gradcheck(cfg, inject_fault, std::cout);
  if (cmd == "flops") return run_flops(cfg, std::cout);
  if (cmd == "bench") return run_bench(cfg, out, std::cout);
  throw faseg::ConfigError("unknown command '" + cmd + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic decoder playground: dynamic positional queries, "
               "sparse high-resolution cross-attention, cost model, gradient checks"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool inject_fault = false;

  app.add_option("--config", config_path, "JSON config file (defaults apply when omitted)");
  app.add_option("--out", out_dir, "output directory (overrides config out_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "seed override");

  auto* demo = app.add_subcommand("demo", "run the decoder and write report.json");
  auto* gradcheck = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
  gradcheck->add_flag("--inject-fault", inject_fault,
                      "corrupt one analytic gradient (harness self-test)");
  auto* flops = app.add_subcommand("flops", "print the dense vs sparse cost report");
  auto* bench = app.add_subcommand("bench", "time dense vs sparse forward, write bench.json");

  CLI11_PARSE(app, argc, argv);

  std::string cmd;
  for (const auto* sub : {demo, gradcheck, flops, bench})
    if (sub->parsed()) cmd = sub->get_name();

  try {
    return dispatch(cmd, config_path, out_dir, seed_opt->count() > 0, seed, inject_fault);
  } catch (const faseg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const faseg::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
