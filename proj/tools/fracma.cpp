// Command-line front end: solve, analyze, verify, oracle, sweep.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fracma/cli_runner.hpp"

using namespace fracma;

namespace {

nlohmann::json read_doc(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Config, "cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path);
}

struct Globals {
  std::string config;
  std::string out;
  int workers = 0;
  std::vector<std::string> overrides;
};

RunConfig make_config(const Globals& g, std::string fallback_config = {}) {
  const std::string path = g.config.empty() ? fallback_config : g.config;
  std::vector<std::string> ov = g.overrides;
  if (!g.out.empty()) ov.push_back("output.dir=\"" + g.out + "\"");
  if (g.workers > 0) ov.push_back("workers=" + std::to_string(g.workers));
  return resolve_config(read_doc(path), ov);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fracma: obstacle problems for the fractional Monge-Ampere operator"};
  app.require_subcommand(1);
  Globals g;
  auto add_globals = [&g](CLI::App* sub) {
    sub->add_option("--config", g.config, "config file (JSON, comments allowed)");
    sub->add_option("--out", g.out, "output directory");
    sub->add_option("--workers", g.workers, "worker thread cap")->check(CLI::PositiveNumber);
    sub->add_option("--override", g.overrides, "key.path=value, repeatable")->take_all();
  };

  auto* solve = app.add_subcommand("solve", "validate and solve the obstacle problem");
  add_globals(solve);
  auto* analyze = app.add_subcommand("analyze", "free-boundary analysis of solve artifacts");
  add_globals(analyze);
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  add_globals(verify);
  auto* sweep = app.add_subcommand("sweep", "convergence table over one config key");
  add_globals(sweep);
  auto* oracle = app.add_subcommand("oracle", "print reference values");
  std::string kind;
  std::vector<std::string> params;
  oracle->add_option("kind", kind, "gaussian-frac-laplacian | cell-weight | c_ns | radial-cone | affine | atlas-count")
      ->required();
  oracle->add_option("--param", params, "key=value, repeatable")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::Config);
  }

  return guarded(
      [&]() -> int {
        if (solve->parsed()) {
          cmd_solve(make_config(g), std::cout);
          return 0;
        }
        if (analyze->parsed()) {
          // a solve run leaves its resolved config next to the fields
          const std::string dir = g.out.empty() ? RunConfig{}.out_dir : g.out;
          const std::string stored = dir + "/config.json";
          const bool have_stored = g.config.empty() && std::ifstream(stored).good();
          const RunConfig cfg = make_config(g, have_stored ? stored : "");
          cmd_analyze(cfg, cfg.out_dir, std::cout);
          return 0;
        }
        if (verify->parsed()) {
          const SuiteReport rep = cmd_verify(make_config(g), std::cout);
          if (const auto* f = rep.first_failure()) {
            std::cerr << "FAIL " << f->id << '\n';
            return exit_code(ErrorKind::Invariant);
          }
          return 0;
        }
        if (sweep->parsed()) {
          std::vector<std::string> ov = g.overrides;
          if (!g.out.empty()) ov.push_back("output.dir=\"" + g.out + "\"");
          if (g.workers > 0) ov.push_back("workers=" + std::to_string(g.workers));
          cmd_sweep(read_doc(g.config), ov, std::cout);
          return 0;
        }
        cmd_oracle(kind, params, std::cout);
        return 0;
      },
      std::cerr);
}
