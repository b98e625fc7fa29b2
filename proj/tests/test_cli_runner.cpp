#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "fracma/cli_runner.hpp"

using namespace fracma;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fracma_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

RunConfig small_config(const fs::path& out) {
  RunConfig c = resolve_config(config_to_json(RunConfig{}), {"domain.m=128"});
  c.out_dir = out.string();
  return c;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(FRACMA_BINARY) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST_CASE("exit codes per failure category") {
  CHECK(exit_code(ErrorKind::Config) == 2);
  CHECK(exit_code(ErrorKind::Validation) == 3);
  CHECK(exit_code(ErrorKind::NonConvergence) == 4);
  CHECK(exit_code(ErrorKind::Invariant) == 5);
  CHECK(exit_code(ErrorKind::EmptyContact) == 6);
  std::ostringstream err;
  CHECK(guarded([]() -> int { fail(ErrorKind::Validation, "x"); }, err) == 3);
  CHECK(guarded([] { return 0; }, err) == 0);
}

TEST_CASE("solve and analyze write their artifacts reproducibly") {
  const fs::path dir = scratch("solve");
  const RunConfig cfg = small_config(dir);
  std::ostringstream log;
  cmd_solve(cfg, log);
  for (const char* f : {"report.json", "config.json", "u.csv", "u.bin", "v.csv", "operator.csv"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const std::string first = slurp(dir / "u.csv");
  const std::string first_op = slurp(dir / "operator.csv");
  cmd_solve(cfg, log);
  CHECK(slurp(dir / "u.csv") == first);
  CHECK(slurp(dir / "operator.csv") == first_op);

  cmd_analyze(cfg, dir.string(), log);
  for (const char* f : {"fb_report.json", "d_vs_v.csv", "theta.csv", "density.csv"}) {
    CHECK_MESSAGE(fs::exists(dir / f), f);
  }
  const auto rep = nlohmann::json::parse(slurp(dir / "fb_report.json"));
  CHECK(rep.contains("verdict_counts"));
  fs::remove_all(dir);
}

TEST_CASE("an inactive obstacle is an empty-contact error for analyze") {
  const fs::path dir = scratch("inactive");
  RunConfig cfg = small_config(dir);
  cfg.psi.level = 100.0;
  std::ostringstream log, err;
  cmd_solve(cfg, log);
  CHECK(guarded([&] {
          cmd_analyze(cfg, dir.string(), log);
          return 0;
        }, err) == 6);
  fs::remove_all(dir);
}

TEST_CASE("verify passes and singles out each injected defect") {
  std::ostringstream log;
  RunConfig cfg;
  cfg.out_dir = scratch("verify").string();
  const SuiteReport ok = cmd_verify(cfg, log);
  CHECK(ok.ok());
  CHECK(fs::exists(fs::path(cfg.out_dir) / "verify_report.json"));
  const std::pair<const char*, const char*> cases[] = {{"flip_weight", "stencil.positivity"},
                                                       {"bad_determinant", "atlas.unit_determinant"},
                                                       {"skip_projection", "obstacle.feasibility"}};
  for (const auto& [mutation, id] : cases) {
    cfg.mutation = mutation;
    const SuiteReport bad = cmd_verify(cfg, log);
    REQUIRE(bad.first_failure() != nullptr);
    CHECK(bad.first_failure()->id == id);
  }
  fs::remove_all(cfg.out_dir);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("binary");
  const std::string out = " --out " + dir.string();
  CHECK(run_binary("solve" + out + " --override order.s=0.4") == 2);
  CHECK(run_binary("solve" + out + " --override domain.bogus=1") == 2);
  CHECK(run_binary("oracle no-such-oracle") == 2);
  CHECK(run_binary("oracle c_ns --param n=2 --param s=0.75") == 0);
  CHECK(run_binary("oracle c_ns --param n=2 --param s=0.5") == 2);
  CHECK(run_binary("verify" + out + " --override verify.mutation=skip_projection") == 5);
  {
    std::ofstream(dir / "broken.json") << "{\n  \"order\": \n";
  }
  CHECK(run_binary("solve --config " + (dir / "broken.json").string() + out) == 2);
  fs::remove_all(dir);
}
