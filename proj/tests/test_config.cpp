#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <string>

#include "fracma/config.hpp"

using namespace fracma;
using nlohmann::json;

namespace {

std::string config_error(const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  return "";
}

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("config round-trips bit-exactly") {
  RunConfig c;
  c.s = 0.6180339887498949;
  c.psi.level = 1.0 / 3.0;
  c.solver.tol_residual = 3.7e-9;
  c.domain = Domain::make(2, 5.5, 48);
  const json j = config_to_json(c);
  const RunConfig back = config_from_json(j);
  CHECK(config_to_json(back).dump() == j.dump());
  CHECK(back.s == c.s);
  CHECK(back.psi.level == c.psi.level);
  CHECK(back.domain == c.domain);
  // and through text
  const json again = parse_config_text(j.dump(2));
  CHECK(config_to_json(config_from_json(again)).dump() == j.dump());
}

TEST_CASE("unknown keys and type mismatches name the field") {
  json j = config_to_json(RunConfig{});
  json bad = j;
  bad["domain"]["mm"] = 3;
  CHECK(contains(config_error([&] { config_from_json(bad); }), "domain.mm"));
  bad = j;
  bad["solver"]["tol_residual"] = "small";
  CHECK(contains(config_error([&] { config_from_json(bad); }), "tol_residual"));
  bad = j;
  bad["frobnicate"] = true;
  CHECK(contains(config_error([&] { config_from_json(bad); }), "frobnicate"));
}

TEST_CASE("syntax errors report line and column") {
  const std::string text = "{\n  \"order\": {\"s\": 0.7},\n  \"domain\": }\n";
  const std::string msg = config_error([&] { parse_config_text(text, "run.json"); });
  CHECK(contains(msg, "run.json:3:"));
  CHECK(contains(msg, "syntax error"));
}

TEST_CASE("overrides") {
  json doc = config_to_json(RunConfig{});
  apply_override(doc, "order.s=0.8");
  apply_override(doc, "domain.m=64");
  apply_override(doc, "psi.family=phi_plus_bump");
  apply_override(doc, "verify.battery=full");
  const RunConfig c = resolve_config(doc, {"solver.tol_residual=1e-9"});
  CHECK(c.s == 0.8);
  CHECK(c.domain.m == 64);
  CHECK(c.psi.family == PsiSpec::Family::PhiPlusBump);
  CHECK(c.battery == "full");
  CHECK(c.solver.tol_residual == 1e-9);
  CHECK(contains(config_error([&] { resolve_config(json::object(), {"domain.nope=1"}); }), "domain.nope"));
  CHECK_FALSE(config_error([&] { resolve_config(json::object(), {"novalue"}); }).empty());
}

TEST_CASE("semantic validation") {
  CHECK_FALSE(config_error([] { resolve_config(json::object(), {"order.s=0.4"}); }).empty());
  CHECK_FALSE(config_error([] { resolve_config(json::object(), {"order.s=1.0"}); }).empty());
  CHECK_FALSE(config_error([] { resolve_config(json::object(), {"workers=0"}); }).empty());
  CHECK_FALSE(config_error([] { resolve_config(json::object(), {"verify.mutation=unplug"}); }).empty());
  CHECK_FALSE(config_error([] { resolve_config(json::object(), {"analysis.synthetic.kind=half_plane"}); }).empty());
  CHECK_FALSE(config_error([] { resolve_config(json::object(), {"domain.m=7"}); }).empty());
  CHECK_NOTHROW(resolve_config(json::object(), {}));
}
