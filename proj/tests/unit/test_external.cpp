#include <doctest.h>

#include "bodse/bo_loop.hpp"
#include "bodse/error.hpp"
#include "bodse/evaluators.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace bodse;

namespace {

const std::vector<ParseRule> kRules{{"area", "AREA"}, {"energy", "ENERGY"}, {"delay", "DELAY"}};

RawAssignment point() {
  return {{"max_delay", 0.1},    {"clock_period", 1.5},     {"pin_load", 0.004},
          {"output_delay", 0.3}, {"core_utilization", 0.8}, {"core_aspect_ratio", 2}};
}

ScriptTemplate stub(const std::string& body) { return {body, kRules}; }

const std::vector<std::string> kSh{"/bin/sh", "{{script}}"};

}  // namespace

TEST_CASE("render_script") {
  ScriptTemplate t{"set_max_delay {{max_delay}}", {}};
  CHECK(render_script(t, {{"max_delay", 0.1}}) == "set_max_delay 0.1");
  CHECK(render_script({"r={{core_aspect_ratio}}", {}}, {{"core_aspect_ratio", 2}}) == "r=2");
  CHECK(render_script({"{{ pin_load }}/{{pin_load}}", {}}, {{"pin_load", 0.0042}}) == "0.0042/0.0042");
  CHECK_THROWS_AS(render_script({"x {{foo}}", {}}, point()), UnresolvedPlaceholder);
  CHECK(format_value(-3) == "-3");
  CHECK(format_value(1.0 / 3) == "0.333333");
}

TEST_CASE("validate_template") {
  const auto space = ParameterSpace::table1();
  CHECK_NOTHROW(validate_template({"{{max_delay}} {{core_aspect_ratio}}", kRules}, space, {"area", "delay"}));
  CHECK_THROWS_AS(validate_template({"{{foo}}", kRules}, space, {}), UnresolvedPlaceholder);
  CHECK_THROWS_AS(validate_template({"", {{"area", "A"}}}, space, {"delay"}), UnknownMetric);
  CHECK(placeholders("{{a}} {{b}} {{a}}") == std::vector<std::string>{"a", "b"});
}

TEST_CASE("parse_metrics") {
  const std::string out = "Report\n  AREA: 1792.5 um2\nENERGY = 6100\nDELAY,356\nDELAY 999\n";
  const auto m = parse_metrics(out, kRules);
  REQUIRE(m);
  CHECK(m->at("area") == 1792.5);
  CHECK(m->at("energy") == 6100);
  CHECK(m->at("delay") == 356);

  std::string missing;
  CHECK_FALSE(parse_metrics("AREA 1\nENERGY 2\n", kRules, &missing));
  CHECK(missing == "delay");

  const auto skip = parse_metrics("AREA total 12 units\n", {{"area", "AREA"}});
  REQUIRE(skip);
  CHECK(skip->at("area") == 12);
  CHECK(parse_metrics("AREA 1e3\r\n", {{"area", "AREA"}})->at("area") == 1000);
  CHECK_FALSE(parse_metrics("AREA n/a\n", {{"area", "AREA"}}));
}

TEST_CASE("eval_external") {
  testing::TempDir tmp("ext");

  SUBCASE("round trip") {
    const auto e = eval_external(stub("echo 'AREA 1792'\necho 'ENERGY 6100'\necho 'DELAY 356'\n"), kSh,
                                 tmp / "ok", 30, point());
    REQUIRE(e.ok());
    CHECK(e.metrics == MetricVector{{"area", 1792}, {"energy", 6100}, {"delay", 356}});
    CHECK(std::filesystem::exists(tmp / "ok" / "script.gen"));
    CHECK(oracle::slurp(tmp / "ok" / "stdout.log").find("DELAY 356") != std::string::npos);
  }
  SUBCASE("script sees rendered parameters") {
    const auto e = eval_external(stub("echo AREA {{core_aspect_ratio}}\necho ENERGY {{max_delay}}\necho DELAY 1\n"),
                                 kSh, tmp / "p", 30, point());
    REQUIRE(e.ok());
    CHECK(e.metrics.at("area") == 2);
    CHECK(e.metrics.at("energy") == 0.1);
  }
  SUBCASE("nonzero exit") {
    const auto e = eval_external(stub("echo 'AREA 1792'\nexit 1\n"), kSh, tmp / "exit", 30, point());
    CHECK_FALSE(e.ok());
    CHECK(e.failure == FailureKind::spawn_failure);
    CHECK(e.metrics.empty());
    CHECK(e.reason.find("status 1") != std::string::npos);
  }
  SUBCASE("timeout") {
    const auto e = eval_external(stub("sleep 20\n"), kSh, tmp / "slow", 0.3, point());
    CHECK(e.failure == FailureKind::timeout);
    CHECK(e.wall_time < 5.0);
  }
  SUBCASE("missing metric") {
    const auto e = eval_external(stub("echo 'AREA 1792'\necho 'ENERGY 6100'\n"), kSh, tmp / "miss", 30, point());
    CHECK(e.failure == FailureKind::parse_failure);
    CHECK(e.reason.find("delay") != std::string::npos);
  }
  SUBCASE("missing executable") {
    const auto e = eval_external(stub(""), {"/nonexistent/tool"}, tmp / "none", 30, point());
    CHECK(e.failure == FailureKind::spawn_failure);
    CHECK(e.reason.find("cannot execute") != std::string::npos);
  }
  SUBCASE("stderr is captured separately") {
    const auto e = eval_external(stub("echo 'AREA 1' >&2\necho 'AREA 2'\necho ENERGY 3\necho DELAY 4\n"), kSh,
                                 tmp / "err", 30, point());
    REQUIRE(e.ok());
    CHECK(e.metrics.at("area") == 2);
    CHECK(oracle::slurp(tmp / "err" / "stderr.log") == "AREA 1\n");
  }
}

TEST_CASE("external evaluator in a BO run keeps going after failures") {
  testing::TempDir tmp("extbo");
  // Fails on every third invocation by counting files in the parent dir.
  const std::string body =
      "n=$(ls -d ../iter_* | wc -l)\n"
      "case $((n % 3)) in\n"
      "  0) exit 1;;\n"
      "esac\n"
      "echo AREA {{clock_period}}\n"
      "echo ENERGY 6100\necho DELAY 356\n";
  ExternalEvaluator ev(stub(body), kSh, tmp.path(), 30);
  BoConfig cfg;
  cfg.init_samples = 4;
  cfg.max_iterations = 3;
  cfg.objective = ObjectiveSpec::single_metric("delay");
  const auto log = run(ParameterSpace::table1(), ev, cfg);
  CHECK(log.records.size() == 7);
  std::size_t failed = 0;
  for (const auto& r : log.records) failed += !r.evaluation.ok();
  CHECK(failed >= 2);
  CHECK(std::filesystem::exists(tmp / "iter_0" / "stdout.log"));
}
