#include <doctest.h>

#include <limits>

#include "bodse/error.hpp"
#include "bodse/evaluators.hpp"
#include "oracles.hpp"

using namespace bodse;

TEST_CASE("synthetic benchmarks") {
  CHECK(benchmark_ids() == std::vector<std::string>{"sphere-d6", "rosenbrock-d2", "mixed-step-d3"});
  CHECK_THROWS_AS(benchmark("ackley"), UnknownBenchmark);

  CHECK(eval_synthetic("sphere-d6", std::vector<double>(6, 0.5)).metrics.at("value") == 0.0);
  CHECK(eval_synthetic("rosenbrock-d2", RawAssignment{{"x1", 1.0}, {"x2", 1.0}}).metrics.at("value") == 0.0);
  CHECK(eval_synthetic("rosenbrock-d2", RawAssignment{{"x1", 0.0}, {"x2", 0.0}}).metrics.at("value") == 1.0);
  CHECK_THROWS_AS(eval_synthetic("rosenbrock-d2", RawAssignment{{"x1", 3.0}, {"x2", 0.0}}), OutOfBounds);

  SUBCASE("mixed-step grid optimum equals the registered optimum") {
    const auto& b = benchmark("mixed-step-d3");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : b.space.grid(41)) best = std::min(best, eval_synthetic(b.id, x).metrics.at("value"));
    CHECK(best == b.optimum);
  }
  SUBCASE("registered optima are lower bounds") {
    for (const auto& id : benchmark_ids()) {
      const auto& b = benchmark(id);
      for (const auto& x : b.space.sample_uniform(2000, 4))
        CHECK(eval_synthetic(id, x).metrics.at("value") >= b.optimum);
    }
  }

  SyntheticEvaluator ev("sphere-d6");
  CHECK(ev.metric_names() == std::vector<std::string>{"value"});
  CHECK(ev.deterministic());
}

namespace {

RawAssignment table1_point(double clock_period) {
  return {{"max_delay", 0.3},     {"clock_period", clock_period}, {"pin_load", 0.004},
          {"output_delay", 0.3},  {"core_utilization", 0.8},      {"core_aspect_ratio", 2}};
}

}  // namespace

TEST_CASE("ppa surface") {
  const PpaSurfaceOptions noisy{true, 17};
  const auto a = eval_ppa_surface(table1_point(1.5), noisy);
  const auto b = eval_ppa_surface(table1_point(1.5), noisy);
  CHECK(a.metrics == b.metrics);
  CHECK(a.metrics != eval_ppa_surface(table1_point(1.5), PpaSurfaceOptions{true, 18}).metrics);

  SUBCASE("noise is about half a percent of nominal") {
    const auto space = ParameterSpace::table1();
    double ss = 0.0;
    int n = 0;
    for (const auto& x : space.sample_uniform(4000, 3)) {
      const auto raw = space.decode(x);
      const auto nominal = ppa_nominal(raw);
      const auto obs = eval_ppa_surface(raw, noisy).metrics;
      for (const auto& [k, v] : nominal) {
        const double r = (obs.at(k) - v) / v;
        ss += r * r;
        ++n;
      }
    }
    CHECK(std::sqrt(ss / n) == doctest::Approx(kPpaNoiseFraction).epsilon(0.05));
  }

  SUBCASE("tightening the clock lowers delay and raises energy") {
    const PpaSurfaceOptions off{false, 0};
    double prev_delay = std::numeric_limits<double>::infinity(), prev_energy = -1.0;
    for (int i = 0; i <= 20; ++i) {
      const double cp = 2.0 - i * 0.05;
      const auto m = eval_ppa_surface(table1_point(cp), off).metrics;
      CHECK(m.at("delay") < prev_delay);
      CHECK(m.at("energy") > prev_energy);
      prev_delay = m.at("delay");
      prev_energy = m.at("energy");
    }
  }

  SUBCASE("fixture front is the grid Pareto front") {
    const auto space = ParameterSpace::table1();
    std::vector<ParetoPoint> pts;
    for (const auto& x : space.grid(11)) {
      const auto raw = space.decode(x);
      pts.push_back({raw, ppa_nominal(raw)});
    }
    const auto front = pareto_filter(pts);
    const auto fixture = oracle::read_csv(std::string(BODSE_TEST_DATA) + "/fixtures/ppa_front.csv");
    REQUIRE(fixture.rows.size() == front.size());
    for (std::size_t i = 0; i < front.size(); ++i)
      for (const auto& [k, v] : front[i].metrics) CHECK(fixture.rows[i][fixture.column(k)] == v);
  }

  PpaSurfaceEvaluator ev;
  CHECK(ev.metric_names() == std::vector<std::string>{"area", "energy", "delay"});
}

TEST_CASE("failure kind strings") {
  for (auto k : {FailureKind::none, FailureKind::spawn_failure, FailureKind::timeout, FailureKind::parse_failure})
    CHECK(failure_kind_from_string(to_string(k)) == k);
  CHECK_THROWS(failure_kind_from_string("oops"));
}
