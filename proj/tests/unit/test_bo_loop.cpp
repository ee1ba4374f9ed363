#include <doctest.h>

#include <set>
#include <sstream>

#include "bodse/bo_loop.hpp"
#include "bodse/error.hpp"

using namespace bodse;

namespace {

class FailingEvaluator final : public Evaluator {
 public:
  Evaluation evaluate(const RawAssignment& raw, std::size_t) override {
    return Evaluation::failed(raw, FailureKind::spawn_failure, "always fails");
  }
  std::vector<std::string> metric_names() const override { return {"value"}; }
};

// Fails every k-th call, otherwise delegates to a synthetic benchmark.
class FlakyEvaluator final : public Evaluator {
 public:
  FlakyEvaluator(std::string id, std::size_t k) : inner_(std::move(id)), k_(k) {}
  Evaluation evaluate(const RawAssignment& raw, std::size_t index) override {
    if (++calls_ % k_ == 0) return Evaluation::failed(raw, FailureKind::timeout, "flaky");
    return inner_.evaluate(raw, index);
  }
  std::vector<std::string> metric_names() const override { return inner_.metric_names(); }

 private:
  SyntheticEvaluator inner_;
  std::size_t k_;
  std::size_t calls_ = 0;
};

BoConfig small(std::size_t init, std::size_t iters, std::uint64_t seed = 1) {
  BoConfig c;
  c.init_samples = init;
  c.max_iterations = iters;
  c.objective = ObjectiveSpec::single_metric("value");
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("run record counts and phases") {
  SyntheticEvaluator ev("rosenbrock-d2");
  const auto& space = ev.info().space;
  const auto one = run(space, ev, small(1, 1));
  CHECK(one.records.size() == 2);

  const auto log = run(space, ev, small(4, 6));
  REQUIRE(log.records.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(log.records[i].index == i);
    CHECK(log.records[i].phase == (i < 4 ? "init" : "bo"));
  }
  CHECK(log.records[3].hyperparams);
  CHECK(log.records.back().acquisition_value);
  CHECK(log.records.back().tradeoff == 2.0);
  CHECK(log.header.at("engine") == "bo");
}

TEST_CASE("incumbent is the running minimum") {
  SyntheticEvaluator ev("sphere-d6");
  const auto log = run(ev.info().space, ev, small(5, 10, 3));
  double best = 1e300;
  for (const auto& r : log.records) {
    best = std::min(best, *r.target);
    CHECK(*r.incumbent == best);
  }
}

TEST_CASE("evaluations never repeat an assignment") {
  SyntheticEvaluator ev("mixed-step-d3");
  const auto& space = ev.info().space;
  const auto log = run(space, ev, small(3, 25, 9));
  std::set<std::vector<double>> seen;
  for (const auto& r : log.records) {
    if (r.degenerate) continue;
    CHECK(seen.insert(space.ordered_values(r.evaluation.raw_params)).second);
  }
}

TEST_CASE("failure handling") {
  FailingEvaluator bad;
  const ParameterSpace space({{"x", ParamKind::continuous, 0, 1}});
  std::vector<std::string> lines;
  RunHooks hooks;
  hooks.on_line = [&](const std::string& l) { lines.push_back(l); };
  CHECK_THROWS_AS(run(space, bad, small(3, 2), hooks), AllInitFailed);
  CHECK(lines.size() == 4);

  FlakyEvaluator flaky("sphere-d6", 3);
  const auto log = run(benchmark("sphere-d6").space, flaky, small(5, 10));
  CHECK(log.records.size() == 15);
  std::size_t failed = 0;
  for (const auto& r : log.records) {
    if (!r.evaluation.ok()) {
      ++failed;
      CHECK_FALSE(r.target);
      CHECK(r.evaluation.failure == FailureKind::timeout);
    }
  }
  CHECK(failed == 5);
}

TEST_CASE("determinism") {
  SyntheticEvaluator ev("sphere-d6");
  const auto& space = ev.info().space;
  const auto a = run(space, ev, small(5, 5, 21));
  const auto b = run(space, ev, small(5, 5, 21));
  const auto c = run(space, ev, small(5, 5, 22));
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].x == b.records[i].x);
    CHECK(a.records[i].evaluation.metrics == b.records[i].evaluation.metrics);
    CHECK(a.records[i].hyperparams == b.records[i].hyperparams);
  }
  CHECK(a.records[0].x != c.records[0].x);
}

TEST_CASE("streamed lines parse back to the returned log") {
  PpaSurfaceEvaluator ev;
  BoConfig cfg = small(4, 3);
  cfg.objective = ObjectiveSpec::scalarized(1, 1, Scaling::scale_down);
  std::string text;
  RunHooks hooks;
  hooks.on_line = [&](const std::string& l) { text += l + "\n"; };
  const auto log = run(ParameterSpace::table1(), ev, cfg, hooks);
  std::istringstream in(text);
  const auto back = parse_jsonl(in);
  REQUIRE(back.references);
  CHECK(*back.references == *log.references);
  REQUIRE(back.records.size() == log.records.size());
  for (std::size_t i = 0; i < log.records.size(); ++i) CHECK(back.records[i].target == log.records[i].target);
  CHECK(text == to_jsonl(log));
}

TEST_CASE("stop hook ends the run early") {
  SyntheticEvaluator ev("sphere-d6");
  int polls = 0;
  RunHooks hooks;
  hooks.stop_requested = [&] { return ++polls > 7; };
  const auto log = run(ev.info().space, ev, small(5, 30), hooks);
  CHECK(log.records.size() < 35);
  CHECK(log.records.size() >= 5);
}

TEST_CASE("config validation") {
  SyntheticEvaluator ev("sphere-d6");
  const auto& space = ev.info().space;
  CHECK_THROWS_AS(run(space, ev, small(0, 1)), InvalidConfig);
  CHECK_THROWS_AS(run(space, ev, small(1, 0)), InvalidConfig);
  BoConfig wrong = small(2, 2);
  wrong.objective = ObjectiveSpec::scalarized(1, 1);
  CHECK_THROWS_AS(run(space, ev, wrong), InvalidConfig);
}

TEST_CASE("multi_run_pareto") {
  const auto space = ParameterSpace::table1();
  auto factory = [](std::size_t) { return std::make_unique<PpaSurfaceEvaluator>(); };
  BoConfig base = small(4, 3);
  base.objective = ObjectiveSpec::scalarized(1, 1);

  SUBCASE("single entry equals the filter over that run") {
    const auto res = multi_run_pareto(space, factory, base, weight_sweep({{1, 1}}));
    REQUIRE(res.runs[0].log);
    const auto want = pareto_filter(pareto_candidates(*res.runs[0].log));
    REQUIRE(res.front.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) CHECK(res.front[i].metrics == want[i].metrics);
  }
  SUBCASE("merged front covers every run's best point") {
    const auto specs = weight_sweep({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
    const auto res = multi_run_pareto(space, factory, base, specs);
    CHECK(res.failed_runs() == 0);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const auto& log = *res.runs[i].log;
      CHECK(log.records[0].x != res.runs[(i + 1) % specs.size()].log->records[0].x);
      const IterationRecord* best = &log.records[0];
      for (const auto& r : log.records)
        if (*r.target < *best->target) best = &r;
      bool covered = false;
      for (const auto& p : res.front)
        covered = covered || p.metrics == best->evaluation.metrics ||
                  dominates(p.metrics, best->evaluation.metrics);
      CHECK(covered);
      for (const auto& p : res.front) CHECK_FALSE(dominates(best->evaluation.metrics, p.metrics));
    }
  }
  SUBCASE("failing runs are reported, all failing rethrows") {
    auto half = [](std::size_t i) -> std::unique_ptr<Evaluator> {
      if (i == 1) return std::make_unique<FailingEvaluator>();
      return std::make_unique<PpaSurfaceEvaluator>();
    };
    BoConfig b = base;
    b.objective.metrics = {"area", "energy", "delay"};
    auto specs = weight_sweep({{1, 1}, {2, 2}});
    // FailingEvaluator lacks the PPA metrics, so run 1 is rejected up front.
    const auto res = multi_run_pareto(space, half, b, specs);
    CHECK(res.failed_runs() == 1);
    CHECK_FALSE(res.runs[1].error.empty());
    auto all_bad = [](std::size_t) { return std::make_unique<FailingEvaluator>(); };
    CHECK_THROWS(multi_run_pareto(space, all_bad, b, specs));
  }
  CHECK_THROWS_AS(multi_run_pareto(space, factory, base, {}), EmptySweep);
}
