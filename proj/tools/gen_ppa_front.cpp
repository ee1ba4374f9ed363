// Writes the noise-free Pareto front of the PPA surface over a full grid of
// the six-parameter space.
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "bodse/cli.hpp"
#include "bodse/evaluators.hpp"
#include "bodse/objective.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: gen_ppa_front OUT.csv [points_per_dim]\n";
    return 1;
  }
  const std::size_t ppd = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 6;
  const auto space = bodse::ParameterSpace::table1();
  std::vector<bodse::ParetoPoint> points;
  for (const auto& x : space.grid(ppd)) {
    const auto raw = space.decode(x);
    points.push_back({raw, bodse::ppa_nominal(raw)});
  }
  const auto front = bodse::pareto_filter(points);
  std::ofstream out(argv[1]);
  out << bodse::cli::pareto_csv(front, space, {"area", "energy", "delay"});
  std::cerr << points.size() << " grid points, " << front.size() << " on the front\n";
  return out ? 0 : 1;
}
