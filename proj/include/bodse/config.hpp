#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bodse/baseline_ga.hpp"
#include "bodse/bo_loop.hpp"
#include "bodse/evaluators.hpp"
#include "bodse/param_space.hpp"

namespace bodse {

enum class EvaluatorType { synthetic, ppa_surface, external };

struct EvaluatorConfig {
  EvaluatorType type = EvaluatorType::ppa_surface;
  std::string benchmark;
  PpaSurfaceOptions ppa{};
  /// Template file as written in the config (resolved against the config's
  /// directory); empty when the template text was given inline.
  std::string template_path;
  ScriptTemplate tmpl;
  std::vector<std::string> command;
  double timeout = kDefaultTimeoutSeconds;
};

enum class Engine { bo, ga };

/// A fully validated experiment description with every default filled in.
struct ExperimentConfig {
  ParameterSpace space = ParameterSpace::table1();
  EvaluatorConfig evaluator;
  Engine engine = Engine::bo;
  BoConfig bo;
  GaConfig ga;
  /// (alpha1, alpha2) pairs; empty when the config has no sweep.
  std::vector<std::pair<double, double>> sweep;
  std::optional<std::string> output;
  std::uint64_t seed = 0;

  /// Propagates `seed` into the engine configs.
  void set_seed(std::uint64_t s);
};

/// Validates a parsed config document. Errors are InvalidConfig with a
/// message that starts with the offending key path.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".");
/// Reads and validates a config file.
ExperimentConfig load_config(const std::filesystem::path& path);

/// The resolved config, including every defaulted value.
nlohmann::json resolved_json(const ExperimentConfig& config);

/// External evaluators write their iter_<k>/ directories under `workdir`.
std::unique_ptr<Evaluator> make_evaluator(const EvaluatorConfig& config, const std::filesystem::path& workdir);

}  // namespace bodse
