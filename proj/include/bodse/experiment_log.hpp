#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bodse/evaluators.hpp"
#include "bodse/gp.hpp"
#include "bodse/param_space.hpp"

namespace bodse {

struct Timing {
  double propose = 0.0;
  double evaluate = 0.0;
  double refit = 0.0;
};

/// One evaluation of a run, BO or GA.
struct IterationRecord {
  std::size_t index = 0;
  /// "init", "bo" or "ga".
  std::string phase;
  std::size_t generation = 0;
  /// Normalized point that was decoded and evaluated.
  ParamVector x;
  Evaluation evaluation;
  /// Objective value; absent for failed evaluations.
  std::optional<double> target;
  /// Best target over ok evaluations up to and including this record.
  std::optional<double> incumbent;
  std::optional<KernelParams> hyperparams;
  std::optional<double> acquisition_value;
  /// Trade-off scalar (kappa or zeta) used for the proposal.
  std::optional<double> tradeoff;
  Timing timing;
  std::uint64_t seed = 0;
  bool perturbed = false;
  bool degenerate = false;
};

/// Append-only run record persisted as JSON lines: one header object, an
/// optional scaling object, then one object per evaluation.
struct ExperimentLog {
  nlohmann::json header = nlohmann::json::object();
  std::optional<std::map<std::string, double>> references;
  std::vector<IterationRecord> records;

  std::size_t ok_count() const;
};

/// Receives each serialized line as soon as it is final.
using LineSink = std::function<void(const std::string&)>;

nlohmann::json to_json(const KernelParams& params);
KernelParams kernel_params_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IterationRecord& record);
IterationRecord record_from_json(const nlohmann::json& j);
nlohmann::json header_line(const ExperimentLog& log);
nlohmann::json scaling_line(const std::map<std::string, double>& references);

std::string to_jsonl(const ExperimentLog& log);
/// Throws LogFormatError naming the 1-based line number of the first bad line.
ExperimentLog parse_jsonl(std::istream& in);
ExperimentLog read_log(const std::string& path);

/// Running minimum over ok evaluations: (record index, best so far), starting
/// at the first ok record. Throws EmptyLog when no evaluation succeeded.
std::vector<std::pair<std::size_t, double>> incumbent_curve(const ExperimentLog& log);

/// Shortest round-trip text of a double.
std::string format_double(double value);

/// `iteration,best` rows.
std::string incumbent_csv(const std::vector<std::pair<std::size_t, double>>& curve);

}  // namespace bodse
