#include "bodse/experiment_log.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "bodse/error.hpp"

namespace bodse {

using nlohmann::json;

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> optional_double(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::size_t ExperimentLog::ok_count() const {
  std::size_t n = 0;
  for (const auto& r : records) n += r.evaluation.ok() ? 1 : 0;
  return n;
}

json to_json(const KernelParams& params) {
  return {{"log_signal_variance", params.log_signal_variance},
          {"log_lengthscales", params.log_lengthscales},
          {"log_noise_variance", params.log_noise_variance}};
}

KernelParams kernel_params_from_json(const json& j) {
  KernelParams p;
  p.log_signal_variance = j.at("log_signal_variance").get<double>();
  p.log_lengthscales = j.at("log_lengthscales").get<std::vector<double>>();
  p.log_noise_variance = j.at("log_noise_variance").get<double>();
  return p;
}

json to_json(const IterationRecord& r) {
  const Evaluation& e = r.evaluation;
  return {{"type", "eval"},
          {"index", r.index},
          {"phase", r.phase},
          {"generation", r.generation},
          {"x", r.x},
          {"params", e.raw_params},
          {"status", to_string(e.status)},
          {"failure", to_string(e.failure)},
          {"reason", e.reason},
          {"metrics", e.metrics},
          {"wall_time", e.wall_time},
          {"target", optional_json(r.target)},
          {"incumbent", optional_json(r.incumbent)},
          {"hyperparams", r.hyperparams ? to_json(*r.hyperparams) : json(nullptr)},
          {"acquisition_value", optional_json(r.acquisition_value)},
          {"tradeoff", optional_json(r.tradeoff)},
          {"timing", {{"propose", r.timing.propose}, {"evaluate", r.timing.evaluate}, {"refit", r.timing.refit}}},
          {"seed", r.seed},
          {"perturbed", r.perturbed},
          {"degenerate", r.degenerate}};
}

IterationRecord record_from_json(const json& j) {
  IterationRecord r;
  r.index = j.at("index").get<std::size_t>();
  r.phase = j.at("phase").get<std::string>();
  r.generation = j.value("generation", std::size_t{0});
  r.x = j.at("x").get<std::vector<double>>();
  Evaluation& e = r.evaluation;
  e.raw_params = j.at("params").get<RawAssignment>();
  const auto status = j.at("status").get<std::string>();
  if (status != "ok" && status != "failed") throw LogFormatError("unknown status '" + status + "'");
  e.status = status == "ok" ? EvalStatus::ok : EvalStatus::failed;
  e.failure = failure_kind_from_string(j.value("failure", std::string("none")));
  e.reason = j.value("reason", std::string());
  e.metrics = j.at("metrics").get<MetricVector>();
  e.wall_time = j.value("wall_time", 0.0);
  r.target = optional_double(j, "target");
  r.incumbent = optional_double(j, "incumbent");
  if (j.contains("hyperparams") && !j.at("hyperparams").is_null())
    r.hyperparams = kernel_params_from_json(j.at("hyperparams"));
  r.acquisition_value = optional_double(j, "acquisition_value");
  r.tradeoff = optional_double(j, "tradeoff");
  if (j.contains("timing")) {
    const auto& t = j.at("timing");
    r.timing = {t.value("propose", 0.0), t.value("evaluate", 0.0), t.value("refit", 0.0)};
  }
  r.seed = j.value("seed", std::uint64_t{0});
  r.perturbed = j.value("perturbed", false);
  r.degenerate = j.value("degenerate", false);
  return r;
}

json header_line(const ExperimentLog& log) {
  json h = log.header;
  h["type"] = "header";
  return h;
}

json scaling_line(const std::map<std::string, double>& references) {
  return {{"type", "scaling"}, {"references", references}};
}

std::string to_jsonl(const ExperimentLog& log) {
  std::string out = header_line(log).dump() + "\n";
  // The scaling line follows the initial batch it was derived from.
  std::size_t init = 0;
  while (init < log.records.size() && log.records[init].phase == "init") ++init;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    if (i == init && log.references) out += scaling_line(*log.references).dump() + "\n";
    out += to_json(log.records[i]).dump() + "\n";
  }
  if (init == log.records.size() && log.references) out += scaling_line(*log.references).dump() + "\n";
  return out;
}

ExperimentLog parse_jsonl(std::istream& in) {
  ExperimentLog log;
  bool have_header = false;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        if (have_header) throw LogFormatError("duplicate header");
        log.header = j;
        log.header.erase("type");
        have_header = true;
      } else if (type == "scaling") {
        log.references = j.at("references").get<std::map<std::string, double>>();
      } else if (type == "eval") {
        if (!have_header) throw LogFormatError("evaluation record before header");
        log.records.push_back(record_from_json(j));
      } else {
        throw LogFormatError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw LogFormatError("line " + std::to_string(number) + ": " + e.what());
    } catch (const Error& e) {
      throw LogFormatError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  if (!have_header) throw LogFormatError("line " + std::to_string(number + 1) + ": missing header record");
  return log;
}

ExperimentLog read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LogFormatError("cannot open log '" + path + "'");
  return parse_jsonl(in);
}

std::vector<std::pair<std::size_t, double>> incumbent_curve(const ExperimentLog& log) {
  std::vector<std::pair<std::size_t, double>> curve;
  std::optional<double> best;
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    if (r.evaluation.ok() && r.target && (!best || *r.target < *best)) best = r.target;
    if (best) curve.emplace_back(i, *best);
  }
  if (curve.empty()) throw EmptyLog("log has no successful evaluation");
  return curve;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string incumbent_csv(const std::vector<std::pair<std::size_t, double>>& curve) {
  std::string out = "iteration,best\n";
  for (const auto& [i, best] : curve) out += std::to_string(i) + "," + format_double(best) + "\n";
  return out;
}

}  // namespace bodse
