#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "bodse/error.hpp"
#include "bodse/evaluators.hpp"

namespace bodse {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Calls on_placeholder(name, begin, end) for each {{name}} in text.
template <typename F>
void scan_placeholders(const std::string& text, F&& on_placeholder) {
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string::npos) {
    const auto close = text.find("}}", pos + 2);
    if (close == std::string::npos) break;
    on_placeholder(trim(std::string_view(text).substr(pos + 2, close - pos - 2)), pos, close + 2);
    pos = close + 2;
  }
}

std::optional<double> parse_number(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<double> first_numeric_token(std::string_view rest) {
  constexpr std::string_view kSeparators = " \t\r:=,;";
  std::size_t pos = 0;
  while (pos < rest.size()) {
    const auto b = rest.find_first_not_of(kSeparators, pos);
    if (b == std::string_view::npos) break;
    auto e = rest.find_first_of(kSeparators, b);
    if (e == std::string_view::npos) e = rest.size();
    if (auto v = parse_number(rest.substr(b, e - b))) return v;
    pos = e;
  }
  return std::nullopt;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ProcessResult {
  enum class Outcome { exited, signaled, timed_out, spawn_error } outcome = Outcome::exited;
  int code = 0;
  std::string error;
};

ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& cwd, const fs::path& out_path,
                          const fs::path& err_path, double timeout_seconds) {
  ProcessResult result;
  if (argv.empty()) {
    result.outcome = ProcessResult::Outcome::spawn_error;
    result.error = "empty command";
    return result;
  }
  const int out_fd = ::open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  const int err_fd = ::open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  int status_pipe[2] = {-1, -1};
  if (out_fd < 0 || err_fd < 0 || ::pipe2(status_pipe, O_CLOEXEC) != 0) {
    result.outcome = ProcessResult::Outcome::spawn_error;
    result.error = std::string("cannot set up process I/O: ") + std::strerror(errno);
    if (out_fd >= 0) ::close(out_fd);
    if (err_fd >= 0) ::close(err_fd);
    return result;
  }

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid == 0) {
    ::setpgid(0, 0);
    int err = 0;
    if (::chdir(cwd.c_str()) != 0 || ::dup2(out_fd, STDOUT_FILENO) < 0 || ::dup2(err_fd, STDERR_FILENO) < 0) {
      err = errno;
    } else {
      const int devnull = ::open("/dev/null", O_RDONLY);
      if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
      ::execvp(args[0], args.data());
      err = errno;
    }
    [[maybe_unused]] auto n = ::write(status_pipe[1], &err, sizeof err);
    ::_exit(127);
  }
  ::close(out_fd);
  ::close(err_fd);
  ::close(status_pipe[1]);
  if (pid < 0) {
    ::close(status_pipe[0]);
    result.outcome = ProcessResult::Outcome::spawn_error;
    result.error = std::string("fork failed: ") + std::strerror(errno);
    return result;
  }

  int child_errno = 0;
  const auto got = ::read(status_pipe[0], &child_errno, sizeof child_errno);
  ::close(status_pipe[0]);

  const auto deadline = Clock::now() + std::chrono::duration<double>(timeout_seconds);
  int status = 0;
  while (true) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) {
      result.outcome = ProcessResult::Outcome::spawn_error;
      result.error = std::string("waitpid failed: ") + std::strerror(errno);
      return result;
    }
    if (Clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.outcome = ProcessResult::Outcome::timed_out;
      return result;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  if (got == static_cast<ssize_t>(sizeof child_errno)) {
    result.outcome = ProcessResult::Outcome::spawn_error;
    result.error = "cannot execute '" + argv[0] + "': " + std::strerror(child_errno);
  } else if (WIFEXITED(status)) {
    result.outcome = ProcessResult::Outcome::exited;
    result.code = WEXITSTATUS(status);
  } else {
    result.outcome = ProcessResult::Outcome::signaled;
    result.code = WIFSIGNALED(status) ? WTERMSIG(status) : -1;
  }
  return result;
}

}  // namespace

std::vector<std::string> placeholders(const std::string& text) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  scan_placeholders(text, [&](const std::string& name, std::size_t, std::size_t) {
    if (seen.insert(name).second) names.push_back(name);
  });
  return names;
}

void validate_template(const ScriptTemplate& tmpl, const ParameterSpace& space,
                       const std::vector<std::string>& required_metrics) {
  for (const auto& name : placeholders(tmpl.text)) {
    try {
      space.index_of(name);
    } catch (const UnknownParam&) {
      throw UnresolvedPlaceholder("template placeholder {{" + name + "}} is not a parameter of the space");
    }
  }
  for (const auto& metric : required_metrics) {
    bool found = false;
    for (const auto& rule : tmpl.rules) found = found || rule.metric == metric;
    if (!found) throw UnknownMetric("no parse rule for metric '" + metric + "'");
  }
}

std::string format_value(double value) {
  char buf[64];
  if (std::floor(value) == value && std::abs(value) < 1e15)
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(value));
  else
    std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string render_text(const std::string& text, const RawAssignment& raw) {
  std::string out;
  std::size_t last = 0;
  scan_placeholders(text, [&](const std::string& name, std::size_t begin, std::size_t end) {
    const auto it = raw.find(name);
    if (it == raw.end()) throw UnresolvedPlaceholder("no value for placeholder {{" + name + "}}");
    out.append(text, last, begin - last);
    out += format_value(it->second);
    last = end;
  });
  out.append(text, last, std::string::npos);
  return out;
}

std::string render_script(const ScriptTemplate& tmpl, const RawAssignment& raw) {
  return render_text(tmpl.text, raw);
}

std::optional<MetricVector> parse_metrics(const std::string& output, const std::vector<ParseRule>& rules,
                                          std::string* missing) {
  MetricVector metrics;
  std::istringstream lines(output);
  std::string line;
  while (std::getline(lines, line)) {
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const std::string_view body = std::string_view(line).substr(b);
    for (const auto& rule : rules) {
      if (metrics.contains(rule.metric) || !body.starts_with(rule.prefix)) continue;
      if (auto v = first_numeric_token(body.substr(rule.prefix.size()))) metrics.emplace(rule.metric, *v);
    }
  }
  for (const auto& rule : rules) {
    if (!metrics.contains(rule.metric)) {
      if (missing) *missing = rule.metric;
      return std::nullopt;
    }
  }
  return metrics;
}

Evaluation eval_external(const ScriptTemplate& tmpl, const std::vector<std::string>& command,
                         const fs::path& workdir, double timeout_seconds, const RawAssignment& raw) {
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  std::string script;
  try {
    script = render_script(tmpl, raw);
  } catch (const UnresolvedPlaceholder& e) {
    return Evaluation::failed(raw, FailureKind::spawn_failure, e.what(), elapsed());
  }

  std::error_code ec;
  fs::create_directories(workdir, ec);
  const fs::path dir = fs::absolute(workdir, ec);
  const fs::path script_path = dir / "script.gen";
  {
    std::ofstream out(script_path, std::ios::binary);
    out << script;
    if (!out) return Evaluation::failed(raw, FailureKind::spawn_failure, "cannot write " + script_path.string(), elapsed());
  }

  std::vector<std::string> argv;
  for (const auto& arg : command) {
    std::string expanded = arg;
    for (const auto& [key, value] : {std::pair{"{{script}}", script_path.string()}, std::pair{"{{workdir}}", dir.string()}}) {
      for (auto p = expanded.find(key); p != std::string::npos; p = expanded.find(key, p + value.size()))
        expanded.replace(p, std::strlen(key), value);
    }
    argv.push_back(std::move(expanded));
  }

  const auto proc = run_process(argv, dir, dir / "stdout.log", dir / "stderr.log", timeout_seconds);
  using Outcome = ProcessResult::Outcome;
  switch (proc.outcome) {
    case Outcome::spawn_error:
      return Evaluation::failed(raw, FailureKind::spawn_failure, proc.error, elapsed());
    case Outcome::timed_out:
      return Evaluation::failed(raw, FailureKind::timeout,
                                "command exceeded timeout of " + format_value(timeout_seconds) + " s", elapsed());
    case Outcome::signaled:
      return Evaluation::failed(raw, FailureKind::spawn_failure,
                                "command killed by signal " + std::to_string(proc.code), elapsed());
    case Outcome::exited:
      if (proc.code != 0)
        return Evaluation::failed(raw, FailureKind::spawn_failure,
                                  "command exited with status " + std::to_string(proc.code), elapsed());
      break;
  }

  std::string missing;
  auto metrics = parse_metrics(read_file(dir / "stdout.log"), tmpl.rules, &missing);
  if (!metrics)
    return Evaluation::failed(raw, FailureKind::parse_failure, "no output line matched metric '" + missing + "'",
                              elapsed());
  Evaluation e;
  e.raw_params = raw;
  e.metrics = std::move(*metrics);
  e.wall_time = elapsed();
  return e;
}

ExternalEvaluator::ExternalEvaluator(ScriptTemplate tmpl, std::vector<std::string> command, fs::path workdir,
                                     double timeout_seconds)
    : tmpl_(std::move(tmpl)), command_(std::move(command)), workdir_(std::move(workdir)), timeout_(timeout_seconds) {
  if (command_.empty()) throw InvalidConfig("external evaluator needs a command");
  if (!(timeout_ > 0.0)) throw InvalidConfig("external evaluator timeout must be positive");
}

Evaluation ExternalEvaluator::evaluate(const RawAssignment& raw, std::size_t index) {
  return eval_external(tmpl_, command_, workdir_ / ("iter_" + std::to_string(index)), timeout_, raw);
}

std::vector<std::string> ExternalEvaluator::metric_names() const {
  std::vector<std::string> names;
  for (const auto& r : tmpl_.rules) names.push_back(r.metric);
  return names;
}

}  // namespace bodse
