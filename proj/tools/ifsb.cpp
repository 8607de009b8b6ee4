// ifsb: run scenario files, the builtin corpus, and pressure scans.
//
// Exit codes: 0 ok, 2 bad scenario, 3 solver did not converge, 4 a check or
// expectation failed.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ifsb.hpp"
#include "ifsb/io.hpp"

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0, kBadScenario = 2, kNoConvergence = 3, kCheckFailed = 4;

/// A path that exists is read as a scenario file; otherwise the argument
/// names a builtin.
ifsb::Scenario resolve(const std::string& arg) {
  if (fs::exists(arg)) return ifsb::io::load_scenario(arg);
  const auto all = ifsb::builtin_scenarios();
  if (const auto* b = ifsb::find_builtin(all, arg)) return b->scenario;
  throw ifsb::ScenarioError("no scenario file or builtin named '" + arg + "'");
}

void emit(const ifsb::Scenario& sc, const ifsb::ScenarioOutcome& o, const std::string& out, bool dump) {
  const std::string text = ifsb::io::report_text(sc, o);
  if (out.empty() || out == "-")
    std::cout << text;
  else
    ifsb::io::write_atomically(out, text);
  if (dump) {
    const fs::path prefix = (out.empty() || out == "-") ? fs::path(sc.config.name) : fs::path(out).replace_extension();
    for (const auto& p : ifsb::io::dump_tables(sc, o, prefix)) std::cerr << "wrote " << p.string() << "\n";
  }
}

int report_failures(const ifsb::ScenarioOutcome& o) {
  for (const auto& f : o.failures) std::cerr << "check failed: " << f << "\n";
  return o.failures.empty() ? kOk : kCheckFailed;
}

int cmd_run(const std::string& scenario, const std::string& out, bool dump) {
  const ifsb::Scenario sc = resolve(scenario);
  const ifsb::ScenarioOutcome o = ifsb::run_scenario(sc);
  emit(sc, o, out, dump);
  return report_failures(o);
}

int run_builtin(const ifsb::BuiltinScenario& b, const std::string& out) {
  const ifsb::ScenarioOutcome o = ifsb::run_scenario(b.scenario);
  int status = report_failures(o);
  for (const auto& e : b.expectations) {
    const double got = e.extract(o);
    const bool ok = std::abs(got - e.expected) <= e.tol;
    std::printf("%s %s: %s expected %.17g got %.17g tol %.3g (%s)\n", ok ? "PASS" : "FAIL", b.name.c_str(),
                e.quantity.c_str(), e.expected, got, e.tol, e.source.c_str());
    if (!ok) status = kCheckFailed;
  }
  if (!out.empty()) emit(b.scenario, o, out, false);
  return status;
}

int cmd_examples(const std::string& name, bool list, const std::string& out) {
  const auto all = ifsb::builtin_scenarios();
  if (list) {
    for (const auto& b : all) std::printf("%-24s %s\n", b.name.c_str(), b.description.c_str());
    return kOk;
  }
  if (!name.empty()) {
    const auto* b = ifsb::find_builtin(all, name);
    if (!b) throw ifsb::ScenarioError("no builtin scenario named '" + name + "'");
    return run_builtin(*b, out);
  }
  if (!out.empty()) throw ifsb::ScenarioError("--out needs a single builtin name");
  int status = kOk;
  for (const auto& b : all) status = std::max(status, run_builtin(b, ""));
  return status;
}

int cmd_pressure_scan(const std::string& scenario, std::size_t n, std::uint64_t seed) {
  const ifsb::Scenario sc = resolve(scenario);
  const ifsb::ScanSummary s = ifsb::optimality_scan(sc.config, n, seed, ifsb::Tolerances::supremum_slack);
  std::printf("posterior pressure %.17g\n", s.posterior_value);
  int status = std::abs(s.posterior_value) <= ifsb::Tolerances::zero_pressure ? kOk : kCheckFailed;
  if (status != kOk) std::fprintf(stderr, "posterior pressure is not zero\n");
  if (n > 0) {
    std::printf("competitors %zu\n", s.competitors);
    std::printf("max competitor pressure %.17g\n", s.max_competitor);
    std::printf("margin %.17g\n", s.margin);
    std::printf("violations %zu\n", s.violations);
    if (s.violations > 0) status = kCheckFailed;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IFS Bayesian method: posteriors, holonomic probabilities and the pressure principle"};
  app.require_subcommand(1);

  std::string scenario, out, name;
  bool dump = false, list = false;
  std::size_t n = 1000;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "run a scenario file (or builtin name) and write a report");
  run->add_option("scenario", scenario, "scenario file or builtin name")->required();
  run->add_option("--out", out, "report path (stdout if omitted)");
  run->add_flag("--dump-tables", dump, "also write every table as CSV");

  auto* ex = app.add_subcommand("examples", "run builtin scenarios against their expected values");
  ex->add_option("name", name, "builtin name (all if omitted)");
  ex->add_flag("--list", list, "list the builtin corpus");
  ex->add_option("--out", out, "report path for a single builtin");

  auto* scan = app.add_subcommand("pressure-scan", "compare posterior pressure with random holonomic competitors");
  scan->add_option("scenario", scenario, "scenario file or builtin name")->required();
  scan->add_option("--n", n, "number of competitors")->required();
  scan->add_option("--seed", seed, "competitor seed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kBadScenario;
  }

  try {
    if (*run) return cmd_run(scenario, out, dump);
    if (*ex) return cmd_examples(name, list, out);
    if (*scan) return cmd_pressure_scan(scenario, n, seed);
  } catch (const ifsb::ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kBadScenario;
  } catch (const ifsb::ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const ifsb::ConsistencyError& e) {
    std::cerr << "consistency failure: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
