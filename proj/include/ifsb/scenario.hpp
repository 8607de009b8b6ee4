// A scenario bundles a pipeline configuration with the checks to run on it.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ifsb/bayes.hpp"
#include "ifsb/variational.hpp"

namespace ifsb {

struct PressureCheck {
  std::size_t n_competitors = 0;
  std::uint64_t seed = 0;
};

struct ZellnerCheck {
  std::size_t y0 = 0;
};

struct Checks {
  std::optional<PressureCheck> pressure;
  std::optional<ZellnerCheck> zellner;
};

struct Scenario {
  PipelineConfig config;
  Checks checks;
};

/// Tolerances applied by run_scenario; reports echo them.
struct Tolerances {
  static constexpr double probability = 1e-10;
  static constexpr double holonomy = 1e-9;
  static constexpr double zero_pressure = 1e-8;
  static constexpr double supremum_slack = 1e-10;
  static constexpr double zellner_zero = 1e-10;
};

struct ZellnerOutcome {
  std::size_t y0 = 0;
  double at_posterior = 0.0;
  std::optional<double> at_prior;  // when π_a is itself a density against dθ
};

struct ScenarioOutcome {
  PosteriorReport report;
  std::optional<PressureReport> posterior_pressure;
  std::optional<ScanSummary> scan;
  std::optional<ZellnerOutcome> zellner;
  std::vector<std::string> failures;
};

inline ScenarioOutcome run_scenario(const Scenario& sc) {
  const PipelineConfig& cfg = sc.config;
  ScenarioOutcome out{build_posterior_report(cfg), std::nullopt, std::nullopt, std::nullopt, {}};
  const PosteriorReport& rep = out.report;

  for (std::size_t j = 0; j < cfg.loss.y_size(); ++j) {
    CompensatedSum s;
    for (std::size_t a = 0; a < cfg.loss.theta_size(); ++a)
      s += rep.kernel[a * cfg.loss.y_size() + j] * cfg.loss.theta_space()->base_weight(a);
    if (!(std::abs(s.value() - 1.0) <= Tolerances::probability)) {
      out.failures.push_back("posterior kernel column " + std::to_string(j) + " integrates to " +
                             std::to_string(s.value()));
      break;
    }
  }
  if (!(std::abs(rep.theta_marginal.total() - 1.0) <= Tolerances::probability))
    out.failures.push_back("posterior theta-marginal is not a probability");
  if (!(std::abs(rep.rho.total() - 1.0) <= Tolerances::probability))
    out.failures.push_back("rho is not a probability");
  if (!(std::abs(rep.joint.total_mass() - 1.0) <= Tolerances::probability))
    out.failures.push_back("joint posterior is not a probability");

  const bool holonomic = rep.joint.holonomy_residual <= Tolerances::holonomy;
  if (holonomic) {
    out.posterior_pressure = pressure(cfg.loss, cfg.prior, rep.pair.phi, rep.joint, cfg.ifs, "posterior");
    if (!(std::abs(out.posterior_pressure->total) <= Tolerances::zero_pressure))
      out.failures.push_back("posterior pressure " + std::to_string(out.posterior_pressure->total) +
                             " is not zero");
  }

  if (sc.checks.pressure) {
    if (!holonomic) {
      out.failures.push_back("pressure check requested but the posterior is not holonomic");
    } else {
      out.scan = optimality_scan(cfg, sc.checks.pressure->n_competitors, sc.checks.pressure->seed,
                                 Tolerances::supremum_slack);
      if (out.scan->violations > 0)
        out.failures.push_back(std::to_string(out.scan->violations) +
                               " competitors exceed the posterior pressure");
    }
  }

  if (sc.checks.zellner) {
    const std::size_t y0 = sc.checks.zellner->y0;
    ZellnerOutcome z;
    z.y0 = y0;
    z.at_posterior = zellner_functional(cfg.loss, cfg.prior, y0, classical_posterior(cfg.loss, cfg.prior, y0));
    if (std::abs(density_to_measure(cfg.prior).total() - 1.0) <= 1e-10)
      z.at_prior = zellner_functional(cfg.loss, cfg.prior, y0, cfg.prior.values());
    if (!(std::abs(z.at_posterior) <= Tolerances::zellner_zero))
      out.failures.push_back("zellner functional at the posterior is " + std::to_string(z.at_posterior));
    out.zellner = z;
  }
  return out;
}

}  // namespace ifsb
