// Entropy relative to a base measure, the pressure functional whose supremum
// over holonomic probabilities is attained by the posterior, and Zellner's
// restricted information functional.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ifsb/bayes.hpp"
#include "ifsb/detail/parallel.hpp"
#include "ifsb/detail/random.hpp"
#include "ifsb/error.hpp"
#include "ifsb/holonomy.hpp"
#include "ifsb/spaces.hpp"
#include "ifsb/transfer.hpp"

namespace ifsb {

/// Extended real for H: either a finite value or -infinity (π not absolutely
/// continuous with respect to base × ρ).
struct Entropy {
  double value = 0.0;
  bool minus_infinity = false;
};

/// H^base(π) = −D_KL(π ‖ base × ρ), ρ the y-marginal of π, with 0 log 0 = 0.
inline Entropy entropy(const JointProbability& pi, const Measure& base) {
  require_same_space(pi.theta, base.space(), "joint vs entropy base");
  const std::size_t nt = pi.theta_size(), ny = pi.y_size();
  std::vector<double> log_r(ny), col(nt);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t a = 0; a < nt; ++a) col[a] = pi.log_mass(a, j);
    log_r[j] = log_sum_exp(std::span<const double>(col));
  }
  CompensatedSum s;
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t j = 0; j < ny; ++j) {
      const double lm = pi.log_mass(a, j);
      if (lm == kNegInf) continue;
      const double m = std::exp(lm);
      if (m == 0.0) continue;
      if (base[a] == 0.0) return Entropy{0.0, true};
      s += m * (lm - std::log(base[a]) - log_r[j]);
    }
  return Entropy{-s.value(), false};
}

struct PressureReport {
  double integral_log_l = 0.0;
  double integral_log_prior = 0.0;
  double integral_log_phi = 0.0;
  Entropy entropy;  // H^{dθ}
  double total = 0.0;
  bool minus_infinity = false;
  std::string competitor_id;
};

/// ∫ [log l + log π_a − log φ] dπ̃ + H^{dθ}(π̃) for a holonomic π̃.
inline PressureReport pressure(const LossFn& l, const DensityFn& pi_a, const DensityFn& phi,
                               const JointProbability& pi_tilde, const IfsMap& ifs,
                               std::string competitor_id = {}) {
  require_same_space(pi_a.space(), l.theta_space(), "prior vs parameter space");
  require_same_space(phi.space(), l.y_space(), "phi vs data space");
  require_same_space(pi_tilde.theta, l.theta_space(), "competitor vs parameter space");
  require_same_space(pi_tilde.y, l.y_space(), "competitor vs data space");
  const double defect = verify_holonomic(pi_tilde, ifs);
  if (!(defect <= 1e-9))
    throw ConsistencyError("pressure: competitor is not holonomic (defect " +
                           std::to_string(defect) + ")");
  const std::size_t nt = l.theta_size(), ny = l.y_size();
  CompensatedSum il, ip, iphi;
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t j = 0; j < ny; ++j) {
      const double m = pi_tilde.mass(a, j);
      if (m == 0.0) continue;
      il += m * l.log_value(a, j);
      ip += m * pi_a.log(a);
      iphi += m * phi.log(j);
    }
  PressureReport r;
  r.integral_log_l = il.value();
  r.integral_log_prior = ip.value();
  r.integral_log_phi = iphi.value();
  r.entropy = entropy(pi_tilde, Measure::base(l.theta_space()));
  r.competitor_id = std::move(competitor_id);
  if (r.entropy.minus_infinity) {
    r.minus_infinity = true;
    r.total = -std::numeric_limits<double>::infinity();
  } else {
    r.total = r.integral_log_l + r.integral_log_prior - r.integral_log_phi + r.entropy.value;
  }
  return r;
}

/// ∫ [log l(θ,y0) + log π_a(θ)] q dθ − log p(y0) − ∫ q log q dθ for a
/// probability density q against dθ. Atoms where q vanishes contribute 0, so a
/// posterior that underflows on a grid is still admissible.
inline double zellner_functional(const LossFn& l, const DensityFn& pi_a, std::size_t y0,
                                 std::span<const double> q) {
  require_same_space(pi_a.space(), l.theta_space(), "prior vs parameter space");
  l.y_space()->check_index(y0);
  const SampleSpace& theta = *l.theta_space();
  if (q.size() != theta.size()) throw ScenarioError("zellner: q has the wrong size");
  CompensatedSum norm;
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (!(q[a] >= 0.0) || !std::isfinite(q[a]))
      throw ScenarioError("zellner: q must be nonnegative and finite");
    norm += q[a] * theta.base_weight(a);
  }
  if (!(std::abs(norm.value() - 1.0) <= 1e-10))
    throw ScenarioError("zellner: q is not a probability density");
  // Summed as −∫ q log(q / posterior) with the evidence taken in the log
  // domain, so the terms do not cancel against a separate log p(y0).
  std::vector<double> joint(q.size());
  for (std::size_t a = 0; a < q.size(); ++a)
    joint[a] = l.log_value(a, y0) + pi_a.log(a) + std::log(theta.base_weight(a));
  const double log_p = log_sum_exp(std::span<const double>(joint));
  if (!std::isfinite(log_p)) throw ScenarioError("zellner: y0 has zero prior predictive probability");
  CompensatedSum s;
  for (std::size_t a = 0; a < q.size(); ++a) {
    const double w = q[a] * theta.base_weight(a);
    if (w == 0.0) continue;  // 0 log 0 = 0
    const double log_post = l.log_value(a, y0) + pi_a.log(a) - log_p;
    s += w * (log_post - std::log(q[a]));
  }
  return s.value();
}

struct ScanSummary {
  double posterior_value = 0.0;
  double max_competitor = -std::numeric_limits<double>::infinity();
  double margin = std::numeric_limits<double>::infinity();  // posterior − max competitor
  std::size_t competitors = 0;
  std::size_t violations = 0;  // competitors above posterior + 1e-10
  std::vector<double> competitor_values;
};

/// Pressure at the posterior against n random holonomic competitors.
/// Competitor i uses a seed derived from (seed, i), so results do not depend
/// on thread scheduling.
inline ScanSummary optimality_scan(const PipelineConfig& cfg, std::size_t n, std::uint64_t seed,
                                   double slack = 1e-10) {
  const PosteriorReport rep = build_posterior_report(cfg);
  if (!(rep.joint.holonomy_residual <= 1e-9))
    throw ScenarioError("optimality scan needs a holonomic posterior (stationary rho)");
  ScanSummary out;
  out.posterior_value =
      pressure(cfg.loss, cfg.prior, rep.pair.phi, rep.joint, cfg.ifs, "posterior").total;
  out.competitors = n;
  out.competitor_values.assign(n, 0.0);
  detail::parallel_for(n, [&](std::size_t i) {
    const auto pi = random_holonomic(cfg.ifs, rep.nu, detail::child_seed(seed, i), cfg.stationary_opts);
    out.competitor_values[i] =
        pressure(cfg.loss, cfg.prior, rep.pair.phi, pi, cfg.ifs, std::to_string(i)).total;
  });
  for (double v : out.competitor_values) {
    out.max_competitor = std::max(out.max_competitor, v);
    if (v > out.posterior_value + slack) ++out.violations;
  }
  if (n > 0) out.margin = out.posterior_value - out.max_competitor;
  return out;
}

}  // namespace ifsb
