// Stationary probabilities of a ν-Jacobian, holonomic joint probabilities,
// and random holonomic competitors.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ifsb/detail/graph.hpp"
#include "ifsb/detail/random.hpp"
#include "ifsb/error.hpp"
#include "ifsb/ifs.hpp"
#include "ifsb/spaces.hpp"
#include "ifsb/transfer.hpp"

namespace ifsb {

/// Probability on Θ×Y stored as kernel × θ-base × y-marginal:
/// π(θ,y) = kernel(θ,y) · theta_base(θ) · y_marginal(y).
struct JointProbability {
  SpacePtr theta, y;
  std::vector<double> kernel;      // [θ][y], density against theta_base
  std::vector<double> log_kernel;  // [θ][y]
  Measure theta_base;
  Measure y_marginal;
  double holonomy_residual = std::numeric_limits<double>::quiet_NaN();

  std::size_t theta_size() const noexcept { return theta->size(); }
  std::size_t y_size() const noexcept { return y->size(); }

  double mass(std::size_t a, std::size_t j) const {
    const double k = kernel[a * y_size() + j];
    const double t = theta_base[a], r = y_marginal[j];
    return (k == 0.0 || t == 0.0 || r == 0.0) ? 0.0 : k * t * r;
  }

  /// log π(θ,y); -inf off the support.
  double log_mass(std::size_t a, std::size_t j) const {
    return log_kernel[a * y_size() + j] + theta_base.log_mass(a) + y_marginal.log_mass(j);
  }

  std::vector<double> masses() const {
    std::vector<double> m(theta_size() * y_size());
    for (std::size_t a = 0; a < theta_size(); ++a)
      for (std::size_t j = 0; j < y_size(); ++j) m[a * y_size() + j] = mass(a, j);
    return m;
  }

  double total_mass() const {
    CompensatedSum s;
    for (std::size_t a = 0; a < theta_size(); ++a)
      for (std::size_t j = 0; j < y_size(); ++j) s += mass(a, j);
    return s.value();
  }

  std::vector<double> theta_marginal() const {
    std::vector<double> out(theta_size());
    for (std::size_t a = 0; a < theta_size(); ++a) {
      CompensatedSum s;
      for (std::size_t j = 0; j < y_size(); ++j) s += mass(a, j);
      out[a] = s.value();
    }
    return out;
  }

  std::vector<double> y_marginal_from_masses() const {
    std::vector<double> out(y_size());
    for (std::size_t j = 0; j < y_size(); ++j) {
      CompensatedSum s;
      for (std::size_t a = 0; a < theta_size(); ++a) s += mass(a, j);
      out[j] = s.value();
    }
    return out;
  }
};

struct StationaryOptions {
  double tol = 1e-12;
  long max_iter = 1000000;
};

struct StationaryResult {
  Measure rho;
  bool non_unique = false;
  long iterations = 0;
  double residual = 0.0;
};

namespace detail {

/// (Aρ)(y') = Σ_y Σ_{θ: τ_θ(y)=y'} l̄(θ,y) ν(θ) ρ(y).
inline void dual_apply(const JacobianKernel& jac, const IfsMap& ifs, std::span<const double> rho,
                       std::vector<double>& out) {
  const std::size_t nt = ifs.theta_size(), ny = ifs.y_size();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j = 0; j < ny; ++j) {
    if (rho[j] == 0.0) continue;
    for (std::size_t a = 0; a < nt; ++a)
      out[ifs.target(a, j)] += jac.values[a * ny + j] * jac.nu[a] * rho[j];
  }
}

inline double sup_distance(std::span<const double> a, std::span<const double> b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

}  // namespace detail

/// Stationary residual max_y' |(Aρ)(y') − ρ(y')|: the defect of the
/// stationarity identity over the atom-indicator basis.
inline double stationary_residual(const JacobianKernel& jac, const IfsMap& ifs, const Measure& rho) {
  std::vector<double> out(ifs.y_size());
  detail::dual_apply(jac, ifs, rho.masses(), out);
  return detail::sup_distance(out, rho.masses());
}

/// Fixed point of the dual of the normalized transfer operator, by lazy power
/// iteration ρ ← (ρ + Aρ)/2 from the uniform probability. Identity IFS inputs
/// return the uniform probability flagged non-unique; reducible supports
/// return the limit from the uniform start, also flagged.
inline StationaryResult stationary(const JacobianKernel& jac, const IfsMap& ifs,
                                   const StationaryOptions& opt = {}) {
  require_same_space(jac.theta, ifs.theta_space(), "jacobian vs IFS parameter space");
  require_same_space(jac.y, ifs.y_space(), "jacobian vs IFS data space");
  const std::size_t nt = ifs.theta_size(), ny = ifs.y_size();
  auto uniform = Measure::uniform_probability(ifs.y_space());
  if (ifs.is_identity()) {
    const double r = stationary_residual(jac, ifs, uniform);
    return StationaryResult{uniform, ny > 1, 0, r};
  }

  detail::Digraph chain(ny);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t a = 0; a < nt; ++a)
      if (jac.values[a * ny + j] * jac.nu[a] > 0.0) chain[j].push_back(ifs.target(a, j));
  const bool non_unique = detail::closed_class_count(chain) > 1;

  std::vector<double> rho(uniform.masses().begin(), uniform.masses().end()), arho(ny);
  double residual = std::numeric_limits<double>::infinity();
  long it = 0;
  for (;;) {
    detail::dual_apply(jac, ifs, rho, arho);
    // Compare against the renormalized image so a Jacobian that is normalized
    // only to its own tolerance cannot stall the loop.
    CompensatedSum mass;
    for (double v : arho) mass += v;
    for (double& v : arho) v /= mass.value();
    residual = detail::sup_distance(arho, rho);
    if (residual <= opt.tol) break;
    if (++it > opt.max_iter)
      throw ConvergenceError("stationary: power iteration did not converge", residual, it);
    CompensatedSum total;
    for (std::size_t j = 0; j < ny; ++j) {
      rho[j] = 0.5 * (rho[j] + arho[j]);
      total += rho[j];
    }
    const double t = total.value();
    for (double& v : rho) v /= t;
  }
  // Finish with one undamped step: it leaves exact fixed points (such as a
  // Dirac mass) untouched and sharpens everything else.
  detail::dual_apply(jac, ifs, rho, arho);
  CompensatedSum total;
  for (double v : arho) total += v;
  const double t = total.value();
  for (std::size_t j = 0; j < ny; ++j) rho[j] = arho[j] / t;
  Measure out(ifs.y_space(), std::move(rho));
  const double r = stationary_residual(jac, ifs, out);
  return StationaryResult{std::move(out), non_unique, it, r};
}

/// Joint probability with kernel `kernel` (density against theta_base) and
/// y-marginal ρ. Throws when the total mass is off by more than 1e-8.
inline JointProbability assemble(SpacePtr theta, SpacePtr y, std::vector<double> kernel,
                                 std::vector<double> log_kernel, const Measure& theta_base,
                                 const Measure& rho) {
  require_same_space(theta, theta_base.space(), "kernel vs theta base");
  require_same_space(y, rho.space(), "kernel vs y-marginal");
  if (kernel.size() != theta->size() * y->size() || log_kernel.size() != kernel.size())
    throw ScenarioError("assemble: kernel has the wrong size");
  JointProbability pi{std::move(theta), std::move(y), std::move(kernel), std::move(log_kernel),
                      theta_base, rho};
  const double mass = pi.total_mass();
  if (!(std::abs(mass - 1.0) <= 1e-8))
    throw ConsistencyError("assemble: total mass " + std::to_string(mass) + " is not 1");
  return pi;
}

inline JointProbability assemble(const JacobianKernel& jac, const Measure& theta_base,
                                 const Measure& rho) {
  return assemble(jac.theta, jac.y, jac.values, jac.log_values, theta_base, rho);
}

/// max over atom indicators g of |∫ g(y) dπ − ∫ g(τ_θ(y)) dπ|.
inline double verify_holonomic(const JointProbability& pi, const IfsMap& ifs) {
  require_same_space(pi.theta, ifs.theta_space(), "joint vs IFS parameter space");
  require_same_space(pi.y, ifs.y_space(), "joint vs IFS data space");
  const std::size_t nt = pi.theta_size(), ny = pi.y_size();
  std::vector<CompensatedSum> lhs(ny), rhs(ny);
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t j = 0; j < ny; ++j) {
      const double m = pi.mass(a, j);
      if (m == 0.0) continue;
      lhs[j] += m;
      rhs[ifs.target(a, j)] += m;
    }
  double r = 0.0;
  for (std::size_t j = 0; j < ny; ++j) r = std::max(r, std::abs(lhs[j].value() - rhs[j].value()));
  return r;
}

/// Fills pi.holonomy_residual and returns it.
inline double mark_holonomy(JointProbability& pi, const IfsMap& ifs) {
  pi.holonomy_residual = verify_holonomic(pi, ifs);
  return pi.holonomy_residual;
}

/// Random holonomic probability: a log-uniform kernel on [e^-2, e^2]
/// normalized to a ν-Jacobian, paired with its stationary ρ (for the
/// identity IFS, ρ is drawn uniformly from the simplex instead).
inline JointProbability random_holonomic(const IfsMap& ifs, const Measure& nu, std::uint64_t seed,
                                         const StationaryOptions& opt = {}) {
  require_same_space(ifs.theta_space(), nu.space(), "IFS vs prior measure");
  const std::size_t nt = ifs.theta_size(), ny = ifs.y_size();
  std::mt19937_64 rng(seed);
  std::vector<double> logk(nt * ny);
  for (double& v : logk) v = -2.0 + 4.0 * detail::uniform01(rng);
  std::vector<double> terms(nt);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t a = 0; a < nt; ++a) terms[a] = logk[a * ny + j] + nu.log_mass(a);
    const double z = log_sum_exp(std::span<const double>(terms));
    for (std::size_t a = 0; a < nt; ++a) logk[a * ny + j] -= z;
  }
  JacobianKernel jac{ifs.theta_space(), ifs.y_space(), detail::exp_all(logk), logk, nu, 0.0};

  Measure rho = Measure::uniform_probability(ifs.y_space());
  if (ifs.is_identity()) {
    std::vector<double> w(ny);
    CompensatedSum s;
    for (double& v : w) {
      v = -std::log(detail::uniform_open0(rng));
      s += v;
    }
    for (double& v : w) v /= s.value();
    rho = Measure(ifs.y_space(), std::move(w));
  } else {
    rho = stationary(jac, ifs, opt).rho;
  }
  JointProbability pi = assemble(jac, nu, rho);
  mark_holonomy(pi, ifs);
  return pi;
}

}  // namespace ifsb
