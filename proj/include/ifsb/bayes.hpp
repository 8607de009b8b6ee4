// Posterior items of the IFS Bayesian method and the classical Bayes-rule
// reductions.
#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ifsb/error.hpp"
#include "ifsb/holonomy.hpp"
#include "ifsb/ifs.hpp"
#include "ifsb/spaces.hpp"
#include "ifsb/transfer.hpp"

namespace ifsb {

/// log of θ ↦ l(θ,y) ψ(τ_θ(y)) π_a(θ) / ∫ l ψ∘τ π_a dθ.
inline std::vector<double> log_posterior_kernel(const LossFn& l, const DensityFn& pi_a,
                                                const IfsMap& ifs, const DensityFn& psi,
                                                std::size_t y) {
  require_same_space(pi_a.space(), l.theta_space(), "prior vs parameter space");
  require_same_space(psi.space(), l.y_space(), "psi vs data space");
  detail::check_loss_ifs(l, ifs);
  l.y_space()->check_index(y);
  const SampleSpace& theta = *l.theta_space();
  const std::size_t nt = l.theta_size();
  std::vector<double> logw(nt), terms(nt);
  for (std::size_t a = 0; a < nt; ++a) {
    logw[a] = l.log_value(a, y) + psi.log(ifs.target(a, y)) + pi_a.log(a);
    terms[a] = logw[a] + std::log(theta.base_weight(a));
  }
  const double z = log_sum_exp(std::span<const double>(terms));
  for (double& v : logw) v -= z;
  return logw;
}

/// π_p(θ | τ, ψ, y): a probability density against dθ.
inline std::vector<double> posterior_kernel(const LossFn& l, const DensityFn& pi_a, const IfsMap& ifs,
                                            const DensityFn& psi, std::size_t y) {
  return detail::exp_all(log_posterior_kernel(l, pi_a, ifs, psi, y));
}

/// π_p(θ | τ, ψ, ρ) = ∫ π_p(θ | τ, ψ, y) dρ(y).
inline std::vector<double> posterior_mean_density(const LossFn& l, const DensityFn& pi_a,
                                                  const IfsMap& ifs, const DensityFn& psi,
                                                  const Measure& rho) {
  require_same_space(rho.space(), l.y_space(), "rho vs data space");
  const std::size_t nt = l.theta_size();
  std::vector<CompensatedSum> acc(nt);
  for (std::size_t j = 0; j < l.y_size(); ++j) {
    if (rho[j] == 0.0) continue;
    const auto k = posterior_kernel(l, pi_a, ifs, psi, j);
    for (std::size_t a = 0; a < nt; ++a) acc[a] += k[a] * rho[j];
  }
  std::vector<double> out(nt);
  for (std::size_t a = 0; a < nt; ++a) out[a] = acc[a].value();
  return out;
}

/// Bayes' rule f(y0|θ) π_a(θ) / p(y0): the constant-IFS case with ψ = 1.
inline std::vector<double> classical_posterior(const LossFn& l, const DensityFn& pi_a, std::size_t y0) {
  const IfsMap ifs = make_constant(l.theta_space(), l.y_space(), y0);
  return posterior_kernel(l, pi_a, ifs, DensityFn::constant(l.y_space(), 1.0), y0);
}

/// p(y) = ∫ l(θ,y) π_a(θ) dθ.
inline DensityFn prior_predictive(const LossFn& l, const DensityFn& pi_a) {
  require_same_space(pi_a.space(), l.theta_space(), "prior vs parameter space");
  return canonical_pair(l, density_to_measure(pi_a)).phi;
}

enum class PsiChoice { One, Eigen };

struct RhoChoice {
  enum class Kind { Stationary, Dirac, Explicit };
  Kind kind = Kind::Stationary;
  std::size_t atom = 0;
  std::vector<double> weights;

  static RhoChoice make_stationary() { return {}; }
  static RhoChoice make_dirac(std::size_t y0) { return {Kind::Dirac, y0, {}}; }
  static RhoChoice make_explicit(std::vector<double> w) { return {Kind::Explicit, 0, std::move(w)}; }
};

/// Prior and intermediate items of one run of the method.
struct PipelineConfig {
  std::string name;
  LossFn loss;
  DensityFn prior;  // π_a against the base measure of Θ
  IfsMap ifs;
  PsiChoice psi = PsiChoice::One;
  RhoChoice rho;
  EigenOptions eigen{};
  StationaryOptions stationary_opts{};
};

struct PipelineDiagnostics {
  long eigen_iterations = 0;
  double eigen_residual = 0.0;
  long stationary_iterations = 0;
  double stationary_residual = 0.0;
  bool rho_non_unique = false;
  bool rho_stationary = true;
  double jacobian_residual = 0.0;
};

/// Everything the method produces for one configuration.
struct PosteriorReport {
  std::vector<double> kernel;        // π_p(θ|τ,ψ,y), [θ][y], density against dθ
  std::vector<double> mean_density;  // π_p(θ|τ,ψ,ρ)
  Measure theta_marginal;            // ν_p
  std::string inputs_digest;

  Measure nu;
  NormalizerPair pair;
  JacobianKernel jacobian;
  Measure rho;
  JointProbability joint;  // π = l̄ π_a dθ dρ
  PipelineDiagnostics diagnostics;
};

inline PosteriorReport build_posterior_report(const PipelineConfig& cfg) {
  const LossFn& l = cfg.loss;
  require_same_space(cfg.prior.space(), l.theta_space(), "prior vs parameter space");
  detail::check_loss_ifs(l, cfg.ifs);
  const std::size_t nt = l.theta_size(), ny = l.y_size();
  PipelineDiagnostics diag;

  Measure nu = density_to_measure(cfg.prior);
  std::optional<NormalizerPair> pair;
  if (cfg.psi == PsiChoice::One) {
    pair = canonical_pair(l, nu);
  } else {
    EigenDiagnostics ed;
    pair = eigen_pair(l, nu, cfg.ifs, cfg.eigen, &ed);
    diag.eigen_iterations = ed.iterations;
    diag.eigen_residual = ed.residual;
  }
  JacobianKernel jac = jacobian(l, nu, cfg.ifs, *pair);
  diag.jacobian_residual = jac.normalization_residual;

  std::optional<Measure> rho;
  switch (cfg.rho.kind) {
    case RhoChoice::Kind::Stationary: {
      StationaryResult st = stationary(jac, cfg.ifs, cfg.stationary_opts);
      diag.stationary_iterations = st.iterations;
      diag.stationary_residual = st.residual;
      diag.rho_non_unique = st.non_unique;
      rho = std::move(st.rho);
      break;
    }
    case RhoChoice::Kind::Dirac:
      rho = dirac(l.y_space(), cfg.rho.atom);
      break;
    case RhoChoice::Kind::Explicit: {
      Measure m(l.y_space(), cfg.rho.weights);
      if (!m.normalized()) throw ScenarioError("explicit rho must be a probability");
      rho = std::move(m);
      break;
    }
  }
  if (cfg.rho.kind != RhoChoice::Kind::Stationary) {
    diag.stationary_residual = stationary_residual(jac, cfg.ifs, *rho);
    diag.rho_stationary = diag.stationary_residual <= 1e-9;
  }

  // Posterior items: kernel, mean density, ν_p, and the joint π.
  std::vector<double> kernel(nt * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    const auto col = posterior_kernel(l, cfg.prior, cfg.ifs, pair->psi, j);
    for (std::size_t a = 0; a < nt; ++a) kernel[a * ny + j] = col[a];
  }
  std::vector<double> mean(nt);
  for (std::size_t a = 0; a < nt; ++a) {
    CompensatedSum s;
    for (std::size_t j = 0; j < ny; ++j)
      if ((*rho)[j] != 0.0) s += kernel[a * ny + j] * (*rho)[j];
    mean[a] = s.value();
  }
  std::vector<double> nu_p(nt);
  for (std::size_t a = 0; a < nt; ++a) nu_p[a] = mean[a] * l.theta_space()->base_weight(a);

  JointProbability joint = assemble(jac, nu, *rho);
  mark_holonomy(joint, cfg.ifs);

  std::string digest = cfg.name + ":ifs=" + cfg.ifs.name() +
                       ":psi=" + (cfg.psi == PsiChoice::One ? "one" : "eigen") + ":rho=" +
                       (cfg.rho.kind == RhoChoice::Kind::Stationary ? "stationary"
                        : cfg.rho.kind == RhoChoice::Kind::Dirac     ? "dirac"
                                                                     : "explicit");
  return PosteriorReport{std::move(kernel),
                         std::move(mean),
                         Measure(l.theta_space(), std::move(nu_p)),
                         std::move(digest),
                         std::move(nu),
                         std::move(*pair),
                         std::move(jac),
                         std::move(*rho),
                         std::move(joint),
                         diag};
}

}  // namespace ifsb
