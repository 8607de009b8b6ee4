// Loss functions, normalizer pairs, the transfer (Ruelle) operator and the
// ν-Jacobian kernel it induces.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ifsb/detail/graph.hpp"
#include "ifsb/error.hpp"
#include "ifsb/ifs.hpp"
#include "ifsb/spaces.hpp"

namespace ifsb {

/// Strictly positive, bounded l(θ,y), stored row-major [θ][y] in both the
/// linear and the log domain. The log domain is authoritative: linear values
/// may underflow to zero for likelihoods with large exponents.
class LossFn {
 public:
  static LossFn from_values(SpacePtr theta, SpacePtr y, std::vector<double> values) {
    for (double v : values)
      if (!(v > 0.0) || !std::isfinite(v))
        throw ScenarioError("loss values must be strictly positive and finite");
    std::vector<double> logs(values.size());
    std::transform(values.begin(), values.end(), logs.begin(), [](double v) { return std::log(v); });
    return LossFn(std::move(theta), std::move(y), std::move(values), std::move(logs));
  }

  static LossFn from_log_values(SpacePtr theta, SpacePtr y, std::vector<double> log_values) {
    for (double v : log_values)
      if (!std::isfinite(v)) throw ScenarioError("log-loss values must be finite");
    std::vector<double> values(log_values.size());
    std::transform(log_values.begin(), log_values.end(), values.begin(),
                   [](double v) { return std::exp(v); });
    return LossFn(std::move(theta), std::move(y), std::move(values), std::move(log_values));
  }

  const SpacePtr& theta_space() const noexcept { return theta_; }
  const SpacePtr& y_space() const noexcept { return y_; }
  std::size_t theta_size() const noexcept { return theta_->size(); }
  std::size_t y_size() const noexcept { return y_->size(); }
  double value(std::size_t theta, std::size_t y) const noexcept { return values_[theta * y_size() + y]; }
  double log_value(std::size_t theta, std::size_t y) const noexcept {
    return logs_[theta * y_size() + y];
  }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> log_values() const noexcept { return logs_; }
  /// Bounds a ≤ l ≤ b, as logs.
  double log_lower_bound() const noexcept { return log_lo_; }
  double log_upper_bound() const noexcept { return log_hi_; }

 private:
  LossFn(SpacePtr theta, SpacePtr y, std::vector<double> values, std::vector<double> logs)
      : theta_(std::move(theta)), y_(std::move(y)), values_(std::move(values)), logs_(std::move(logs)) {
    if (!theta_ || !y_) throw ScenarioError("loss needs both spaces");
    if (values_.size() != theta_->size() * y_->size())
      throw ScenarioError("loss table has " + std::to_string(values_.size()) + " entries, expected " +
                          std::to_string(theta_->size() * y_->size()));
    log_lo_ = *std::min_element(logs_.begin(), logs_.end());
    log_hi_ = *std::max_element(logs_.begin(), logs_.end());
  }

  SpacePtr theta_, y_;
  std::vector<double> values_, logs_;
  double log_lo_ = 0, log_hi_ = 0;
};

enum class NormalizerKind { Canonical, Eigen, Explicit };

inline const char* to_string(NormalizerKind p) {
  switch (p) {
    case NormalizerKind::Canonical: return "canonical";
    case NormalizerKind::Eigen: return "eigen";
    case NormalizerKind::Explicit: return "explicit";
  }
  return "?";
}

/// Positive (φ, ψ) on Y making l·ψ∘τ / (ψ·φ) a ν-Jacobian.
struct NormalizerPair {
  DensityFn phi;
  DensityFn psi;
  NormalizerKind kind;
  std::optional<double> lambda;  // set iff kind == Eigen; then φ ≡ λ
};

/// Nonnegative g(θ,y) with ∫ g(·,y) dν = 1 for every y.
struct JacobianKernel {
  SpacePtr theta, y;
  std::vector<double> values;      // [θ][y]
  std::vector<double> log_values;  // [θ][y]
  Measure nu;
  double normalization_residual = 0.0;

  double value(std::size_t a, std::size_t j) const noexcept { return values[a * y->size() + j]; }
  double log_value(std::size_t a, std::size_t j) const noexcept {
    return log_values[a * y->size() + j];
  }
};

namespace detail {

inline void check_loss_measure(const LossFn& l, const Measure& nu) {
  require_same_space(l.theta_space(), nu.space(), "loss vs prior measure");
}

inline void check_loss_ifs(const LossFn& l, const IfsMap& ifs) {
  require_same_space(l.theta_space(), ifs.theta_space(), "loss vs IFS parameter space");
  require_same_space(l.y_space(), ifs.y_space(), "loss vs IFS data space");
}

/// log ∫ l(θ,y) ψ(τ_θ(y)) dν(θ) for every y.
inline std::vector<double> log_weighted_column_sums(const LossFn& l, const Measure& nu,
                                                    const IfsMap* ifs,
                                                    std::span<const double> log_psi) {
  const std::size_t nt = l.theta_size(), ny = l.y_size();
  std::vector<double> out(ny), terms(nt);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t a = 0; a < nt; ++a) {
      const double lpsi = ifs ? log_psi[ifs->target(a, j)] : 0.0;
      terms[a] = l.log_value(a, j) + lpsi + nu.log_mass(a);
    }
    out[j] = log_sum_exp(std::span<const double>(terms));
  }
  return out;
}

inline std::vector<double> exp_all(std::span<const double> xs) {
  std::vector<double> out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [](double v) { return std::exp(v); });
  return out;
}

}  // namespace detail

/// ψ ≡ 1, φ(y) = ∫ l(θ,y) dν(θ).
inline NormalizerPair canonical_pair(const LossFn& l, const Measure& nu) {
  detail::check_loss_measure(l, nu);
  auto logphi = detail::log_weighted_column_sums(l, nu, nullptr, {});
  return NormalizerPair{DensityFn(l.y_space(), detail::exp_all(logphi)),
                        DensityFn::constant(l.y_space(), 1.0), NormalizerKind::Canonical, std::nullopt};
}

/// The unique φ completing a given ψ: φ(y) = ψ(y)^{-1} ∫ l(θ,y) ψ(τ_θ(y)) dν(θ).
inline NormalizerPair pair_from_psi(const LossFn& l, const Measure& nu, const IfsMap& ifs,
                                    const DensityFn& psi) {
  detail::check_loss_measure(l, nu);
  detail::check_loss_ifs(l, ifs);
  require_same_space(psi.space(), l.y_space(), "psi vs data space");
  std::vector<double> log_psi(psi.size());
  for (std::size_t j = 0; j < psi.size(); ++j) log_psi[j] = psi.log(j);
  auto s = detail::log_weighted_column_sums(l, nu, &ifs, log_psi);
  for (std::size_t j = 0; j < s.size(); ++j) s[j] -= log_psi[j];
  return NormalizerPair{DensityFn(l.y_space(), detail::exp_all(s)), psi, NormalizerKind::Explicit,
                        std::nullopt};
}

/// (T g)(y) = ∫ l(θ,y) g(τ_θ(y)) dν(θ).
inline std::vector<double> transfer_apply(const LossFn& l, const Measure& nu, const IfsMap& ifs,
                                          std::span<const double> g) {
  detail::check_loss_measure(l, nu);
  detail::check_loss_ifs(l, ifs);
  if (g.size() != l.y_size()) throw ScenarioError("transfer_apply: g has the wrong size");
  const std::size_t nt = l.theta_size(), ny = l.y_size();
  std::vector<double> out(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    CompensatedSum s;
    for (std::size_t a = 0; a < nt; ++a) s += l.value(a, j) * nu[a] * g[ifs.target(a, j)];
    out[j] = s.value();
  }
  return out;
}

struct EigenOptions {
  double tol = 1e-12;
  long max_iter = 100000;
  bool record_trace = false;
};

struct EigenDiagnostics {
  long iterations = 0;
  double residual = 0.0;  // max_y |(T h)(y)/h(y) − λ| / λ
  std::vector<double> residual_trace;
};

/// Perron eigendata (λ, h) of the transfer operator, returned as the normalizer
/// pair ψ = h (sup h = 1), φ ≡ λ.
///
/// The operator must have a single closed class in its support graph, which
/// is what makes the positive eigenfunction unique up to scale. Identity
/// IFS inputs are accepted only when the canonical φ is already constant.
inline NormalizerPair eigen_pair(const LossFn& l, const Measure& nu, const IfsMap& ifs,
                                 const EigenOptions& opt = {}, EigenDiagnostics* diag = nullptr) {
  detail::check_loss_measure(l, nu);
  detail::check_loss_ifs(l, ifs);
  const std::size_t nt = l.theta_size(), ny = l.y_size();

  // Sparse operator rows, scaled by exp(-shift) to keep entries in range.
  double shift = kNegInf;
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t j = 0; j < ny; ++j) shift = std::max(shift, l.log_value(a, j) + nu.log_mass(a));
  std::vector<double> coef(nt * ny);
  detail::Digraph graph(ny);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t a = 0; a < nt; ++a) {
      const double c = std::exp(l.log_value(a, j) + nu.log_mass(a) - shift);
      coef[j * nt + a] = c;
      if (c > 0.0) graph[j].push_back(ifs.target(a, j));
    }
  auto apply = [&](std::span<const double> g, std::vector<double>& out) {
    for (std::size_t j = 0; j < ny; ++j) {
      CompensatedSum s;
      for (std::size_t a = 0; a < nt; ++a) s += coef[j * nt + a] * g[ifs.target(a, j)];
      out[j] = s.value();
    }
  };

  std::vector<bool> in_closed;
  const std::size_t closed = detail::closed_class_count(graph, &in_closed);
  if (closed != 1) {
    if (ifs.is_identity()) {
      const NormalizerPair c = canonical_pair(l, nu);
      const auto phi = c.phi.values();
      const auto [lo, hi] = std::minmax_element(phi.begin(), phi.end());
      if (*hi - *lo <= 1e-12 * *hi) {
        if (diag) *diag = EigenDiagnostics{};
        return NormalizerPair{c.phi, c.psi, NormalizerKind::Eigen, *hi};
      }
      throw ScenarioError("no constant-phi normalizer exists for the identity IFS");
    }
    throw ScenarioError("transfer operator has " + std::to_string(closed) +
                        " closed classes; the positive eigenfunction is not unique");
  }

  std::vector<double> h(ny, 1.0), th(ny), next(ny);
  double lambda = 0.0, residual = 0.0, stabilizer = 0.0;
  if (diag) *diag = EigenDiagnostics{};
  // Plain power iteration first; if it has not settled after a burn-in, add a
  // multiple of the identity (a lazy iteration), which removes the other
  // peripheral eigenvalues of periodic operators.
  constexpr long kPlainIterations = 500;
  // With sup h = 1, a closed-class entry this small means the iterate is
  // draining out of the closed class.
  constexpr double kDeadMass = 1e-250;
  for (long it = 1; it <= opt.max_iter; ++it) {
    apply(h, th);
    const auto imax = static_cast<std::size_t>(std::max_element(h.begin(), h.end()) - h.begin());
    lambda = th[imax] / h[imax];
    // Pointwise ratio gap: this is exactly the column-sum error of the
    // resulting Jacobian.
    double r = 0.0;
    for (std::size_t j = 0; j < ny; ++j)
      r = h[j] > 0.0 ? std::max(r, std::abs(th[j] / h[j] - lambda)) : std::numeric_limits<double>::infinity();
    residual = lambda > 0 ? r / lambda : std::numeric_limits<double>::infinity();
    if (diag) {
      diag->iterations = it;
      diag->residual = residual;
      if (opt.record_trace) diag->residual_trace.push_back(residual);
    }
    if (residual <= opt.tol) break;
    for (std::size_t j = 0; j < ny; ++j)
      if (in_closed[j] && !(h[j] > kDeadMass))
        throw ScenarioError("transfer operator has no positive eigenfunction: a transient class dominates");
    if (it == opt.max_iter)
      throw ConvergenceError("eigen_pair: power iteration did not converge", residual, it);
    if (it == kPlainIterations) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (std::size_t j = 0; j < ny; ++j)
        if (h[j] > 0) {
          lo = std::min(lo, th[j] / h[j]);
          hi = std::max(hi, th[j] / h[j]);
        }
      stabilizer = 0.5 * (lo + hi);
    }
    double top = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
      next[j] = th[j] + stabilizer * h[j];
      top = std::max(top, next[j]);
    }
    if (!(top > 0.0)) throw ConsistencyError("eigen_pair: iterate collapsed to zero");
    for (std::size_t j = 0; j < ny; ++j) h[j] = next[j] / top;
  }

  // The closed class is invariant, so (T h)/h on it bounds its own Perron
  // root. When a transient class has the larger root, the iterate dies out
  // on the closed class and no positive eigenfunction exists.
  double closed_hi = 0.0;
  for (std::size_t j = 0; j < ny; ++j)
    if (in_closed[j] && h[j] > 0) closed_hi = std::max(closed_hi, th[j] / h[j]);
  if (!(closed_hi >= lambda * (1.0 - 1e-8)))
    throw ScenarioError("transfer operator has no positive eigenfunction: a transient class dominates");

  double top = *std::max_element(h.begin(), h.end());
  for (double& v : h) v /= top;
  if (!(*std::min_element(h.begin(), h.end()) > 0.0))
    throw ConsistencyError("eigen_pair: Perron vector is not strictly positive");
  const double lam = lambda * std::exp(shift);
  if (!(lam > 0.0) || !std::isfinite(lam))
    throw ConsistencyError("eigen_pair: eigenvalue out of floating-point range");
  return NormalizerPair{DensityFn::constant(l.y_space(), lam), DensityFn(l.y_space(), std::move(h)),
                        NormalizerKind::Eigen, lam};
}

/// l̄(θ,y) = l(θ,y) ψ(τ_θ(y)) / (ψ(y) φ(y)). Throws ConsistencyError when the
/// pair does not normalize l (residual above 1e-8).
inline JacobianKernel jacobian(const LossFn& l, const Measure& nu, const IfsMap& ifs,
                               const NormalizerPair& pair) {
  detail::check_loss_measure(l, nu);
  detail::check_loss_ifs(l, ifs);
  const std::size_t nt = l.theta_size(), ny = l.y_size();
  JacobianKernel k{l.theta_space(), l.y_space(), std::vector<double>(nt * ny),
                   std::vector<double>(nt * ny), nu, 0.0};
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t j = 0; j < ny; ++j) {
      const double lv = l.log_value(a, j) + pair.psi.log(ifs.target(a, j)) - pair.psi.log(j) -
                        pair.phi.log(j);
      k.log_values[a * ny + j] = lv;
      k.values[a * ny + j] = std::exp(lv);
    }
  double worst = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    CompensatedSum s;
    for (std::size_t a = 0; a < nt; ++a) s += k.values[a * ny + j] * nu[a];
    worst = std::max(worst, std::abs(s.value() - 1.0));
  }
  k.normalization_residual = worst;
  if (!(worst <= 1e-8))
    throw ConsistencyError("jacobian: normalizer pair leaves residual " + std::to_string(worst));
  return k;
}

}  // namespace ifsb
