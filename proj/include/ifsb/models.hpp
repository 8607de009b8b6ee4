// Worked models: full-shift equilibrium states for finite-memory potentials,
// contractive IFS on an interval, and the builtin scenario corpus.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ifsb/bayes.hpp"
#include "ifsb/error.hpp"
#include "ifsb/holonomy.hpp"
#include "ifsb/ifs.hpp"
#include "ifsb/scenario.hpp"
#include "ifsb/spaces.hpp"
#include "ifsb/transfer.hpp"

namespace ifsb {

// ---------------------------------------------------------------------------
// Full shift with a potential depending on the first `memory` symbols.

struct ShiftModel {
  int alphabet = 2;
  int memory = 1;
  std::vector<double> potential;  // v per word of length `memory`, base-d index

  void validate() const {
    if (alphabet < 2) throw ScenarioError("shift model needs alphabet >= 2");
    if (memory < 1) throw ScenarioError("shift model needs memory >= 1");
    const double n = std::pow(static_cast<double>(alphabet), memory);
    if (static_cast<double>(potential.size()) != n)
      throw ScenarioError("shift potential needs one value per cylinder word");
    for (double v : potential)
      if (!std::isfinite(v)) throw ScenarioError("shift potential must be finite");
  }
};

/// Θ = alphabet with counting measure, Y = words of length `memory`,
/// τ = prepend, l(θ,w) = exp v(θw), π_a ≡ 1. Because v only sees the first
/// `memory` symbols the truncated operator is exact.
inline PipelineConfig shift_config(const ShiftModel& m, std::string name = "shift") {
  m.validate();
  auto theta = share(SampleSpace::counting(static_cast<std::size_t>(m.alphabet)));
  auto words = share(SampleSpace::cylinder_words(m.alphabet, m.memory));
  IfsMap ifs = IfsMap::prepend(theta, words);
  const std::size_t d = theta->size(), n = words->size();
  std::vector<double> logl(d * n);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t w = 0; w < n; ++w) logl[a * n + w] = m.potential[ifs.target(a, w)];
  return PipelineConfig{std::move(name),
                        LossFn::from_log_values(theta, words, std::move(logl)),
                        DensityFn::constant(theta, 1.0),
                        std::move(ifs),
                        PsiChoice::Eigen,
                        RhoChoice::make_stationary()};
}

struct EquilibriumState {
  int alphabet = 0;
  int memory = 0;
  double lambda = 0.0;
  std::vector<double> h;  // per word, sup h = 1
  Measure rho;            // equilibrium probability of the length-`memory` cylinders
  JacobianKernel jacobian;
};

inline EquilibriumState equilibrium_state(const ShiftModel& m, const EigenOptions& eo = {},
                                          const StationaryOptions& so = {}) {
  PipelineConfig cfg = shift_config(m);
  const Measure nu = density_to_measure(cfg.prior);
  NormalizerPair pair = eigen_pair(cfg.loss, nu, cfg.ifs, eo);
  JacobianKernel jac = jacobian(cfg.loss, nu, cfg.ifs, pair);
  StationaryResult st = stationary(jac, cfg.ifs, so);
  return EquilibriumState{m.alphabet,
                          m.memory,
                          *pair.lambda,
                          std::vector<double>(pair.psi.values().begin(), pair.psi.values().end()),
                          std::move(st.rho),
                          std::move(jac)};
}

/// π([word]) for words of length ≤ memory + 1 (symbols 0-based): the mass
/// l̄(i,w) ρ(w) of the length-(memory+1) cylinder [i w], summed over the
/// extensions of shorter words.
inline double equilibrium_cylinder_mass(const EquilibriumState& st, std::span<const int> word) {
  const std::size_t m = word.size();
  const auto k = static_cast<std::size_t>(st.memory);
  if (m > k + 1) throw ScenarioError("cylinder longer than memory + 1 is beyond the exact truncation");
  for (int s : word)
    if (s < 0 || s >= st.alphabet) throw ScenarioError("cylinder symbol outside alphabet");
  const SampleSpace& words = *st.rho.space();
  const std::size_t d = static_cast<std::size_t>(st.alphabet), n = words.size();
  std::vector<int> w(k);
  CompensatedSum s;
  for (std::size_t i = 0; i < d; ++i) {
    if (m >= 1 && static_cast<std::size_t>(word[0]) != i) continue;
    for (std::size_t wi = 0; wi < n; ++wi) {
      words.decode(wi, w);
      bool match = true;
      for (std::size_t p = 1; p < m && match; ++p) match = w[p - 1] == word[p];
      if (match) s += st.jacobian.value(i, wi) * st.rho[wi];
    }
  }
  return s.value();
}

// ---------------------------------------------------------------------------
// Contractive IFS on a grid.

struct ContractiveModel {
  SpacePtr theta;
  SpacePtr y_grid;
  std::vector<std::pair<double, double>> maps;  // τ_θ(y) = a y + b
  double gamma = 0.5;
  std::vector<double> log_loss;  // 𝔩(θ,y), [θ][y]
  std::vector<double> prior;     // π_a per θ-atom

  /// τ_1(y) = y/3, τ_2(y) = y/3 + 2/3 on [0,1], counting dθ, π_a = (1/2,1/2),
  /// and the given log-loss (zero by default).
  static ContractiveModel middle_thirds(std::size_t nodes = 1025,
                                        std::function<double(std::size_t, double)> log_loss = {}) {
    ContractiveModel m;
    m.theta = share(SampleSpace::counting(2));
    m.y_grid = share(SampleSpace::grid(0.0, 1.0, nodes));
    m.maps = {{1.0 / 3.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0}};
    m.gamma = 1.0 / 3.0;
    m.prior = {0.5, 0.5};
    m.log_loss.assign(2 * nodes, 0.0);
    if (log_loss)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t j = 0; j < nodes; ++j) m.log_loss[a * nodes + j] = log_loss(a, m.y_grid->node(j));
    return m;
  }
};

inline PipelineConfig contractive_config(const ContractiveModel& m, std::string name = "contractive") {
  IfsMap ifs = IfsMap::affine(m.theta, m.y_grid, m.maps, m.gamma);
  return PipelineConfig{std::move(name),
                        LossFn::from_log_values(m.theta, m.y_grid, m.log_loss),
                        DensityFn(m.theta, m.prior),
                        std::move(ifs),
                        PsiChoice::Eigen,
                        RhoChoice::make_stationary()};
}

struct ContractiveResult {
  PosteriorReport report;
  /// trace[f][n] = ‖Lⁿ g_f − ∫ g_f dρ‖_∞ for n = 0..steps.
  std::vector<std::vector<double>> trace;
  std::vector<double> rho_integrals;  // ∫ g_f dρ
};

/// L g(y) = ∫ l̄(θ,y) g(τ_θ(y)) dν(θ) on grid functions.
inline std::vector<double> normalized_transfer_apply(const JacobianKernel& jac, const IfsMap& ifs,
                                                     std::span<const double> g) {
  const std::size_t nt = ifs.theta_size(), ny = ifs.y_size();
  std::vector<double> out(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    CompensatedSum s;
    for (std::size_t a = 0; a < nt; ++a) s += jac.value(a, j) * jac.nu[a] * g[ifs.target(a, j)];
    out[j] = s.value();
  }
  return out;
}

inline ContractiveResult contractive_pipeline(const ContractiveModel& m,
                                              const std::vector<std::function<double(double)>>& tests,
                                              int steps = 40, const EigenOptions& eo = {}) {
  PipelineConfig cfg = contractive_config(m);
  cfg.eigen = eo;
  ContractiveResult out{build_posterior_report(cfg), {}, {}};
  const auto& rep = out.report;
  const SampleSpace& grid = *m.y_grid;
  for (const auto& fn : tests) {
    std::vector<double> g(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) g[j] = fn(grid.node(j));
    const double target = integrate(g, rep.rho);
    std::vector<double> errs;
    for (int n = 0; n <= steps; ++n) {
      double e = 0.0;
      for (double v : g) e = std::max(e, std::abs(v - target));
      errs.push_back(e);
      g = normalized_transfer_apply(rep.jacobian, cfg.ifs, g);
    }
    out.trace.push_back(std::move(errs));
    out.rho_integrals.push_back(target);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Builtin corpus.

/// A frozen expected value for a builtin scenario. `source` says where the
/// number comes from: a published closed form, an independent oracle, or an
/// exact identity.
struct Expectation {
  std::string quantity;
  double expected = 0.0;
  double tol = 0.0;
  std::string source;  // reference, oracle or exact
  std::function<double(const ScenarioOutcome&)> extract;
};

struct BuiltinScenario {
  std::string name;
  std::string description;
  Scenario scenario;
  std::vector<Expectation> expectations;
};

namespace detail {

inline double kernel_at(const ScenarioOutcome& o, std::size_t a, std::size_t j) {
  return o.report.kernel[a * o.report.jacobian.y->size() + j];
}

inline PipelineConfig edr_config(std::string name, IfsMap (*make_ifs)(SpacePtr, SpacePtr)) {
  auto theta = share(SampleSpace::counting({"theta1", "theta2"}));
  auto y = share(SampleSpace::counting({"1", "2"}));
  auto loss = LossFn::from_values(theta, y, {3.0 / 10, 7.0 / 10, 4.0 / 10, 6.0 / 10});
  return PipelineConfig{std::move(name), std::move(loss), DensityFn(theta, {1.0 / 3, 2.0 / 3}),
                        make_ifs(theta, y), PsiChoice::One, RhoChoice::make_stationary()};
}

inline IfsMap constant_at_first(SpacePtr theta, SpacePtr y) { return make_constant(theta, y, 0); }
inline IfsMap identity_ifs(SpacePtr theta, SpacePtr y) { return make_identity(theta, y); }

inline Expectation expect(std::string q, double v, double tol, std::string tag,
                          std::function<double(const ScenarioOutcome&)> f) {
  return Expectation{std::move(q), v, tol, std::move(tag), std::move(f)};
}

inline double posterior_pressure(const ScenarioOutcome& o) {
  return o.posterior_pressure ? o.posterior_pressure->total : std::nan("");
}

}  // namespace detail

/// Number of zeros observed in the 1000-draw Bernoulli builtin, per data atom.
inline std::vector<int> popo_zero_counts() { return {0, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000}; }

/// Θ = [0,1] on a midpoint grid, uniform prior, Y = 1000-draw samples summarized
/// by their zero count, l(θ,y) = θ^#0 (1−θ)^#1, observed sample #0 = 900.
inline PipelineConfig popo_config(std::size_t nodes = 2001) {
  auto theta = share(SampleSpace::grid(0.0, 1.0, nodes));
  std::vector<std::string> labels;
  for (int z : popo_zero_counts()) labels.push_back("zeros=" + std::to_string(z));
  auto y = share(SampleSpace::counting(std::move(labels)));
  const auto counts = popo_zero_counts();
  std::vector<double> logl(nodes * counts.size());
  for (std::size_t a = 0; a < nodes; ++a) {
    const double t = theta->node(a);
    for (std::size_t j = 0; j < counts.size(); ++j)
      logl[a * counts.size() + j] = counts[j] * std::log(t) + (1000 - counts[j]) * std::log1p(-t);
  }
  const std::size_t observed = y->index_of("zeros=900");
  return PipelineConfig{"popo", LossFn::from_log_values(theta, y, std::move(logl)),
                        DensityFn::constant(theta, 1.0), make_constant(theta, y, observed),
                        PsiChoice::One, RhoChoice::make_stationary()};
}

inline std::vector<BuiltinScenario> builtin_scenarios() {
  using detail::expect;
  using detail::kernel_at;
  std::vector<BuiltinScenario> out;
  const PressureCheck scan{1000, 7};

  {
    BuiltinScenario b{"edr", "two-parameter discrete Bayes rule via the constant IFS at y0 = 1",
                      Scenario{detail::edr_config("edr", detail::constant_at_first), Checks{scan, {}}},
                      {}};
    auto& e = b.expectations;
    e.push_back(expect("p(1)", 11.0 / 30, 1e-12, "reference",
                       [](const auto& o) { return o.report.pair.phi[0]; }));
    e.push_back(expect("p(2)", 19.0 / 30, 1e-12, "reference",
                       [](const auto& o) { return o.report.pair.phi[1]; }));
    e.push_back(expect("pi_p(theta1|1)", 3.0 / 11, 1e-12, "reference", [](const auto& o) { return kernel_at(o, 0, 0); }));
    e.push_back(expect("pi_p(theta2|1)", 8.0 / 11, 1e-12, "reference", [](const auto& o) { return kernel_at(o, 1, 0); }));
    e.push_back(expect("pi_p(theta1|2)", 7.0 / 19, 1e-12, "reference", [](const auto& o) { return kernel_at(o, 0, 1); }));
    e.push_back(expect("pi_p(theta2|2)", 12.0 / 19, 1e-12, "reference", [](const auto& o) { return kernel_at(o, 1, 1); }));
    e.push_back(expect("rho(1)", 1.0, 0.0, "reference", [](const auto& o) { return o.report.rho[0]; }));
    e.push_back(expect("posterior pressure", 0.0, 1e-8, "reference", detail::posterior_pressure));
    out.push_back(std::move(b));
  }
  {
    BuiltinScenario b{"popo", "Bernoulli likelihood with 900 zeros in 1000 draws, uniform prior on a grid",
                      Scenario{popo_config(), Checks{scan, {}}}, {}};
    auto mean = [](const ScenarioOutcome& o) {
      const auto& th = *o.report.theta_marginal.space();
      CompensatedSum s;
      for (std::size_t a = 0; a < th.size(); ++a) s += th.node(a) * o.report.theta_marginal[a];
      return s.value();
    };
    auto& e = b.expectations;
    e.push_back(expect("posterior mean", 901.0 / 1002, 2e-3, "oracle", mean));
    e.push_back(expect("posterior total mass", 1.0, 1e-10, "exact",
                       [](const auto& o) { return o.report.theta_marginal.total(); }));
    e.push_back(expect("log p(observed)", -328.82204221257979, 1e-6, "oracle", [](const auto& o) {
      return std::log(o.report.pair.phi[o.report.pair.phi.space()->index_of("zeros=900")]);
    }));
    e.push_back(expect("posterior pressure", 0.0, 1e-8, "reference", detail::posterior_pressure));
    out.push_back(std::move(b));
  }
  {
    PipelineConfig cfg = detail::edr_config("meansample", detail::identity_ifs);
    cfg.rho = RhoChoice::make_explicit({0.3, 0.7});
    BuiltinScenario b{"meansample", "mean posterior over an observed sample distribution (identity IFS)",
                      Scenario{std::move(cfg), Checks{scan, {}}}, {}};
    auto& e = b.expectations;
    e.push_back(expect("pi_p(theta1|rho)", 71.0 / 209, 1e-12, "oracle",
                       [](const auto& o) { return o.report.mean_density[0]; }));
    e.push_back(expect("pi_p(theta2|rho)", 138.0 / 209, 1e-12, "oracle",
                       [](const auto& o) { return o.report.mean_density[1]; }));
    e.push_back(expect("holonomy residual", 0.0, 1e-12, "reference",
                       [](const auto& o) { return o.report.joint.holonomy_residual; }));
    e.push_back(expect("posterior pressure", 0.0, 1e-8, "reference", detail::posterior_pressure));
    out.push_back(std::move(b));
  }
  {
    auto theta = share(SampleSpace::counting(2));
    PipelineConfig cfg{"markov-marma", LossFn::from_values(theta, theta, {1, 2, 2, 1}),
                       DensityFn::constant(theta, 1.0), make_theta_select(theta, theta),
                       PsiChoice::Eigen, RhoChoice::make_stationary()};
    BuiltinScenario b{"markov-marma", "Markov measure from theta_select with the Perron normalizer",
                      Scenario{std::move(cfg), Checks{scan, {}}}, {}};
    auto& e = b.expectations;
    e.push_back(expect("lambda", 3.0, 1e-10, "oracle", [](const auto& o) { return *o.report.pair.lambda; }));
    e.push_back(expect("jacobian(1,1)", 1.0 / 3, 1e-10, "oracle",
                       [](const auto& o) { return o.report.jacobian.value(0, 0); }));
    e.push_back(expect("jacobian(2,1)", 2.0 / 3, 1e-10, "oracle",
                       [](const auto& o) { return o.report.jacobian.value(1, 0); }));
    e.push_back(expect("rho(1)", 0.5, 1e-10, "oracle", [](const auto& o) { return o.report.rho[0]; }));
    e.push_back(expect("nu_p(1) - rho(1)", 0.0, 1e-10, "reference",
                       [](const auto& o) { return o.report.theta_marginal[0] - o.report.rho[0]; }));
    e.push_back(expect("nu_p(2) - rho(2)", 0.0, 1e-10, "reference",
                       [](const auto& o) { return o.report.theta_marginal[1] - o.report.rho[1]; }));
    e.push_back(expect("posterior pressure", 0.0, 1e-8, "reference", detail::posterior_pressure));
    out.push_back(std::move(b));
  }
  {
    // v(i,j) = log M[i][j] with M = [[1,2],[3,1]]: Perron root 1 + √6 and
    // equilibrium 2-cylinder masses u_i M_ij w_j / (λ u·w).
    ShiftModel m{2, 2, {0.0, std::log(2.0), std::log(3.0), 0.0}};
    const double lam = 1.0 + std::sqrt(6.0);
    BuiltinScenario b{"shift-trite", "full-shift equilibrium state of a two-symbol memory-2 potential",
                      Scenario{shift_config(m, "shift-trite"), Checks{scan, {}}}, {}};
    auto& e = b.expectations;
    e.push_back(expect("lambda", lam, 1e-10, "oracle", [](const auto& o) { return *o.report.pair.lambda; }));
    e.push_back(expect("rho[11]", 1.0 / (2 * lam), 1e-10, "oracle", [](const auto& o) { return o.report.rho[0]; }));
    e.push_back(expect("rho[12]", std::sqrt(6.0) / (2 * lam), 1e-10, "oracle",
                       [](const auto& o) { return o.report.rho[1]; }));
    e.push_back(expect("rho[21]", std::sqrt(6.0) / (2 * lam), 1e-10, "oracle",
                       [](const auto& o) { return o.report.rho[2]; }));
    e.push_back(expect("rho[22]", 1.0 / (2 * lam), 1e-10, "oracle", [](const auto& o) { return o.report.rho[3]; }));
    e.push_back(expect("nu_p(1) = pi([1])", 0.5, 1e-10, "oracle",
                       [](const auto& o) { return o.report.theta_marginal[0]; }));
    e.push_back(expect("posterior pressure", 0.0, 1e-8, "reference", detail::posterior_pressure));
    out.push_back(std::move(b));
  }
  {
    ContractiveModel m = ContractiveModel::middle_thirds();
    BuiltinScenario b{"contractive-exholonomic", "middle-thirds IFS on [0,1] with zero log-loss",
                      Scenario{contractive_config(m, "contractive-exholonomic"), Checks{scan, {}}}, {}};
    auto moment = [](int p) {
      return [p](const ScenarioOutcome& o) {
        const auto& g = *o.report.rho.space();
        CompensatedSum s;
        for (std::size_t j = 0; j < g.size(); ++j) s += std::pow(g.node(j), p) * o.report.rho[j];
        return s.value();
      };
    };
    auto& e = b.expectations;
    e.push_back(expect("lambda", 1.0, 1e-10, "exact", [](const auto& o) { return *o.report.pair.lambda; }));
    e.push_back(expect("min h", 1.0, 1e-10, "exact", [](const auto& o) {
      const auto v = o.report.pair.psi.values();
      return *std::min_element(v.begin(), v.end());
    }));
    e.push_back(expect("integral y drho", 0.5, 1e-9, "oracle", moment(1)));
    e.push_back(expect("integral y^2 drho", 3.0 / 8, 2e-3, "oracle", moment(2)));
    e.push_back(expect("nu_p(1)", 0.5, 1e-10, "oracle", [](const auto& o) { return o.report.theta_marginal[0]; }));
    e.push_back(expect("posterior pressure", 0.0, 1e-8, "reference", detail::posterior_pressure));
    out.push_back(std::move(b));
  }
  {
    PipelineConfig cfg = detail::edr_config("zellner-zeze", detail::identity_ifs);
    cfg.rho = RhoChoice::make_dirac(0);
    BuiltinScenario b{"zellner-zeze", "optimal information processing: Bayes rule maximizes the restricted functional",
                      Scenario{std::move(cfg), Checks{scan, ZellnerCheck{0}}}, {}};
    auto& e = b.expectations;
    e.push_back(expect("zellner(posterior)", 0.0, 1e-10, "reference",
                       [](const auto& o) { return o.zellner ? o.zellner->at_posterior : std::nan(""); }));
    e.push_back(expect("zellner(prior)", -0.008882647160963876, 1e-12, "oracle", [](const auto& o) {
      return o.zellner && o.zellner->at_prior ? *o.zellner->at_prior : std::nan("");
    }));
    e.push_back(expect("posterior pressure", 0.0, 1e-8, "reference", detail::posterior_pressure));
    out.push_back(std::move(b));
  }
  return out;
}

inline const BuiltinScenario* find_builtin(const std::vector<BuiltinScenario>& all, const std::string& name) {
  for (const auto& b : all)
    if (b.name == name) return &b;
  return nullptr;
}

}  // namespace ifsb
