#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ifsb;

TEST(CanonicalPair, EdrPriorPredictive) {
  fixture::Edr e;
  const auto p = canonical_pair(e.loss, e.nu);
  EXPECT_NEAR(p.phi[0], 11.0 / 30, 1e-15);
  EXPECT_NEAR(p.phi[1], 19.0 / 30, 1e-15);
  EXPECT_EQ(p.psi[0], 1.0);
  EXPECT_EQ(p.kind, NormalizerKind::Canonical);
  EXPECT_FALSE(p.lambda);
}

TEST(CanonicalPair, ConstantLossGivesConstantPhi) {
  auto th = share(SampleSpace::counting(3));
  auto y = share(SampleSpace::counting(4));
  const LossFn l = LossFn::from_values(th, y, std::vector<double>(12, 2.5));
  const auto p = canonical_pair(l, Measure::uniform_probability(th));
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(p.phi[j], 2.5, 1e-15);
}

TEST(CanonicalPair, BetaIntegralOnGrid) {
  const PipelineConfig cfg = popo_config();
  const auto p = canonical_pair(cfg.loss, density_to_measure(cfg.prior));
  const std::size_t y = cfg.loss.y_space()->index_of("zeros=900");
  EXPECT_NEAR(std::log(p.phi[y]), oracle::log_beta(901, 101), 1e-6);
  // Every interior atom is a Beta integral. At zeros=0 and zeros=1000 the
  // integrand peaks in the end cell and the midpoint rule loses about
  // (1000 h)^2 / 24 relative accuracy.
  const auto counts = popo_zero_counts();
  const double h = 1.0 / 2001;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double z = counts[j];
    const double tol = (z == 0 || z == 1000) ? 1000 * 1000 * h * h / 24 * 1.1 : 1e-5;
    EXPECT_NEAR(std::log(p.phi[j]), oracle::log_beta(z + 1, 1001 - z), tol) << "zeros=" << z;
  }
}

TEST(TransferApply, IdentityFactorizes) {
  fixture::Edr e;
  const IfsMap id = make_identity(e.theta, e.y);
  const std::vector<double> g{2.0, 5.0};
  const auto out = transfer_apply(e.loss, e.nu, id, g);
  EXPECT_NEAR(out[0], 2.0 * 11.0 / 30, 1e-15);
  EXPECT_NEAR(out[1], 5.0 * 19.0 / 30, 1e-15);
}

TEST(TransferApply, ThetaSelect) {
  fixture::Marma m;
  const auto out = transfer_apply(m.loss, m.nu, m.ifs, std::vector<double>{1.0, 1.0});
  EXPECT_EQ(out[0], 3.0);
  EXPECT_EQ(out[1], 3.0);
}

TEST(TransferApply, ConstantEvaluatesAtY0) {
  fixture::Edr e;
  const IfsMap c = make_constant(e.theta, e.y, 0);
  const auto out = transfer_apply(e.loss, e.nu, c, std::vector<double>{7.0, 100.0});
  EXPECT_NEAR(out[0], 7.0 * 11.0 / 30, 1e-14);
  EXPECT_NEAR(out[1], 7.0 * 19.0 / 30, 1e-14);
}

TEST(EigenPair, ThetaSelectMarkov) {
  fixture::Marma m;
  const auto p = eigen_pair(m.loss, m.nu, m.ifs);
  ASSERT_TRUE(p.lambda);
  EXPECT_NEAR(*p.lambda, 3.0, 1e-12);
  EXPECT_NEAR(p.psi[0], 1.0, 1e-12);
  EXPECT_NEAR(p.psi[1], 1.0, 1e-12);
  EXPECT_EQ(p.phi[0], *p.lambda);
  EXPECT_EQ(p.kind, NormalizerKind::Eigen);
}

TEST(EigenPair, ThetaSelectUniformLoss) {
  for (std::size_t d = 1; d <= 6; ++d) {
    auto s = share(SampleSpace::counting(d));
    const LossFn l = LossFn::from_values(s, s, std::vector<double>(d * d, 1.0));
    const auto p = eigen_pair(l, Measure::base(s), make_theta_select(s, s));
    EXPECT_NEAR(*p.lambda, static_cast<double>(d), 1e-12);
    for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(p.psi[j], 1.0, 1e-12);
  }
}

TEST(EigenPair, BernoulliShiftPotential) {
  const ShiftModel m{2, 1, {std::log(0.3), std::log(0.7)}};
  const PipelineConfig cfg = shift_config(m);
  const auto p = eigen_pair(cfg.loss, density_to_measure(cfg.prior), cfg.ifs);
  EXPECT_NEAR(*p.lambda, 1.0, 1e-12);
  EXPECT_NEAR(p.psi[0], 1.0, 1e-12);
  EXPECT_NEAR(p.psi[1], 1.0, 1e-12);
}

TEST(EigenPair, MatchesDenseOracleOnRandomInstances) {
  for (std::size_t i = 0; i < 100; ++i) {
    const auto in = oracle::random_instance(21, i);
    const auto b = fixture::build(in);
    const auto p = eigen_pair(b.loss, b.nu, b.ifs);
    const auto ref = oracle::perron(oracle::transfer_matrix(in.nt, in.ny, in.loss, in.prior, in.tau));
    EXPECT_NEAR(*p.lambda, ref.lambda, 1e-10 * ref.lambda) << "instance " << i;
    for (std::size_t j = 0; j < in.ny; ++j) EXPECT_NEAR(p.psi[j], ref.h[j], 1e-9) << "instance " << i;
  }
}

TEST(EigenPair, ResidualDecreasesAfterBurnIn) {
  for (std::size_t i = 1; i < 40; ++i) {
    if (i % 10 == 0) continue;
    const auto in = oracle::random_instance(4, i);
    const auto b = fixture::build(in);
    EigenOptions opt;
    opt.record_trace = true;
    EigenDiagnostics d;
    eigen_pair(b.loss, b.nu, b.ifs, opt, &d);
    const auto& t = d.residual_trace;
    ASSERT_FALSE(t.empty());
    EXPECT_LE(t.back(), 1e-12);
    // After the burn-in the residual is monotone up to rounding.
    const std::size_t start = std::min<std::size_t>(t.size() - 1, 510);
    for (std::size_t k = start + 1; k < t.size(); ++k) EXPECT_LE(t[k], t[k - 1] * (1 + 1e-6) + 1e-15);
  }
}

TEST(EigenPair, PeriodicOperatorConverges) {
  // Two-cycle: τ swaps the atoms regardless of θ.
  auto th = share(SampleSpace::counting(1));
  auto y = share(SampleSpace::counting(2));
  const LossFn l = LossFn::from_values(th, y, {2.0, 8.0});
  const IfsMap swap = IfsMap::table(th, y, {1, 0});
  const auto p = eigen_pair(l, Measure::base(th), swap);
  EXPECT_NEAR(*p.lambda, 4.0, 1e-10);
  const auto th2 = transfer_apply(l, Measure::base(th), swap, p.psi.values());
  for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(th2[j], 4.0 * p.psi[j], 1e-10);
}

TEST(EigenPair, RejectsIdentityWithNonConstantPhi) {
  fixture::Edr e;
  EXPECT_THROW(eigen_pair(e.loss, e.nu, make_identity(e.theta, e.y)), ScenarioError);
}

TEST(EigenPair, AcceptsIdentityWithConstantPhi) {
  auto th = share(SampleSpace::counting(2));
  auto y = share(SampleSpace::counting(2));
  const LossFn l = LossFn::from_values(th, y, {0.25, 0.75, 0.75, 0.25});
  const auto p = eigen_pair(l, Measure::base(th), make_identity(th, y));
  EXPECT_NEAR(*p.lambda, 1.0, 1e-15);
}

TEST(EigenPair, RejectsSeveralClosedClasses) {
  auto th = share(SampleSpace::counting(2));
  auto y = share(SampleSpace::counting(3));
  // Atoms 0 and 1 are both absorbing.
  const IfsMap t = IfsMap::table(th, y, {0, 1, 0, 0, 1, 1});
  const LossFn l = LossFn::from_values(th, y, std::vector<double>(6, 1.0));
  EXPECT_THROW(eigen_pair(l, Measure::base(th), t), ScenarioError);
}

TEST(EigenPair, RejectsDominantTransientClass) {
  // Atom 1 is transient with a heavy self-loop; atom 0 is absorbing.
  auto th = share(SampleSpace::counting(2));
  auto y = share(SampleSpace::counting(2));
  const IfsMap t = IfsMap::table(th, y, {0, 1, 0, 0});
  const LossFn l = LossFn::from_values(th, y, {1.0, 10.0, 1.0, 1.0});
  EXPECT_THROW(eigen_pair(l, Measure::base(th), t), ScenarioError);
}

TEST(EigenPair, RaisesConvergenceErrorWhenCapped) {
  fixture::Marma m;
  const LossFn l = LossFn::from_values(m.s, m.s, {1.0, 2.0, 3.0, 1.5});
  EigenOptions opt;
  opt.max_iter = 1;
  opt.tol = 0;
  try {
    eigen_pair(l, m.nu, m.ifs, opt);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.iterations(), 1);
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(Jacobian, EdrCanonical) {
  fixture::Edr e;
  const auto jac = jacobian(e.loss, e.nu, make_constant(e.theta, e.y, 0), canonical_pair(e.loss, e.nu));
  EXPECT_NEAR(jac.value(0, 0), 9.0 / 11, 1e-15);
  EXPECT_NEAR(jac.value(1, 0), 12.0 / 11, 1e-15);
}

TEST(Jacobian, MarkovEigen) {
  fixture::Marma m;
  const auto jac = jacobian(m.loss, m.nu, m.ifs, eigen_pair(m.loss, m.nu, m.ifs));
  EXPECT_NEAR(jac.value(0, 0), 1.0 / 3, 1e-12);
  EXPECT_NEAR(jac.value(0, 1), 2.0 / 3, 1e-12);
  EXPECT_NEAR(jac.value(1, 0), 2.0 / 3, 1e-12);
  EXPECT_NEAR(jac.value(1, 1), 1.0 / 3, 1e-12);
}

TEST(Jacobian, ConstantLossIsOne) {
  auto th = share(SampleSpace::counting(3));
  auto y = share(SampleSpace::counting(3));
  const LossFn l = LossFn::from_values(th, y, std::vector<double>(9, 4.0));
  const Measure nu = Measure::uniform_probability(th);
  const IfsMap t = IfsMap::table(th, y, {0, 1, 2, 2, 0, 1, 1, 1, 1});
  const auto jac = jacobian(l, nu, t, canonical_pair(l, nu));
  for (double v : jac.values) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(Jacobian, RejectsNonNormalizingPair) {
  fixture::Edr e;
  NormalizerPair bad = canonical_pair(e.loss, e.nu);
  bad.phi = DensityFn::constant(e.y, 1.0);
  EXPECT_THROW(jacobian(e.loss, e.nu, make_constant(e.theta, e.y, 0), bad), ConsistencyError);
}

TEST(Jacobian, NormalizedOnRandomInstancesBothPolicies) {
  for (std::size_t i = 0; i < 100; ++i) {
    const auto b = fixture::build(oracle::random_instance(8, i));
    for (const auto& pair : {canonical_pair(b.loss, b.nu), eigen_pair(b.loss, b.nu, b.ifs)}) {
      const auto jac = jacobian(b.loss, b.nu, b.ifs, pair);
      for (std::size_t j = 0; j < b.y->size(); ++j) {
        double s = 0;
        for (std::size_t a = 0; a < b.theta->size(); ++a) s += jac.value(a, j) * b.nu[a];
        EXPECT_NEAR(s, 1.0, 1e-10);
      }
    }
  }
}

TEST(Jacobian, PairFromPsiMatchesDirectFormula) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto in = oracle::random_instance(9, i);
    const auto b = fixture::build(in);
    std::vector<double> psi(in.ny);
    for (double& v : psi) v = u(rng);
    const auto jac = jacobian(b.loss, b.nu, b.ifs, pair_from_psi(b.loss, b.nu, b.ifs, DensityFn(b.y, psi)));
    for (std::size_t j = 0; j < in.ny; ++j) {
      double z = 0;
      for (std::size_t a = 0; a < in.nt; ++a) z += in.loss[a * in.ny + j] * psi[in.tau[a * in.ny + j]] * in.prior[a];
      for (std::size_t a = 0; a < in.nt; ++a) {
        const double direct = in.loss[a * in.ny + j] * psi[in.tau[a * in.ny + j]] / z;
        EXPECT_NEAR(jac.value(a, j), direct, 1e-12 * std::max(1.0, direct));
      }
    }
  }
}

TEST(Jacobian, ThetaFreeIfsIgnoresPsi) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (std::size_t i = 0; i < 30; ++i) {
    const auto b = fixture::build(oracle::random_instance(10, i));
    const auto ref = jacobian(b.loss, b.nu, make_identity(b.theta, b.y), canonical_pair(b.loss, b.nu));
    for (int rep = 0; rep < 10; ++rep) {
      std::vector<double> psi(b.y->size());
      for (double& v : psi) v = u(rng);
      for (const IfsMap& t : {make_identity(b.theta, b.y), make_constant(b.theta, b.y, 0)}) {
        const auto jac = jacobian(b.loss, b.nu, t, pair_from_psi(b.loss, b.nu, t, DensityFn(b.y, psi)));
        for (std::size_t k = 0; k < jac.values.size(); ++k)
          EXPECT_NEAR(jac.values[k], ref.values[k], 1e-12 * std::max(1.0, ref.values[k]));
      }
    }
  }
}

TEST(Jacobian, InvariantUnderPsiScale) {
  fixture::Marma m;
  const LossFn l = LossFn::from_values(m.s, m.s, {1.0, 2.0, 3.0, 1.5});
  const auto q = eigen_pair(l, m.nu, m.ifs);
  std::vector<double> scaled(q.psi.values().begin(), q.psi.values().end());
  for (double& v : scaled) v *= 123.0;
  const auto a = jacobian(l, m.nu, m.ifs, q);
  const auto b = jacobian(l, m.nu, m.ifs, pair_from_psi(l, m.nu, m.ifs, DensityFn(m.s, scaled)));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-12);
}
