// Library objects built from the small worked examples and from random
// oracle instances.
#pragma once

#include <string>
#include <vector>

#include "ifsb.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace ifsb;

struct Edr {
  SpacePtr theta = share(SampleSpace::counting({"theta1", "theta2"}));
  SpacePtr y = share(SampleSpace::counting({"1", "2"}));
  LossFn loss = LossFn::from_values(theta, y, {3.0 / 10, 7.0 / 10, 4.0 / 10, 6.0 / 10});
  DensityFn prior = DensityFn(theta, {1.0 / 3, 2.0 / 3});
  Measure nu = density_to_measure(prior);
};

struct Marma {
  SpacePtr s = share(SampleSpace::counting(2));
  LossFn loss = LossFn::from_values(s, s, {1, 2, 2, 1});
  DensityFn prior = DensityFn::constant(s, 1.0);
  Measure nu = density_to_measure(prior);
  IfsMap ifs = make_theta_select(s, s);
};

struct Built {
  SpacePtr theta, y;
  LossFn loss;
  DensityFn prior;
  Measure nu;
  IfsMap ifs;
};

inline Built build(const oracle::Instance& in) {
  auto theta = share(SampleSpace::counting(in.nt));
  auto y = share(SampleSpace::counting(in.ny));
  LossFn loss = LossFn::from_values(theta, y, in.loss);
  DensityFn prior(theta, in.prior);
  Measure nu = density_to_measure(prior);
  IfsMap ifs = in.constant ? make_constant(theta, y, in.y0) : IfsMap::table(theta, y, in.tau);
  return Built{theta, y, std::move(loss), std::move(prior), std::move(nu), std::move(ifs)};
}

inline PipelineConfig config(const Built& b, PsiChoice psi, std::string name = "random") {
  return PipelineConfig{std::move(name), b.loss, b.prior, b.ifs, psi, RhoChoice::make_stationary()};
}

inline std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace fixture
