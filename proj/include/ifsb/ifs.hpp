// The IFS τ: Θ×Y→Y as a precomputed atom-index table.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ifsb/error.hpp"
#include "ifsb/spaces.hpp"

namespace ifsb {

enum class IfsKind { Table, Prepend, Contractive };

class IfsMap {
 public:
  using RealMap = std::function<double(std::size_t theta, double y)>;

  /// General finite IFS; `targets` is row-major [θ][y] → y-index.
  static IfsMap table(SpacePtr theta, SpacePtr y, std::vector<std::size_t> targets,
                      std::string name = "table") {
    if (!theta || !y) throw ScenarioError("IFS needs both spaces");
    if (targets.size() != theta->size() * y->size())
      throw ScenarioError("IFS table has the wrong number of entries");
    for (std::size_t t : targets)
      if (t >= y->size()) throw ScenarioError("IFS table entry is not a valid y-atom");
    IfsMap m;
    m.kind_ = IfsKind::Table;
    m.name_ = std::move(name);
    m.theta_ = std::move(theta);
    m.y_ = std::move(y);
    m.targets_ = std::move(targets);
    return m;
  }

  /// τ_θ(w) = θ·w truncated to the word length, on a cylinder-word space
  /// over the alphabet Θ.
  static IfsMap prepend(SpacePtr theta, SpacePtr words) {
    if (words->kind() != SpaceKind::CylinderWords)
      throw ScenarioError("prepend IFS needs a cylinder-word data space");
    if (theta->size() != static_cast<std::size_t>(words->alphabet()))
      throw ScenarioError("prepend IFS: parameter space must be the alphabet");
    const std::size_t d = theta->size();
    const std::size_t n = words->size();
    const std::size_t top = n / d;  // d^(k-1)
    std::vector<std::size_t> t(d * n);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t w = 0; w < n; ++w) t[a * n + w] = a * top + w / d;
    IfsMap m = table(std::move(theta), std::move(words), std::move(t), "prepend");
    m.kind_ = IfsKind::Prepend;
    return m;
  }

  /// Real maps on a grid data space, snapped to the nearest node. The
  /// contraction factor is certified on a sample lattice; when Θ is finite
  /// the parameter metric is the discrete one, so only same-θ pairs are
  /// constrained.
  static IfsMap contractive(SpacePtr theta, SpacePtr y_grid, RealMap map, double gamma) {
    if (y_grid->kind() != SpaceKind::Grid)
      throw ScenarioError("contractive IFS needs a grid data space");
    if (!(gamma > 0.0 && gamma < 1.0))
      throw ScenarioError("contraction factor must lie in (0,1)");
    const std::size_t nt = theta->size(), ny = y_grid->size();
    const double h = y_grid->spacing();
    std::vector<std::size_t> t(nt * ny);
    for (std::size_t a = 0; a < nt; ++a)
      for (std::size_t j = 0; j < ny; ++j) {
        const double x = map(a, y_grid->node(j));
        if (!std::isfinite(x) || x < y_grid->lo() - 0.5 * h || x > y_grid->hi() + 0.5 * h)
          throw ScenarioError("contractive map leaves the grid interval");
        t[a * ny + j] = y_grid->nearest_node(x);
      }
    certify(*theta, *y_grid, map, gamma);
    IfsMap m = table(theta, y_grid, std::move(t), "contractive");
    m.kind_ = IfsKind::Contractive;
    m.map_ = std::move(map);
    m.gamma_ = gamma;
    return m;
  }

  /// τ_θ(y) = a_θ·y + b_θ.
  static IfsMap affine(SpacePtr theta, SpacePtr y_grid,
                       std::vector<std::pair<double, double>> coeffs, double gamma) {
    if (coeffs.size() != theta->size())
      throw ScenarioError("affine IFS needs one coefficient pair per parameter atom");
    RealMap f = [c = std::move(coeffs)](std::size_t a, double y) {
      return c[a].first * y + c[a].second;
    };
    return contractive(std::move(theta), std::move(y_grid), std::move(f), gamma);
  }

  IfsKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  const SpacePtr& theta_space() const noexcept { return theta_; }
  const SpacePtr& y_space() const noexcept { return y_; }
  std::size_t theta_size() const noexcept { return theta_->size(); }
  std::size_t y_size() const noexcept { return y_->size(); }
  double gamma() const noexcept { return gamma_; }

  std::size_t apply(std::size_t theta, std::size_t y) const {
    theta_->check_index(theta);
    y_->check_index(y);
    return targets_[theta * y_->size() + y];
  }
  /// Unchecked access for inner loops.
  std::size_t target(std::size_t theta, std::size_t y) const noexcept {
    return targets_[theta * y_->size() + y];
  }
  std::span<const std::size_t> targets() const noexcept { return targets_; }

  /// Unsnapped evaluation; only meaningful for the contractive kind.
  double apply_exact(std::size_t theta, double y) const {
    if (!map_) throw ScenarioError("apply_exact needs a contractive IFS");
    return map_(theta, y);
  }

  bool is_identity() const noexcept {
    const std::size_t ny = y_size();
    for (std::size_t a = 0; a < theta_size(); ++a)
      for (std::size_t j = 0; j < ny; ++j)
        if (targets_[a * ny + j] != j) return false;
    return true;
  }

  /// True when τ_θ(y) does not depend on θ.
  bool theta_free() const noexcept {
    const std::size_t ny = y_size();
    for (std::size_t a = 1; a < theta_size(); ++a)
      for (std::size_t j = 0; j < ny; ++j)
        if (targets_[a * ny + j] != targets_[j]) return false;
    return true;
  }

 private:
  IfsMap() = default;

  static void certify(const SampleSpace& theta, const SampleSpace& y, const RealMap& f,
                      double gamma) {
    constexpr int kLattice = 33;
    std::vector<double> ys(kLattice);
    for (int i = 0; i < kLattice; ++i)
      ys[static_cast<std::size_t>(i)] =
          y.lo() + (y.hi() - y.lo()) * static_cast<double>(i) / (kLattice - 1);
    const bool metric_theta = theta.kind() == SpaceKind::Grid;
    const std::size_t nt = theta.size();
    const std::size_t stride = std::max<std::size_t>(1, nt / 17);
    for (std::size_t a = 0; a < nt; a += stride)
      for (std::size_t b = 0; b < nt; b += stride) {
        if (!metric_theta && a != b) continue;
        const double dtheta = metric_theta ? std::abs(theta.node(a) - theta.node(b)) : 0.0;
        for (double y1 : ys)
          for (double y2 : ys) {
            const double lhs = std::abs(f(a, y1) - f(b, y2));
            if (lhs > gamma * (dtheta + std::abs(y1 - y2)) + 1e-9)
              throw ScenarioError("IFS fails the contraction certificate for gamma = " +
                                  std::to_string(gamma));
          }
      }
  }

  IfsKind kind_ = IfsKind::Table;
  std::string name_;
  SpacePtr theta_, y_;
  std::vector<std::size_t> targets_;
  RealMap map_;
  double gamma_ = 0.0;
};

inline IfsMap make_constant(SpacePtr theta, SpacePtr y, std::size_t y0) {
  y->check_index(y0);
  std::vector<std::size_t> t(theta->size() * y->size(), y0);
  return IfsMap::table(std::move(theta), std::move(y), std::move(t), "constant");
}

inline IfsMap make_identity(SpacePtr theta, SpacePtr y) {
  const std::size_t nt = theta->size(), ny = y->size();
  std::vector<std::size_t> t(nt * ny);
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t j = 0; j < ny; ++j) t[a * ny + j] = j;
  return IfsMap::table(std::move(theta), std::move(y), std::move(t), "identity");
}

/// τ_θ(y) = θ, for Θ and Y the same finite set.
inline IfsMap make_theta_select(SpacePtr theta, SpacePtr y) {
  if (theta->size() != y->size())
    throw ScenarioError("theta_select needs |Theta| == |Y|");
  const std::size_t n = theta->size();
  std::vector<std::size_t> t(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t j = 0; j < n; ++j) t[a * n + j] = a;
  return IfsMap::table(std::move(theta), std::move(y), std::move(t), "theta_select");
}

}  // namespace ifsb
