// Sample spaces, base measures, densities and measures over them, plus the
// compensated / log-domain arithmetic the rest of the library relies on.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ifsb/error.hpp"

namespace ifsb {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s += x;
  return s.value();
}

/// log(sum_i exp(xs[i])) with max-shift stabilization. Returns -inf when
/// every term is -inf (including the empty sum).
inline double log_sum_exp(std::span<const double> xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  CompensatedSum s;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s.value());
}

/// log(sum_i exp(log_weight_i + log_value_i)).
inline double log_sum_exp(std::span<const std::pair<double, double>> terms) {
  std::vector<double> xs;
  xs.reserve(terms.size());
  for (const auto& [lw, lv] : terms) xs.push_back(lw + lv);
  return log_sum_exp(std::span<const double>(xs));
}

enum class SpaceKind { Finite, CylinderWords, Grid };

/// An ordered set of atoms with a strictly positive base weight per atom.
///
/// Finite spaces carry arbitrary labels. Cylinder-word spaces hold every word
/// of a fixed length over the alphabet {0..d-1}, indexed in base d with the
/// first symbol most significant; labels print symbols 1-based. Grid spaces
/// are cell-centred: n nodes at lo + (i + 1/2) h with h = (hi - lo) / n and
/// weight h each (midpoint quadrature).
class SampleSpace {
 public:
  static SampleSpace finite(std::vector<std::string> labels,
                            std::vector<double> base_weights) {
    if (labels.empty()) throw ScenarioError("finite space needs at least one atom");
    if (labels.size() != base_weights.size())
      throw ScenarioError("finite space: label/weight count mismatch");
    SampleSpace s;
    s.kind_ = SpaceKind::Finite;
    s.labels_ = std::move(labels);
    s.weights_ = std::move(base_weights);
    s.finish();
    return s;
  }

  static SampleSpace counting(std::vector<std::string> labels) {
    std::vector<double> w(labels.size(), 1.0);
    return finite(std::move(labels), std::move(w));
  }

  /// Finite space with `n` atoms labelled "1".."n" and counting measure.
  static SampleSpace counting(std::size_t n) {
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i + 1));
    return counting(std::move(labels));
  }

  static SampleSpace cylinder_words(int alphabet, int length) {
    if (alphabet < 1 || length < 1)
      throw ScenarioError("cylinder words need alphabet >= 1 and length >= 1");
    double count = std::pow(static_cast<double>(alphabet), length);
    if (count > 1e7) throw ScenarioError("cylinder word space too large");
    SampleSpace s;
    s.kind_ = SpaceKind::CylinderWords;
    s.alphabet_ = alphabet;
    s.length_ = length;
    const auto n = static_cast<std::size_t>(count);
    s.weights_.assign(n, 1.0);
    s.labels_.reserve(n);
    std::vector<int> w(static_cast<std::size_t>(length));
    for (std::size_t i = 0; i < n; ++i) {
      s.decode(i, w);
      std::string label;
      for (std::size_t p = 0; p < w.size(); ++p) {
        if (alphabet > 9 && p > 0) label += '.';
        label += std::to_string(w[p] + 1);
      }
      s.labels_.push_back(std::move(label));
    }
    s.finish();
    return s;
  }

  static SampleSpace grid(double lo, double hi, std::size_t nodes) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
      throw ScenarioError("grid needs finite lo < hi");
    if (nodes < 1) throw ScenarioError("grid needs at least one node");
    SampleSpace s;
    s.kind_ = SpaceKind::Grid;
    s.lo_ = lo;
    s.hi_ = hi;
    s.h_ = (hi - lo) / static_cast<double>(nodes);
    s.weights_.assign(nodes, s.h_);
    s.labels_.reserve(nodes);
    for (std::size_t i = 0; i < nodes; ++i) s.labels_.push_back("node" + std::to_string(i));
    s.finish();
    return s;
  }

  SpaceKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return weights_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  double base_weight(std::size_t i) const { return weights_.at(i); }
  std::span<const double> base_weights() const noexcept { return weights_; }
  double total_weight() const { return compensated_sum(weights_); }
  bool base_is_probability() const { return std::abs(total_weight() - 1.0) <= 1e-12; }

  std::size_t index_of(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end())
      throw ScenarioError("unknown atom '" + std::string(label) + "'");
    return it->second;
  }

  void check_index(std::size_t i) const {
    if (i >= size())
      throw ScenarioError("atom index " + std::to_string(i) + " out of range (size " +
                          std::to_string(size()) + ")");
  }

  // Grid accessors.
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double spacing() const noexcept { return h_; }
  double node(std::size_t i) const { return lo_ + (static_cast<double>(i) + 0.5) * h_; }
  std::size_t nearest_node(double x) const {
    double t = std::floor((x - lo_) / h_);
    t = std::clamp(t, 0.0, static_cast<double>(size() - 1));
    return static_cast<std::size_t>(t);
  }
  /// Node coordinate for grids, atom index otherwise. Used as the metric
  /// coordinate by contraction checks.
  double coordinate(std::size_t i) const {
    return kind_ == SpaceKind::Grid ? node(i) : static_cast<double>(i);
  }

  // Cylinder-word accessors.
  int alphabet() const noexcept { return alphabet_; }
  int word_length() const noexcept { return length_; }
  void decode(std::size_t index, std::span<int> out) const {
    for (int p = length_ - 1; p >= 0; --p) {
      out[static_cast<std::size_t>(p)] = static_cast<int>(index % static_cast<std::size_t>(alphabet_));
      index /= static_cast<std::size_t>(alphabet_);
    }
  }
  std::vector<int> word(std::size_t index) const {
    std::vector<int> w(static_cast<std::size_t>(length_));
    decode(index, w);
    return w;
  }
  std::size_t encode(std::span<const int> w) const {
    if (static_cast<int>(w.size()) != length_) throw ScenarioError("word has wrong length");
    std::size_t idx = 0;
    for (int s : w) {
      if (s < 0 || s >= alphabet_) throw ScenarioError("symbol outside alphabet");
      idx = idx * static_cast<std::size_t>(alphabet_) + static_cast<std::size_t>(s);
    }
    return idx;
  }

 private:
  SampleSpace() = default;

  void finish() {
    for (double w : weights_)
      if (!(w > 0.0) || !std::isfinite(w))
        throw ScenarioError("base weights must be strictly positive and finite");
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (!index_.emplace(labels_[i], i).second)
        throw ScenarioError("duplicate atom label '" + labels_[i] + "'");
  }

  SpaceKind kind_ = SpaceKind::Finite;
  std::vector<std::string> labels_;
  std::vector<double> weights_;
  std::unordered_map<std::string, std::size_t> index_;
  double lo_ = 0, hi_ = 0, h_ = 0;
  int alphabet_ = 0, length_ = 0;
};

using SpacePtr = std::shared_ptr<const SampleSpace>;

inline SpacePtr share(SampleSpace s) { return std::make_shared<const SampleSpace>(std::move(s)); }

inline void require_same_space(const SpacePtr& a, const SpacePtr& b, const char* what) {
  if (!a || !b) throw ScenarioError(std::string(what) + ": missing space");
  if (a != b && (a->size() != b->size() || a->kind() != b->kind()))
    throw ScenarioError(std::string(what) + ": spaces do not match");
}

/// Strictly positive function on the atoms of a space.
class DensityFn {
 public:
  DensityFn(SpacePtr space, std::vector<double> values)
      : space_(std::move(space)), values_(std::move(values)) {
    if (!space_) throw ScenarioError("density without a space");
    if (values_.size() != space_->size())
      throw ScenarioError("density has " + std::to_string(values_.size()) +
                          " values for a space of " + std::to_string(space_->size()) +
                          " atoms");
    for (double v : values_)
      if (!(v > 0.0) || !std::isfinite(v))
        throw ScenarioError("density values must be strictly positive and finite");
  }

  static DensityFn constant(SpacePtr space, double c) {
    const std::size_t n = space->size();
    return DensityFn(std::move(space), std::vector<double>(n, c));
  }

  const SpacePtr& space() const noexcept { return space_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double log(std::size_t i) const { return std::log(values_[i]); }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  SpacePtr space_;
  std::vector<double> values_;
};

/// Nonnegative masses per atom.
class Measure {
 public:
  Measure(SpacePtr space, std::vector<double> masses)
      : space_(std::move(space)), masses_(std::move(masses)) {
    if (!space_) throw ScenarioError("measure without a space");
    if (masses_.size() != space_->size())
      throw ScenarioError("measure size does not match its space");
    for (double m : masses_)
      if (!(m >= 0.0) || !std::isfinite(m))
        throw ScenarioError("measure masses must be nonnegative and finite");
    normalized_ = std::abs(compensated_sum(masses_) - 1.0) <= 1e-12;
  }

  /// Base measure of a space (dθ or dy).
  static Measure base(SpacePtr space) {
    std::vector<double> w(space->base_weights().begin(), space->base_weights().end());
    return Measure(std::move(space), std::move(w));
  }

  static Measure uniform_probability(SpacePtr space) {
    const std::size_t n = space->size();
    return Measure(std::move(space), std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  const SpacePtr& space() const noexcept { return space_; }
  std::span<const double> masses() const noexcept { return masses_; }
  double operator[](std::size_t i) const { return masses_[i]; }
  std::size_t size() const noexcept { return masses_.size(); }
  bool normalized() const noexcept { return normalized_; }
  double total() const { return compensated_sum(masses_); }
  double log_mass(std::size_t i) const { return masses_[i] > 0 ? std::log(masses_[i]) : kNegInf; }

 private:
  SpacePtr space_;
  std::vector<double> masses_;
  bool normalized_ = false;
};

/// dν = d · (base measure).
inline Measure density_to_measure(const DensityFn& d) {
  std::vector<double> masses(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) masses[i] = d[i] * d.space()->base_weight(i);
  return Measure(d.space(), std::move(masses));
}

inline Measure dirac(SpacePtr space, std::size_t atom) {
  space->check_index(atom);
  std::vector<double> m(space->size(), 0.0);
  m[atom] = 1.0;
  return Measure(std::move(space), std::move(m));
}

inline Measure dirac(SpacePtr space, std::string_view label) {
  const std::size_t i = space->index_of(label);
  return dirac(std::move(space), i);
}

/// ∫ f dm, compensated.
inline double integrate(std::span<const double> f, const Measure& m) {
  if (f.size() != m.size()) throw ScenarioError("integrate: function/measure size mismatch");
  CompensatedSum s;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (m[i] != 0.0) s += f[i] * m[i];
  return s.value();
}

}  // namespace ifsb
