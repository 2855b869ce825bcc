#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tsm/errors.hpp"

namespace tsm {

// Weighted sum of Dirac masses on the real line with a piecewise-linear
// interpolated CDF. Knot i carries mass w_i and CDF value W_{i-1} + w_i/2
// (midpoint plotting position; (i - 0.5)/n for n uniform points). This
// convention makes the CDF strictly increasing on the support interval and
// exactly invertible there, with symmetric tail mass w_1/2 and w_n/2 clamped
// at the range ends.
class EmpiricalDistribution {
public:
  // Builds from raw samples. Duplicate values are merged by summing their
  // weights; weights are normalized to sum 1 (uniform 1/n when omitted).
  explicit EmpiricalDistribution(std::vector<double> samples,
                                 std::vector<double> weights = {}) {
    if (!weights.empty() && weights.size() != samples.size()) {
      throw InvalidWeight("weights must match samples in length");
    }
    const std::size_t n = samples.size();
    std::vector<std::pair<double, double>> points;
    points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weights.empty() ? 1.0 : weights[i];
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw InvalidWeight("weights must be finite and positive");
      }
      if (!std::isfinite(samples[i])) {
        throw DegenerateDistribution("non-finite sample value");
      }
      points.emplace_back(samples[i], w);
    }
    std::sort(points.begin(), points.end());

    double total = 0.0;
    for (const auto& [v, w] : points) {
      if (values_.empty() || v != values_.back()) {
        values_.push_back(v);
        weights_.push_back(w);
      } else {
        weights_.back() += w;
      }
      total += w;
    }
    if (values_.size() < 2) {
      throw DegenerateDistribution(
          "at least 2 distinct values required, got " +
          std::to_string(values_.size()));
    }
    cdf_knots_.resize(values_.size());
    double cum = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      weights_[i] /= total;
      cdf_knots_[i] = cum + 0.5 * weights_[i];
      cum += weights_[i];
    }
  }

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return values_.size(); }
  double support_min() const { return values_.front(); }
  double support_max() const { return values_.back(); }

  // Interpolated CDF, clamped to [F(v_1), F(v_n)] outside the support.
  double cdf(double x) const {
    if (x <= values_.front()) return cdf_knots_.front();
    if (x >= values_.back()) return cdf_knots_.back();
    const std::size_t i = segment(values_, x);
    const double t = (x - values_[i]) / (values_[i + 1] - values_[i]);
    return cdf_knots_[i] + t * (cdf_knots_[i + 1] - cdf_knots_[i]);
  }

  // Exact inverse of cdf() on [F(v_1), F(v_n)]; clamps to the support
  // endpoints outside that interval.
  double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidProbability("probability outside [0,1]");
    }
    if (p <= cdf_knots_.front()) return values_.front();
    if (p >= cdf_knots_.back()) return values_.back();
    const std::size_t i = segment(cdf_knots_, p);
    const double t = (p - cdf_knots_[i]) / (cdf_knots_[i + 1] - cdf_knots_[i]);
    return values_[i] + t * (values_[i + 1] - values_[i]);
  }

private:
  // Index i with knots[i] <= x < knots[i+1]; caller handles the clamped ends.
  static std::size_t segment(const std::vector<double>& knots, double x) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    return static_cast<std::size_t>(it - knots.begin()) - 1;
  }

  std::vector<double> values_;     // strictly increasing
  std::vector<double> weights_;    // positive, sum to 1
  std::vector<double> cdf_knots_;  // cdf at each value
};

// Piecewise-linear monotone transport map through (source_knots[i],
// target_knots[i]), clamped to the target range outside the source range.
class MongeMap {
public:
  MongeMap(std::vector<double> source_knots, std::vector<double> target_knots)
      : source_(std::move(source_knots)), target_(std::move(target_knots)) {
    if (source_.size() != target_.size() || source_.size() < 2) {
      throw InvalidSpec("map needs equal-length knot sequences of size >= 2");
    }
    if (!std::is_sorted(source_.begin(), source_.end()) ||
        !std::is_sorted(target_.begin(), target_.end())) {
      throw InvalidSpec("map knot sequences must be nondecreasing");
    }
  }

  const std::vector<double>& source_knots() const { return source_; }
  const std::vector<double>& target_knots() const { return target_; }

  double operator()(double x) const {
    if (x <= source_.front()) return target_.front();
    if (x >= source_.back()) return target_.back();
    auto it = std::upper_bound(source_.begin(), source_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - source_.begin()) - 1;
    // source_[i] <= x < source_[i+1] and source_[i] < source_[i+1], so the
    // segment has positive width; t = 0 reproduces target_[i] exactly.
    const double t = (x - source_[i]) / (source_[i + 1] - source_[i]);
    return target_[i] + t * (target_[i + 1] - target_[i]);
  }

private:
  std::vector<double> source_;
  std::vector<double> target_;
};

inline EmpiricalDistribution build_empirical(std::vector<double> samples,
                                             std::vector<double> weights = {}) {
  return EmpiricalDistribution(std::move(samples), std::move(weights));
}

// Prevalence-reweighted mixture omega_c * pos + (1 - omega_c) * neg over the
// union of support points. omega_c of exactly 1 (or 0) returns the surviving
// component unchanged, and the other component may then be absent.
inline EmpiricalDistribution build_target_mixture(
    const std::optional<EmpiricalDistribution>& pos,
    const std::optional<EmpiricalDistribution>& neg, double omega_c) {
  if (!(omega_c >= 0.0 && omega_c <= 1.0)) {
    throw InvalidProbability("omega_c outside [0,1]");
  }
  if (omega_c == 1.0) {
    if (!pos) throw DegenerateDistribution("omega_c=1 requires a positive component");
    return *pos;
  }
  if (omega_c == 0.0) {
    if (!neg) throw DegenerateDistribution("omega_c=0 requires a negative component");
    return *neg;
  }
  if (!pos || !neg) {
    throw DegenerateDistribution("mixture with omega_c in (0,1) requires both components");
  }
  std::vector<double> values;
  std::vector<double> weights;
  values.reserve(pos->size() + neg->size());
  weights.reserve(pos->size() + neg->size());
  for (std::size_t i = 0; i < pos->size(); ++i) {
    values.push_back(pos->values()[i]);
    weights.push_back(omega_c * pos->weights()[i]);
  }
  for (std::size_t i = 0; i < neg->size(); ++i) {
    values.push_back(neg->values()[i]);
    weights.push_back((1.0 - omega_c) * neg->weights()[i]);
  }
  return EmpiricalDistribution(std::move(values), std::move(weights));
}

// Exact 1D optimal transport map pushing a forward onto b, realized as the
// quantile-matching composition x -> F_b^{-1}(F_a(x)) sampled at the support
// points of a.
inline MongeMap build_monge_map(const EmpiricalDistribution& a,
                                const EmpiricalDistribution& b) {
  std::vector<double> source = a.values();
  std::vector<double> target;
  target.reserve(source.size());
  for (const double v : source) target.push_back(b.quantile(a.cdf(v)));
  return MongeMap(std::move(source), std::move(target));
}

inline std::vector<double> apply_map(const MongeMap& map,
                                     std::span<const double> xs) {
  std::vector<double> out;
  out.reserve(xs.size());
  for (const double x : xs) out.push_back(map(x));
  return out;
}

}  // namespace tsm
