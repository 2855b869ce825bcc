#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "tsm/errors.hpp"

namespace tsm {

namespace detail {

inline void check_lengths(std::span<const double> scores,
                          std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw InvalidSpec("scores and labels must have equal length");
  }
}

}  // namespace detail

// Fraction of positive-labeled slides with score >= tau (the >= decision
// rule is used throughout).
inline double sensitivity(std::span<const double> scores,
                          std::span<const int> labels, double tau) {
  detail::check_lengths(scores, labels);
  std::size_t positives = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 1) {
      ++positives;
      if (scores[i] >= tau) ++hits;
    }
  }
  if (positives == 0) throw NoPositives("sensitivity needs a positive label");
  return static_cast<double>(hits) / static_cast<double>(positives);
}

// Fraction of negative-labeled slides with score < tau.
inline double specificity(std::span<const double> scores,
                          std::span<const int> labels, double tau) {
  detail::check_lengths(scores, labels);
  std::size_t negatives = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == 0) {
      ++negatives;
      if (scores[i] < tau) ++hits;
    }
  }
  if (negatives == 0) throw NoNegatives("specificity needs a negative label");
  return static_cast<double>(hits) / static_cast<double>(negatives);
}

// Mann-Whitney AUC with ties counted 1/2, via average ranks in O(n log n).
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  detail::check_lengths(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::size_t n_pos = 0;
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1 .. j averaged over the tie group
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        ++n_pos;
        rank_sum_pos += avg_rank;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DegenerateLabels("AUC needs both classes");
  }
  const double u = rank_sum_pos -
                   0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct RocPoint {
  double threshold;
  double tpr;
  double fpr;
};

// One point per distinct score under the >= rule, bracketed by the (+inf, 0,
// 0) and (-inf, 1, 1) endpoints, ordered by decreasing threshold. The
// trapezoidal area over these points equals auc().
inline std::vector<RocPoint> roc_curve(std::span<const double> scores,
                                       std::span<const int> labels) {
  detail::check_lengths(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::size_t n_pos = 0;
  for (const int l : labels) n_pos += static_cast<std::size_t>(l == 1);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DegenerateLabels("ROC curve needs both classes");
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<RocPoint> points;
  points.push_back({inf, 0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        ++tp;
      } else {
        ++fp;
      }
    }
    points.push_back({scores[order[i]],
                      static_cast<double>(tp) / static_cast<double>(n_pos),
                      static_cast<double>(fp) / static_cast<double>(n_neg)});
    i = j;
  }
  points.push_back({-inf, 1.0, 1.0});
  return points;
}

// Trapezoidal area under a roc_curve() result.
inline double roc_auc(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    area += (points[i + 1].fpr - points[i].fpr) *
            0.5 * (points[i].tpr + points[i + 1].tpr);
  }
  return area;
}

}  // namespace tsm
