#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsm/cohort.hpp"
#include "tsm/distributions.hpp"
#include "tsm/errors.hpp"

namespace tsm {

// Linear tile scorer for externally extracted feature vectors. Absent on a
// model means tile scores are taken as given (identity scorer).
struct LinearScorer {
  std::vector<double> weights;
  double bias = 0.0;
};

// Chowder-style MIL head: rank-select the top-k and bottom-k tile scores,
// then apply a logistic predictor to the 2k selected values.
class ChowderModel {
public:
  ChowderModel(int k, std::vector<double> h_weights, double h_bias,
               std::optional<LinearScorer> tile_scorer = std::nullopt)
      : k_(k),
        h_weights_(std::move(h_weights)),
        h_bias_(h_bias),
        tile_scorer_(std::move(tile_scorer)) {
    if (k_ < 1) throw InvalidSpec("selection width k must be >= 1");
    if (h_weights_.size() != static_cast<std::size_t>(2 * k_)) {
      throw InvalidSpec("h_weights must have length 2k = " +
                        std::to_string(2 * k_));
    }
  }

  int k() const { return k_; }
  const std::vector<double>& h_weights() const { return h_weights_; }
  double h_bias() const { return h_bias_; }
  const std::optional<LinearScorer>& tile_scorer() const { return tile_scorer_; }

private:
  int k_;
  std::vector<double> h_weights_;
  double h_bias_;
  std::optional<LinearScorer> tile_scorer_;
};

// Numerically stable logistic, clamped strictly inside (0,1).
inline double sigmoid(double x) {
  double p;
  if (x >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    p = e / (1.0 + e);
  }
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  return std::clamp(p, lo, hi);
}

struct RankSelection {
  std::vector<double> values;        // top-k descending, then bottom-k ascending
  std::vector<std::size_t> indices;  // original tile indices, same order
};

// Top-k and bottom-k tile scores. Ties broken by original tile index, lower
// index first.
inline RankSelection rank_select(std::span<const double> scores, int k) {
  if (k < 1) throw InvalidSpec("selection width k must be >= 1");
  const std::size_t need = static_cast<std::size_t>(2 * k);
  if (scores.size() < need) {
    throw TooFewTiles("need at least " + std::to_string(need) +
                      " tiles, got " + std::to_string(scores.size()));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto kk = static_cast<std::ptrdiff_t>(k);

  std::vector<std::size_t> top(order);
  std::partial_sort(top.begin(), top.begin() + kk, top.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  std::partial_sort(order.begin(), order.begin() + kk, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] < scores[b];
                      return a < b;
                    });

  RankSelection sel;
  sel.values.reserve(need);
  sel.indices.reserve(need);
  for (std::ptrdiff_t i = 0; i < kk; ++i) {
    sel.values.push_back(scores[top[i]]);
    sel.indices.push_back(top[i]);
  }
  for (std::ptrdiff_t i = 0; i < kk; ++i) {
    sel.values.push_back(scores[order[i]]);
    sel.indices.push_back(order[i]);
  }
  return sel;
}

inline double predict_from_selected(const ChowderModel& model,
                                    std::span<const double> selected) {
  double logit = model.h_bias();
  for (std::size_t i = 0; i < selected.size(); ++i) {
    logit += model.h_weights()[i] * selected[i];
  }
  return sigmoid(logit);
}

inline double predict_slide(const ChowderModel& model, const Slide& slide) {
  const RankSelection sel = rank_select(slide.tile_scores, model.k());
  return predict_from_selected(model, sel.values);
}

// Post-rank transport: the map is applied to the 2k selected scores only.
// For a monotone map this equals mapping all N tile scores first and then
// ranking, so the selected tiles (and interpretability) are unchanged.
inline double predict_slide_mapped(const ChowderModel& model,
                                   const Slide& slide, const MongeMap& map) {
  RankSelection sel = rank_select(slide.tile_scores, model.k());
  for (double& v : sel.values) v = map(v);
  return predict_from_selected(model, sel.values);
}

inline std::vector<double> score_tiles(
    const LinearScorer& scorer,
    const std::vector<std::vector<double>>& features) {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    if (f.size() != scorer.weights.size()) {
      throw InvalidSpec("feature vector length does not match tile scorer");
    }
    out.push_back(std::inner_product(f.begin(), f.end(),
                                     scorer.weights.begin(), scorer.bias));
  }
  return out;
}

inline std::vector<double> slide_scores(const ChowderModel& model,
                                        const Cohort& cohort) {
  std::vector<double> out;
  out.reserve(cohort.size());
  for (const Slide& s : cohort.slides()) out.push_back(predict_slide(model, s));
  return out;
}

struct TrainReport {
  ChowderModel model;
  double final_loss = 0.0;
  std::vector<double> loss_history;  // loss before each update, then final
};

// Full-batch gradient descent on binary cross-entropy over the cohort,
// treating the rank-selected score vectors as fixed features. Deterministic
// given the seed.
inline TrainReport train_predictor(const Cohort& cohort, int k, int epochs,
                                   double learning_rate, std::uint64_t seed) {
  if (k < 1) throw InvalidSpec("selection width k must be >= 1");
  if (epochs < 0) throw InvalidSpec("epochs must be >= 0");

  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  features.reserve(cohort.size());
  labels.reserve(cohort.size());
  for (const Slide& s : cohort.slides()) {
    if (!s.label) {
      throw DegenerateLabels("training cohort must be fully labeled");
    }
    features.push_back(rank_select(s.tile_scores, k).values);
    labels.push_back(*s.label);
  }
  const std::size_t m = labels.size();
  const std::size_t pos = static_cast<std::size_t>(
      std::count(labels.begin(), labels.end(), 1));
  if (m == 0 || pos == 0 || pos == m) {
    throw DegenerateLabels("training cohort must contain both classes");
  }

  const std::size_t dim = static_cast<std::size_t>(2 * k);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> init(0.0, 0.01);
  std::vector<double> w(dim);
  for (double& wi : w) wi = init(rng);
  double b = init(rng);

  std::vector<double> grad(dim);
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(epochs) + 1);
  const double inv_m = 1.0 / static_cast<double>(m);

  for (int epoch = 0; epoch <= epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double p = sigmoid(std::inner_product(
          features[i].begin(), features[i].end(), w.begin(), b));
      const double y = static_cast<double>(labels[i]);
      loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
      const double err = p - y;
      for (std::size_t j = 0; j < dim; ++j) grad[j] += err * features[i][j];
      grad_b += err;
    }
    history.push_back(loss * inv_m);
    if (epoch == epochs) break;  // last pass only records the final loss
    for (std::size_t j = 0; j < dim; ++j) {
      w[j] -= learning_rate * grad[j] * inv_m;
    }
    b -= learning_rate * grad_b * inv_m;
  }

  TrainReport report{ChowderModel(k, std::move(w), b), history.back(),
                     std::move(history)};
  return report;
}

// Unweighted mean of per-model predictions; each model is paired with its
// own map when maps are given.
inline double ensemble_predict(std::span<const ChowderModel> models,
                               const Slide& slide,
                               std::span<const MongeMap> maps = {}) {
  if (models.empty()) throw EnsembleMismatch("ensemble must be nonempty");
  if (!maps.empty() && maps.size() != models.size()) {
    throw EnsembleMismatch("got " + std::to_string(maps.size()) +
                           " maps for " + std::to_string(models.size()) +
                           " models");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    sum += maps.empty() ? predict_slide(models[i], slide)
                        : predict_slide_mapped(models[i], slide, maps[i]);
  }
  return sum / static_cast<double>(models.size());
}

}  // namespace tsm
