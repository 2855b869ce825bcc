#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tsm/cohort.hpp"
#include "tsm/distributions.hpp"
#include "tsm/errors.hpp"
#include "tsm/mil.hpp"

namespace tsm {

enum class Method { tsm, upa, plts_pos, plts_neg, none };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::tsm: return "tsm";
    case Method::upa: return "upa";
    case Method::plts_pos: return "plts+";
    case Method::plts_neg: return "plts-";
    case Method::none: return "none";
  }
  return "none";
}

inline Method parse_method(std::string_view name) {
  if (name == "tsm") return Method::tsm;
  if (name == "upa") return Method::upa;
  if (name == "plts+") return Method::plts_pos;
  if (name == "plts-") return Method::plts_neg;
  if (name == "none") return Method::none;
  throw InvalidSpec("unknown method '" + std::string(name) + "'");
}

enum class LevelKind { sensitivity, specificity };

inline std::string_view level_kind_name(LevelKind k) {
  return k == LevelKind::sensitivity ? "sensitivity" : "specificity";
}

// Fitted calibration artifact: a transport map for TSM (tile level) and UPA
// (slide level), plus the decision threshold for the prescribed level.
struct CalibrationResult {
  Method method = Method::none;
  std::optional<MongeMap> map;
  double threshold = 0.5;
  double target_level = 0.9;
  LevelKind level_kind = LevelKind::sensitivity;
  std::optional<double> omega_c;
};

namespace detail {

// Smallest k in [1, m] with k/m >= sigma. This is ceil(sigma*m) evaluated
// through the same comparison the enumeration oracle uses; computing
// std::ceil(sigma*m) instead can round up across an exact integer (e.g.
// 0.9*30) and shift the selected order statistic.
inline std::size_t min_count_at_level(std::size_t m, double sigma) {
  for (std::size_t k = 1; k < m; ++k) {
    if (static_cast<double>(k) / static_cast<double>(m) >= sigma) return k;
  }
  return m;
}

}  // namespace detail

// Largest threshold whose >=-rule sensitivity on scores_pos reaches sigma:
// the ceil(sigma*m)-th largest score.
inline double select_threshold(std::vector<double> scores_pos, double sigma) {
  if (scores_pos.empty()) {
    throw NoPositives("threshold selection needs positive slide scores");
  }
  if (!(sigma > 0.0 && sigma < 1.0)) {
    throw InvalidProbability("target level must lie in (0,1)");
  }
  std::sort(scores_pos.begin(), scores_pos.end(), std::greater<>());
  const std::size_t k = detail::min_count_at_level(scores_pos.size(), sigma);
  return scores_pos[k - 1];
}

inline std::vector<double> positive_slide_scores(const ChowderModel& model,
                                                 const Cohort& cohort) {
  std::vector<double> out;
  for (const Slide& s : cohort.slides()) {
    if (s.label && *s.label == 1) out.push_back(predict_slide(model, s));
  }
  return out;
}

namespace detail {

inline void require_fully_labeled(const Cohort& cohort, const char* role) {
  if (!cohort.fully_labeled()) {
    throw DegenerateLabels(std::string(role) + " cohort must be fully labeled");
  }
}

}  // namespace detail

// Tile-score matching: transport the pooled calibration tile scores onto the
// prevalence-reweighted reference tile-score distribution. The threshold is
// selected once on the reference positives and never touched by calibration.
inline CalibrationResult calibrate_tsm(const Cohort& reference,
                                       const Cohort& calib,
                                       const ChowderModel& model,
                                       std::optional<double> omega_c,
                                       double sigma) {
  detail::require_fully_labeled(reference, "reference");
  double omega;
  if (omega_c) {
    omega = *omega_c;
  } else {
    const auto derived = labeled_positive_fraction(calib);
    if (!derived) {
      throw MissingPrevalence(
          "omega_c not given and calibration cohort has no labels");
    }
    omega = *derived;
  }
  if (!(omega >= 0.0 && omega <= 1.0)) {
    throw InvalidProbability("omega_c outside [0,1]");
  }

  const EmpiricalDistribution a = build_empirical(pooled_tile_scores(calib));
  std::optional<EmpiricalDistribution> pos;
  std::optional<EmpiricalDistribution> neg;
  if (omega > 0.0) pos = build_empirical(pooled_tile_scores(reference, 1));
  if (omega < 1.0) neg = build_empirical(pooled_tile_scores(reference, 0));
  const EmpiricalDistribution b = build_target_mixture(pos, neg, omega);

  CalibrationResult result;
  result.method = Method::tsm;
  result.map = build_monge_map(a, b);
  result.threshold =
      select_threshold(positive_slide_scores(model, reference), sigma);
  result.target_level = sigma;
  result.level_kind = LevelKind::sensitivity;
  result.omega_c = omega;
  return result;
}

// Unsupervised prediction alignment: quantile matching of slide-level scores
// onto the full reference slide-score distribution (labels ignored, no
// prevalence reweighting).
inline CalibrationResult calibrate_upa(const Cohort& reference,
                                       const Cohort& calib,
                                       const ChowderModel& model,
                                       double sigma) {
  detail::require_fully_labeled(reference, "reference");
  const EmpiricalDistribution a = build_empirical(slide_scores(model, calib));
  const EmpiricalDistribution b =
      build_empirical(slide_scores(model, reference));

  CalibrationResult result;
  result.method = Method::upa;
  result.map = build_monge_map(a, b);
  result.threshold =
      select_threshold(positive_slide_scores(model, reference), sigma);
  result.target_level = sigma;
  result.level_kind = LevelKind::sensitivity;
  return result;
}

enum class Polarity { positive, negative };

// Patient-level threshold selection on constant-label calibration scores.
// Positive polarity picks the largest score with calibration sensitivity
// >= sigma; negative polarity the smallest score with calibration
// specificity >= sigma (falling back to the largest score when even that
// cannot reach sigma).
inline CalibrationResult calibrate_plts(std::vector<double> calib_scores,
                                        double sigma, Polarity polarity) {
  if (calib_scores.empty()) {
    throw NoSamples("PLTS needs at least one calibration score");
  }
  if (!(sigma > 0.0 && sigma < 1.0)) {
    throw InvalidProbability("target level must lie in (0,1)");
  }
  CalibrationResult result;
  result.target_level = sigma;
  const std::size_t m = calib_scores.size();
  std::sort(calib_scores.begin(), calib_scores.end());
  if (polarity == Polarity::positive) {
    result.method = Method::plts_pos;
    result.level_kind = LevelKind::sensitivity;
    const std::size_t k = detail::min_count_at_level(m, sigma);
    result.threshold = calib_scores[m - k];
  } else {
    result.method = Method::plts_neg;
    result.level_kind = LevelKind::specificity;
    result.threshold = calib_scores.back();
    for (std::size_t i = 0; i < m; ++i) {
      // count below by value, so tied scores share one specificity
      const std::size_t below = static_cast<std::size_t>(
          std::lower_bound(calib_scores.begin(), calib_scores.end(),
                           calib_scores[i]) -
          calib_scores.begin());
      if (static_cast<double>(below) / static_cast<double>(m) >= sigma) {
        result.threshold = calib_scores[i];
        break;
      }
    }
  }
  return result;
}

struct SlidePrediction {
  std::string slide_id;
  double score = 0.0;
  int predicted = 0;
};

// Applies the fitted map at the level dictated by the method and thresholds
// at tau: TSM maps tile scores (post-rank), UPA maps slide scores, PLTS and
// NONE use raw slide scores.
inline std::vector<SlidePrediction> evaluate_calibrated(
    const CalibrationResult& result, const ChowderModel& model,
    const Cohort& cohort) {
  const bool needs_map =
      result.method == Method::tsm || result.method == Method::upa;
  if (needs_map != result.map.has_value()) {
    throw InvalidSpec("calibration map must be present iff method is tsm or upa");
  }
  std::vector<SlidePrediction> out;
  out.reserve(cohort.size());
  for (const Slide& s : cohort.slides()) {
    double score;
    switch (result.method) {
      case Method::tsm:
        score = predict_slide_mapped(model, s, *result.map);
        break;
      case Method::upa:
        score = (*result.map)(predict_slide(model, s));
        break;
      default:
        score = predict_slide(model, s);
        break;
    }
    out.push_back({s.slide_id, score, score >= result.threshold ? 1 : 0});
  }
  return out;
}

}  // namespace tsm
