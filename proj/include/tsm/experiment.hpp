#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iterator>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tsm/calibration.hpp"
#include "tsm/cohort.hpp"
#include "tsm/errors.hpp"
#include "tsm/io.hpp"
#include "tsm/metrics.hpp"
#include "tsm/mil.hpp"
#include "tsm/synthdata.hpp"

namespace tsm {

struct TrainSpec {
  int k = 5;
  int epochs = 300;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
};

using CohortSource = std::variant<std::filesystem::path, CohortSpec>;
using ModelSource = std::variant<std::filesystem::path, TrainSpec>;

// Calibration sampling plan: either n_total slides, or a stratified
// n_pos + n_neg draw. Under n_total, PLTS+/- draw their constant-label
// calibration sets of the same size from the matching label pool, while
// tsm/upa/none share one mixed sample. Under a stratified plan all methods
// share the one draw: PLTS+ uses its positive part, PLTS- the negative part.
struct SamplingPlan {
  std::optional<int> n_total;
  std::optional<int> n_pos;
  std::optional<int> n_neg;
};

struct ExperimentConfig {
  CohortSource train;
  CohortSource validation;
  ModelSource model = TrainSpec{};
  std::vector<Method> methods;
  double sigma = 0.9;
  SamplingPlan plan;
  int repetitions = 1;
  std::uint64_t base_seed = 0;
  std::optional<double> omega_c;  // nullopt: estimate from the sampled labels
  bool exclude_calib_from_eval = false;
};

struct ExperimentRow {
  int repetition = 0;
  Method method = Method::none;
  double threshold = 0.0;
  std::optional<double> omega_c;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double auc_before = 0.0;
  double auc_after = 0.0;
};

inline void validate(const SamplingPlan& plan) {
  const bool has_total = plan.n_total.has_value();
  const bool has_strat = plan.n_pos.has_value() || plan.n_neg.has_value();
  if (has_total == has_strat) {
    throw InvalidSpec("plan must give n_total or n_pos/n_neg, not both");
  }
  if (has_total && *plan.n_total < 1) {
    throw InvalidSpec("plan n_total must be >= 1");
  }
  if (has_strat) {
    const int np = plan.n_pos.value_or(0);
    const int nn = plan.n_neg.value_or(0);
    if (np < 0 || nn < 0 || np + nn < 1) {
      throw InvalidSpec("stratified plan needs n_pos + n_neg >= 1");
    }
  }
}

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw InvalidSpec("experiment needs methods");
  if (cfg.repetitions < 1) throw InvalidSpec("repetitions must be >= 1");
  if (!(cfg.sigma > 0.0 && cfg.sigma < 1.0)) {
    throw InvalidSpec("sigma must lie in (0,1)");
  }
  validate(cfg.plan);
}

inline Cohort resolve_cohort(const CohortSource& source) {
  if (const auto* path = std::get_if<std::filesystem::path>(&source)) {
    return load_cohort_jsonl(*path);
  }
  return generate_cohort(std::get<CohortSpec>(source));
}

inline ChowderModel resolve_model(const ModelSource& source,
                                  const Cohort& train) {
  if (const auto* path = std::get_if<std::filesystem::path>(&source)) {
    return load_model(*path);
  }
  const TrainSpec& t = std::get<TrainSpec>(source);
  return train_predictor(train, t.k, t.epochs, t.learning_rate, t.seed).model;
}

namespace detail {

// Order-preserving draw of n positions from pool, without replacement.
inline std::vector<std::size_t> sample_without_replacement(
    const std::vector<std::size_t>& pool, int n, std::mt19937_64& rng) {
  if (n > static_cast<int>(pool.size())) {
    throw InfeasiblePlan("requested " + std::to_string(n) + " slides, only " +
                         std::to_string(pool.size()) + " available");
  }
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(n));
  std::sample(pool.begin(), pool.end(), std::back_inserter(out),
              static_cast<std::size_t>(n), rng);
  return out;
}

struct LabeledScores {
  std::vector<double> scores;
  std::vector<int> labels;
};

inline LabeledScores gather_labeled(const Cohort& cohort,
                                    const std::vector<double>& all_scores,
                                    const std::vector<bool>& included) {
  LabeledScores out;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& label = cohort.slides()[i].label;
    if (label && included[i]) {
      out.scores.push_back(all_scores[i]);
      out.labels.push_back(*label);
    }
  }
  return out;
}

}  // namespace detail

// Runs the repeated-sampling protocol: per repetition, draw a calibration
// set from the validation cohort (seed = base_seed + repetition), fit every
// requested method, and measure achieved sensitivity/specificity/AUC on the
// validation cohort at the fitted threshold.
inline std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const Cohort train = resolve_cohort(cfg.train);
  const Cohort validation = resolve_cohort(cfg.validation);
  const ChowderModel model = resolve_model(cfg.model, train);

  const std::vector<double> val_scores = slide_scores(model, validation);
  const std::vector<std::size_t> val_pos = indices_with_label(validation, 1);
  const std::vector<std::size_t> val_neg = indices_with_label(validation, 0);
  std::vector<std::size_t> val_all(validation.size());
  std::iota(val_all.begin(), val_all.end(), std::size_t{0});

  const bool wants_mixed =
      std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method m) {
        return m == Method::tsm || m == Method::upa || m == Method::none;
      });
  const bool wants_plts_pos = std::count(cfg.methods.begin(), cfg.methods.end(),
                                         Method::plts_pos) > 0;
  const bool wants_plts_neg = std::count(cfg.methods.begin(), cfg.methods.end(),
                                         Method::plts_neg) > 0;

  // Threshold for tsm/upa/none: fixed once on the reference positives.
  std::optional<double> reference_tau;
  if (wants_mixed) {
    reference_tau = select_threshold(
        positive_slide_scores(model, train), cfg.sigma);
  }

  std::vector<ExperimentRow> rows;
  rows.reserve(static_cast<std::size_t>(cfg.repetitions) * cfg.methods.size());

  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    std::mt19937_64 rng(cfg.base_seed + static_cast<std::uint64_t>(rep));

    std::vector<std::size_t> mixed_idx;
    std::vector<std::size_t> plts_pos_idx;
    std::vector<std::size_t> plts_neg_idx;
    if (cfg.plan.n_total) {
      if (wants_mixed) {
        mixed_idx =
            detail::sample_without_replacement(val_all, *cfg.plan.n_total, rng);
      }
      if (wants_plts_pos) {
        plts_pos_idx =
            detail::sample_without_replacement(val_pos, *cfg.plan.n_total, rng);
      }
      if (wants_plts_neg) {
        plts_neg_idx =
            detail::sample_without_replacement(val_neg, *cfg.plan.n_total, rng);
      }
    } else {
      const auto pos_draw = detail::sample_without_replacement(
          val_pos, cfg.plan.n_pos.value_or(0), rng);
      const auto neg_draw = detail::sample_without_replacement(
          val_neg, cfg.plan.n_neg.value_or(0), rng);
      mixed_idx = pos_draw;
      mixed_idx.insert(mixed_idx.end(), neg_draw.begin(), neg_draw.end());
      plts_pos_idx = pos_draw;
      plts_neg_idx = neg_draw;
    }

    for (const Method method : cfg.methods) {
      ExperimentRow row;
      row.repetition = rep;
      row.method = method;

      std::vector<double> scores = val_scores;
      const std::vector<std::size_t>* calib_ids = &mixed_idx;
      switch (method) {
        case Method::tsm: {
          const Cohort calib = subset(validation, mixed_idx, "calib");
          const CalibrationResult res =
              calibrate_tsm(train, calib, model, cfg.omega_c, cfg.sigma);
          row.threshold = res.threshold;
          row.omega_c = res.omega_c;
          for (std::size_t i = 0; i < validation.size(); ++i) {
            scores[i] =
                predict_slide_mapped(model, validation.slides()[i], *res.map);
          }
          break;
        }
        case Method::upa: {
          const Cohort calib = subset(validation, mixed_idx, "calib");
          const CalibrationResult res =
              calibrate_upa(train, calib, model, cfg.sigma);
          row.threshold = res.threshold;
          for (double& s : scores) s = (*res.map)(s);
          break;
        }
        case Method::plts_pos: {
          std::vector<double> calib_scores;
          for (const std::size_t i : plts_pos_idx) {
            calib_scores.push_back(val_scores[i]);
          }
          const CalibrationResult res =
              calibrate_plts(std::move(calib_scores), cfg.sigma,
                             Polarity::positive);
          row.threshold = res.threshold;
          calib_ids = &plts_pos_idx;
          break;
        }
        case Method::plts_neg: {
          std::vector<double> calib_scores;
          for (const std::size_t i : plts_neg_idx) {
            calib_scores.push_back(val_scores[i]);
          }
          const CalibrationResult res =
              calibrate_plts(std::move(calib_scores), cfg.sigma,
                             Polarity::negative);
          row.threshold = res.threshold;
          calib_ids = &plts_neg_idx;
          break;
        }
        case Method::none: {
          row.threshold = *reference_tau;
          break;
        }
      }

      std::vector<bool> included(validation.size(), true);
      if (cfg.exclude_calib_from_eval) {
        for (const std::size_t i : *calib_ids) included[i] = false;
      }
      const auto before = detail::gather_labeled(validation, val_scores, included);
      const auto after = detail::gather_labeled(validation, scores, included);
      row.sensitivity = sensitivity(after.scores, after.labels, row.threshold);
      row.specificity = specificity(after.scores, after.labels, row.threshold);
      row.auc_before = auc(before.scores, before.labels);
      row.auc_after = auc(after.scores, after.labels);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline void write_experiment_csv(std::ostream& out,
                                 const std::vector<ExperimentRow>& rows) {
  out << "repetition,method,threshold,omega_c,sensitivity,specificity,"
         "auc_before,auc_after\n";
  for (const ExperimentRow& r : rows) {
    out << r.repetition << ',' << method_name(r.method) << ','
        << format_double(r.threshold) << ','
        << (r.omega_c ? format_double(*r.omega_c) : std::string{}) << ','
        << format_double(r.sensitivity) << ',' << format_double(r.specificity)
        << ',' << format_double(r.auc_before) << ','
        << format_double(r.auc_after) << '\n';
  }
}

// ---- config file parsing ----

inline CohortSource cohort_source_from_json(const json& j) {
  if (j.is_string()) return std::filesystem::path(j.get<std::string>());
  return cohort_spec_from_json(j);
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
  try {
    ExperimentConfig cfg;
    cfg.train = cohort_source_from_json(j.at("train_cohort"));
    cfg.validation = cohort_source_from_json(j.at("validation_cohort"));
    if (j.contains("model")) {
      const auto& m = j.at("model");
      if (m.is_string()) {
        cfg.model = std::filesystem::path(m.get<std::string>());
      } else {
        const auto& t = m.at("train");
        TrainSpec spec;
        if (t.contains("k")) spec.k = t.at("k").get<int>();
        if (t.contains("epochs")) spec.epochs = t.at("epochs").get<int>();
        if (t.contains("learning_rate")) {
          spec.learning_rate = t.at("learning_rate").get<double>();
        }
        if (t.contains("seed")) spec.seed = t.at("seed").get<std::uint64_t>();
        cfg.model = spec;
      }
    }
    for (const auto& m : j.at("methods")) {
      cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
    cfg.sigma = j.at("sigma").get<double>();
    const auto& plan = j.at("plan");
    if (plan.contains("n_total")) {
      cfg.plan.n_total = plan.at("n_total").get<int>();
    }
    if (plan.contains("n_pos")) cfg.plan.n_pos = plan.at("n_pos").get<int>();
    if (plan.contains("n_neg")) cfg.plan.n_neg = plan.at("n_neg").get<int>();
    if (j.contains("repetitions")) {
      cfg.repetitions = j.at("repetitions").get<int>();
    }
    if (j.contains("base_seed")) {
      cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
    }
    if (j.contains("omega_c") && !j.at("omega_c").is_null()) {
      const auto& w = j.at("omega_c");
      if (w.is_string()) {
        if (w.get<std::string>() != "from-sample") {
          throw InvalidSpec("omega_c must be a number or \"from-sample\"");
        }
      } else {
        cfg.omega_c = w.get<double>();
      }
    }
    if (j.contains("exclude_calib_from_eval")) {
      cfg.exclude_calib_from_eval = j.at("exclude_calib_from_eval").get<bool>();
    }
    validate(cfg);
    return cfg;
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("invalid experiment config: ") + e.what());
  }
}

}  // namespace tsm
