// Command-line front end: synthetic data generation, training, calibration,
// evaluation, and the repeated-sampling experiment harness.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsm/tsm.hpp"

namespace {

void cmd_gen(const std::string& config_path, const std::string& out_path,
             std::optional<std::uint64_t> seed) {
  tsm::CohortSpec spec =
      tsm::cohort_spec_from_json(tsm::load_json_file(config_path));
  if (seed) spec.seed = *seed;
  const tsm::Cohort cohort = tsm::generate_cohort(spec);
  tsm::save_cohort_jsonl(out_path, cohort);
  const auto prevalence = tsm::labeled_positive_fraction(cohort);
  std::cout << "wrote " << cohort.size() << " slides to " << out_path
            << " (prevalence "
            << tsm::format_double(prevalence.value_or(0.0)) << ")\n";
}

void cmd_train(const std::string& cohort_path, int k, int epochs, double lr,
               std::uint64_t seed, const std::string& out_path) {
  const tsm::Cohort cohort = tsm::load_cohort_jsonl(cohort_path);
  const tsm::TrainReport report =
      tsm::train_predictor(cohort, k, epochs, lr, seed);
  tsm::save_model(out_path, report.model);

  std::vector<double> scores;
  std::vector<int> labels;
  for (const tsm::Slide& s : cohort.slides()) {
    scores.push_back(tsm::predict_slide(report.model, s));
    labels.push_back(*s.label);
  }
  std::cout << "wrote model to " << out_path << " (final loss "
            << tsm::format_double(report.final_loss) << ", training AUC "
            << tsm::format_double(tsm::auc(scores, labels)) << ")\n";
}

std::vector<double> constant_label_scores(const tsm::ChowderModel& model,
                                          const tsm::Cohort& calib, int label,
                                          const char* method) {
  std::vector<double> scores;
  std::size_t ignored = 0;
  for (const tsm::Slide& s : calib.slides()) {
    if (s.label && *s.label == label) {
      scores.push_back(tsm::predict_slide(model, s));
    } else {
      ++ignored;
    }
  }
  if (ignored > 0) {
    std::cerr << "warning: " << method << " ignored " << ignored
              << " slide(s) without label " << label << "\n";
  }
  return scores;
}

void cmd_calibrate(const std::string& method_name,
                   const std::string& reference_path,
                   const std::string& calib_path,
                   const std::string& model_path, double sigma,
                   std::optional<double> omega_c,
                   const std::string& out_path) {
  const tsm::Method method = tsm::parse_method(method_name);
  const tsm::ChowderModel model = tsm::load_model(model_path);
  const tsm::Cohort calib = tsm::load_cohort_jsonl(calib_path);

  auto load_reference = [&]() {
    if (reference_path.empty()) {
      throw tsm::InvalidSpec("--reference is required for method " +
                             method_name);
    }
    return tsm::load_cohort_jsonl(reference_path);
  };

  tsm::CalibrationResult result;
  switch (method) {
    case tsm::Method::tsm:
      result = tsm::calibrate_tsm(load_reference(), calib, model, omega_c, sigma);
      break;
    case tsm::Method::upa:
      result = tsm::calibrate_upa(load_reference(), calib, model, sigma);
      break;
    case tsm::Method::plts_pos:
      result = tsm::calibrate_plts(
          constant_label_scores(model, calib, 1, "plts+"), sigma,
          tsm::Polarity::positive);
      break;
    case tsm::Method::plts_neg:
      result = tsm::calibrate_plts(
          constant_label_scores(model, calib, 0, "plts-"), sigma,
          tsm::Polarity::negative);
      break;
    case tsm::Method::none: {
      const tsm::Cohort reference = load_reference();
      result.method = tsm::Method::none;
      result.threshold = tsm::select_threshold(
          tsm::positive_slide_scores(model, reference), sigma);
      result.target_level = sigma;
      break;
    }
  }
  tsm::save_calibration(out_path, result);
  std::cout << "wrote " << tsm::method_name(result.method)
            << " calibration to " << out_path << " (threshold "
            << tsm::format_double(result.threshold) << ")\n";
}

void cmd_eval(const std::string& model_path, const std::string& calib_path,
              const std::string& cohort_path, const std::string& out_path,
              const std::string& roc_csv, const std::string& sens_csv) {
  const tsm::ChowderModel model = tsm::load_model(model_path);
  const tsm::CalibrationResult calibration = tsm::load_calibration(calib_path);
  const tsm::Cohort cohort = tsm::load_cohort_jsonl(cohort_path);

  const auto predictions = tsm::evaluate_calibrated(calibration, model, cohort);
  std::vector<double> raw_scores;
  std::vector<double> cal_scores;
  std::vector<int> labels;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& label = cohort.slides()[i].label;
    if (!label) continue;
    raw_scores.push_back(tsm::predict_slide(model, cohort.slides()[i]));
    cal_scores.push_back(predictions[i].score);
    labels.push_back(*label);
  }

  tsm::ordered_json j;
  j["method"] = std::string(tsm::method_name(calibration.method));
  j["threshold"] = calibration.threshold;
  j["target_level"] = calibration.target_level;
  j["level_kind"] = std::string(tsm::level_kind_name(calibration.level_kind));
  j["n_slides"] = cohort.size();
  j["n_labeled"] = labels.size();
  j["sensitivity"] = tsm::sensitivity(cal_scores, labels, calibration.threshold);
  j["specificity"] = tsm::specificity(cal_scores, labels, calibration.threshold);
  j["auc_before"] = tsm::auc(raw_scores, labels);
  j["auc_after"] = tsm::auc(cal_scores, labels);
  tsm::save_text_file(out_path, j.dump(2) + "\n");

  if (!roc_csv.empty()) {
    const auto points = tsm::roc_curve(cal_scores, labels);
    std::ostringstream out;
    out << "threshold,fpr,tpr\n";
    for (const auto& p : points) {
      out << tsm::format_double(p.threshold) << ','
          << tsm::format_double(p.fpr) << ',' << tsm::format_double(p.tpr)
          << '\n';
    }
    tsm::save_text_file(roc_csv, out.str());
  }
  if (!sens_csv.empty()) {
    std::set<double> thresholds(cal_scores.begin(), cal_scores.end());
    std::ostringstream out;
    out << "threshold,sensitivity\n";
    for (const double t : thresholds) {
      out << tsm::format_double(t) << ','
          << tsm::format_double(tsm::sensitivity(cal_scores, labels, t))
          << '\n';
    }
    tsm::save_text_file(sens_csv, out.str());
  }
  std::cout << "wrote metrics to " << out_path << "\n";
}

void cmd_experiment(const std::string& config_path,
                    const std::string& out_path) {
  const tsm::ExperimentConfig cfg =
      tsm::experiment_config_from_json(tsm::load_json_file(config_path));
  const std::vector<tsm::ExperimentRow> rows = tsm::run_experiment(cfg);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw tsm::DataFormatError("cannot write " + out_path);
  tsm::write_experiment_csv(out, rows);
  std::cout << "wrote " << rows.size() << " rows to " << out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tile-score matching: threshold calibration for MIL slide "
               "classifiers under distribution shift"};
  app.require_subcommand(1);
  std::function<void()> action;

  // gen
  std::string gen_config, gen_out;
  std::optional<std::uint64_t> gen_seed;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic cohort (JSONL)");
  gen->add_option("--config", gen_config, "Cohort spec JSON")->required();
  gen->add_option("--out", gen_out, "Output JSONL path")->required();
  gen->add_option("--seed", gen_seed, "Override the seed from the config");
  gen->callback([&] { action = [&] { cmd_gen(gen_config, gen_out, gen_seed); }; });

  // train
  std::string train_cohort, train_out;
  int train_k = 5, train_epochs = 300;
  double train_lr = 0.5;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "Train a Chowder-style predictor");
  train->add_option("--cohort", train_cohort, "Labeled cohort JSONL")->required();
  train->add_option("--k", train_k, "Selection width (top-k/bottom-k)");
  train->add_option("--epochs", train_epochs, "Gradient descent epochs");
  train->add_option("--lr", train_lr, "Learning rate");
  train->add_option("--seed", train_seed, "Init seed");
  train->add_option("--out", train_out, "Output model JSON")->required();
  train->callback([&] {
    action = [&] {
      cmd_train(train_cohort, train_k, train_epochs, train_lr, train_seed,
                train_out);
    };
  });

  // calibrate
  std::string cal_method, cal_reference, cal_calib, cal_model, cal_out;
  double cal_sigma = 0.9;
  std::optional<double> cal_omega;
  auto* calibrate =
      app.add_subcommand("calibrate", "Fit a calibration (tsm|upa|plts+|plts-|none)");
  calibrate->add_option("--method", cal_method, "Calibration method")->required();
  calibrate->add_option("--reference", cal_reference,
                        "Reference (training) cohort JSONL");
  calibrate->add_option("--calib", cal_calib, "Calibration cohort JSONL")->required();
  calibrate->add_option("--model", cal_model, "Model JSON")->required();
  calibrate->add_option("--sigma", cal_sigma, "Target level in (0,1)");
  calibrate->add_option("--omega-c", cal_omega,
                        "Calibration-cohort prevalence for tsm (default: from labels)");
  calibrate->add_option("--out", cal_out, "Output calibration JSON")->required();
  calibrate->callback([&] {
    action = [&] {
      cmd_calibrate(cal_method, cal_reference, cal_calib, cal_model, cal_sigma,
                    cal_omega, cal_out);
    };
  });

  // eval
  std::string eval_model, eval_calibration, eval_cohort, eval_out, eval_roc,
      eval_sens;
  auto* eval = app.add_subcommand("eval", "Evaluate a calibrated model on a cohort");
  eval->add_option("--model", eval_model, "Model JSON")->required();
  eval->add_option("--calibration", eval_calibration, "Calibration JSON")->required();
  eval->add_option("--cohort", eval_cohort, "Evaluation cohort JSONL")->required();
  eval->add_option("--out", eval_out, "Output metrics JSON")->required();
  eval->add_option("--roc-csv", eval_roc, "Optional ROC curve CSV");
  eval->add_option("--sens-csv", eval_sens, "Optional sensitivity-vs-threshold CSV");
  eval->callback([&] {
    action = [&] {
      cmd_eval(eval_model, eval_calibration, eval_cohort, eval_out, eval_roc,
               eval_sens);
    };
  });

  // experiment
  std::string exp_config, exp_out;
  auto* experiment = app.add_subcommand(
      "experiment", "Repeated-sampling calibration experiment, CSV output");
  experiment->add_option("--config", exp_config, "Experiment config JSON")->required();
  experiment->add_option("--out", exp_out, "Output CSV path")->required();
  experiment->callback(
      [&] { action = [&] { cmd_experiment(exp_config, exp_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    action();
    return 0;
  } catch (const tsm::DegenerateDistribution& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const tsm::InvalidWeight& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const tsm::InvalidSpec& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tsm::MissingPrevalence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tsm::InvalidProbability& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tsm::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
