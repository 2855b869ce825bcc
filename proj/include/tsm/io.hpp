#pragma once

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsm/calibration.hpp"
#include "tsm/cohort.hpp"
#include "tsm/distributions.hpp"
#include "tsm/errors.hpp"
#include "tsm/mil.hpp"
#include "tsm/synthdata.hpp"

namespace tsm {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Shortest round-trip decimal representation; keeps CSV output byte-stable.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataFormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

inline void save_text_file(const std::filesystem::path& path,
                           const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataFormatError("cannot write " + path.string());
  out << text;
}

// ---- MongeMap ----

inline ordered_json to_json(const MongeMap& map) {
  return ordered_json{{"source_knots", map.source_knots()},
                      {"target_knots", map.target_knots()}};
}

inline MongeMap monge_map_from_json(const json& j) {
  if (!j.contains("source_knots") || !j.contains("target_knots")) {
    throw DataFormatError("map object needs source_knots and target_knots");
  }
  return MongeMap(j.at("source_knots").get<std::vector<double>>(),
                  j.at("target_knots").get<std::vector<double>>());
}

// ---- ChowderModel ----

inline ordered_json to_json(const ChowderModel& model) {
  ordered_json j;
  j["k"] = model.k();
  if (model.tile_scorer()) {
    j["g_weights"] = ordered_json{{"weights", model.tile_scorer()->weights},
                                  {"bias", model.tile_scorer()->bias}};
  } else {
    j["g_weights"] = nullptr;
  }
  j["h_weights"] = model.h_weights();
  j["h_bias"] = model.h_bias();
  return j;
}

inline ChowderModel model_from_json(const json& j) {
  try {
    std::optional<LinearScorer> scorer;
    if (j.contains("g_weights") && !j.at("g_weights").is_null()) {
      const auto& g = j.at("g_weights");
      scorer = LinearScorer{g.at("weights").get<std::vector<double>>(),
                            g.at("bias").get<double>()};
    }
    return ChowderModel(j.at("k").get<int>(),
                        j.at("h_weights").get<std::vector<double>>(),
                        j.at("h_bias").get<double>(), std::move(scorer));
  } catch (const json::exception& e) {
    throw DataFormatError(std::string("invalid model JSON: ") + e.what());
  }
}

inline ChowderModel load_model(const std::filesystem::path& path) {
  return model_from_json(load_json_file(path));
}

inline void save_model(const std::filesystem::path& path,
                       const ChowderModel& model) {
  save_text_file(path, to_json(model).dump(2) + "\n");
}

// ---- CalibrationResult ----

inline ordered_json to_json(const CalibrationResult& result) {
  ordered_json j;
  j["method"] = std::string(method_name(result.method));
  j["threshold"] = result.threshold;
  j["target_level"] = result.target_level;
  j["level_kind"] = std::string(level_kind_name(result.level_kind));
  if (result.omega_c) {
    j["omega_c"] = *result.omega_c;
  } else {
    j["omega_c"] = nullptr;
  }
  if (result.map) {
    j["map"] = to_json(*result.map);
  } else {
    j["map"] = nullptr;
  }
  return j;
}

inline CalibrationResult calibration_from_json(const json& j) {
  try {
    CalibrationResult result;
    result.method = parse_method(j.at("method").get<std::string>());
    result.threshold = j.at("threshold").get<double>();
    result.target_level = j.at("target_level").get<double>();
    const auto kind = j.at("level_kind").get<std::string>();
    if (kind == "sensitivity") {
      result.level_kind = LevelKind::sensitivity;
    } else if (kind == "specificity") {
      result.level_kind = LevelKind::specificity;
    } else {
      throw DataFormatError("unknown level_kind '" + kind + "'");
    }
    if (j.contains("omega_c") && !j.at("omega_c").is_null()) {
      result.omega_c = j.at("omega_c").get<double>();
    }
    if (j.contains("map") && !j.at("map").is_null()) {
      result.map = monge_map_from_json(j.at("map"));
    }
    const bool needs_map =
        result.method == Method::tsm || result.method == Method::upa;
    if (needs_map != result.map.has_value()) {
      throw DataFormatError("map must be present iff method is tsm or upa");
    }
    return result;
  } catch (const json::exception& e) {
    throw DataFormatError(std::string("invalid calibration JSON: ") + e.what());
  }
}

inline CalibrationResult load_calibration(const std::filesystem::path& path) {
  return calibration_from_json(load_json_file(path));
}

inline void save_calibration(const std::filesystem::path& path,
                             const CalibrationResult& result) {
  save_text_file(path, to_json(result).dump(2) + "\n");
}

// ---- Cohorts (JSON Lines, one slide per line) ----

inline std::string slide_to_jsonl(const Slide& slide) {
  ordered_json j;
  j["slide_id"] = slide.slide_id;
  if (slide.label) {
    j["label"] = *slide.label;
  } else {
    j["label"] = nullptr;
  }
  j["tile_scores"] = slide.tile_scores;
  return j.dump();
}

inline void save_cohort_jsonl(const std::filesystem::path& path,
                              const Cohort& cohort) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataFormatError("cannot write " + path.string());
  for (const Slide& s : cohort.slides()) out << slide_to_jsonl(s) << "\n";
}

inline Cohort load_cohort_jsonl(const std::filesystem::path& path,
                                std::string name = {}) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open " + path.string());
  if (name.empty()) name = path.stem().string();
  std::vector<Slide> slides;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataFormatError(path.string() + ":" + std::to_string(line_no) +
                            ": " + e.what());
    }
    try {
      Slide s;
      s.slide_id = j.at("slide_id").get<std::string>();
      if (j.contains("label") && !j.at("label").is_null()) {
        s.label = j.at("label").get<int>();
      }
      s.tile_scores = j.at("tile_scores").get<std::vector<double>>();
      slides.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw DataFormatError(path.string() + ":" + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
  try {
    return Cohort(std::move(name), std::move(slides));
  } catch (const InvalidSpec& e) {
    throw DataFormatError(path.string() + ": " + e.what());
  }
}

// ---- Synthetic cohort specs ----

inline ordered_json to_json(const ScoreDistribution& d) {
  if (d.family == ScoreDistribution::Family::beta) {
    return ordered_json{{"family", "beta"}, {"alpha", d.param1}, {"beta", d.param2}};
  }
  return ordered_json{{"family", "gaussian"}, {"mean", d.param1}, {"stddev", d.param2}};
}

inline ScoreDistribution score_distribution_from_json(const json& j) {
  ScoreDistribution d;
  const auto family = j.at("family").get<std::string>();
  if (family == "beta") {
    d.family = ScoreDistribution::Family::beta;
    d.param1 = j.at("alpha").get<double>();
    d.param2 = j.at("beta").get<double>();
  } else if (family == "gaussian") {
    d.family = ScoreDistribution::Family::gaussian;
    d.param1 = j.at("mean").get<double>();
    d.param2 = j.at("stddev").get<double>();
  } else {
    throw InvalidSpec("unknown score distribution family '" + family + "'");
  }
  return d;
}

inline ordered_json to_json(const ShiftSpec& shift) {
  struct Visitor {
    ordered_json operator()(const NoShift&) const {
      return ordered_json{{"kind", "none"}};
    }
    ordered_json operator()(const AffineShift& s) const {
      return ordered_json{{"kind", "affine"}, {"scale", s.scale}, {"offset", s.offset}};
    }
    ordered_json operator()(const LogitWarpShift& s) const {
      return ordered_json{
          {"kind", "logit_warp"}, {"temperature", s.temperature}, {"shift", s.shift}};
    }
    ordered_json operator()(const NonmonotoneBumpShift& s) const {
      return ordered_json{{"kind", "nonmonotone_bump"},
                          {"center", s.center},
                          {"width", s.width},
                          {"amplitude", s.amplitude}};
    }
  };
  return std::visit(Visitor{}, shift);
}

inline ShiftSpec shift_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "none") return NoShift{};
  if (kind == "affine") {
    return AffineShift{j.at("scale").get<double>(), j.at("offset").get<double>()};
  }
  if (kind == "logit_warp") {
    return LogitWarpShift{j.at("temperature").get<double>(),
                          j.at("shift").get<double>()};
  }
  if (kind == "nonmonotone_bump") {
    return NonmonotoneBumpShift{j.at("center").get<double>(),
                                j.at("width").get<double>(),
                                j.at("amplitude").get<double>()};
  }
  throw InvalidSpec("unknown shift kind '" + kind + "'");
}

inline ordered_json to_json(const CohortSpec& spec) {
  ordered_json j;
  j["name"] = spec.name;
  j["n_slides"] = spec.n_slides;
  if (spec.tiles_per_slide.lo == spec.tiles_per_slide.hi) {
    j["tiles_per_slide"] = spec.tiles_per_slide.lo;
  } else {
    j["tiles_per_slide"] =
        ordered_json::array({spec.tiles_per_slide.lo, spec.tiles_per_slide.hi});
  }
  j["prevalence"] = spec.prevalence;
  j["evidence_fraction"] = spec.evidence_fraction;
  j["neg_dist"] = to_json(spec.neg_dist);
  j["pos_dist"] = to_json(spec.pos_dist);
  j["shift"] = to_json(spec.shift);
  j["subsample_fraction"] = spec.subsample_fraction;
  j["seed"] = spec.seed;
  return j;
}

inline CohortSpec cohort_spec_from_json(const json& j) {
  try {
    CohortSpec spec;
    if (j.contains("name")) spec.name = j.at("name").get<std::string>();
    spec.n_slides = j.at("n_slides").get<int>();
    const auto& tiles = j.at("tiles_per_slide");
    if (tiles.is_array()) {
      if (tiles.size() != 2) {
        throw InvalidSpec("tiles_per_slide range must be [lo, hi]");
      }
      spec.tiles_per_slide = {tiles.at(0).get<int>(), tiles.at(1).get<int>()};
    } else {
      const int n = tiles.get<int>();
      spec.tiles_per_slide = {n, n};
    }
    spec.prevalence = j.at("prevalence").get<double>();
    spec.evidence_fraction = j.at("evidence_fraction").get<double>();
    spec.neg_dist = score_distribution_from_json(j.at("neg_dist"));
    spec.pos_dist = score_distribution_from_json(j.at("pos_dist"));
    if (j.contains("shift")) spec.shift = shift_from_json(j.at("shift"));
    if (j.contains("subsample_fraction")) {
      spec.subsample_fraction = j.at("subsample_fraction").get<double>();
    }
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    validate(spec);
    return spec;
  } catch (const json::exception& e) {
    throw InvalidSpec(std::string("invalid cohort spec: ") + e.what());
  }
}

}  // namespace tsm
