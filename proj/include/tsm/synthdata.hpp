#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tsm/cohort.hpp"
#include "tsm/errors.hpp"
#include "tsm/mil.hpp"

namespace tsm {

// Parametric tile-score distribution on [0,1].
struct ScoreDistribution {
  enum class Family { beta, gaussian };
  Family family = Family::beta;
  // beta: (alpha, beta); gaussian: (mean, stddev), samples clamped to [0,1]
  double param1 = 2.0;
  double param2 = 2.0;
};

inline void validate(const ScoreDistribution& d) {
  if (d.family == ScoreDistribution::Family::beta) {
    if (!(d.param1 > 0.0) || !(d.param2 > 0.0)) {
      throw InvalidSpec("beta parameters must be positive");
    }
  } else if (!(d.param2 > 0.0)) {
    throw InvalidSpec("gaussian stddev must be positive");
  }
}

inline double sample(const ScoreDistribution& d, std::mt19937_64& rng) {
  if (d.family == ScoreDistribution::Family::beta) {
    std::gamma_distribution<double> ga(d.param1, 1.0);
    std::gamma_distribution<double> gb(d.param2, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
  }
  std::normal_distribution<double> g(d.param1, d.param2);
  return std::clamp(g(rng), 0.0, 1.0);
}

struct NoShift {};

// y = clamp(scale * x + offset, 0, 1)
struct AffineShift {
  double scale = 1.0;
  double offset = 0.0;
};

// logit(y) = logit(x) / temperature + shift
struct LogitWarpShift {
  double temperature = 1.0;
  double shift = 0.0;
};

// y = clamp(x + amplitude * exp(-(x-center)^2 / (2 width^2)), 0, 1).
// Deliberately violates monotonicity when |amplitude| is large relative to
// width; used to probe calibration outside the monotone-shift assumption.
struct NonmonotoneBumpShift {
  double center = 0.5;
  double width = 0.05;
  double amplitude = 0.3;
};

using ShiftSpec =
    std::variant<NoShift, AffineShift, LogitWarpShift, NonmonotoneBumpShift>;

inline void validate(const ShiftSpec& shift) {
  if (const auto* a = std::get_if<AffineShift>(&shift)) {
    if (!(a->scale > 0.0)) throw InvalidSpec("affine shift scale must be > 0");
  } else if (const auto* w = std::get_if<LogitWarpShift>(&shift)) {
    if (!(w->temperature > 0.0)) {
      throw InvalidSpec("logit warp temperature must be > 0");
    }
  } else if (const auto* b = std::get_if<NonmonotoneBumpShift>(&shift)) {
    if (!(b->width > 0.0)) throw InvalidSpec("bump width must be > 0");
  }
}

inline bool is_monotone(const ShiftSpec& shift) {
  return !std::holds_alternative<NonmonotoneBumpShift>(shift);
}

inline double apply(const ShiftSpec& shift, double x) {
  struct Visitor {
    double x;
    double operator()(const NoShift&) const { return x; }
    double operator()(const AffineShift& s) const {
      return std::clamp(s.scale * x + s.offset, 0.0, 1.0);
    }
    double operator()(const LogitWarpShift& s) const {
      const double c = std::clamp(x, 1e-12, 1.0 - 1e-12);
      const double logit = std::log(c / (1.0 - c));
      return sigmoid(logit / s.temperature + s.shift);
    }
    double operator()(const NonmonotoneBumpShift& s) const {
      const double z = (x - s.center) / s.width;
      return std::clamp(x + s.amplitude * std::exp(-0.5 * z * z), 0.0, 1.0);
    }
  };
  return std::visit(Visitor{x}, shift);
}

struct TileCountRange {
  int lo = 150;
  int hi = 150;  // hi == lo means a fixed tile count
};

struct CohortSpec {
  std::string name = "synthetic";
  int n_slides = 500;
  TileCountRange tiles_per_slide;
  double prevalence = 0.2;
  double evidence_fraction = 0.3;
  ScoreDistribution neg_dist{ScoreDistribution::Family::beta, 2.0, 8.0};
  ScoreDistribution pos_dist{ScoreDistribution::Family::beta, 8.0, 2.0};
  ShiftSpec shift = NoShift{};
  double subsample_fraction = 1.0;  // fraction of generated tiles retained
  std::uint64_t seed = 0;
};

inline void validate(const CohortSpec& spec) {
  if (spec.n_slides < 1) throw InvalidSpec("n_slides must be >= 1");
  if (spec.tiles_per_slide.lo < 1 ||
      spec.tiles_per_slide.hi < spec.tiles_per_slide.lo) {
    throw InvalidSpec("tiles_per_slide range must satisfy 1 <= lo <= hi");
  }
  if (!(spec.prevalence > 0.0 && spec.prevalence < 1.0)) {
    throw InvalidSpec("prevalence must lie strictly inside (0,1)");
  }
  if (!(spec.evidence_fraction > 0.0 && spec.evidence_fraction <= 1.0)) {
    throw InvalidSpec("evidence_fraction must lie in (0,1]");
  }
  if (!(spec.subsample_fraction > 0.0 && spec.subsample_fraction <= 1.0)) {
    throw InvalidSpec("subsample_fraction must lie in (0,1]");
  }
  validate(spec.neg_dist);
  validate(spec.pos_dist);
  validate(spec.shift);
}

// Slide labels are Bernoulli(prevalence). Negative slides draw every tile
// from neg_dist; each tile of a positive slide independently comes from
// pos_dist with probability evidence_fraction, else from neg_dist, keeping
// tiles i.i.d. conditional on the label. The shift, if any, is applied to
// every generated tile score. Deterministic for a given seed.
inline Cohort generate_cohort(const CohortSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution label_draw(spec.prevalence);
  std::bernoulli_distribution evidence_draw(spec.evidence_fraction);
  std::uniform_int_distribution<int> tile_count(spec.tiles_per_slide.lo,
                                                spec.tiles_per_slide.hi);

  std::vector<Slide> slides;
  slides.reserve(static_cast<std::size_t>(spec.n_slides));
  for (int i = 0; i < spec.n_slides; ++i) {
    const int label = label_draw(rng) ? 1 : 0;
    const int n_tiles = spec.tiles_per_slide.lo == spec.tiles_per_slide.hi
                            ? spec.tiles_per_slide.lo
                            : tile_count(rng);
    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(n_tiles));
    for (int t = 0; t < n_tiles; ++t) {
      const bool evidence = label == 1 && evidence_draw(rng);
      scores.push_back(sample(evidence ? spec.pos_dist : spec.neg_dist, rng));
    }
    if (spec.subsample_fraction < 1.0) {
      const auto keep = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::ceil(spec.subsample_fraction * scores.size())));
      std::vector<double> kept;
      kept.reserve(keep);
      std::sample(scores.begin(), scores.end(), std::back_inserter(kept), keep,
                  rng);
      scores = std::move(kept);
    }
    for (double& s : scores) s = apply(spec.shift, s);
    slides.push_back(
        {spec.name + "-" + std::to_string(i), label, std::move(scores)});
  }
  return Cohort(spec.name, std::move(slides));
}

// New cohort with every tile score transformed; slide ids and labels kept.
inline Cohort apply_shift(const Cohort& cohort, const ShiftSpec& shift) {
  validate(shift);
  std::vector<Slide> slides;
  slides.reserve(cohort.size());
  for (const Slide& s : cohort.slides()) {
    Slide out = s;
    for (double& v : out.tile_scores) v = apply(shift, v);
    slides.push_back(std::move(out));
  }
  return Cohort(cohort.name(), std::move(slides));
}

}  // namespace tsm
