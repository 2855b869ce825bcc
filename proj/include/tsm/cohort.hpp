#pragma once

#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tsm/errors.hpp"

namespace tsm {

// Bag of tile scores with an optional binary label. In synthetic mode the
// scores are generated directly (identity tile scorer); with external
// features they come from a linear scorer, see mil.hpp.
struct Slide {
  std::string slide_id;
  std::optional<int> label;  // 0 or 1 when present
  std::vector<double> tile_scores;
};

class Cohort {
public:
  Cohort() = default;

  Cohort(std::string name, std::vector<Slide> slides)
      : name_(std::move(name)), slides_(std::move(slides)) {
    std::unordered_set<std::string> ids;
    ids.reserve(slides_.size());
    for (const Slide& s : slides_) {
      if (!ids.insert(s.slide_id).second) {
        throw InvalidSpec("duplicate slide_id '" + s.slide_id + "' in cohort '" +
                          name_ + "'");
      }
      if (s.label && *s.label != 0 && *s.label != 1) {
        throw InvalidSpec("slide '" + s.slide_id + "' has label " +
                          std::to_string(*s.label) + ", expected 0 or 1");
      }
    }
  }

  const std::string& name() const { return name_; }
  const std::vector<Slide>& slides() const { return slides_; }
  std::size_t size() const { return slides_.size(); }

  bool fully_labeled() const {
    for (const Slide& s : slides_) {
      if (!s.label) return false;
    }
    return !slides_.empty();
  }

private:
  std::string name_;
  std::vector<Slide> slides_;
};

inline std::vector<std::size_t> indices_with_label(const Cohort& cohort,
                                                   int label) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& l = cohort.slides()[i].label;
    if (l && *l == label) out.push_back(i);
  }
  return out;
}

// All tile scores pooled across slides with equal per-tile weight.
inline std::vector<double> pooled_tile_scores(const Cohort& cohort) {
  std::vector<double> out;
  for (const Slide& s : cohort.slides()) {
    out.insert(out.end(), s.tile_scores.begin(), s.tile_scores.end());
  }
  return out;
}

inline std::vector<double> pooled_tile_scores(const Cohort& cohort, int label) {
  std::vector<double> out;
  for (const Slide& s : cohort.slides()) {
    if (s.label && *s.label == label) {
      out.insert(out.end(), s.tile_scores.begin(), s.tile_scores.end());
    }
  }
  return out;
}

// Positive fraction among labeled slides; nullopt when nothing is labeled.
inline std::optional<double> labeled_positive_fraction(const Cohort& cohort) {
  std::size_t labeled = 0;
  std::size_t positive = 0;
  for (const Slide& s : cohort.slides()) {
    if (s.label) {
      ++labeled;
      if (*s.label == 1) ++positive;
    }
  }
  if (labeled == 0) return std::nullopt;
  return static_cast<double>(positive) / static_cast<double>(labeled);
}

inline Cohort subset(const Cohort& cohort, const std::vector<std::size_t>& idx,
                     std::string name) {
  std::vector<Slide> slides;
  slides.reserve(idx.size());
  for (const std::size_t i : idx) slides.push_back(cohort.slides().at(i));
  return Cohort(std::move(name), std::move(slides));
}

}  // namespace tsm
