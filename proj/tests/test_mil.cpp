#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "test_support.hpp"
#include "tsm/mil.hpp"

using tsm::ChowderModel;
using tsm::predict_slide;
using tsm::predict_slide_mapped;
using tsm::rank_select;
using tsm::Slide;

TEST_CASE("rank_select returns top-k descending then bottom-k ascending") {
  const auto sel1 = rank_select(std::vector<double>{0.1, 0.9, 0.5}, 1);
  CHECK(sel1.values == std::vector<double>{0.9, 0.1});
  CHECK(sel1.indices == std::vector<std::size_t>{1, 0});

  const auto sel2 = rank_select(std::vector<double>{4.0, 3.0, 2.0, 1.0}, 2);
  CHECK(sel2.values == std::vector<double>{4.0, 3.0, 1.0, 2.0});
  CHECK(sel2.indices == std::vector<std::size_t>{0, 1, 3, 2});

  CHECK_THROWS_AS(rank_select(std::vector<double>{0.5}, 1), tsm::TooFewTiles);
}

TEST_CASE("rank_select breaks ties by original tile index") {
  const auto sel = rank_select(std::vector<double>{5.0, 5.0, 3.0, 5.0}, 2);
  CHECK(sel.values == std::vector<double>{5.0, 5.0, 3.0, 5.0});
  CHECK(sel.indices == std::vector<std::size_t>{0, 1, 2, 0});
}

TEST_CASE("rank_select agrees with the sort-based oracle") {
  auto gen = tsupport::rng(31);
  std::uniform_int_distribution<int> ksel(1, 6);
  std::uniform_int_distribution<std::size_t> nsel(12, 60);
  std::uniform_int_distribution<int> grid(0, 9);
  for (int rep = 0; rep < 200; ++rep) {
    const int k = ksel(gen);
    const std::size_t n = nsel(gen);
    std::vector<double> scores;
    if (rep % 3 == 0) {
      // heavy ties
      for (std::size_t i = 0; i < n; ++i) scores.push_back(0.1 * grid(gen));
    } else {
      scores = tsupport::random_scores(gen, n);
    }
    const auto got = rank_select(scores, k);
    const auto want = tsupport::oracle_rank_select(scores, k);
    CHECK(got.values == want.values);
    CHECK(got.indices == want.indices);
  }
}

TEST_CASE("predict_slide applies the logistic head to the selection") {
  const ChowderModel even(1, {1.0, 1.0}, -1.0);
  const Slide slide{"s", 1, {0.1, 0.9, 0.5}};
  CHECK(predict_slide(even, slide) == Catch::Approx(0.5).margin(1e-12));

  const ChowderModel constant(1, {0.0, 0.0}, 0.0);
  CHECK(predict_slide(constant, slide) == 0.5);

  const ChowderModel sharp(1, {10.0, 0.0}, -5.0);
  const Slide spike{"s2", 0, {1.0, 0.0, 0.0}};
  const double expected = 1.0 / (1.0 + std::exp(-5.0));
  CHECK(predict_slide(sharp, spike) == Catch::Approx(expected).margin(1e-12));

  CHECK_THROWS_AS(predict_slide(even, Slide{"tiny", 0, {0.4}}),
                  tsm::TooFewTiles);
}

TEST_CASE("predictions stay strictly inside (0,1)") {
  const ChowderModel huge(1, {1e6, 1e6}, 1e6);
  const ChowderModel tiny(1, {-1e6, -1e6}, -1e6);
  const Slide slide{"s", 1, {0.99, 0.98, 0.2}};
  const double hi = predict_slide(huge, slide);
  const double lo = predict_slide(tiny, slide);
  CHECK(hi < 1.0);
  CHECK(hi > 0.0);
  CHECK(lo > 0.0);
  CHECK(lo < 1.0);
}

TEST_CASE("ChowderModel validates its shape") {
  CHECK_THROWS_AS(ChowderModel(0, {}, 0.0), tsm::InvalidSpec);
  CHECK_THROWS_AS(ChowderModel(2, {1.0, 2.0, 3.0}, 0.0), tsm::InvalidSpec);
}

TEST_CASE("identity map leaves predictions unchanged") {
  const tsm::MongeMap identity({0.0, 1.0}, {0.0, 1.0});
  const ChowderModel model(2, {0.4, -0.2, 0.1, 0.3}, 0.05);
  auto gen = tsupport::rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const Slide slide = tsupport::random_slide(gen, 20, "s" + std::to_string(rep));
    CHECK(predict_slide_mapped(model, slide, identity) ==
          predict_slide(model, slide));
  }
}

TEST_CASE("rank invariance: post-rank mapping equals map-all-then-rank") {
  auto gen = tsupport::rng(1234);
  const int k = 4;
  const ChowderModel model(k, tsupport::random_scores(gen, 2 * k, -1.0, 1.0),
                           -0.2);
  std::uniform_int_distribution<std::size_t> nsel(2 * k, 60);
  for (int rep = 0; rep < 400; ++rep) {
    const auto map = tsupport::random_strict_monotone_map(gen, 10, -0.05, 1.05);
    const Slide slide{"s", 1, tsupport::random_scores(gen, nsel(gen))};

    Slide mapped_all = slide;
    for (double& v : mapped_all.tile_scores) v = map(v);

    // the selected tile indices are unchanged by the monotone map
    const auto sel_before = rank_select(slide.tile_scores, k);
    const auto sel_after = rank_select(mapped_all.tile_scores, k);
    CHECK(sel_before.indices == sel_after.indices);

    const double post_rank = predict_slide_mapped(model, slide, map);
    const double pre_rank = predict_slide(model, mapped_all);
    CHECK(post_rank == Catch::Approx(pre_rank).margin(1e-12));
  }
}

TEST_CASE("affine map instance of rank invariance") {
  // m(x) = 2x + 1 as an explicit strictly increasing map over [0,1]
  const tsm::MongeMap affine({0.0, 1.0}, {1.0, 3.0});
  const ChowderModel model(1, {0.7, -0.3}, 0.1);
  auto gen = tsupport::rng(77);
  for (int rep = 0; rep < 100; ++rep) {
    const Slide slide{"s", 0, tsupport::random_scores(gen, 30)};
    Slide mapped_all = slide;
    for (double& v : mapped_all.tile_scores) v = affine(v);
    CHECK(predict_slide_mapped(model, slide, affine) ==
          Catch::Approx(predict_slide(model, mapped_all)).margin(1e-12));
  }
}

TEST_CASE("train_predictor separates the toy cohort") {
  auto gen = tsupport::rng(9);
  const auto cohort = tsupport::separable_cohort(gen, 15, 15, 12);
  const auto report = tsm::train_predictor(cohort, 1, 500, 0.5, 1);

  std::vector<double> scores;
  std::vector<int> labels;
  for (const Slide& s : cohort.slides()) {
    scores.push_back(predict_slide(report.model, s));
    labels.push_back(*s.label);
  }
  CHECK(tsupport::oracle_auc_pairs(scores, labels) == 1.0);
  CHECK(report.final_loss < 0.5);
}

TEST_CASE("train_predictor rejects degenerate cohorts") {
  auto gen = tsupport::rng(13);
  std::vector<Slide> all_pos;
  for (int i = 0; i < 5; ++i) {
    all_pos.push_back(tsupport::random_slide(gen, 10, "p" + std::to_string(i)));
  }
  CHECK_THROWS_AS(tsm::train_predictor(tsm::Cohort("pos", all_pos), 1, 10, 0.1, 0),
                  tsm::DegenerateLabels);

  std::vector<Slide> unlabeled{{"u0", std::nullopt, {0.1, 0.2, 0.3}},
                               {"u1", std::nullopt, {0.4, 0.5, 0.6}}};
  CHECK_THROWS_AS(
      tsm::train_predictor(tsm::Cohort("unlabeled", unlabeled), 1, 10, 0.1, 0),
      tsm::DegenerateLabels);

  std::vector<Slide> tiny{{"t0", 1, {0.9}}, {"t1", 0, {0.1, 0.2, 0.3}}};
  CHECK_THROWS_AS(tsm::train_predictor(tsm::Cohort("tiny", tiny), 1, 10, 0.1, 0),
                  tsm::TooFewTiles);
}

TEST_CASE("train_predictor is deterministic per seed") {
  auto gen = tsupport::rng(21);
  const auto cohort = tsupport::separable_cohort(gen, 8, 8, 10);
  const auto a = tsm::train_predictor(cohort, 2, 50, 0.3, 42);
  const auto b = tsm::train_predictor(cohort, 2, 50, 0.3, 42);
  CHECK(a.model.h_weights() == b.model.h_weights());
  CHECK(a.model.h_bias() == b.model.h_bias());
  CHECK(a.final_loss == b.final_loss);

  const auto c = tsm::train_predictor(cohort, 2, 50, 0.3, 43);
  CHECK(a.model.h_weights() != c.model.h_weights());
}

TEST_CASE("training loss is nonincreasing for a small learning rate") {
  auto gen = tsupport::rng(25);
  const auto cohort = tsupport::separable_cohort(gen, 10, 10, 8);
  const auto report = tsm::train_predictor(cohort, 1, 200, 0.01, 3);
  for (std::size_t i = 0; i + 1 < report.loss_history.size(); ++i) {
    CHECK(report.loss_history[i + 1] <= report.loss_history[i] + 1e-15);
  }
}

TEST_CASE("ensemble_predict averages member predictions") {
  const Slide slide{"s", 1, {0.2, 0.8, 0.5, 0.6}};
  const ChowderModel m1(1, {0.0, 0.0}, std::log(0.2 / 0.8));  // always 0.2
  const ChowderModel m2(1, {0.0, 0.0}, std::log(0.8 / 0.2));  // always 0.8
  const std::vector<ChowderModel> both{m1, m2};
  CHECK(tsm::ensemble_predict(both, slide) == Catch::Approx(0.5).margin(1e-12));

  const std::vector<ChowderModel> one{m1};
  CHECK(tsm::ensemble_predict(one, slide) == predict_slide(m1, slide));

  const tsm::MongeMap identity({0.0, 1.0}, {0.0, 1.0});
  const std::vector<tsm::MongeMap> maps{identity, identity};
  CHECK(tsm::ensemble_predict(both, slide, maps) ==
        tsm::ensemble_predict(both, slide));

  const std::vector<tsm::MongeMap> wrong{identity};
  CHECK_THROWS_AS(tsm::ensemble_predict(both, slide, wrong),
                  tsm::EnsembleMismatch);
  CHECK_THROWS_AS(tsm::ensemble_predict(std::vector<ChowderModel>{}, slide),
                  tsm::EnsembleMismatch);
}

TEST_CASE("score_tiles applies the linear scorer") {
  const tsm::LinearScorer scorer{{0.5, -1.0}, 0.25};
  const std::vector<std::vector<double>> features{{1.0, 0.5}, {0.0, 0.0}};
  const auto scores = tsm::score_tiles(scorer, features);
  CHECK(scores[0] == Catch::Approx(0.25).margin(1e-15));
  CHECK(scores[1] == Catch::Approx(0.25).margin(1e-15));
  CHECK_THROWS_AS(tsm::score_tiles(scorer, {{1.0}}), tsm::InvalidSpec);
}
