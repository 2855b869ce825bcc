#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "test_support.hpp"
#include "tsm/distributions.hpp"

using tsm::build_empirical;
using tsm::build_monge_map;
using tsm::build_target_mixture;
using tsm::EmpiricalDistribution;
using tsm::MongeMap;

TEST_CASE("build_empirical normalizes and merges duplicates") {
  const auto uniform = build_empirical({1.0, 2.0, 3.0});
  CHECK(uniform.values() == std::vector<double>{1.0, 2.0, 3.0});
  for (const double w : uniform.weights()) CHECK(w == Catch::Approx(1.0 / 3));

  const auto merged = build_empirical({2.0, 1.0, 2.0});
  CHECK(merged.values() == std::vector<double>{1.0, 2.0});
  CHECK(merged.weights()[0] == Catch::Approx(1.0 / 3));
  CHECK(merged.weights()[1] == Catch::Approx(2.0 / 3));

  const auto weighted = build_empirical({4.0, 2.0}, {3.0, 1.0});
  CHECK(weighted.values() == std::vector<double>{2.0, 4.0});
  CHECK(weighted.weights()[0] == Catch::Approx(0.25));
  CHECK(weighted.weights()[1] == Catch::Approx(0.75));
}

TEST_CASE("build_empirical rejects degenerate input") {
  CHECK_THROWS_AS(build_empirical({5.0, 5.0, 5.0}), tsm::DegenerateDistribution);
  CHECK_THROWS_AS(build_empirical({1.0}), tsm::DegenerateDistribution);
  CHECK_THROWS_AS(build_empirical({}), tsm::DegenerateDistribution);
  CHECK_THROWS_AS(build_empirical({1.0, 2.0}, {1.0, 0.0}), tsm::InvalidWeight);
  CHECK_THROWS_AS(build_empirical({1.0, 2.0}, {1.0, -2.0}), tsm::InvalidWeight);
  CHECK_THROWS_AS(build_empirical({1.0, 2.0}, {1.0}), tsm::InvalidWeight);
}

TEST_CASE("cdf follows the midpoint convention with clamped tails") {
  const auto dist = build_empirical({1.0, 2.0, 3.0});
  CHECK(dist.cdf(2.0) == Catch::Approx(0.5).margin(1e-15));
  CHECK(dist.cdf(1.5) == Catch::Approx(1.0 / 3).margin(1e-15));
  CHECK(dist.cdf(-10.0) == Catch::Approx(1.0 / 6).margin(1e-15));
  CHECK(dist.cdf(1.0) == Catch::Approx(1.0 / 6).margin(1e-15));
  CHECK(dist.cdf(3.0) == Catch::Approx(5.0 / 6).margin(1e-15));
  CHECK(dist.cdf(100.0) == Catch::Approx(5.0 / 6).margin(1e-15));

  // weighted analogue: F(v_i) = W_{i-1} + w_i/2
  const auto weighted = build_empirical({1.0, 2.0}, {1.0, 2.0});
  CHECK(weighted.cdf(1.0) == Catch::Approx(1.0 / 6).margin(1e-15));
  CHECK(weighted.cdf(2.0) == Catch::Approx(2.0 / 3).margin(1e-15));
}

TEST_CASE("quantile inverts the cdf and clamps") {
  const auto dist = build_empirical({1.0, 2.0, 3.0});
  CHECK(dist.quantile(0.5) == Catch::Approx(2.0).margin(1e-15));
  CHECK(dist.quantile(0.0) == 1.0);
  CHECK(dist.quantile(1.0) == 3.0);

  const auto tens = build_empirical({10.0, 20.0, 30.0});
  CHECK(tens.quantile(1.0 / 3) == Catch::Approx(15.0).margin(1e-12));

  CHECK_THROWS_AS(dist.quantile(-0.01), tsm::InvalidProbability);
  CHECK_THROWS_AS(dist.quantile(1.01), tsm::InvalidProbability);
}

TEST_CASE("quantile/cdf round trip on the support") {
  auto gen = tsupport::rng(42);
  for (int rep = 0; rep < 20; ++rep) {
    const auto dist = rep % 2 == 0
                          ? tsupport::random_distribution(gen, 80)
                          : build_empirical(tsupport::random_scores(gen, 60),
                                            tsupport::random_scores(gen, 60, 0.1, 2.0));
    std::uniform_real_distribution<double> x(dist.support_min(),
                                             dist.support_max());
    for (int i = 0; i < 50; ++i) {
      const double v = x(gen);
      CHECK(dist.quantile(dist.cdf(v)) == Catch::Approx(v).margin(1e-12));
    }
    for (const double v : dist.values()) {
      CHECK(dist.quantile(dist.cdf(v)) == Catch::Approx(v).margin(1e-12));
    }
  }
}

TEST_CASE("cdf is nondecreasing everywhere and strictly increasing on support") {
  auto gen = tsupport::rng(7);
  const auto dist = tsupport::random_distribution(gen, 50);
  double prev = -0.1;
  double prev_cdf = 0.0;
  for (int i = 0; i <= 200; ++i) {
    const double x = -0.1 + 1.2 * i / 200.0;
    const double c = dist.cdf(x);
    CHECK(c >= prev_cdf);
    prev = x;
    prev_cdf = c;
  }
  (void)prev;
  const auto& vals = dist.values();
  for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
    CHECK(dist.cdf(vals[i]) < dist.cdf(vals[i + 1]));
  }
}

TEST_CASE("build_target_mixture degenerate omegas return the component exactly") {
  const auto pos = build_empirical({0.6, 0.8, 0.9});
  const auto neg = build_empirical({0.1, 0.2});
  const auto at_one = build_target_mixture(pos, std::nullopt, 1.0);
  CHECK(at_one.values() == pos.values());
  CHECK(at_one.weights() == pos.weights());
  const auto at_zero = build_target_mixture(std::nullopt, neg, 0.0);
  CHECK(at_zero.values() == neg.values());
  CHECK(at_zero.weights() == neg.weights());
}

TEST_CASE("build_target_mixture combines weighted supports") {
  const auto pos = build_empirical({1.0, 2.0});
  const auto neg = build_empirical({3.0, 4.0});
  const auto mix = build_target_mixture(pos, neg, 0.5);
  CHECK(mix.values() == std::vector<double>{1.0, 2.0, 3.0, 4.0});
  for (const double w : mix.weights()) CHECK(w == Catch::Approx(0.25));

  // shared support points merge
  const auto overlap = build_target_mixture(build_empirical({1.0, 2.0}),
                                            build_empirical({2.0, 3.0}), 0.5);
  CHECK(overlap.values() == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(overlap.weights()[1] == Catch::Approx(0.5));
}

TEST_CASE("build_target_mixture mass sums to one for any omega") {
  auto gen = tsupport::rng(11);
  std::uniform_real_distribution<double> omega(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    const auto pos = tsupport::random_distribution(gen, 40, 0.4, 1.0);
    const auto neg = tsupport::random_distribution(gen, 60, 0.0, 0.6);
    const auto mix = build_target_mixture(pos, neg, omega(gen));
    double total = 0.0;
    for (const double w : mix.weights()) total += w;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("build_target_mixture validates arguments") {
  const auto pos = build_empirical({1.0, 2.0});
  CHECK_THROWS_AS(build_target_mixture(pos, std::nullopt, 0.5),
                  tsm::DegenerateDistribution);
  CHECK_THROWS_AS(build_target_mixture(std::nullopt, pos, 1.0),
                  tsm::DegenerateDistribution);
  CHECK_THROWS_AS(build_target_mixture(pos, pos, 1.5), tsm::InvalidProbability);
  CHECK_THROWS_AS(build_target_mixture(pos, pos, -0.5), tsm::InvalidProbability);
}

TEST_CASE("monge map matches quantiles of the target") {
  const auto a = build_empirical({1.0, 2.0, 3.0});
  const auto b = build_empirical({10.0, 20.0, 30.0});
  const auto map = build_monge_map(a, b);
  CHECK(map(2.0) == Catch::Approx(20.0).margin(1e-12));
  CHECK(map(1.5) == Catch::Approx(15.0).margin(1e-12));
  CHECK(map(1.0) == 10.0);
  CHECK(map(3.0) == 30.0);
  // clamped to the target range outside the source range
  CHECK(map(0.0) == 10.0);
  CHECK(map(99.0) == 30.0);
}

TEST_CASE("monge map from a distribution to itself is the identity") {
  auto gen = tsupport::rng(3);
  const auto samples = tsupport::random_scores(gen, 100);
  const auto a = build_empirical(samples);
  const auto map = build_monge_map(a, a);
  for (const double v : a.values()) CHECK(map(v) == Catch::Approx(v).margin(1e-12));
  std::uniform_real_distribution<double> x(a.support_min(), a.support_max());
  for (int i = 0; i < 100; ++i) {
    const double v = x(gen);
    CHECK(map(v) == Catch::Approx(v).margin(1e-12));
  }
}

TEST_CASE("monge map pushes interior support points onto matching quantiles") {
  auto gen = tsupport::rng(19);
  for (int rep = 0; rep < 10; ++rep) {
    const auto a = tsupport::random_distribution(gen, 120, 0.0, 1.0);
    const auto b = tsupport::random_distribution(gen, 80, 2.0, 5.0);
    const auto map = build_monge_map(a, b);
    for (const double v : a.values()) {
      const double p = a.cdf(v);
      if (p < b.cdf(b.support_min()) || p > b.cdf(b.support_max())) continue;
      CHECK(b.cdf(map(v)) == Catch::Approx(p).margin(1e-12));
    }
  }
}

TEST_CASE("pushforward of mapped samples lands on the target distribution") {
  auto gen = tsupport::rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    std::uniform_int_distribution<std::size_t> size(50, 300);
    const std::size_t n = size(gen);
    const std::size_t m = size(gen);
    const auto samples = tsupport::random_scores(gen, n);
    const auto a = build_empirical(samples);
    const auto b = tsupport::random_distribution(gen, m, 1.0, 3.0);
    const auto mapped = tsm::apply_map(build_monge_map(a, b), samples);
    const auto pushed = build_empirical(mapped);
    const double tol = 2.0 / static_cast<double>(std::min(n, m));
    CHECK(tsupport::ks_statistic(pushed, b) <= tol);
  }
}

TEST_CASE("apply_map preserves order and passes empty input through") {
  const auto map = build_monge_map(build_empirical({1.0, 2.0, 3.0}),
                                   build_empirical({10.0, 20.0, 30.0}));
  CHECK(tsm::apply_map(map, std::vector<double>{3.0, 1.0}) ==
        std::vector<double>{30.0, 10.0});
  CHECK(tsm::apply_map(map, std::vector<double>{}).empty());

  const tsm::MongeMap identity({0.0, 1.0}, {0.0, 1.0});
  CHECK(tsm::apply_map(identity, std::vector<double>{0.1, 0.9}) ==
        std::vector<double>{0.1, 0.9});

  auto gen = tsupport::rng(5);
  const auto random_map = tsupport::random_strict_monotone_map(gen, 12);
  auto xs = tsupport::random_scores(gen, 200, -0.5, 1.5);
  std::sort(xs.begin(), xs.end());
  const auto ys = tsm::apply_map(random_map, xs);
  CHECK(std::is_sorted(ys.begin(), ys.end()));
}

TEST_CASE("MongeMap validates knots and evaluates knots exactly") {
  CHECK_THROWS_AS(MongeMap({1.0, 2.0}, {1.0}), tsm::InvalidSpec);
  CHECK_THROWS_AS(MongeMap({1.0}, {1.0}), tsm::InvalidSpec);
  CHECK_THROWS_AS(MongeMap({2.0, 1.0}, {1.0, 2.0}), tsm::InvalidSpec);
  CHECK_THROWS_AS(MongeMap({1.0, 2.0}, {2.0, 1.0}), tsm::InvalidSpec);

  auto gen = tsupport::rng(29);
  const auto map = tsupport::random_strict_monotone_map(gen, 9);
  for (std::size_t i = 0; i < map.source_knots().size(); ++i) {
    CHECK(map(map.source_knots()[i]) == map.target_knots()[i]);
  }
}
