#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "fedcomp/sampling.hpp"

using namespace fedcomp;

TEST_CASE("properness validation exposes probabilities and the first offender") {
  const SamplingScheme uniform = SamplingScheme::uniform_subset(10, 30);
  CHECK(uniform.is_proper());
  CHECK_FALSE(uniform.improper_client().has_value());
  for (int i = 0; i < 30; ++i) CHECK(uniform.probability(i) == doctest::Approx(1.0 / 3.0));
  CHECK(uniform.p_hat() == doctest::Approx(1.0 / 3.0));

  const SamplingScheme broken = SamplingScheme::independent_bernoulli({0.5, 0.0, 0.5});
  CHECK_FALSE(broken.is_proper());
  REQUIRE(broken.improper_client().has_value());
  CHECK(*broken.improper_client() == 1);
  CHECK_THROWS_AS(broken.draw(0, 7), UsageError);

  const SamplingScheme full = SamplingScheme::full_participation(5);
  CHECK(full.is_proper());
  for (int i = 0; i < 5; ++i) CHECK(full.probability(i) == doctest::Approx(1.0));
  CHECK(full.p_hat() == doctest::Approx(1.0));

  const SamplingScheme skewed = SamplingScheme::independent_bernoulli({0.2, 0.9});
  CHECK(skewed.p_hat() == doctest::Approx(0.2));
}

TEST_CASE("scheme constructors validate their parameters") {
  CHECK_THROWS_AS(SamplingScheme::full_participation(0), UsageError);
  CHECK_THROWS_AS(SamplingScheme::uniform_subset(0, 5), UsageError);
  CHECK_THROWS_AS(SamplingScheme::uniform_subset(6, 5), UsageError);
  CHECK_THROWS_AS(SamplingScheme::independent_bernoulli({}), UsageError);
  CHECK_THROWS_AS(SamplingScheme::independent_bernoulli({0.5, 1.5}), UsageError);
  CHECK_THROWS_AS(SamplingScheme::independent_bernoulli({-0.1}), UsageError);
}

TEST_CASE("degenerate draws return every client in order") {
  const SamplingScheme full = SamplingScheme::full_participation(4);
  for (int k = 0; k < 3; ++k) {
    const std::vector<int> s = full.draw(k, 99);
    CHECK(s == std::vector<int>({0, 1, 2, 3}));
  }
  const SamplingScheme all = SamplingScheme::uniform_subset(4, 4);
  CHECK(all.draw(0, 99) == std::vector<int>({0, 1, 2, 3}));
}

TEST_CASE("draws are deterministic, sorted, and distinct") {
  const SamplingScheme scheme = SamplingScheme::uniform_subset(10, 30);
  for (int k = 0; k < 20; ++k) {
    const std::vector<int> a = scheme.draw(k, 42);
    const std::vector<int> b = scheme.draw(k, 42);
    CHECK(a == b);
    CHECK(static_cast<int>(a.size()) == 10);
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
    for (const int i : a) {
      CHECK(i >= 0);
      CHECK(i < 30);
    }
  }

  // Different master seeds must decouple the streams somewhere.
  bool any_difference = false;
  for (int k = 0; k < 20 && !any_difference; ++k) {
    any_difference = scheme.draw(k, 42) != scheme.draw(k, 43);
  }
  CHECK(any_difference);
}

TEST_CASE("sampling ignores unrelated random streams") {
  const SamplingScheme scheme = SamplingScheme::uniform_subset(3, 8);
  const std::vector<int> before = scheme.draw(5, 1234);
  // Simulate another subsystem (e.g. data shuffling) consuming randomness
  // derived from the same master seed.
  auto shuffler = rng::engine(rng::derive(1234, "shuffle", 5));
  for (int i = 0; i < 1000; ++i) (void)shuffler();
  const std::vector<int> after = scheme.draw(5, 1234);
  CHECK(before == after);
}

TEST_CASE("uniform subsets hit the stated marginal frequencies") {
  const SamplingScheme scheme = SamplingScheme::uniform_subset(10, 30);
  const int draws = 100000;
  std::vector<int> hits(30, 0);
  for (int k = 0; k < draws; ++k) {
    for (const int i : scheme.draw(k, 2718)) hits[static_cast<std::size_t>(i)]++;
  }

  const double expected = draws / 3.0;
  double chi_sq = 0.0;
  for (int i = 0; i < 30; ++i) {
    const double freq = hits[static_cast<std::size_t>(i)] / static_cast<double>(draws);
    CHECK(freq == doctest::Approx(1.0 / 3.0).epsilon(0.03));  // within +-0.01 absolute
    CHECK(std::abs(freq - 1.0 / 3.0) <= 0.01);
    const double diff = hits[static_cast<std::size_t>(i)] - expected;
    chi_sq += diff * diff / expected;
  }
  // 1% critical value of chi-squared with 29 degrees of freedom.
  CHECK(chi_sq < 49.588);
}

TEST_CASE("Bernoulli draws follow their marginals and may come up empty") {
  const SamplingScheme scheme = SamplingScheme::independent_bernoulli({0.5, 0.5, 0.5, 0.5});
  const int draws = 100000;
  std::vector<int> hits(4, 0);
  for (int k = 0; k < draws; ++k) {
    const std::vector<int> s = scheme.draw(k, 31);
    CHECK(std::is_sorted(s.begin(), s.end()));
    for (const int i : s) hits[static_cast<std::size_t>(i)]++;
  }
  for (int i = 0; i < 4; ++i) {
    CHECK(hits[static_cast<std::size_t>(i)] / static_cast<double>(draws) ==
          doctest::Approx(0.5).epsilon(0.02));
  }

  // Tiny probabilities produce mostly empty rounds; the schemes must allow it.
  const SamplingScheme sparse = SamplingScheme::independent_bernoulli({0.01, 0.01});
  int empty_rounds = 0;
  for (int k = 0; k < 200; ++k) {
    if (sparse.draw(k, 5).empty()) empty_rounds++;
  }
  CHECK(empty_rounds > 150);
}
