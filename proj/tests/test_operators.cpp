#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rough_ht/operators.hpp"

using namespace rough_ht;

namespace {

double rel_sup_diff(const LatticeFunction& a, const LatticeFunction& b) {
  const double scale = std::max(lp_norm(a, kInfinity), lp_norm(b, kInfinity));
  return scale == 0.0 ? 0.0 : lp_norm(a - b, kInfinity) / scale;
}

bool identical(const LatticeFunction& a, const LatticeFunction& b) {
  return std::equal(a.sites().begin(), a.sites().end(), b.sites().begin(), b.sites().end()) &&
         std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end());
}

}  // namespace

TEST(TransformConfig, Scales) {
  const TransformConfig c(1 << 10, 0.8, 1.001);
  ASSERT_EQ(c.scales().size(), 3u);
  EXPECT_EQ(c.min_scale(), 256);
  EXPECT_EQ(c.scales().back(), 1024);
  const TransformConfig d(16, 0.5, 1.001);
  EXPECT_EQ(d.scales().size(), 3u);
  EXPECT_EQ(d.min_scale(), 4);
  EXPECT_THROW(TransformConfig(12, 0.8, 1.001), std::invalid_argument);
  EXPECT_THROW(TransformConfig(16, 1.0, 1.001), std::invalid_argument);
  EXPECT_THROW(d.scale_index(2), std::invalid_argument);
}

TEST(PartialSum, DeltaAtMinScaleIsAntisymmetricPart) {
  const TransformConfig c(16, 0.5, 1.001);
  const auto g = partial_sum(LatticeFunction::delta(0), 4, c);
  const auto a = antisymmetric_part(4, 1.001, default_bump());
  EXPECT_TRUE(identical(g, a.as_function()));
  EXPECT_TRUE(partial_sum(LatticeFunction{}, 4, c).empty());
}

TEST(HMax, DeltaMatchesOracleAndBruteForce) {
  const TransformConfig c(16, 0.5, 1.001);
  const auto f = LatticeFunction::delta(0);
  const auto h = h_max(f, c);
  EXPECT_LT(rel_sup_diff(h, oracle::h_max(f, c)), 1e-15);
  EXPECT_TRUE(identical(h, h_max_bruteforce(f, c)));
  EXPECT_GT(h.size(), 0u);
  for (Site x : h.sites()) EXPECT_NE(x, 0);
  EXPECT_TRUE(h_max(LatticeFunction{}, c).empty());
  EXPECT_TRUE(h_max_bruteforce(LatticeFunction{}, c).empty());
}

TEST(HMax, SingleScaleIsAbsoluteValue) {
  const TransformConfig c(64, 0.99, 1.001);
  ASSERT_EQ(c.scales().size(), 1u);
  std::mt19937_64 gen(31);
  const auto f = oracle::gaussian_function(gen, -50, 50, 30);
  EXPECT_TRUE(identical(h_max(f, c), convolve(c.nu_at(0), f).abs()));
}

TEST(HMax, MatchesOracleOnRandomInputs) {
  std::mt19937_64 gen(32);
  for (Site M : {Site{1} << 6, Site{1} << 8}) {
    const TransformConfig c(M, 0.5, 1.001);
    for (int t = 0; t < 10; ++t) {
      const auto f = oracle::gaussian_function(gen, -200, 200, 25);
      const auto h = h_max(f, c);
      EXPECT_LT(rel_sup_diff(h, oracle::h_max(f, c)), 1e-13);
      EXPECT_TRUE(identical(h, h_max_bruteforce(f, c)));
    }
  }
}

TEST(Transform, LinearAntisymmetricTranslationEquivariant) {
  const TransformConfig c(1 << 8, 0.5, 1.001);
  std::mt19937_64 gen(33);
  for (int t = 0; t < 20; ++t) {
    const auto f = oracle::gaussian_function(gen, -300, 300, 40);
    const auto g = oracle::gaussian_function(gen, -300, 300, 40);
    const auto lin = transform(f.scaled(2.0) + g, c) - (transform(f, c).scaled(2.0) + transform(g, c));
    EXPECT_LT(lp_norm(lin, kInfinity), 1e-12 * (1.0 + lp_norm(transform(f, c), kInfinity)));
    EXPECT_LT(rel_sup_diff(transform(f.reflected(), c), transform(f, c).reflected().scaled(-1.0)), 1e-13);
    EXPECT_LT(rel_sup_diff(transform(f.translated(-91), c), transform(f, c).translated(-91)), 1e-14);
  }
}

TEST(Transform, L2OperatorNormProbeIsFlatInM) {
  std::mt19937_64 gen(34);
  std::vector<double> sup_ratio;
  for (int k = 8; k <= 14; k += 2) {
    const TransformConfig c(Site{1} << k, 0.8, 1.001);
    double best = 0.0;
    const Site len = 8 * floor_power(Site{1} << k, 1.001);
    std::uniform_real_distribution<double> log_freq(std::log(1.0 / static_cast<double>(len)), std::log(0.5));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (int t = 0; t < 100; ++t) {
      const auto f = oracle::wave_packet(len, std::exp(log_freq(gen)), phase(gen));
      best = std::max(best, lp_norm(transform(f, c), 2.0) / lp_norm(f, 2.0));
    }
    sup_ratio.push_back(best);
  }
  const auto [lo, hi] = std::minmax_element(sup_ratio.begin(), sup_ratio.end());
  EXPECT_GT(*lo, 0.0);
  EXPECT_LT(*hi / *lo, 4.0);
}

TEST(LevelSet, Examples) {
  const auto g = LatticeFunction::delta(0, 2.0);
  EXPECT_EQ(level_set_size(g, 1.0), 1u);
  EXPECT_EQ(level_set_size(g, 2.0), 0u);
  EXPECT_EQ(level_set_size(LatticeFunction::from_pairs({{0, 2.0}, {3, -5.0}}), 1.0), 2u);
  EXPECT_THROW(level_set_size(g, 0.0), std::invalid_argument);
}

TEST(Weak11, ZeroMaximalFunctionGivesZero) {
  const TransformConfig c(64, 0.5, 1.001, BumpFunction::zero());
  EXPECT_EQ(weak11_ratio(LatticeFunction::delta(3), c, 0.1), 0.0);
  EXPECT_THROW(weak11_ratio(LatticeFunction{}, c, 0.1), std::invalid_argument);
}

TEST(FourTerm, DegenerateBelowThreshold) {
  const TransformConfig c(1 << 8, 0.5, 1.001);
  const auto f = LatticeFunction::from_pairs({{0, 0.5}, {3, 0.25}, {9, 1.0}});
  const double lambda = 0.1;  // lambda * 16 exceeds every value
  const IntervalFamily cubes({DyadicInterval(2, 0), DyadicInterval(3, 1)});
  const auto split = four_term_split(f, c, lambda, cubes);
  const auto e = conditional_expectation(f, cubes);
  for (const auto& s : split.per_scale) {
    EXPECT_TRUE(s.high.empty());
    EXPECT_TRUE(s.expected_high.empty());
    EXPECT_TRUE(identical(s.low_oscillation, f - e));
    EXPECT_TRUE(identical(s.expected, e));
  }
  EXPECT_TRUE(split.G.empty());
}

TEST(FourTerm, ReconstructsAndBoundsTheMaximalFunction) {
  const TransformConfig c(1 << 8, 0.5, 1.001);
  std::mt19937_64 gen(35);
  for (int t = 0; t < 20; ++t) {
    const auto f = oracle::integer_function(gen, 64, 30, 40);
    const IntervalFamily cubes({DyadicInterval(3, -2), DyadicInterval(2, 1), DyadicInterval(4, 2)});
    const double lambda = 0.5;
    const auto split = four_term_split(f, c, lambda, cubes);
    for (const auto& s : split.per_scale) EXPECT_LT(lp_norm(s.reconstruction() - f, kInfinity), 1e-12);
    LatticeFunction G;
    const auto terms = four_term_maxima(split, c, &G);
    EXPECT_LT(rel_sup_diff(G, split.G), 1e-12);
    const auto h = h_max(f, c);
    for (std::size_t i = 0; i < h.size(); ++i) {
      double bound = 0.0;
      for (const auto& term : terms.term) bound += term(h.sites()[i]);
      EXPECT_LE(h.values()[i], bound * (1.0 + 1e-12) + 1e-12);
    }
  }
}
