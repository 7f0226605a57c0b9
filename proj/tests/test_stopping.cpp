#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "rough_ht/stopping.hpp"

using namespace rough_ht;

namespace {

std::vector<Site> dyadic_scales(int lo, int hi) {
  std::vector<Site> out;
  for (int k = lo; k <= hi; ++k) out.push_back(Site{1} << k);
  return out;
}

}  // namespace

TEST(StoppingTimes, HalfBudgetExample) {
  const auto scales = dyadic_scales(1, 10);
  const double lambda0 = 0.75;
  const std::vector<double> betas(scales.size(), lambda0 / 2.0);
  const auto seq = stopping_times(scales, betas, lambda0);
  EXPECT_EQ(seq.j_max, 6);
  ASSERT_EQ(seq.times.size(), 6u);
  for (int j = 1; j <= 6; ++j) EXPECT_EQ(seq.times[static_cast<std::size_t>(j - 1)], Site{1} << std::min(2 * j, 10));
  EXPECT_TRUE(seq.strictly_increasing());
  EXPECT_EQ(seq.distinct_times(), (std::vector<Site>{4, 16, 64, 256, 1024}));
}

TEST(StoppingTimes, ZeroBetasGiveTopScale) {
  const auto scales = dyadic_scales(3, 9);
  const auto seq = stopping_times(scales, std::vector<double>(scales.size(), 0.0), 1.0);
  EXPECT_EQ(seq.j_max, 1);
  for (const auto& t : seq.times) EXPECT_EQ(t, Site{512});
}

TEST(StoppingTimes, Errors) {
  const auto scales = dyadic_scales(1, 3);
  EXPECT_THROW(stopping_times(scales, std::vector<double>{1.0, 1.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(stopping_times(scales, std::vector<double>{1.0, -1.0, 0.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(stopping_times(scales, std::vector<double>{1.0, 1.0, 1.0}, 0.0), std::invalid_argument);
}

TEST(StoppingTimes, StrictlyIncreasingWhenBetasBounded) {
  std::mt19937_64 gen(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const auto scales = dyadic_scales(1, 1 + static_cast<int>(u(gen) * 15));
    const double lambda0 = 0.1 + u(gen);
    std::vector<double> betas;
    for (std::size_t i = 0; i < scales.size(); ++i) betas.push_back(u(gen) < 0.2 ? 0.0 : lambda0 * u(gen));
    const auto seq = stopping_times(scales, betas, lambda0);
    EXPECT_TRUE(seq.strictly_increasing());
    EXPECT_TRUE(split_by_beta(seq).large.empty());
    // defining max, evaluated directly
    for (int j = 1; j <= seq.j_max; ++j) {
      double cum = 0.0;
      Site best = 0;
      for (std::size_t i = 0; i < scales.size(); ++i) {
        cum += betas[i];
        if (cum <= j * lambda0) best = scales[i];
      }
      EXPECT_EQ(seq.times[static_cast<std::size_t>(j - 1)], best);
    }
  }
}

TEST(SplitByBeta, SeparatesLargeScales) {
  const auto scales = dyadic_scales(1, 4);
  const auto seq = stopping_times(scales, std::vector<double>{0.5, 2.0, 1.0, 3.0}, 1.0);
  const auto split = split_by_beta(seq);
  EXPECT_EQ(split.small, (std::vector<Site>{2, 8}));
  EXPECT_EQ(split.large, (std::vector<Site>{4, 16}));
}

TEST(SparseMax, ImplicationOnRandomNonnegativeIncrements) {
  std::mt19937_64 gen(52);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::exponential_distribution<double> ex(1.0);
  std::size_t fired = 0;
  for (int t = 0; t < 20000; ++t) {
    const auto scales = dyadic_scales(1, 12);
    const double lambda0 = 1.0;
    std::vector<double> betas, inc;
    for (std::size_t i = 0; i < scales.size(); ++i) {
      betas.push_back(lambda0 * u(gen));
      inc.push_back(betas.back() * (u(gen) < 0.1 ? 8.0 * ex(gen) : ex(gen)));
    }
    const auto p = sparse_max_at(inc, stopping_times(scales, betas, lambda0));
    EXPECT_NE(p.outcome, LemmaOutcome::Violated);
    fired += p.outcome == LemmaOutcome::Holds;
  }
  EXPECT_GT(fired, 500u);
}

TEST(SparseMax, ConstructedSpikeFires) {
  const TransformConfig cfg(1 << 8, 0.5, 1.001);
  const double lambda0 = 0.2;
  const std::size_t star = 2;
  const auto& m = cfg.mu_at(star);
  const Site x = 100 + m.atoms()[0].site;
  std::vector<LatticeFunction> good(cfg.scales().size());
  good[star] = LatticeFunction::delta(100, 5.0 * lambda0 / m.atoms()[0].weight);
  ASSERT_NEAR(convolve(m, good[star])(x), 5.0 * lambda0, 1e-12);
  const std::vector<double> betas(cfg.scales().size(), 0.0);
  const auto J = DyadicInterval::containing(x, 0);
  const auto rep = check_sparse_max_lemma(good, betas, lambda0, cfg, J);
  EXPECT_EQ(rep.fired, 1u);
  EXPECT_EQ(rep.violations, 0u);
  const auto vac = check_sparse_max_lemma(std::vector<LatticeFunction>(cfg.scales().size()), betas, lambda0, cfg,
                                          DyadicInterval(4, 3));
  EXPECT_EQ(vac.points, 16u);
  EXPECT_EQ(vac.fired, 0u);
}

TEST(SparseMax, SkipsWhenABetaExceedsLambda0) {
  const TransformConfig cfg(1 << 6, 0.5, 1.001);
  std::vector<double> betas(cfg.scales().size(), 0.0);
  betas[1] = 2.0;
  const auto rep = check_sparse_max_lemma(std::vector<LatticeFunction>(cfg.scales().size()), betas, 1.0, cfg,
                                          DyadicInterval(2, 0));
  EXPECT_TRUE(rep.skipped);
  EXPECT_EQ(rep.large_scales, 1u);
}

TEST(AveragedField, BetaIsConstantOnJ) {
  std::mt19937_64 gen(53);
  const TransformConfig cfg(1 << 9, 0.5, 1.001);
  for (int t = 0; t < 20; ++t) {
    const auto f = oracle::integer_function(gen, 256, 60, 20);
    const auto dec = cz_decompose(f, 0.5);
    std::vector<LatticeFunction> good;
    for (std::size_t i = 0; i < cfg.scales().size(); ++i) good.push_back(truncate_split(f, 0.5 * cfg.scales()[i]).low);
    const AveragedField field(good, dec.cubes, cfg);
    const auto fam = j_grid(6, field.hull());
    const auto avg = averaged_beta_sum(field, fam);
    for (const auto& J : fam) {
      const auto betas = field.betas_on(J);
      EXPECT_EQ(betas, build_beta(good, dec, J, cfg));
      double sum = 0.0;
      for (double b : betas) sum += b;
      for (Site x = J.begin(); x < J.end(); ++x) {
        EXPECT_EQ(avg(x), avg(J.begin()));
        EXPECT_NEAR(avg(x), sum, 1e-12 * (1.0 + sum));
      }
    }
  }
}

TEST(ErrorFunction, ZeroCasesAndL1Bound) {
  const TransformConfig cfg(1 << 8, 0.5, 1.001);
  const std::vector<LatticeFunction> zero(cfg.scales().size());
  const auto rep = error_function(zero, CZDecomposition{}, j_grid(4, {-64, 64}), cfg, 1.0);
  EXPECT_TRUE(rep.er.empty());
  EXPECT_EQ(rep.ratio, 0.0);

  std::mt19937_64 gen(54);
  const auto f = oracle::integer_function(gen, 128, 40, 10);
  const auto dec = cz_decompose(f, 1.0);
  std::vector<LatticeFunction> good(cfg.scales().size(), f);
  const AveragedField field(good, dec.cubes, cfg);
  const auto fam = j_grid(5, field.hull());
  const auto er = error_function(field, fam, lp_norm(f, 1.0));
  double bound = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) bound += 2.0 * lp_norm(field.field(i), 1.0);
  EXPECT_GT(er.l1, 0.0);
  EXPECT_LE(er.l1, bound * (1.0 + 1e-12));
  for (double v : er.er.values()) EXPECT_GT(v, 0.0);
  // one J per site: every F equals its own average
  EXPECT_LT(error_function(field, j_grid(0, field.hull()), 1.0).l1, 1e-12);
}

TEST(ExceptionalSets, Examples) {
  const auto fam = j_grid(3, {0, 32});
  const auto none = exceptional_sets({{1, LatticeFunction{}}}, {{0, LatticeFunction{}}}, 1.0, 0.05, fam);
  EXPECT_TRUE(none.by_A.at(1).intervals.empty());
  EXPECT_TRUE(none.by_s.at(0).intervals.empty());

  // one J whose averaged sum equals lambda A^2 exactly
  LatticeFunction avg;
  for (Site x = 8; x < 16; ++x) avg.push_back(x, 4.0 * 0.5);
  const auto sets = exceptional_sets({{2, avg}}, {}, 0.5, 0.05, fam);
  const auto& s = sets.by_A.at(2);
  ASSERT_EQ(s.intervals.size(), 1u);
  EXPECT_EQ(s.intervals[0], DyadicInterval(3, 1));
  EXPECT_EQ(s.size, 8);
  EXPECT_TRUE(s.whole_j());
  EXPECT_TRUE(s.within_chebyshev());
}

TEST(ExceptionalSets, WholeJOnRandomFields) {
  std::mt19937_64 gen(55);
  const TransformConfig cfg(1 << 9, 0.5, 1.001);
  for (int t = 0; t < 20; ++t) {
    const auto f = oracle::integer_function(gen, 256, 80, 30);
    std::vector<LatticeFunction> good(cfg.scales().size(), f);
    const AveragedField field(good, cz_decompose(f, 1.0).cubes, cfg);
    const auto fam = j_grid(5, field.hull());
    const auto avg = averaged_beta_sum(field, fam);
    const double top = lp_norm(avg, kInfinity);
    for (double frac : {0.1, 0.5, 0.9, 1.0}) {
      const auto set = exceptional_set(avg, fam, frac * top);
      EXPECT_TRUE(set.whole_j());
      EXPECT_TRUE(set.within_chebyshev());
      EXPECT_FALSE(set.intervals.empty());
    }
  }
}
