#include <gtest/gtest.h>

#include <sstream>

#include "rough_ht/rough_ht.hpp"

using namespace rough_ht;

namespace {

bool same(const LatticeFunction& a, const LatticeFunction& b) {
  return std::equal(a.sites().begin(), a.sites().end(), b.sites().begin(), b.sites().end()) &&
         std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end());
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.M_list = {Site{1} << 8, Site{1} << 9};
  cfg.families = {"delta", "spaced-deltas", "cz-stress"};
  cfg.seeds = {1, 2};
  cfg.lambdas_per_decade = 3;
  return cfg;
}

std::string sweep_csv(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_sweep_csv(os, weak11_sweep(cfg));
  return os.str();
}

}  // namespace

TEST(Generators, Examples) {
  GeneratorParams p;
  p.at = 0;
  const auto d = generate_input("delta", 64, 1.001, 7, p);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d(0), 1.0);

  const auto n = normalize_l1(LatticeFunction::from_pairs({{0, 2.0}, {1, 2.0}}));
  EXPECT_EQ(n(0), 0.5);
  EXPECT_EQ(n(1), 0.5);
  EXPECT_TRUE(normalize_l1(LatticeFunction{}).empty());
}

TEST(Generators, DeterministicNonnegativeAndSeedSensitive) {
  for (const auto& fam : input_families()) {
    const auto a = generate_input(fam, 256, 1.001, 3);
    const auto b = generate_input(fam, 256, 1.001, 3);
    const auto c = generate_input(fam, 256, 1.001, 4);
    EXPECT_TRUE(same(a, b)) << fam;
    EXPECT_FALSE(same(a, c)) << fam;
    EXPECT_FALSE(a.empty()) << fam;
    for (double v : a.values()) EXPECT_GT(v, 0.0) << fam;
  }
  EXPECT_NEAR(lp_norm(generate_input("normalized-l1", 256, 1.001, 5), 1.0), 1.0, 1e-12);
  EXPECT_THROW(generate_input("nope", 256, 1.001, 1), std::invalid_argument);
}

TEST(Generators, SpacedDeltasSitOnCurve) {
  GeneratorParams p;
  p.spikes = 20;
  const auto f = generate_input("spaced-deltas", 512, 1.5, 9, p);
  for (Site x : f.sites()) {
    bool hit = false;
    for (Site m = 1; m <= 512 && !hit; ++m) hit = floor_power(m, 1.5) == x;
    EXPECT_TRUE(hit) << x;
  }
}

TEST(Config, SetLoadValidate) {
  ExperimentConfig cfg;
  std::istringstream in("# comment\nalpha = 1.0005\nM = 256, 1024\nfamilies=delta,cz-stress\nterms=off\n\n");
  cfg.load(in);
  EXPECT_EQ(cfg.alpha, 1.0005);
  EXPECT_EQ(cfg.M_list, (std::vector<Site>{256, 1024}));
  EXPECT_EQ(cfg.families.size(), 2u);
  EXPECT_FALSE(cfg.terms);
  EXPECT_NO_THROW(cfg.validate());

  EXPECT_THROW(cfg.set("bogus", "1"), std::invalid_argument);
  std::istringstream bad("alpha\n");
  EXPECT_THROW(cfg.load(bad), std::invalid_argument);

  ExperimentConfig a;
  a.alpha = 1.5;
  EXPECT_THROW(a.validate(), std::invalid_argument);
  a.allow_alpha = true;
  EXPECT_NO_THROW(a.validate());
  ExperimentConfig m;
  m.M_list = {1000};
  EXPECT_THROW(m.validate(), std::invalid_argument);
  ExperimentConfig e;
  e.epsilon = 0.5;
  EXPECT_THROW(e.validate(), std::invalid_argument);
}

TEST(Config, JScaleAndPurge) {
  ExperimentConfig cfg;
  EXPECT_EQ(cfg.j_scale(Site{1} << 10), 8);  // round(0.75 * 10)
  EXPECT_NEAR(cfg.purge_threshold(1024), std::pow(1024.0, 0.7), 1e-9);
}

TEST(LambdaGrid, Points) {
  const auto g = lambda_grid(1.0, 100.0, 2);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 1.0);
  EXPECT_NEAR(g.back(), 100.0, 1e-9);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], std::sqrt(10.0), 1e-12);
}

TEST(ParallelMap, WorkerCountInvariantAndPropagatesErrors) {
  auto fn = [](std::size_t i) {
    Rng r(mix_seed(42, i));
    return r.uniform();
  };
  const auto one = parallel_map(50, 1, fn);
  EXPECT_EQ(one, parallel_map(50, 3, fn));
  EXPECT_EQ(one, parallel_map(50, 64, fn));
  EXPECT_TRUE(parallel_map(0, 4, fn).empty());
  EXPECT_THROW(parallel_map(10, 2, [](std::size_t i) -> int { if (i == 7) throw std::runtime_error("x"); return 0; }),
               std::runtime_error);
}

TEST(Sweep, SingleRowMatchesOperator) {
  ExperimentConfig cfg;
  cfg.lambdas = {0.003};
  const auto rep = weak11_sweep(cfg);
  ASSERT_EQ(rep.rows.size(), 1u);
  const auto& r = rep.rows.front();
  EXPECT_EQ(r.status, "ok");
  const TransformConfig tc(1024, cfg.theta, cfg.alpha, cfg.phi());
  const auto f0 = sweep_input(cfg, sweep_cells(cfg).front());
  EXPECT_EQ(r.ratio, weak11_ratio(f0, tc, 0.003));
  EXPECT_LT(r.recon_err, 1e-12);
  EXPECT_GE(r.g_ratio, 0.0);
}

TEST(Sweep, ZeroInputIsDegenerate) {
  ExperimentConfig cfg;
  cfg.height = 0.0;
  const auto rep = weak11_sweep(cfg);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows.front().status, "degenerate");
  EXPECT_EQ(summarize(rep).failed_rows, 1u);
}

TEST(Sweep, ReconstructionAndDeterminism) {
  auto cfg = small_config();
  const auto rep = weak11_sweep(cfg);
  EXPECT_EQ(rep.timings.size(), sweep_cells(cfg).size());
  for (const auto& r : rep.rows) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_LT(r.recon_err, 1e-10);
    EXPECT_GE(r.ratio, 0.0);
  }
  const auto csv1 = sweep_csv(cfg);
  cfg.workers = 3;
  EXPECT_EQ(csv1, sweep_csv(cfg));
  EXPECT_EQ(csv1.substr(0, 2), "M,");
  EXPECT_NE(csv1.find("\r\n"), std::string::npos);
}

TEST(Sweep, SummaryAndSpread) {
  EXPECT_EQ(spread({{1, 2.0}, {2, 4.0}}), 2.0);
  EXPECT_EQ(spread({}), 0.0);
  EXPECT_TRUE(std::isinf(spread({{1, 0.0}, {2, 1.0}})));
  const auto s = summarize(weak11_sweep(small_config()));
  EXPECT_EQ(s.max_ratio.size(), 2u);
  EXPECT_EQ(s.max_ratio_by_family.size(), 3u);
  EXPECT_GE(s.ratio_spread, 1.0);
}

TEST(Csv, FieldQuoting) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(fmt_double(0.1), "0.10000000000000001");
}

TEST(Er, SweepAndInversions) {
  EXPECT_EQ(inversions({{1, 3.0}, {2, 2.0}, {4, 1.0}}), 0u);
  EXPECT_EQ(inversions({{1, 3.0}, {2, 3.0}, {4, 4.0}}), 2u);
  auto cfg = small_config();
  const auto rows = er_sweep(cfg);
  EXPECT_EQ(rows.size(), sweep_cells(cfg).size());
  for (const auto& r : rows) {
    EXPECT_GE(r.ratio, 0.0);
    EXPECT_TRUE(std::isfinite(r.ratio));
  }
  cfg.workers = 2;
  const auto again = er_sweep(cfg);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].ratio, again[i].ratio);
}

TEST(LemmaSuite, SmallRunPassesAndIsDeterministic) {
  ExperimentConfig cfg;
  cfg.trials = 20;
  const auto ctx = lemma_context(cfg);
  const auto rows = lemma_suite(ctx, 1);
  EXPECT_EQ(rows.size(), lemma_checks().size());
  for (const auto& r : rows) EXPECT_TRUE(r.passed()) << r.name << ": " << r.note;
  std::ostringstream a, b;
  write_lemma_csv(a, rows);
  write_lemma_csv(b, lemma_suite(ctx, 2));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Probes, SmallSuite) {
  const auto s = probe_suite(4, 6, 5, 7, 1.001, default_bump(), 0.05, 2);
  EXPECT_EQ(s.diagonal.size(), 3u);
  EXPECT_EQ(s.averaged.size(), 3u);
  EXPECT_EQ(s.autocorrelation.size(), 3u);
  ASSERT_FALSE(s.kernel.empty());
  for (const auto& r : s.kernel) {
    EXPECT_EQ(r.leakage, 0u);
    EXPECT_GT(r.c_size, 0.0);
  }
  for (const auto& r : s.diagonal) EXPECT_LT(r.recon_err, 1e-8);
  for (const auto& r : s.autocorrelation) EXPECT_GT(r.normalized_sup, 0.0);
  EXPECT_EQ(dyadic_range(2, 4), (std::vector<Site>{4, 8, 16}));
  EXPECT_EQ(column_spread(std::vector<double>{1.0, 3.0}, [](double v) { return v; }), 3.0);
}
