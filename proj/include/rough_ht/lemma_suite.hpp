#pragma once

// Randomized runs of every executable lemma. Each check owns an RNG stream
// derived from (seed, check name), so the report is independent of scheduling.

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "rough_ht/czdecomp.hpp"
#include "rough_ht/experiment.hpp"
#include "rough_ht/kernels.hpp"
#include "rough_ht/operators.hpp"
#include "rough_ht/probes.hpp"
#include "rough_ht/squarefn.hpp"
#include "rough_ht/stopping.hpp"

namespace rough_ht {

struct LemmaResult {
  std::string name;
  bool theorem_backed = true;  ///< violations are bugs; otherwise the row is a report
  std::size_t instances = 0;
  std::size_t fired = 0;       ///< instances (or points) where the hypothesis held
  std::size_t violations = 0;
  std::size_t skipped = 0;
  std::string note;

  bool passed() const { return !theorem_backed || violations == 0; }
};

inline LemmaResult make_result(std::string name, bool theorem_backed) {
  LemmaResult r;
  r.name = std::move(name);
  r.theorem_backed = theorem_backed;
  return r;
}

struct LemmaContext {
  double alpha = 1.001;
  double theta = 0.8;
  double epsilon = 0.05;
  BumpFunction phi = default_bump();
  std::uint64_t seed = 1;
  int trials = 1000;
};

/// Nonnegative f with `count` random sites in [-half, half) and log-uniform heights.
inline LatticeFunction random_nonnegative(Rng& rng, Site half, int count, double lo = 1e-2, double hi = 1e2) {
  std::vector<std::pair<Site, double>> pts;
  for (int i = 0; i < count; ++i)
    pts.emplace_back(rng.integer(-half, half), std::exp(rng.uniform(std::log(lo), std::log(hi))));
  return LatticeFunction::from_pairs(std::move(pts));
}

/// Three scales, 2^8..2^10, at the default theta.
inline TransformConfig lemma_transform(const LemmaContext& ctx) {
  return TransformConfig(Site{1} << 10, ctx.theta, ctx.alpha, ctx.phi);
}

inline Site random_dyadic(Rng& rng, int lo, int hi) { return Site{1} << rng.integer(lo, hi + 1); }

namespace lemma {

inline LemmaResult key_cz(const LemmaContext& ctx) {
  auto r = make_result("key-cz", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  for (int t = 0; t < ctx.trials; ++t) {
    const auto f = random_nonnegative(rng, 512, static_cast<int>(rng.integer(1, 64)));
    const double lambda = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    const Site N = random_dyadic(rng, 1, 10);
    const Site A = random_dyadic(rng, 0, 6);
    const auto rep = verify_key_cz(f, cz_decompose(f, lambda), lambda, N, A);
    ++r.instances;
    r.fired += rep.checked_high + rep.checked_band;
    r.violations += rep.violations_high + rep.violations_band;
  }
  r.note = "cubes meeting {f >= lambda N} have |Q| >= N/2; the A-band, |Q| >= N/(4A)";
  return r;
}

/// Increments >= 0 and betas <= lambda0: a 4 lambda0 excursion is seen at a stopping time.
inline LemmaResult sparse_max(const LemmaContext& ctx) {
  auto r = make_result("sparse-max", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  for (int t = 0; t < ctx.trials; ++t) {
    const int D = static_cast<int>(rng.integer(1, 13));
    const double lambda0 = std::exp(rng.uniform(-3.0, 3.0));
    std::vector<Site> scales;
    std::vector<double> betas, inc;
    for (int k = 0; k < D; ++k) {
      scales.push_back(Site{1} << (k + 1));
      betas.push_back(lambda0 * rng.uniform());
      inc.push_back(lambda0 * 4.0 * rng.uniform());
    }
    const auto seq = stopping_times(scales, betas, lambda0);
    const auto p = sparse_max_at(inc, seq);
    ++r.instances;
    if (p.outcome != LemmaOutcome::Vacuous) ++r.fired;
    if (p.outcome == LemmaOutcome::Violated) ++r.violations;
  }
  r.note = "max_B |a_B| >= 4 lambda0 implies max_j |a_{N_j}| >= lambda0";
  return r;
}

inline LemmaResult stopping_strict(const LemmaContext& ctx) {
  auto r = make_result("stopping-strict", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  for (int t = 0; t < ctx.trials; ++t) {
    const int D = static_cast<int>(rng.integer(1, 16));
    const double lambda0 = std::exp(rng.uniform(-3.0, 3.0));
    std::vector<Site> scales;
    std::vector<double> betas;
    for (int k = 0; k < D; ++k) {
      scales.push_back(Site{1} << (k + 1));
      betas.push_back(rng.uniform() < 0.2 ? 0.0 : lambda0 * rng.uniform());
    }
    const auto seq = stopping_times(scales, betas, lambda0);
    ++r.instances;
    ++r.fired;
    if (!seq.strictly_increasing()) ++r.violations;
  }
  r.note = "beta_N <= lambda0 gives strictly increasing N_j up to the top scale";
  return r;
}

inline LemmaResult menshov(const LemmaContext& ctx) {
  auto r = make_result("menshov", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  for (int t = 0; t < ctx.trials; ++t) {
    std::vector<double> a(static_cast<std::size_t>(rng.integer(1, 1025)));
    const bool drift = rng.uniform() < 0.5;
    for (auto& v : a) v = rng.gaussian() + (drift ? 1.0 : 0.0);
    ++r.instances;
    ++r.fired;
    if (!menshov_check(a).holds()) ++r.violations;
  }
  r.note = "L = ceil(log2 max(D,2)), blocks at levels 0..L";
  return r;
}

inline LemmaResult block_telescoping(const LemmaContext& ctx) {
  auto r = make_result("block-telescoping", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  const int trials = std::max(1, ctx.trials / 10);
  for (int t = 0; t < trials; ++t) {
    std::vector<LatticeFunction> terms;
    const int n = static_cast<int>(rng.integer(1, 20));
    LatticeFunction total;
    for (int j = 0; j < n; ++j) {
      terms.push_back(random_nonnegative(rng, 32, 5));
      total += terms.back();
    }
    for (int k = 0; k <= 5; ++k) {
      LatticeFunction sum;
      for (const auto& b : dyadic_block_sums(terms, k)) sum += b;
      ++r.instances;
      ++r.fired;
      const auto d = sum - total;
      for (double v : d.values())
        if (std::fabs(v) > 1e-12 * std::max(1.0, lp_norm(total, kInfinity))) {
          ++r.violations;
          break;
        }
    }
  }
  r.note = "sum of level-k blocks equals the total at every k";
  return r;
}

/// Random CZ instance at a small M: f >= 0 with mass spread over a few hundred sites.
struct PipelineInstance {
  LatticeFunction f;
  double lambda = 0.0;
  CZDecomposition dec;
  LatticeFunction purged;
};

inline PipelineInstance random_pipeline(Rng& rng, const TransformConfig& tc, const LemmaContext& ctx) {
  PipelineInstance p;
  const Site M = tc.M();
  p.f = normalize_l1(random_nonnegative(rng, M, static_cast<int>(rng.integer(1, 24)), 1.0, 1e3));
  const double Nmin = static_cast<double>(tc.min_scale());
  p.lambda = std::exp(rng.uniform(std::log(0.05 / Nmin), std::log(4.0 / Nmin)));
  p.dec = cz_decompose(p.f, p.lambda);
  p.purged = purge_small_cubes(p.f, p.dec, std::pow(static_cast<double>(M), ctx.theta - 2.0 * ctx.epsilon));
  return p;
}

inline LemmaResult four_term(const LemmaContext& ctx) {
  auto r = make_result("four-term-split", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  const auto tc = lemma_transform(ctx);
  for (int t = 0; t < ctx.trials; ++t) {
    const auto p = random_pipeline(rng, tc, ctx);
    const auto split = four_term_split(p.purged, tc, p.lambda, p.dec.cubes, false);
    const double sup = std::max(lp_norm(p.purged, kInfinity), 1e-300);
    ++r.instances;
    for (const auto& s : split.per_scale) {
      ++r.fired;
      const auto d = s.reconstruction() - p.purged;
      for (double v : d.values())
        if (std::fabs(v) > 1e-12 * sup) {
          ++r.violations;
          break;
        }
    }
  }
  r.note = "(high - E high) + (low - E low) + E f0 = purged f0 at every scale";
  return r;
}

/// max over x in J and B of |sum_{N <= B} (mu_N * g_N(x) - offset(N index, x))|
inline double excursion_max(std::span<const LatticeFunction> good, const TransformConfig& tc, const DyadicInterval& J,
                            const std::function<double(std::size_t, Site)>& offset) {
  std::vector<LatticeFunction> conv;
  for (std::size_t i = 0; i < good.size(); ++i) conv.push_back(convolve(tc.mu_at(i), good[i]));
  double best = 0.0;
  for (Site x = J.begin(); x < J.end(); ++x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < conv.size(); ++i) {
      acc += conv[i](x) - offset(i, x);
      best = std::max(best, std::fabs(acc));
    }
  }
  return best;
}

/// lambda0 >= every beta, and near a quarter of the excursion so that the hypothesis fires often.
inline double pick_lambda0(Rng& rng, double beta_max, double excursion) {
  return std::max({beta_max, excursion / 4.0 * std::exp(rng.uniform(-0.7, 0.3)), 1e-300});
}

/// Good functions per scale for a random (A, i), with the averaged field and J grid.
struct GoodInstance {
  PipelineInstance p;
  Site A = 1;
  int i = 1;
  std::vector<LatticeFunction> good;
  IntervalFamily fam_J;
};

/// Draws pipelines until some (A, i) has a nonzero good function (at most 8 tries), then
/// picks one such pair at random.
inline GoodInstance random_good(Rng& rng, const TransformConfig& tc, const LemmaContext& ctx) {
  GoodInstance g;
  const int js = static_cast<int>(std::lround((ctx.theta - ctx.epsilon) * log2_exact(tc.M())));
  const auto W = static_cast<Site>(std::ceil(4.0 * std::pow(static_cast<double>(tc.M()), ctx.alpha)));
  g.fam_J = j_grid(js, {-W, W + 1});
  for (int attempt = 0; attempt < 8; ++attempt) {
    g.p = random_pipeline(rng, tc, ctx);
    std::vector<Site> bands;
    for (Site N : tc.scales())
      for (Site A : active_bands(g.p.purged, g.p.lambda * static_cast<double>(N))) bands.push_back(A);
    std::sort(bands.begin(), bands.end());
    bands.erase(std::unique(bands.begin(), bands.end()), bands.end());
    std::vector<std::pair<std::pair<Site, int>, std::vector<LatticeFunction>>> live;
    for (Site A : bands)
      for (int i = 1; i <= 2; ++i) {
        std::vector<LatticeFunction> good;
        bool any = false;
        for (Site N : tc.scales()) {
          good.push_back(good_sum(g.p.purged, g.p.dec, A, N, i, g.p.lambda, ctx.alpha));
          any = any || !good.back().empty();
        }
        if (any) live.push_back({{A, i}, std::move(good)});
      }
    if (live.empty()) continue;
    auto& pick = live[static_cast<std::size_t>(rng.integer(0, static_cast<Site>(live.size())))];
    g.A = pick.first.first;
    g.i = pick.first.second;
    g.good = std::move(pick.second);
    return g;
  }
  g.good.assign(tc.scales().size(), LatticeFunction{});
  return g;
}

inline LemmaResult beta_constancy(const LemmaContext& ctx) {
  auto r = make_result("beta-constancy", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  const auto tc = lemma_transform(ctx);
  const int trials = ctx.trials;
  for (int t = 0; t < trials; ++t) {
    const auto g = random_good(rng, tc, ctx);
    const AveragedField field(g.good, g.p.dec.cubes, tc);
    ++r.instances;
    for (std::size_t n = 0; n < field.size(); ++n) {
      const auto avg = conditional_expectation(field.field(n), g.fam_J);
      for (const auto& J : g.fam_J) {
        const double beta = field.betas_on(J)[n];
        const double first = avg(J.begin());
        ++r.fired;
        bool bad = std::fabs(first - beta) > 1e-12 * std::max(std::fabs(beta), 1e-300);
        for (Site x = J.begin(); x < J.end() && !bad; ++x) bad = avg(x) != first;
        if (bad) ++r.violations;
      }
    }
  }
  r.note = "E_J F_N is bitwise constant on each J and equals the J-mean beta_N";
  return r;
}

inline LemmaResult exceptional_whole_j(const LemmaContext& ctx) {
  auto r = make_result("exceptional-whole-J", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  const auto tc = lemma_transform(ctx);
  const int trials = ctx.trials;
  for (int t = 0; t < trials; ++t) {
    const auto g = random_good(rng, tc, ctx);
    const AveragedField field(g.good, g.p.dec.cubes, tc);
    const auto avg = averaged_beta_sum(field, g.fam_J);
    // thresholds spread around the typical level, from the A-form and s-form families
    const double total = avg.empty() ? 0.0 : lp_norm(avg, kInfinity);
    const double scale = total > 0.0 ? total : g.p.lambda;
    for (double u : {0.25, 0.5, 1.0}) {
      const auto set = exceptional_set(avg, g.fam_J, scale * u);
      ++r.instances;
      if (!set.intervals.empty()) ++r.fired;
      if (!set.whole_j() || !set.within_chebyshev()) ++r.violations;
    }
    std::map<Site, LatticeFunction> byA{{g.A, avg}};
    std::map<int, LatticeFunction> bys{{0, avg}};
    const auto sets = exceptional_sets(byA, bys, g.p.lambda, ctx.epsilon, g.fam_J);
    for (const auto& [A, s] : sets.by_A) {
      ++r.instances;
      if (!s.whole_j() || !s.within_chebyshev()) ++r.violations;
    }
    for (const auto& [s_, s] : sets.by_s) {
      ++r.instances;
      if (!s.whole_j() || !s.within_chebyshev()) ++r.violations;
    }
  }
  r.note = "exceptional sets are unions of whole J and obey the Chebyshev size bound";
  return r;
}

inline LemmaResult sparse_max_pipeline(const LemmaContext& ctx) {
  auto r = make_result("sparse-max-pipeline", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  const auto tc = lemma_transform(ctx);
  const int trials = std::max(1, ctx.trials / 4);
  for (int t = 0; t < trials; ++t) {
    const auto g = random_good(rng, tc, ctx);
    const AveragedField field(g.good, g.p.dec.cubes, tc);
    ++r.instances;
    for (const auto& J : g.fam_J) {
      const auto betas = field.betas_on(J);
      double bmax = 0.0;
      for (double b : betas) bmax = std::max(bmax, b);
      const double ex = excursion_max(g.good, tc, J, [&](std::size_t i, Site) { return betas[i]; });
      if (ex == 0.0) continue;
      const double lambda0 = pick_lambda0(rng, bmax, ex);
      const auto rep = check_sparse_max_lemma(g.good, betas, lambda0, tc, J);
      r.fired += rep.fired;
      r.violations += rep.violations;
      if (rep.skipped) ++r.skipped;
    }
  }
  r.note = "stopping-time implication on mu_N * f^{A,N}_i with beta_N = E_J F_{A,N}";
  return r;
}

/// The lambda0/8-or-ER alternative for the bad functions; branch counts are the content.
inline LemmaResult bad_max_alternative(const LemmaContext& ctx) {
  auto r = make_result("bad-max-alternative", false);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  const auto tc = lemma_transform(ctx);
  const int trials = std::max(1, ctx.trials / 10);
  std::size_t stop = 0, err = 0;
  for (int t = 0; t < trials; ++t) {
    const auto g = random_good(rng, tc, ctx);
    const AveragedField field(g.good, g.p.dec.cubes, tc);
    const auto er = error_function(field, g.fam_J, 1.0).er;
    ++r.instances;
    for (const auto& J : g.fam_J) {
      const auto betas = field.betas_on(J);
      double bmax = 0.0;
      for (double b : betas) bmax = std::max(bmax, b);
      const double ex = excursion_max(g.good, tc, J, [&](std::size_t i, Site x) { return field.field(i)(x); });
      if (ex == 0.0) continue;
      const double lambda0 = pick_lambda0(rng, bmax, ex);
      const auto rep = check_bad_max_alternative(g.good, field, er, lambda0, tc, J);
      r.fired += rep.fired;
      r.violations += rep.violations;
      stop += rep.stopping_branch;
      err += rep.error_branch;
      if (rep.skipped) ++r.skipped;
    }
  }
  r.note = "stopping branch " + std::to_string(stop) + ", ER branch " + std::to_string(err);
  return r;
}

inline LemmaResult kernel_support(const LemmaContext& ctx) {
  auto r = make_result("kernel-support", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  const int trials = std::max(1, ctx.trials / 10);
  for (int t = 0; t < trials; ++t) {
    const Site N1 = random_dyadic(rng, 2, 7), N2 = random_dyadic(rng, 2, 7);
    const auto cap = static_cast<Site>(2.0 * std::pow(static_cast<double>(std::min(N1, N2)), ctx.alpha));
    const Site len = rng.integer(1, cap + 1);
    const Site lo = rng.integer(-256, 256);
    const auto K = kernel(N1, N2, {lo, lo + len}, ctx.alpha, ctx.phi);
    ++r.instances;
    ++r.fired;
    r.violations += K.support_leakage(ctx.alpha) > 0;
  }
  r.note = "K vanishes outside |x_i - x_J| <= (2^alpha + 1) N_i^alpha for |J| <= 2 min(N)^alpha";
  return r;
}

inline LemmaResult kernel_quadratic_form(const LemmaContext& ctx) {
  auto r = make_result("kernel-quadratic-form", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  const int trials = std::max(1, ctx.trials / 10);
  for (int t = 0; t < trials; ++t) {
    const Site N1 = random_dyadic(rng, 2, 6), N2 = random_dyadic(rng, 2, 6);
    const Site len = random_dyadic(rng, 0, 5);
    const Site lo = rng.integer(-64, 64);
    const Interval J{lo, lo + len};
    LatticeFunction b1, b2;
    for (int k = 0; k < 12; ++k) {
      b1 += LatticeFunction::delta(rng.integer(-200, 0), rng.gaussian());
      b2 += LatticeFunction::delta(rng.integer(-200, 0), rng.gaussian());
    }
    const double direct = weighted_product_sum(N1, N2, J, b1, b2, ctx.alpha, ctx.phi);
    const double form = bilinear_form(kernel(N1, N2, J.reflected(), ctx.alpha, ctx.phi), b1.reflected(), b2.reflected());
    ++r.instances;
    ++r.fired;
    const double scale = std::max({std::fabs(direct), std::fabs(form), 1e-300});
    if (std::fabs(direct - form) > 1e-10 * scale && std::fabs(direct - form) > 1e-300) ++r.violations;
  }
  r.note = "sum_J phi_J (mu*b1)(mu*b2) = <K b1~, b2~> on the reflected window";
  return r;
}

inline LemmaResult diagonal_reconstruction(const LemmaContext& ctx) {
  auto r = make_result("diagonal-reconstruction", true);
  for (Site N : dyadic_range(4, 8)) {
    const auto K = kernel(N, N, {0, N / 2}, ctx.alpha, ctx.phi);
    const auto split = diagonal_split(K, ctx.epsilon);
    const double sup = K.sup_abs();
    ++r.instances;
    ++r.fired;
    bool bad = false;
    for (Site x1 = K.rows.lo; x1 < K.rows.hi && !bad; ++x1)
      for (Site x2 = K.cols.lo; x2 < K.cols.hi && !bad; ++x2)
        bad = std::fabs(split.reconstruct(x1, x2) - K.at(x1, x2)) > 1e-8 * sup;
    r.violations += bad;
  }
  r.note = "smooth + err + diag delta_0 = K on the support rectangle";
  return r;
}

inline LemmaResult square_function_independence(const LemmaContext& ctx) {
  auto r = make_result("square-fn-S-independence", true);
  Rng rng(mix_seed(ctx.seed, fnv1a(r.name)));
  const auto tc = lemma_transform(ctx);
  const int trials = std::max(1, ctx.trials / 20);
  for (int t = 0; t < trials; ++t) {
    const auto g = random_good(rng, tc, ctx);
    BadFamily bad;
    for (Site N : tc.scales())
      for (int s = 0; s <= log2_exact(N); ++s) {
        const auto idx = BadIndex::make(g.A, N, s);
        if (idx.i != g.i) continue;
        auto b = bad_part(g.p.purged, g.p.dec, idx, g.p.lambda, ctx.alpha);
        if (!b.empty()) bad[{N, s}] = std::move(b);
      }
    const auto& J = g.fam_J[g.fam_J.size() / 2];
    const KernelConstants kc;
    std::vector<Site> S1{tc.min_scale() / 2, tc.M()};
    std::vector<Site> S2{tc.min_scale() / 2};
    for (Site N : tc.scales()) S2.push_back(N);
    const auto a = square_function_sides(J, bad, S1, ctx.alpha, ctx.phi, kc, ctx.epsilon);
    const auto b = square_function_sides(J, bad, S2, ctx.alpha, ctx.phi, kc, ctx.epsilon);
    ++r.instances;
    if (!bad.empty()) ++r.fired;
    if (a.d1 != b.d1 || a.d2 != b.d2 || a.d3 != b.d3) ++r.violations;
    const auto rc = block_refinement(J, bad, S1, ctx.alpha, ctx.phi);
    if (!rc.holds()) ++r.violations;
  }
  r.note = "D_I, D_II, D_III identical for two S lists; coarse LHS <= longest block x fine LHS";
  return r;
}

}  // namespace lemma

using LemmaCheck = std::function<LemmaResult(const LemmaContext&)>;

inline const std::vector<LemmaCheck>& lemma_checks() {
  static const std::vector<LemmaCheck> checks{
      lemma::key_cz,          lemma::sparse_max,          lemma::stopping_strict,
      lemma::menshov,         lemma::block_telescoping,   lemma::four_term,
      lemma::beta_constancy,  lemma::exceptional_whole_j, lemma::sparse_max_pipeline,
      lemma::bad_max_alternative, lemma::kernel_support,  lemma::kernel_quadratic_form,
      lemma::diagonal_reconstruction, lemma::square_function_independence};
  return checks;
}

inline std::vector<LemmaResult> lemma_suite(const LemmaContext& ctx, unsigned workers) {
  const auto& checks = lemma_checks();
  return parallel_map(checks.size(), workers, [&](std::size_t i) { return checks[i](ctx); });
}

inline LemmaContext lemma_context(const ExperimentConfig& cfg) {
  cfg.validate();
  return {cfg.alpha, cfg.theta, cfg.epsilon, cfg.phi(), cfg.seeds.front(), cfg.trials};
}

inline void write_lemma_csv(std::ostream& os, const std::vector<LemmaResult>& rows) {
  os << "lemma,theorem_backed,instances,fired,violations,skipped,status,note\r\n";
  for (const auto& r : rows)
    os << csv_field(r.name) << ',' << (r.theorem_backed ? 1 : 0) << ',' << r.instances << ',' << r.fired << ','
       << r.violations << ',' << r.skipped << ',' << (r.passed() ? "pass" : "FAIL") << ',' << csv_field(r.note)
       << "\r\n";
}

}  // namespace rough_ht
