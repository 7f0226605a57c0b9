#pragma once

// Stopping times over dyadic scales, the J-averaged comparison sequence beta_N,
// the error function ER, exceptional sets, and executable forms of the
// sparse-maximal implications built on them.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rough_ht/convolution.hpp"
#include "rough_ht/czdecomp.hpp"
#include "rough_ht/lattice.hpp"
#include "rough_ht/operators.hpp"

namespace rough_ht {

struct StoppingSequence {
  double lambda0 = 0.0;
  std::vector<Site> scales;  ///< increasing dyadic scales carrying the betas
  std::vector<double> betas;
  /// times[j-1] = N_j = max{2^k : sum_{N <= 2^k} beta_N <= j lambda0}; nullopt when no such scale.
  std::vector<std::optional<Site>> times;
  int j_max = 0;

  Site top() const { return scales.back(); }

  /// N_j strictly increases until it reaches the top scale and then stays there.
  bool strictly_increasing() const {
    for (std::size_t j = 0; j < times.size(); ++j) {
      if (!times[j]) return false;
      if (j + 1 < times.size()) {
        if (!times[j + 1]) return false;
        if (*times[j] == top()) {
          if (*times[j + 1] != top()) return false;
        } else if (*times[j + 1] <= *times[j]) {
          return false;
        }
      }
    }
    return true;
  }

  /// Distinct existing stopping scales, increasing.
  std::vector<Site> distinct_times() const {
    std::vector<Site> out;
    for (const auto& t : times)
      if (t && (out.empty() || out.back() != *t)) out.push_back(*t);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

/// j runs over 1..ceil(sum beta / lambda0) + 1; beyond that N_j is the top scale.
inline StoppingSequence stopping_times(std::span<const Site> scales, std::span<const double> betas, double lambda0) {
  if (!(lambda0 > 0.0)) throw std::invalid_argument("stopping_times: lambda0 must be positive");
  if (scales.size() != betas.size() || scales.empty())
    throw std::invalid_argument("stopping_times: need one beta per scale");
  StoppingSequence seq;
  seq.lambda0 = lambda0;
  seq.scales.assign(scales.begin(), scales.end());
  seq.betas.assign(betas.begin(), betas.end());
  std::vector<double> cum(betas.size());
  double total = 0.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (betas[i] < 0.0) throw std::invalid_argument("stopping_times: betas must be nonnegative");
    total += betas[i];
    cum[i] = total;
  }
  seq.j_max = static_cast<int>(std::ceil(total / lambda0)) + 1;
  for (int j = 1; j <= seq.j_max; ++j) {
    const double budget = static_cast<double>(j) * lambda0;
    std::optional<Site> t;
    for (std::size_t i = 0; i < cum.size(); ++i)
      if (cum[i] <= budget) t = scales[i];
    seq.times.push_back(t);
  }
  return seq;
}

/// Scales with beta_N <= lambda0 (C1) and beta_N > lambda0 (C2).
struct ScaleSplitByBeta {
  std::vector<Site> small;
  std::vector<Site> large;
};

inline ScaleSplitByBeta split_by_beta(const StoppingSequence& seq) {
  ScaleSplitByBeta out;
  for (std::size_t i = 0; i < seq.scales.size(); ++i)
    (seq.betas[i] <= seq.lambda0 ? out.small : out.large).push_back(seq.scales[i]);
  return out;
}

// ---------------------------------------------------------------------------

/// F_N = mu_N * E_Q g_N for every scale N of cfg, where g_N is the N-th good function.
class AveragedField {
 public:
  AveragedField(std::span<const LatticeFunction> good_by_scale, const IntervalFamily& cubes,
                const TransformConfig& cfg) {
    if (good_by_scale.size() != cfg.scales().size())
      throw std::invalid_argument("AveragedField: one good function per scale");
    scales_.assign(cfg.scales().begin(), cfg.scales().end());
    for (std::size_t i = 0; i < good_by_scale.size(); ++i) {
      expected_.push_back(conditional_expectation(good_by_scale[i], cubes));
      fields_.push_back(convolve(cfg.mu_at(i), expected_.back()));
    }
  }

  std::span<const Site> scales() const { return scales_; }
  const LatticeFunction& field(std::size_t i) const { return fields_[i]; }
  const LatticeFunction& expected_good(std::size_t i) const { return expected_[i]; }
  std::size_t size() const { return fields_.size(); }

  /// beta_N = average of F_N over J, for every N.
  std::vector<double> betas_on(const DyadicInterval& J) const {
    std::vector<double> out;
    for (const auto& F : fields_) out.push_back(F.sum_over(J.begin(), J.end()) / static_cast<double>(J.length()));
    return out;
  }

  /// Hull of all F_N supports.
  Interval hull() const {
    Interval h{};
    bool any = false;
    for (const auto& F : fields_) {
      if (F.empty()) continue;
      if (!any) {
        h = F.support_hull();
        any = true;
      } else {
        h.lo = std::min(h.lo, F.min_site());
        h.hi = std::max(h.hi, F.max_site() + 1);
      }
    }
    return h;
  }

 private:
  std::vector<Site> scales_;
  std::vector<LatticeFunction> expected_;
  std::vector<LatticeFunction> fields_;
};

/// beta_N = E_J F_{A,N}, constant on J.
inline std::vector<double> build_beta(std::span<const LatticeFunction> good_by_scale, const CZDecomposition& dec,
                                      const DyadicInterval& J, const TransformConfig& cfg) {
  return AveragedField(good_by_scale, dec.cubes, cfg).betas_on(J);
}

/// Equal-length J grid covering `window`, |J| = 2^scale.
inline IntervalFamily j_grid(int scale, Interval window) { return dyadic_grid(scale, window); }

/// sum_N E_{J} F_N, pointwise.
inline LatticeFunction averaged_beta_sum(const AveragedField& field, const IntervalFamily& fam_J) {
  LatticeFunction out;
  for (std::size_t i = 0; i < field.size(); ++i) out += conditional_expectation(field.field(i), fam_J);
  return out;
}

struct ErrorFunctionReport {
  LatticeFunction er;   ///< sum_N |F_N - E_J F_N|
  double l1 = 0.0;
  double ratio = 0.0;   ///< ||ER||_1 / ||f_0||_1
};

inline ErrorFunctionReport error_function(const AveragedField& field, const IntervalFamily& fam_J, double f0_l1) {
  ErrorFunctionReport rep;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const auto& F = field.field(i);
    rep.er += (F - conditional_expectation(F, fam_J)).abs();
  }
  rep.l1 = lp_norm(rep.er, 1.0);
  rep.ratio = f0_l1 > 0.0 ? rep.l1 / f0_l1 : 0.0;
  return rep;
}

inline ErrorFunctionReport error_function(std::span<const LatticeFunction> good_by_scale, const CZDecomposition& dec,
                                          const IntervalFamily& fam_J, const TransformConfig& cfg, double f0_l1) {
  return error_function(AveragedField(good_by_scale, dec.cubes, cfg), fam_J, f0_l1);
}

// ---------------------------------------------------------------------------

/// {x : averaged(x) >= threshold}, decided per J, together with the pointwise audit.
struct ExceptionalSet {
  double threshold = 0.0;
  std::vector<DyadicInterval> intervals;  ///< the J's that make up the set
  Site size = 0;
  double chebyshev_bound = 0.0;  ///< ||averaged||_1 / threshold
  std::size_t pointwise_mismatches = 0;  ///< x whose own test disagrees with its J's verdict

  bool whole_j() const { return pointwise_mismatches == 0; }
  bool within_chebyshev() const { return static_cast<double>(size) <= chebyshev_bound * (1.0 + 1e-12); }
};

inline ExceptionalSet exceptional_set(const LatticeFunction& averaged, const IntervalFamily& fam_J, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("exceptional_set: threshold must be positive");
  ExceptionalSet out;
  out.threshold = threshold;
  double mass = 0.0;
  for (double v : averaged.values()) mass += std::fabs(v);
  out.chebyshev_bound = mass / threshold;
  for (const auto& J : fam_J) {
    const bool in = averaged(J.begin()) >= threshold;
    if (in) {
      out.intervals.push_back(J);
      out.size += J.length();
    }
    for (Site x = J.begin(); x < J.end(); ++x)
      if ((averaged(x) >= threshold) != in) ++out.pointwise_mismatches;
  }
  // points outside every J are never in the set; audit them too
  for (std::size_t k = 0; k < averaged.size(); ++k) {
    const Site x = averaged.sites()[k];
    if (fam_J.find(x) < 0 && averaged.values()[k] >= threshold) ++out.pointwise_mismatches;
  }
  return out;
}

struct ExceptionalSets {
  std::map<Site, ExceptionalSet> by_A;  ///< threshold lambda A^2
  std::map<int, ExceptionalSet> by_s;   ///< threshold lambda 2^{s eps}
};

inline ExceptionalSets exceptional_sets(const std::map<Site, LatticeFunction>& averaged_by_A,
                                        const std::map<int, LatticeFunction>& averaged_by_s, double lambda,
                                        double epsilon, const IntervalFamily& fam_J) {
  ExceptionalSets out;
  for (const auto& [A, avg] : averaged_by_A)
    out.by_A.emplace(A, exceptional_set(avg, fam_J, lambda * static_cast<double>(A) * static_cast<double>(A)));
  for (const auto& [s, avg] : averaged_by_s)
    out.by_s.emplace(s, exceptional_set(avg, fam_J, lambda * std::pow(2.0, s * epsilon)));
  return out;
}

// ---------------------------------------------------------------------------

enum class LemmaOutcome { Vacuous, Holds, Violated };

struct SparseMaxPoint {
  double max_all = 0.0;       ///< max_B |a_B|
  double max_stopping = 0.0;  ///< max_j |a_{N_j}|
  LemmaOutcome outcome = LemmaOutcome::Vacuous;
};

/// a_B = sum_{N <= B} (increment_N - beta_N). If max_B |a_B| >= 4 lambda0, then
/// max_j |a_{N_j}| >= lambda0 must hold.
inline SparseMaxPoint sparse_max_at(std::span<const double> increments, const StoppingSequence& seq) {
  SparseMaxPoint p;
  std::vector<double> a(increments.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < increments.size(); ++i) {
    acc += increments[i] - seq.betas[i];
    a[i] = acc;
    p.max_all = std::max(p.max_all, std::fabs(acc));
  }
  for (const auto& t : seq.times) {
    if (!t) continue;
    const auto i = static_cast<std::size_t>(std::find(seq.scales.begin(), seq.scales.end(), *t) - seq.scales.begin());
    p.max_stopping = std::max(p.max_stopping, std::fabs(a[i]));
  }
  if (p.max_all >= 4.0 * seq.lambda0) p.outcome = p.max_stopping >= seq.lambda0 ? LemmaOutcome::Holds : LemmaOutcome::Violated;
  return p;
}

struct SparseMaxReport {
  std::size_t points = 0;
  std::size_t fired = 0;       ///< points where the 4 lambda0 hypothesis held
  std::size_t violations = 0;
  bool skipped = false;        ///< some beta_N > lambda0: hypothesis of the lemma fails
  std::size_t large_scales = 0;  ///< |C2|
  int j_max = 0;
};

/// Runs the implication at every x in J with increments mu_N * g_N(x).
inline SparseMaxReport check_sparse_max_lemma(std::span<const LatticeFunction> good_by_scale,
                                              std::span<const double> betas, double lambda0,
                                              const TransformConfig& cfg, const DyadicInterval& J) {
  SparseMaxReport rep;
  const auto seq = stopping_times(cfg.scales(), betas, lambda0);
  rep.j_max = seq.j_max;
  rep.large_scales = split_by_beta(seq).large.size();
  if (rep.large_scales > 0) {
    rep.skipped = true;
    return rep;
  }
  std::vector<LatticeFunction> conv;
  for (std::size_t i = 0; i < good_by_scale.size(); ++i) conv.push_back(convolve(cfg.mu_at(i), good_by_scale[i]));
  std::vector<double> inc(conv.size());
  for (Site x = J.begin(); x < J.end(); ++x) {
    for (std::size_t i = 0; i < conv.size(); ++i) inc[i] = conv[i](x);
    const auto p = sparse_max_at(inc, seq);
    ++rep.points;
    if (p.outcome != LemmaOutcome::Vacuous) ++rep.fired;
    if (p.outcome == LemmaOutcome::Violated) ++rep.violations;
  }
  return rep;
}

struct BadMaxReport {
  std::size_t points = 0;
  std::size_t fired = 0;          ///< max_B |sum_{N<=B} sum_s mu_N * b| >= 4 lambda0
  std::size_t stopping_branch = 0;  ///< conclusion max_j |...| >= lambda0 / 8
  std::size_t error_branch = 0;     ///< otherwise ER(x) >= lambda0
  std::size_t violations = 0;
  bool skipped = false;
};

/// The bad-function alternative: with sum_s mu_N * b_s = mu_N * g_N - F_N and stopping
/// times from beta = E_J F, a 4 lambda0 excursion forces lambda0/8 at a stopping time
/// or ER(x) >= lambda0.
inline BadMaxReport check_bad_max_alternative(std::span<const LatticeFunction> good_by_scale,
                                              const AveragedField& field, const LatticeFunction& er,
                                              double lambda0, const TransformConfig& cfg, const DyadicInterval& J) {
  BadMaxReport rep;
  const auto betas = field.betas_on(J);
  const auto seq = stopping_times(cfg.scales(), betas, lambda0);
  if (!split_by_beta(seq).large.empty()) {
    rep.skipped = true;
    return rep;
  }
  std::vector<LatticeFunction> conv;
  for (std::size_t i = 0; i < good_by_scale.size(); ++i) conv.push_back(convolve(cfg.mu_at(i), good_by_scale[i]));
  std::vector<std::size_t> stop_idx;
  for (const auto& t : seq.times)
    if (t) stop_idx.push_back(static_cast<std::size_t>(std::find(seq.scales.begin(), seq.scales.end(), *t) - seq.scales.begin()));
  std::vector<double> a(conv.size());
  for (Site x = J.begin(); x < J.end(); ++x) {
    double acc = 0.0, max_all = 0.0;
    for (std::size_t i = 0; i < conv.size(); ++i) {
      acc += conv[i](x) - field.field(i)(x);
      a[i] = acc;
      max_all = std::max(max_all, std::fabs(acc));
    }
    ++rep.points;
    if (max_all < 4.0 * lambda0) continue;
    ++rep.fired;
    double max_stop = 0.0;
    for (auto i : stop_idx) max_stop = std::max(max_stop, std::fabs(a[i]));
    if (max_stop >= lambda0 / 8.0)
      ++rep.stopping_branch;
    else if (er(x) >= lambda0)
      ++rep.error_branch;
    else
      ++rep.violations;
  }
  return rep;
}

}  // namespace rough_ht
