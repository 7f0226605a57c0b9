#pragma once

// The truncated rough Hilbert transform H_M f = sum_{N in scales} (mu_N - mu_N~) * f,
// its maximal truncation over dyadic cut-offs B, level sets and weak-type ratios,
// and the four-term splitting of H_M^* f_0 at height lambda.

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "rough_ht/convolution.hpp"
#include "rough_ht/lattice.hpp"
#include "rough_ht/measures.hpp"

namespace rough_ht {

/// Parameters of H_M plus the measures for every scale N in
/// {dyadic N : 2^ceil(theta log2 M) <= N <= M}, built once.
class TransformConfig {
 public:
  TransformConfig(Site M, double theta, double alpha, BumpFunction phi = default_bump())
      : M_(M), theta_(theta), alpha_(alpha), phi_(std::move(phi)) {
    if (!is_dyadic(M) || M < 2) throw std::invalid_argument("TransformConfig: M must be a dyadic integer >= 2");
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("TransformConfig: theta must lie in (0,1)");
    if (!(alpha > 1.0)) throw std::invalid_argument("TransformConfig: alpha must exceed 1");
    const int logM = log2_exact(M);
    // theta*log2(M) can land a few ulps above an integer; treat that as the integer.
    int lo = static_cast<int>(std::ceil(theta * logM - 1e-9));
    lo = std::max(lo, 1);
    for (int k = lo; k <= logM; ++k) {
      const Site N = Site{1} << k;
      scales_.push_back(N);
      mu_.push_back(std::make_shared<const PointMassMeasure>(mu(N, alpha, phi_)));
      nu_.push_back(std::make_shared<const PointMassMeasure>(difference(*mu_.back(), reflect(*mu_.back()))));
    }
  }

  Site M() const { return M_; }
  double theta() const { return theta_; }
  double alpha() const { return alpha_; }
  const BumpFunction& phi() const { return phi_; }
  std::span<const Site> scales() const { return scales_; }
  Site min_scale() const { return scales_.front(); }

  std::size_t scale_index(Site N) const {
    auto it = std::find(scales_.begin(), scales_.end(), N);
    if (it == scales_.end()) throw std::invalid_argument("scale " + std::to_string(N) + " is outside the scale set");
    return static_cast<std::size_t>(it - scales_.begin());
  }
  const PointMassMeasure& mu_at(std::size_t i) const { return *mu_[i]; }
  const PointMassMeasure& nu_at(std::size_t i) const { return *nu_[i]; }
  const PointMassMeasure& measure(std::size_t i, bool antisymmetric) const {
    return antisymmetric ? nu_at(i) : mu_at(i);
  }

  /// Largest |site| reached by any measure.
  Site reach() const {
    const auto& top = *mu_.back();
    return top.empty() ? 0 : top.max_site();
  }

 private:
  Site M_;
  double theta_;
  double alpha_;
  BumpFunction phi_;
  std::vector<Site> scales_;
  std::vector<std::shared_ptr<const PointMassMeasure>> mu_;
  std::vector<std::shared_ptr<const PointMassMeasure>> nu_;
};

namespace detail {

/// Range covering every nu_N * g for g supported in `hull`.
inline Interval transform_range(const TransformConfig& cfg, Interval hull) {
  return {hull.lo - cfg.reach(), hull.hi + cfg.reach()};
}

inline Interval hull_of(std::span<const LatticeFunction* const> fs) {
  bool any = false;
  Interval h{};
  for (const auto* p : fs) {
    const auto& f = *p;
    if (f.empty()) continue;
    if (!any) {
      h = f.support_hull();
      any = true;
    } else {
      h.lo = std::min(h.lo, f.min_site());
      h.hi = std::max(h.hi, f.max_site() + 1);
    }
  }
  return h;
}

/// Running partial sums over scales with a pointwise running max of |.|.
/// inputs[i] is convolved with the i-th scale's measure; inputs may be shared.
inline LatticeFunction running_max(std::span<const LatticeFunction* const> inputs, const TransformConfig& cfg,
                                   bool antisymmetric, ConvolutionMode mode, LatticeFunction* final_sum = nullptr) {
  const Interval hull = hull_of(inputs);
  if (hull.empty()) {
    if (final_sum) *final_sum = {};
    return {};
  }
  const Interval range = transform_range(cfg, hull);
  DenseSignal acc(range);
  std::vector<double> best(acc.values.size(), 0.0);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& g = *inputs[i];
    if (g.empty()) continue;
    // Each term is materialised separately so the sum order matches the oracle.
    DenseSignal term(convolution_range(cfg.measure(i, antisymmetric), g));
    convolve_into(term, cfg.measure(i, antisymmetric), g, mode);
    const std::size_t shift = static_cast<std::size_t>(term.offset - acc.offset);
    for (std::size_t k = 0; k < term.values.size(); ++k) {
      if (term.values[k] == 0.0) continue;
      double& a = acc.values[shift + k];
      a += term.values[k];
    }
    for (std::size_t k = 0; k < best.size(); ++k) best[k] = std::max(best[k], std::fabs(acc.values[k]));
  }
  if (final_sum) *final_sum = acc.to_lattice();
  return LatticeFunction::from_dense(acc.offset, best);
}

}  // namespace detail

/// sum_{N in scales, N <= B} nu_N * f, with nu = mu - mu~ (antisymmetric) or mu.
inline LatticeFunction partial_sum(const LatticeFunction& f, Site B, const TransformConfig& cfg, bool antisymmetric = true,
                                   ConvolutionMode mode = ConvolutionMode::Auto) {
  const std::size_t last = cfg.scale_index(B);
  if (f.empty()) return {};
  DenseSignal acc(detail::transform_range(cfg, f.support_hull()));
  for (std::size_t i = 0; i <= last; ++i) {
    DenseSignal term(convolution_range(cfg.measure(i, antisymmetric), f));
    convolve_into(term, cfg.measure(i, antisymmetric), f, mode);
    const std::size_t shift = static_cast<std::size_t>(term.offset - acc.offset);
    for (std::size_t k = 0; k < term.values.size(); ++k)
      if (term.values[k] != 0.0) acc.values[shift + k] += term.values[k];
  }
  return acc.to_lattice();
}

/// H_M f
inline LatticeFunction transform(const LatticeFunction& f, const TransformConfig& cfg,
                                 ConvolutionMode mode = ConvolutionMode::Auto) {
  return partial_sum(f, cfg.scales().back(), cfg, true, mode);
}

/// H_M^* f = max_B |partial_sum(f, B)|, one pass over increasing N.
inline LatticeFunction h_max(const LatticeFunction& f, const TransformConfig& cfg,
                             ConvolutionMode mode = ConvolutionMode::Auto) {
  std::vector<const LatticeFunction*> inputs(cfg.scales().size(), &f);
  return detail::running_max(inputs, cfg, true, mode);
}

/// Maximal truncation of per-scale inputs: max_B |sum_{N<=B} nu_N * g_N|.
inline LatticeFunction h_max_per_scale(std::span<const LatticeFunction> per_scale, const TransformConfig& cfg,
                                       bool antisymmetric = true, LatticeFunction* full_sum = nullptr,
                                       ConvolutionMode mode = ConvolutionMode::Auto) {
  if (per_scale.size() != cfg.scales().size()) throw std::invalid_argument("h_max_per_scale: one input per scale");
  std::vector<const LatticeFunction*> inputs;
  for (const auto& g : per_scale) inputs.push_back(&g);
  return detail::running_max(inputs, cfg, antisymmetric, mode, full_sum);
}

/// Recomputes every partial sum from scratch; quadratic in the number of scales.
inline LatticeFunction h_max_bruteforce(const LatticeFunction& f, const TransformConfig& cfg,
                                        ConvolutionMode mode = ConvolutionMode::Auto) {
  if (f.empty()) return {};
  const Interval range = detail::transform_range(cfg, f.support_hull());
  std::vector<double> best(static_cast<std::size_t>(range.length()), 0.0);
  for (Site B : cfg.scales()) {
    const auto s = partial_sum(f, B, cfg, true, mode);
    auto xs = s.sites();
    auto vs = s.values();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double& b = best[static_cast<std::size_t>(xs[i] - range.lo)];
      b = std::max(b, std::fabs(vs[i]));
    }
  }
  return LatticeFunction::from_dense(range.lo, best);
}

/// #{x : |g(x)| > lambda}
inline std::size_t level_set_size(const LatticeFunction& g, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("level_set_size: lambda must be positive");
  std::size_t n = 0;
  for (double v : g.values())
    if (std::fabs(v) > lambda) ++n;
  return n;
}

/// lambda |{H_M^* f > lambda}| / ||f||_1 for a precomputed maximal function.
inline double weak11_ratio_from(const LatticeFunction& hmax, double f_l1, double lambda) {
  if (!(f_l1 > 0.0)) throw std::invalid_argument("weak11_ratio: f must be nonzero");
  return lambda * static_cast<double>(level_set_size(hmax, lambda)) / f_l1;
}

inline double weak11_ratio(const LatticeFunction& f, const TransformConfig& cfg, double lambda) {
  const double l1 = lp_norm(f, 1.0);
  if (!(l1 > 0.0)) throw std::invalid_argument("weak11_ratio: f must be nonzero");
  return weak11_ratio_from(h_max(f, cfg), l1, lambda);
}

/// Components of f_0 at one scale N:
/// f_0 = (high - E high) + (low - E low) + E f_0, with high/low split at lambda N.
struct ScaleSplit {
  Site N = 0;
  LatticeFunction high;           ///< f_{0,inf}^{lambda N}
  LatticeFunction expected_high;  ///< E f_{0,inf}^{lambda N}
  LatticeFunction low_oscillation;  ///< f_0^{lambda N} - E f_0^{lambda N}
  LatticeFunction expected;       ///< E f_0

  LatticeFunction reconstruction() const { return high - expected_high + low_oscillation + expected; }
};

struct FourTermSplit {
  std::vector<ScaleSplit> per_scale;
  LatticeFunction G;  ///< G_M = sum_N nu_N * E f_{0,inf}^{lambda N}
};

inline FourTermSplit four_term_split(const LatticeFunction& f0, const TransformConfig& cfg, double lambda,
                                     const IntervalFamily& cubes, bool with_G = true) {
  if (!(lambda > 0.0)) throw std::invalid_argument("four_term_split: lambda must be positive");
  FourTermSplit out;
  const auto expected = conditional_expectation(f0, cubes);
  std::vector<LatticeFunction> eh;
  for (Site N : cfg.scales()) {
    auto parts = truncate_split(f0, lambda * static_cast<double>(N));
    ScaleSplit s;
    s.N = N;
    s.expected_high = conditional_expectation(parts.high, cubes);
    s.low_oscillation = parts.low - conditional_expectation(parts.low, cubes);
    s.high = std::move(parts.high);
    s.expected = expected;
    eh.push_back(s.expected_high);
    out.per_scale.push_back(std::move(s));
  }
  if (!with_G) return out;
  LatticeFunction sum;
  for (std::size_t i = 0; i < eh.size(); ++i) {
    if (eh[i].empty()) continue;
    sum += convolve(cfg.nu_at(i), eh[i]);
  }
  out.G = std::move(sum);
  return out;
}

/// The four maximal terms I..IV of the split, each max_B |sum_{N<=B} nu_N * component_N|.
struct FourTermMaxima {
  LatticeFunction term[4];
};

/// When `G` is given it receives the full sum of term II, i.e. G_M.
inline FourTermMaxima four_term_maxima(const FourTermSplit& split, const TransformConfig& cfg,
                                       LatticeFunction* G = nullptr) {
  FourTermMaxima out;
  std::vector<LatticeFunction> comp[4];
  for (const auto& s : split.per_scale) {
    comp[0].push_back(s.high);
    comp[1].push_back(s.expected_high);
    comp[2].push_back(s.low_oscillation);
    comp[3].push_back(s.expected);
  }
  for (int k = 0; k < 4; ++k) out.term[k] = h_max_per_scale(comp[k], cfg, true, k == 1 ? G : nullptr);
  return out;
}

}  // namespace rough_ht
