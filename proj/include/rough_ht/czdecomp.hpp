#pragma once

// Calderon-Zygmund decomposition on the 0-anchored dyadic grid of Z, the
// small-cube purge, size-classed cube families and the bad/good functions
// built from them.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rough_ht/lattice.hpp"

namespace rough_ht {

struct CZDecomposition {
  double lambda = 0.0;
  IntervalFamily cubes;
  std::vector<double> averages;  ///< parallel to cubes
  double mass = 0.0;             ///< sum of f over the whole line
};

namespace detail {

struct PrefixMass {
  const LatticeFunction& f;
  std::vector<double> prefix;

  explicit PrefixMass(const LatticeFunction& fn) : f(fn), prefix(fn.size() + 1, 0.0) {
    auto v = fn.values();
    for (std::size_t i = 0; i < v.size(); ++i) prefix[i + 1] = prefix[i] + v[i];
  }
  double mass(Site lo, Site hi) const {
    auto [a, b] = f.range(lo, hi);
    return prefix[b] - prefix[a];
  }
  bool touches(Site lo, Site hi) const {
    auto [a, b] = f.range(lo, hi);
    return b > a;
  }
};

inline void cz_descend(const PrefixMass& pm, const DyadicInterval& q, double lambda, std::vector<DyadicInterval>& cubes,
                       std::vector<double>& avgs) {
  if (q.scale() == 0) return;
  for (const auto& child : {q.left_child(), q.right_child()}) {
    if (!pm.touches(child.begin(), child.end())) continue;
    const double m = pm.mass(child.begin(), child.end());
    const double len = static_cast<double>(child.length());
    if (m > lambda * len) {
      cubes.push_back(child);
      avgs.push_back(m / len);
    } else {
      cz_descend(pm, child, lambda, cubes, avgs);
    }
  }
}

}  // namespace detail

/// Maximal dyadic intervals with average > lambda. Averages land in (lambda, 2 lambda].
/// Negative and nonnegative sites never share a 0-anchored dyadic interval, so each
/// half-line gets its own root, enlarged until its average is <= lambda.
inline CZDecomposition cz_decompose(const LatticeFunction& f, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("cz_decompose: lambda must be positive");
  for (double v : f.values())
    if (v < 0.0) throw std::invalid_argument("cz_decompose: f must be nonnegative");

  CZDecomposition dec;
  dec.lambda = lambda;
  dec.mass = f.sum();
  if (f.empty()) return dec;

  detail::PrefixMass pm(f);
  std::vector<DyadicInterval> cubes;
  std::vector<double> avgs;

  auto run_root = [&](bool negative) {
    const Site extent = negative ? -f.min_site() : f.max_site() + 1;
    if (extent <= 0) return;
    int k = 0;
    while ((Site{1} << k) < extent) ++k;
    auto root = [&](int s) { return negative ? DyadicInterval(s, -1) : DyadicInterval(s, 0); };
    while (pm.mass(root(k).begin(), root(k).end()) > lambda * static_cast<double>(root(k).length())) ++k;
    detail::cz_descend(pm, root(k), lambda, cubes, avgs);
  };
  run_root(true);
  run_root(false);

  // descend visits left before right, so cubes are already sorted
  dec.cubes = IntervalFamily(cubes);
  dec.averages.resize(dec.cubes.size());
  for (std::size_t i = 0; i < dec.cubes.size(); ++i) {
    const auto& q = dec.cubes[i];
    dec.averages[i] = pm.mass(q.begin(), q.end()) / static_cast<double>(q.length());
  }
  return dec;
}

/// f with every cube of length <= threshold zeroed.
inline LatticeFunction purge_small_cubes(const LatticeFunction& f, const CZDecomposition& dec, double threshold) {
  return f.filter([&](Site x, double) {
    const auto i = dec.cubes.find(x);
    return i < 0 || static_cast<double>(dec.cubes[static_cast<std::size_t>(i)].length()) > threshold;
  });
}

/// f restricted to the union of the cubes.
inline LatticeFunction restrict_to_cubes(const LatticeFunction& f, const IntervalFamily& cubes) {
  return f.filter([&](Site x, double) { return cubes.find(x) >= 0; });
}

struct BadIndex {
  Site A = 1;
  Site N = 2;
  int s = 0;
  int i = 1;

  /// i = 1 iff 2^s > A.
  bool valid() const {
    if (!is_dyadic(A) || !is_dyadic(N) || s < 0 || s > 62 || (i != 1 && i != 2)) return false;
    const bool big = (Site{1} << s) > A;
    return (i == 1) == big;
  }
  static BadIndex make(Site A, Site N, int s) { return {A, N, s, (Site{1} << s) > A ? 1 : 2}; }
};

/// Cube scales k (|Q| = 2^k) in the size class s of N: floor(alpha(n-s-1)) < k <= floor(alpha(n-s)),
/// n = log2 N. Consecutive classes tile k <= floor(alpha n), i.e. |Q| <= N^alpha.
struct ScaleRange {
  int lo = 0;  ///< inclusive
  int hi = -1; ///< inclusive
  bool empty() const { return hi < lo; }
  bool contains(int k) const { return lo <= k && k <= hi; }
};

inline ScaleRange size_class(Site N, int s, double alpha) {
  const int n = log2_exact(N);
  const auto top = static_cast<int>(std::floor(alpha * static_cast<double>(n - s) + 1e-12));
  const auto below = static_cast<int>(std::floor(alpha * static_cast<double>(n - s - 1) + 1e-12));
  return {std::max(below + 1, 0), top};
}

/// The size class s containing cubes of scale k (or -1 when 2^k > N^alpha).
inline int size_class_of(Site N, int k, double alpha) {
  const int n = log2_exact(N);
  for (int s = 0; s <= n + 1; ++s)
    if (size_class(N, s, alpha).contains(k)) return s;
  return -1;
}

inline IntervalFamily cube_family(const CZDecomposition& dec, const BadIndex& idx, double alpha) {
  if (!idx.valid()) throw std::invalid_argument("cube_family: invalid (A, N, s, i)");
  const auto cls = size_class(idx.N, idx.s, alpha);
  std::vector<DyadicInterval> out;
  if (cls.empty()) return IntervalFamily{};
  for (const auto& q : dec.cubes)
    if (cls.contains(q.scale())) out.push_back(q);
  return IntervalFamily(std::move(out));
}

/// sum_{Q in D} 1_Q band(f, lambda N, A) - E_Q band(f, lambda N, A)
inline LatticeFunction bad_part(const LatticeFunction& f, const CZDecomposition& dec, const BadIndex& idx, double lambda,
                                double alpha) {
  const auto fam = cube_family(dec, idx, alpha);
  if (fam.empty()) return {};
  const auto piece = restrict_to_cubes(band(f, lambda * static_cast<double>(idx.N), idx.A), fam);
  return piece - conditional_expectation(piece, fam);
}

/// f^{A,N}_{s,i} = sum_{Q in D} 1_Q band(f, lambda N, A)
inline LatticeFunction good_part(const LatticeFunction& f, const CZDecomposition& dec, const BadIndex& idx,
                                 double lambda, double alpha) {
  const auto fam = cube_family(dec, idx, alpha);
  if (fam.empty()) return {};
  return restrict_to_cubes(band(f, lambda * static_cast<double>(idx.N), idx.A), fam);
}

/// f^{A,N}_i = sum_{s >= 0} f^{A,N}_{s,i}
inline LatticeFunction good_sum(const LatticeFunction& f, const CZDecomposition& dec, Site A, Site N, int i,
                                double lambda, double alpha) {
  LatticeFunction out;
  const int n = log2_exact(N);
  for (int s = 0; s <= n; ++s) {
    const auto idx = BadIndex::make(A, N, s);
    if (idx.i != i) continue;
    out += good_part(f, dec, idx, lambda, alpha);
  }
  return out;
}

/// f^N_{s,2} = sum_{A >= 2^s} f^{A,N}_{s,2}
inline LatticeFunction good_sum_s2(const LatticeFunction& f, const CZDecomposition& dec, Site N, int s, double lambda,
                                   double alpha) {
  LatticeFunction out;
  for (Site A : active_bands(f, lambda * static_cast<double>(N))) {
    if (A < (Site{1} << s)) continue;
    out += good_part(f, dec, {A, N, s, 2}, lambda, alpha);
  }
  return out;
}

struct GoodParts {
  LatticeFunction single;  ///< f^{A,N}_{s,i}
  LatticeFunction summed;  ///< f^{A,N}_i
  LatticeFunction s2;      ///< f^N_{s,2}
};

inline GoodParts good_parts(const LatticeFunction& f, const CZDecomposition& dec, const BadIndex& idx, double lambda,
                            double alpha) {
  return {good_part(f, dec, idx, lambda, alpha), good_sum(f, dec, idx.A, idx.N, idx.i, lambda, alpha),
          good_sum_s2(f, dec, idx.N, idx.s, lambda, alpha)};
}

struct KeyCzReport {
  std::size_t checked_high = 0;
  std::size_t checked_band = 0;
  std::size_t violations_high = 0;  ///< cubes meeting {f >= lambda N} with |Q| < N/2
  std::size_t violations_band = 0;  ///< cubes meeting the A-band with |Q| < N/(4A)
  bool passed() const { return violations_high == 0 && violations_band == 0; }
};

/// Cubes that meet the large values of f are long: |Q| >= N/2 on {f >= lambda N},
/// |Q| >= N/(4A) on the A-band.
inline KeyCzReport verify_key_cz(const LatticeFunction& f, const CZDecomposition& dec, double lambda, Site N, Site A) {
  KeyCzReport rep;
  const double top = lambda * static_cast<double>(N);
  const auto high = truncate_split(f, top).high;
  const auto mid = band(f, top, A);
  auto check = [&](const LatticeFunction& g, double min_len, std::size_t& checked, std::size_t& bad) {
    std::ptrdiff_t last = -1;
    for (Site x : g.sites()) {
      const auto i = dec.cubes.find(x);
      if (i < 0 || i == last) continue;
      last = i;
      ++checked;
      if (static_cast<double>(dec.cubes[static_cast<std::size_t>(i)].length()) < min_len) ++bad;
    }
  };
  check(high, static_cast<double>(N) / 2.0, rep.checked_high, rep.violations_high);
  check(mid, static_cast<double>(N) / (4.0 * static_cast<double>(A)), rep.checked_band, rep.violations_band);
  return rep;
}

inline void write_cz_family(std::ostream& os, const CZDecomposition& dec) {
  char buf[64];
  for (std::size_t i = 0; i < dec.cubes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", dec.averages[i]);
    os << dec.cubes[i].scale() << ' ' << dec.cubes[i].index() << ' ' << buf << '\n';
  }
}

}  // namespace rough_ht
