#pragma once

// Maximal partial sums against dyadic-block square functions, and the two
// sides of the square-function estimate over a window J.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rough_ht/convolution.hpp"
#include "rough_ht/kernels.hpp"
#include "rough_ht/lattice.hpp"
#include "rough_ht/measures.hpp"

namespace rough_ht {

struct BlockSquareReport {
  std::size_t D = 0;
  int L = 0;
  std::vector<double> level_sums;  ///< level_sums[k] = sum_s |block(k, s)|^2, k = 0..L
  double lhs = 0.0;                ///< max_i |sum_{j <= i} a_j|^2
  double rhs = 0.0;                ///< L * sum_k level_sums[k]

  bool holds() const { return lhs <= rhs * (1.0 + 1e-12); }
};

inline int menshov_levels(std::size_t D) {
  int L = 0;
  while ((std::size_t{1} << L) < std::max<std::size_t>(D, 2)) ++L;
  return L;
}

/// Blocks at level k are 2^k s < j <= 2^k (s+1), j = 1..D.
inline BlockSquareReport menshov_check(std::span<const double> a) {
  if (a.empty()) throw std::invalid_argument("menshov_check: need D >= 1");
  BlockSquareReport r;
  r.D = a.size();
  r.L = menshov_levels(r.D);
  double acc = 0.0;
  for (double v : a) {
    acc += v;
    r.lhs = std::max(r.lhs, acc * acc);
  }
  double total = 0.0;
  for (int k = 0; k <= r.L; ++k) {
    const std::size_t w = std::size_t{1} << k;
    double level = 0.0;
    for (std::size_t start = 0; start < r.D; start += w) {
      double b = 0.0;
      for (std::size_t j = start; j < std::min(start + w, r.D); ++j) b += a[j];
      level += b * b;
    }
    r.level_sums.push_back(level);
    total += level;
  }
  r.rhs = static_cast<double>(r.L) * total;
  return r;
}

/// Pointwise sums of terms over the blocks 2^k s < j <= 2^k (s+1) (terms indexed from j = 1).
inline std::vector<LatticeFunction> dyadic_block_sums(std::span<const LatticeFunction> terms, int k) {
  if (k < 0) throw std::invalid_argument("dyadic_block_sums: k must be nonnegative");
  std::vector<LatticeFunction> out;
  const std::size_t w = k >= 62 ? terms.size() : std::min(terms.size(), std::size_t{1} << k);
  for (std::size_t start = 0; start < terms.size(); start += std::max<std::size_t>(w, 1)) {
    LatticeFunction b;
    for (std::size_t j = start; j < std::min(start + w, terms.size()); ++j) b += terms[j];
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Bad parts b^{A,N}_{s,i} for a fixed (A, i), keyed by (N, s).
using BadFamily = std::map<std::pair<Site, int>, LatticeFunction>;

/// Empirical constants standing in for C, delta of the kernel estimates.
struct KernelConstants {
  double c_offdiag = 1.0;  ///< size/Hoelder constant
  double delta = 0.5;      ///< Hoelder exponent
  double c_diag = 1.0;     ///< |C_{N,J}| N^{1+alpha} / |J|
};

struct SquareFunctionSides {
  double lhs = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
  double ratio() const {
    const double rhs = d1 + d2 + d3;
    return rhs > 0.0 ? lhs / rhs : 0.0;
  }
};

/// The member of {dyadic I : 8 N^alpha <= |I| < 16 N^alpha} containing x.
inline DyadicInterval j_family_member(Site N, double alpha, Site x) {
  const double target = 8.0 * std::pow(static_cast<double>(N), alpha);
  int k = 0;
  while (static_cast<double>(Site{1} << k) < target) ++k;
  return DyadicInterval::containing(x, k);
}

/// I*: three times I, concentric.
inline Interval enlarged(const DyadicInterval& I) { return I.dilated(3); }

inline double l1_on(const LatticeFunction& f, Interval I) {
  double s = 0.0;
  auto [a, b] = f.range(I.lo, I.hi);
  for (std::size_t k = a; k < b; ++k) s += std::fabs(f.values()[k]);
  return s;
}

inline double l2sq_on(const LatticeFunction& f, Interval I) {
  double s = 0.0;
  auto [a, b] = f.range(I.lo, I.hi);
  for (std::size_t k = a; k < b; ++k) s += f.values()[k] * f.values()[k];
  return s;
}

/// sum_{x2} |sum_{x1} E(x1, x2) b1(x1)| |b2(x2)|
inline double abs_pairing(const BilinearKernel& E, const LatticeFunction& b1, const LatticeFunction& b2) {
  double s = 0.0;
  for (Site x2 = E.cols.lo; x2 < E.cols.hi; ++x2) {
    const double w = b2(x2);
    if (w == 0.0) continue;
    double e = 0.0;
    auto [a, b] = b1.range(E.rows.lo, E.rows.hi);
    for (std::size_t k = a; k < b; ++k) e += E.at(b1.sites()[k], x2) * b1.values()[k];
    s += std::fabs(e) * std::fabs(w);
  }
  return s;
}

/// LHS = sum_{y in J} phi_J(y) sum_j |sum_s sum_{S_j < N <= S_{j+1}} mu_N * b_{N,s}(y)|^2 and the
/// three right-hand terms. The error term uses the diagonal split of K_{N,N} on the reflected window
/// applied to reflected bad parts, the form in which it enters the quadratic expansion.
inline SquareFunctionSides square_function_sides(const DyadicInterval& J, const BadFamily& bad,
                                                 std::span<const Site> S, double alpha, const BumpFunction& phi,
                                                 const KernelConstants& kc, double epsilon, bool with_err = true) {
  for (std::size_t j = 1; j < S.size(); ++j)
    if (S[j] <= S[j - 1]) throw std::invalid_argument("square_function_sides: S must increase");
  SquareFunctionSides out;
  const Interval Jw = J.interval();

  // mu_N * b_{N,s} for every key, summed over s per N
  std::map<Site, LatticeFunction> per_scale;
  for (const auto& [key, b] : bad) {
    if (b.empty()) continue;
    per_scale[key.first] += convolve(mu(key.first, alpha, phi), b, ConvolutionMode::Direct);
  }
  for (std::size_t j = 0; j + 1 < S.size(); ++j) {
    LatticeFunction block;
    for (const auto& [N, g] : per_scale)
      if (S[j] < N && N <= S[j + 1]) block += g;
    for (Site y = Jw.lo; y < Jw.hi; ++y) {
      const double v = block(y);
      out.lhs += window_weight(phi, Jw, y) * v * v;
    }
  }

  const double lenJ = static_cast<double>(Jw.length());
  for (const auto& [k1, b1] : bad) {
    const auto [N1, s1] = k1;
    const Interval I1 = enlarged(j_family_member(N1, alpha, J.begin()));
    const double n1 = l1_on(b1, I1);
    for (const auto& [k2, b2] : bad) {
      const auto [N2, s2] = k2;
      if (N2 > N1) continue;
      const Interval I2 = enlarged(j_family_member(N2, alpha, J.begin()));
      out.d1 += kc.c_offdiag * std::pow(2.0, -kc.delta * (s1 + s2)) * lenJ /
                std::pow(static_cast<double>(N1) * static_cast<double>(N2), alpha) * n1 * l1_on(b2, I2);
    }
    out.d2 += kc.c_diag * lenJ / std::pow(static_cast<double>(N1), alpha + 1.0) * l2sq_on(b1, I1);
  }

  if (with_err) {
    std::map<Site, std::vector<LatticeFunction>> by_scale;
    for (const auto& [key, b] : bad)
      if (!b.empty()) by_scale[key.first].push_back(b.reflected());
    for (const auto& [N, parts] : by_scale) {
      const auto split = diagonal_split(kernel(N, N, Jw.reflected(), alpha, phi), epsilon);
      for (const auto& p1 : parts)
        for (const auto& p2 : parts) out.d3 += abs_pairing(split.err, p1, p2);
    }
  }
  return out;
}

/// sum_j |coarse block_j|^2 <= (longest block) sum |fine terms|^2, pointwise in y and then
/// weighted over J: the Cauchy-Schwarz form of block refinement.
struct RefinementCheck {
  double coarse = 0.0;
  double fine = 0.0;
  std::size_t longest_block = 0;
  bool holds() const { return coarse <= static_cast<double>(longest_block) * fine * (1.0 + 1e-12) + 1e-300; }
};

inline RefinementCheck block_refinement(const DyadicInterval& J, const BadFamily& bad, std::span<const Site> S,
                                        double alpha, const BumpFunction& phi) {
  RefinementCheck rc;
  std::vector<Site> fine;
  for (const auto& [key, b] : bad) fine.push_back(key.first);
  std::sort(fine.begin(), fine.end());
  fine.erase(std::unique(fine.begin(), fine.end()), fine.end());
  if (fine.empty()) return rc;
  std::vector<Site> Sf{fine.front() / 2};
  Sf.insert(Sf.end(), fine.begin(), fine.end());
  const KernelConstants kc;
  rc.coarse = square_function_sides(J, bad, S, alpha, phi, kc, 0.0, false).lhs;
  rc.fine = square_function_sides(J, bad, Sf, alpha, phi, kc, 0.0, false).lhs;
  for (std::size_t j = 0; j + 1 < S.size(); ++j) {
    std::size_t n = 0;
    for (Site N : fine)
      if (S[j] < N && N <= S[j + 1]) ++n;
    rc.longest_block = std::max(rc.longest_block, n);
  }
  return rc;
}

}  // namespace rough_ht
