#pragma once

// Probe grids over dyadic scales: bilinear-kernel size and regularity, the
// diagonal split, the averaged kernel and the autocorrelation bound.

#include <chrono>
#include <cmath>
#include <ostream>
#include <vector>

#include "rough_ht/experiment.hpp"
#include "rough_ht/kernels.hpp"
#include "rough_ht/measures.hpp"
#include "rough_ht/sweep.hpp"

namespace rough_ht {

struct KernelProbeRow {
  Site N1 = 0, N2 = 0;
  double J_center = 0.0;
  Site J_len = 0;
  std::size_t leakage = 0;
  double c_size = 0.0;    ///< sup|K| (N1 N2)^alpha / |J|
  LogLogFit holder1;      ///< direction x1
  LogLogFit holder2;      ///< direction x2
  double runtime_ms = 0.0;
};

struct DiagonalProbeRow {
  Site N = 0;
  Site J_len = 0;
  double diag_normalized = 0.0;  ///< |C_{N,J}| N^{1+alpha} / |J|
  double diag_coeff = 0.0;
  double recon_err = 0.0;        ///< max |smooth + err + diag delta - K| / sup|K|
  double c_size_smooth = 0.0;
  LogLogFit holder_smooth;
};

struct AveragedProbeRow {
  Site N = 0;
  Site Q_len = 0;
  bool below_threshold = false;
  LogLogFit fit;
};

struct AutocorrelationRow {
  Site N = 0;
  double normalized_sup = 0.0;  ///< N^alpha sup_{x != 0} |mu_N * mu_N~(x)|
};

inline std::vector<Site> dyadic_range(int lo, int hi) {
  std::vector<Site> out;
  for (int k = lo; k <= hi; ++k) out.push_back(Site{1} << k);
  return out;
}

/// Windows J = [0, min(N1, N2) / d) for d in `divisors`. K is translation covariant, so
/// only the length of J matters.
inline std::vector<KernelProbeRow> kernel_probe_grid(std::span<const Site> Ns, double alpha, const BumpFunction& phi,
                                                     std::span<const Site> divisors, unsigned workers) {
  struct Cell {
    Site N1, N2, d;
  };
  std::vector<Cell> cells;
  for (Site a : Ns)
    for (Site b : Ns)
      if (a != b)
        for (Site d : divisors) cells.push_back({a, b, d});
  return parallel_map(cells.size(), workers, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& c = cells[i];
    const Site len = std::max<Site>(std::min(c.N1, c.N2) / c.d, 1);
    const Interval J{0, len};
    const auto K = kernel(c.N1, c.N2, J, alpha, phi);
    KernelProbeRow r;
    r.N1 = c.N1;
    r.N2 = c.N2;
    r.J_center = J.center();
    r.J_len = len;
    r.leakage = K.support_leakage(alpha);
    r.c_size = probe_size_bound(K, alpha);
    r.holder1 = probe_holder(K, alpha, 1).fit;
    r.holder2 = probe_holder(K, alpha, 2).fit;
    r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
  });
}

inline std::vector<DiagonalProbeRow> diagonal_probe_grid(std::span<const Site> Ns, double alpha, const BumpFunction& phi,
                                                         double epsilon, unsigned workers) {
  return parallel_map(Ns.size(), workers, [&](std::size_t i) {
    const Site N = Ns[i];
    const Site len = std::max<Site>(N / 2, 1);
    const auto K = kernel(N, N, Interval{0, len}, alpha, phi);
    const auto split = diagonal_split(K, epsilon);
    DiagonalProbeRow r;
    r.N = N;
    r.J_len = len;
    r.diag_coeff = split.diag_coeff;
    r.diag_normalized = split.normalized_diag(alpha);
    const double sup = K.sup_abs();
    for (Site x1 = K.rows.lo; x1 < K.rows.hi; ++x1)
      for (Site x2 = K.cols.lo; x2 < K.cols.hi; ++x2)
        r.recon_err = std::max(r.recon_err, std::fabs(split.reconstruct(x1, x2) - K.at(x1, x2)) / sup);
    r.c_size_smooth = probe_size_bound(split.smooth, alpha);
    r.holder_smooth = probe_holder(split.smooth, alpha, 1).fit;
    return r;
  });
}

/// Q = [0, 2^round(alpha log2 N)) scaled by 2^shift.
inline std::vector<AveragedProbeRow> averaged_probe_grid(std::span<const Site> Ns, double alpha, const BumpFunction& phi,
                                                         int shift, double min_cube, unsigned workers) {
  return parallel_map(Ns.size(), workers, [&](std::size_t i) {
    const Site N = Ns[i];
    const int q = std::max(0, static_cast<int>(std::lround(alpha * log2_exact(N))) + shift);
    const DyadicInterval Q(q, 0);
    const auto p = averaged_kernel_holder(N, Q, alpha, phi, {}, min_cube);
    return AveragedProbeRow{N, Q.length(), p.below_threshold, p.fit};
  });
}

inline std::vector<AutocorrelationRow> autocorrelation_grid(std::span<const Site> Ns, double alpha,
                                                            const BumpFunction& phi, unsigned workers) {
  return parallel_map(Ns.size(), workers, [&](std::size_t i) {
    return AutocorrelationRow{Ns[i], autocorrelation_offdiag_sup(Ns[i], alpha, phi)};
  });
}

/// max / min of a positive column; +inf if some entry is not positive.
template <class Rows, class Get>
double column_spread(const Rows& rows, Get get) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    const double v = get(r);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

inline void write_kernel_probe_csv(std::ostream& os, const std::vector<KernelProbeRow>& rows, bool runtime = true) {
  os << "N1,N2,J_center,J_len,C_hat,delta_hat,C_hat_x2,delta_hat_x2,leakage";
  if (runtime) os << ",cell_runtime_ms";
  os << "\r\n";
  for (const auto& r : rows) {
    os << r.N1 << ',' << r.N2 << ',' << fmt_double(r.J_center) << ',' << r.J_len << ',' << fmt_double(r.c_size) << ','
       << fmt_double(r.holder1.slope) << ',' << fmt_double(r.holder2.constant) << ',' << fmt_double(r.holder2.slope)
       << ',' << r.leakage;
    if (runtime) os << ',' << fmt_double(r.runtime_ms);
    os << "\r\n";
  }
}

inline void write_diagonal_probe_csv(std::ostream& os, const std::vector<DiagonalProbeRow>& rows) {
  os << "N,J_len,diag_coeff,diag_normalized,recon_err,C_hat_smooth,delta_hat_smooth\r\n";
  for (const auto& r : rows)
    os << r.N << ',' << r.J_len << ',' << fmt_double(r.diag_coeff) << ',' << fmt_double(r.diag_normalized) << ','
       << fmt_double(r.recon_err) << ',' << fmt_double(r.c_size_smooth) << ',' << fmt_double(r.holder_smooth.slope)
       << "\r\n";
}

inline void write_averaged_probe_csv(std::ostream& os, const std::vector<AveragedProbeRow>& rows) {
  os << "N,Q_len,below_threshold,C_hat,delta_hat\r\n";
  for (const auto& r : rows)
    os << r.N << ',' << r.Q_len << ',' << (r.below_threshold ? 1 : 0) << ',' << fmt_double(r.fit.constant) << ','
       << fmt_double(r.fit.slope) << "\r\n";
}

inline void write_autocorrelation_csv(std::ostream& os, const std::vector<AutocorrelationRow>& rows) {
  os << "N,normalized_sup\r\n";
  for (const auto& r : rows) os << r.N << ',' << fmt_double(r.normalized_sup) << "\r\n";
}

struct ProbeSuite {
  std::vector<KernelProbeRow> kernel;
  std::vector<DiagonalProbeRow> diagonal;
  std::vector<AveragedProbeRow> averaged;
  std::vector<AutocorrelationRow> autocorrelation;
};

/// Kernel, diagonal and averaged probes over N = 2^lo..2^hi; autocorrelation over 2^ac_lo..2^ac_hi.
inline ProbeSuite probe_suite(int lo, int hi, int ac_lo, int ac_hi, double alpha, const BumpFunction& phi,
                              double epsilon, unsigned workers) {
  ProbeSuite s;
  const auto Ns = dyadic_range(lo, hi);
  const std::vector<Site> divisors{2, 4};
  s.kernel = kernel_probe_grid(Ns, alpha, phi, divisors, workers);
  s.diagonal = diagonal_probe_grid(Ns, alpha, phi, epsilon, workers);
  s.averaged = averaged_probe_grid(Ns, alpha, phi, 0, 0.0, workers);
  s.autocorrelation = autocorrelation_grid(dyadic_range(ac_lo, ac_hi), alpha, phi, workers);
  return s;
}

}  // namespace rough_ht
