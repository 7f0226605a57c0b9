#pragma once

// Bilinear kernels K(x1, x2) = sum_{y in J} phi_J(y) mu_{N1}(x1 - y) mu_{N2}(x2 - y),
// the averaged kernel mu_N * 1_Q / |Q|, and the numerical probes of their size,
// Hoelder regularity and diagonal structure.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rough_ht/convolution.hpp"
#include "rough_ht/lattice.hpp"
#include "rough_ht/measures.hpp"
#include "rough_ht/operators.hpp"

namespace rough_ht {

/// Largest kernel rectangle (cells) accepted.
inline constexpr std::size_t kMaxKernelCells = std::size_t{1} << 27;

/// phi rescaled to the window: phi(1.5 + (y - center)/|J|), supported inside J.
inline double window_weight(const BumpFunction& phi, Interval J, Site y) {
  return phi(1.5 + (static_cast<double>(y) - J.center()) / static_cast<double>(J.length()));
}

/// Support radius factor of statement 0: 2^alpha + 1.
inline double kernel_support_constant(double alpha) { return std::pow(2.0, alpha) + 1.0; }

struct BilinearKernel {
  Interval window;
  Site N1 = 0;
  Site N2 = 0;
  Interval rows;  ///< x1 range
  Interval cols;  ///< x2 range
  std::vector<double> values;  ///< row-major

  BilinearKernel() = default;
  BilinearKernel(Interval J, Site n1, Site n2, Interval r, Interval c) : window(J), N1(n1), N2(n2), rows(r), cols(c) {
    const auto cells = static_cast<double>(r.length()) * static_cast<double>(c.length());
    if (cells > static_cast<double>(kMaxKernelCells)) throw std::length_error("BilinearKernel: rectangle too large");
    values.assign(static_cast<std::size_t>(std::max<Site>(r.length(), 0) * std::max<Site>(c.length(), 0)), 0.0);
  }

  bool inside(Site x1, Site x2) const { return rows.contains(x1) && cols.contains(x2); }
  double at(Site x1, Site x2) const {
    return inside(x1, x2) ? values[index(x1, x2)] : 0.0;
  }
  double& ref(Site x1, Site x2) { return values[index(x1, x2)]; }
  double center() const { return window.center(); }

  double sup_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::fabs(v));
    return m;
  }

  /// Nonzero cells outside |x1 - x_J| <= C N1^alpha, |x2 - x_J| <= C N2^alpha.
  std::size_t support_leakage(double alpha) const {
    const double C = kernel_support_constant(alpha);
    const double r1 = C * std::pow(static_cast<double>(N1), alpha);
    const double r2 = C * std::pow(static_cast<double>(N2), alpha);
    std::size_t bad = 0;
    for (Site x1 = rows.lo; x1 < rows.hi; ++x1)
      for (Site x2 = cols.lo; x2 < cols.hi; ++x2)
        if (at(x1, x2) != 0.0 &&
            (std::fabs(static_cast<double>(x1) - center()) > r1 || std::fabs(static_cast<double>(x2) - center()) > r2))
          ++bad;
    return bad;
  }

 private:
  std::size_t index(Site x1, Site x2) const {
    return static_cast<std::size_t>((x1 - rows.lo) * cols.length() + (x2 - cols.lo));
  }
};

inline BilinearKernel kernel(Site N1, Site N2, Interval J, double alpha, const BumpFunction& phi) {
  if (J.empty()) throw std::invalid_argument("kernel: empty window");
  const auto m1 = mu(N1, alpha, phi);
  const auto m2 = mu(N2, alpha, phi);
  if (m1.empty() || m2.empty()) return BilinearKernel(J, N1, N2, {}, {});
  BilinearKernel K(J, N1, N2, {J.lo + m1.min_site(), J.hi + m1.max_site()},
                   {J.lo + m2.min_site(), J.hi + m2.max_site()});
  for (Site y = J.lo; y < J.hi; ++y) {
    const double wy = window_weight(phi, J, y);
    if (wy == 0.0) continue;
    for (const auto& a : m1.atoms()) {
      const double wa = wy * a.weight;
      const Site row = (y + a.site - K.rows.lo) * K.cols.length() + y - K.cols.lo;
      for (const auto& b : m2.atoms()) K.values[static_cast<std::size_t>(row + b.site)] += wa * b.weight;
    }
  }
  return K;
}

inline BilinearKernel kernel(Site N1, Site N2, Interval J, const TransformConfig& cfg) {
  cfg.scale_index(N1);
  cfg.scale_index(N2);
  return kernel(N1, N2, J, cfg.alpha(), cfg.phi());
}

/// <K b1, b2> = sum_{x1, x2} K(x1, x2) b1(x1) b2(x2)
inline double bilinear_form(const BilinearKernel& K, const LatticeFunction& b1, const LatticeFunction& b2) {
  double s = 0.0;
  auto s1 = b1.sites();
  auto v1 = b1.values();
  auto [lo2, hi2] = b2.range(K.cols.lo, K.cols.hi);
  for (std::size_t i = 0; i < s1.size(); ++i) {
    if (!K.rows.contains(s1[i])) continue;
    double row = 0.0;
    for (std::size_t j = lo2; j < hi2; ++j) row += K.at(s1[i], b2.sites()[j]) * b2.values()[j];
    s += v1[i] * row;
  }
  return s;
}

/// sum_{y in J} phi_J(y) (mu_{N1} * b1)(y) (mu_{N2} * b2)(y), the same quantity summed in the other order
/// after reflection: equals <K_{refl J} refl b1, refl b2> for a bump symmetric about 1.5.
inline double weighted_product_sum(Site N1, Site N2, Interval J, const LatticeFunction& b1, const LatticeFunction& b2,
                                   double alpha, const BumpFunction& phi) {
  const auto c1 = convolve(mu(N1, alpha, phi), b1, ConvolutionMode::Direct);
  const auto c2 = convolve(mu(N2, alpha, phi), b2, ConvolutionMode::Direct);
  double s = 0.0;
  for (Site y = J.lo; y < J.hi; ++y) s += window_weight(phi, J, y) * c1(y) * c2(y);
  return s;
}

// ---------------------------------------------------------------------------

struct LogLogFit {
  double slope = 0.0;      ///< delta-hat; +inf when degenerate
  double constant = 0.0;   ///< exp(intercept)
  std::size_t points = 0;
  bool degenerate() const { return std::isinf(slope); }
};

/// Least squares of log y on log x over the pairs with y > 0.
inline LogLogFit fit_loglog(std::span<const double> xs, std::span<const double> ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(ys[i] > 0.0) || !(xs[i] > 0.0)) continue;
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  LogLogFit fit;
  fit.points = n;
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  if (n < 2 || denom <= 0.0) {
    fit.slope = std::numeric_limits<double>::infinity();
    return fit;
  }
  fit.slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
  fit.constant = std::exp((sy - fit.slope * sx) / static_cast<double>(n));
  return fit;
}

/// {1, 2, 4, ..., 2^floor(log2(N^alpha / 4))}
inline std::vector<Site> default_h_list(Site N, double alpha) {
  const double top = std::pow(static_cast<double>(N), alpha) / 4.0;
  std::vector<Site> hs;
  for (Site h = 1; static_cast<double>(h) <= top; h *= 2) hs.push_back(h);
  if (hs.empty()) hs.push_back(1);
  return hs;
}

/// sup|K| (N1 N2)^alpha / |J|
inline double probe_size_bound(const BilinearKernel& K, double alpha) {
  return K.sup_abs() * std::pow(static_cast<double>(K.N1) * static_cast<double>(K.N2), alpha) /
         static_cast<double>(K.window.length());
}

/// sup_x |K(x + h e_dir) - K(x)|
inline double sup_increment(const BilinearKernel& K, Site h, int direction) {
  double m = 0.0;
  const Site r_lo = direction == 1 ? K.rows.lo - h : K.rows.lo;
  const Site c_lo = direction == 2 ? K.cols.lo - h : K.cols.lo;
  for (Site x1 = r_lo; x1 < K.rows.hi; ++x1)
    for (Site x2 = c_lo; x2 < K.cols.hi; ++x2) {
      const double next = direction == 1 ? K.at(x1 + h, x2) : K.at(x1, x2 + h);
      m = std::max(m, std::fabs(next - K.at(x1, x2)));
    }
  return m;
}

struct HolderProbe {
  LogLogFit fit;
  std::vector<Site> h;
  std::vector<double> increments;  ///< normalized by (N1 N2)^alpha / |J|
};

/// Regresses sup_x |K(x + h e_dir) - K(x)| (N1 N2)^alpha / |J| on h / N_dir^alpha.
inline HolderProbe probe_holder(const BilinearKernel& K, double alpha, int direction, std::vector<Site> hs = {}) {
  if (direction != 1 && direction != 2) throw std::invalid_argument("probe_holder: direction must be 1 or 2");
  const Site Nd = direction == 1 ? K.N1 : K.N2;
  if (hs.empty()) hs = default_h_list(Nd, alpha);
  HolderProbe p;
  p.h = hs;
  const double norm =
      std::pow(static_cast<double>(K.N1) * static_cast<double>(K.N2), alpha) / static_cast<double>(K.window.length());
  const double scale = std::pow(static_cast<double>(Nd), alpha);
  std::vector<double> xs;
  for (Site h : hs) {
    p.increments.push_back(sup_increment(K, h, direction) * norm);
    xs.push_back(static_cast<double>(h) / scale);
  }
  p.fit = fit_loglog(xs, p.increments);
  return p;
}

// ---------------------------------------------------------------------------

struct DiagonalSplit {
  BilinearKernel smooth;
  BilinearKernel err;
  double diag_coeff = 0.0;
  Site band = 0;  ///< |x1 - x2| <= band

  /// |diag| N^{1+alpha} / |J|
  double normalized_diag(double alpha) const {
    const double N = static_cast<double>(smooth.N1);
    return std::fabs(diag_coeff) * std::pow(N, 1.0 + alpha) / static_cast<double>(smooth.window.length());
  }
  /// smooth + err + diag delta_0 at (x1, x2)
  double reconstruct(Site x1, Site x2) const {
    return smooth.at(x1, x2) + err.at(x1, x2) + (x1 == x2 ? diag_coeff : 0.0);
  }
};

/// K_{N,N} = smooth + err + diag delta_0(x1 - x2). Outside the band |x1 - x2| <= N^{1-eps}
/// smooth = K. Inside it smooth is a local linear least-squares fit along x2 over
/// |t - x2| <= max(2, band/8), with the diagonal cell left out of every fit, so at x2 = x1
/// it extrapolates from the near-diagonal values. diag is the mean of K - smooth over the
/// diagonal support; err takes the rest of the band.
inline DiagonalSplit diagonal_split(const BilinearKernel& K, double epsilon) {
  if (K.N1 != K.N2) throw std::invalid_argument("diagonal_split: needs N1 == N2");
  DiagonalSplit out;
  const double N = static_cast<double>(K.N1);
  out.band = static_cast<Site>(std::floor(std::pow(N, 1.0 - epsilon) + 1e-9));
  if (K.values.empty()) {
    out.smooth = out.err = K;
    return out;
  }
  const Site extent = std::max(K.rows.hi - K.cols.lo, K.cols.hi - K.rows.lo);
  if (out.band >= extent) throw std::invalid_argument("diagonal_split: band wider than kernel support");
  out.smooth = K;
  out.err = BilinearKernel(K.window, K.N1, K.N2, K.rows, K.cols);
  const Site b = out.band;
  const Site r = std::max<Site>(2, b / 8);
  const Site width = K.cols.length();
  std::vector<double> p0(static_cast<std::size_t>(width + 1)), p1(static_cast<std::size_t>(width + 1));
  for (Site x1 = K.rows.lo; x1 < K.rows.hi; ++x1) {
    // prefix sums of K and (x2 - cols.lo) K along the row
    for (Site j = 0; j < width; ++j) {
      const double v = K.at(x1, K.cols.lo + j);
      p0[static_cast<std::size_t>(j + 1)] = p0[static_cast<std::size_t>(j)] + v;
      p1[static_cast<std::size_t>(j + 1)] = p1[static_cast<std::size_t>(j)] + v * static_cast<double>(j);
    }
    const double kd = K.at(x1, x1);
    for (Site x2 = std::max(K.cols.lo, x1 - b); x2 < std::min(K.cols.hi, x1 + b + 1); ++x2) {
      // window in local coordinates u = t - x2, |u| <= r, u != x1 - x2
      const Site c = x2 - K.cols.lo;
      const Site lo = std::max<Site>(c - r, 0), hi = std::min<Site>(c + r + 1, width);
      double sy = p0[static_cast<std::size_t>(hi)] - p0[static_cast<std::size_t>(lo)];
      double sty = (p1[static_cast<std::size_t>(hi)] - p1[static_cast<std::size_t>(lo)]) - static_cast<double>(c) * sy;
      // zeros outside the rectangle still count as samples
      double n = static_cast<double>(2 * r + 1), st = 0.0, stt = 0.0;
      for (Site u = -r; u <= r; ++u) stt += static_cast<double>(u * u);
      const Site ud = x1 - x2;
      if (ud >= -r && ud <= r) {
        n -= 1.0;
        st -= static_cast<double>(ud);
        stt -= static_cast<double>(ud * ud);
        sy -= kd;
        sty -= static_cast<double>(ud) * kd;
      }
      const double det = n * stt - st * st;
      // intercept of the fit y = a + slope u, evaluated at u = 0
      out.smooth.ref(x1, x2) = det != 0.0 ? (stt * sy - st * sty) / det : sy / n;
    }
  }
  double diag_sum = 0.0;
  std::size_t diag_count = 0;
  for (Site x = std::max(K.rows.lo, K.cols.lo); x < std::min(K.rows.hi, K.cols.hi); ++x) {
    if (K.at(x, x) == 0.0) continue;
    diag_sum += K.at(x, x) - out.smooth.at(x, x);
    ++diag_count;
  }
  out.diag_coeff = diag_count ? diag_sum / static_cast<double>(diag_count) : 0.0;
  for (Site x1 = K.rows.lo; x1 < K.rows.hi; ++x1)
    for (Site x2 = std::max(K.cols.lo, x1 - b); x2 < std::min(K.cols.hi, x1 + b + 1); ++x2)
      out.err.ref(x1, x2) = K.at(x1, x2) - out.smooth.at(x1, x2) - (x1 == x2 ? out.diag_coeff : 0.0);
  return out;
}

/// N^alpha sup_{(x1,x2)} sum_t |Err_{N, J + t|J|}(x1, x2)| over the base kernel's rectangle,
/// summing every translate whose rectangle meets it.
inline double err_aggregate(Site N, Interval J, double alpha, const BumpFunction& phi, double epsilon) {
  const auto base = kernel(N, N, J, alpha, phi);
  std::vector<double> acc(base.values.size(), 0.0);
  const Site len = J.length();
  const Site reach = (base.rows.length() + len - 1) / len + 1;
  for (Site t = -reach; t <= reach; ++t) {
    const Interval Jt{J.lo + t * len, J.hi + t * len};
    const auto split = diagonal_split(kernel(N, N, Jt, alpha, phi), epsilon);
    const auto& e = split.err;
    for (Site x1 = std::max(e.rows.lo, base.rows.lo); x1 < std::min(e.rows.hi, base.rows.hi); ++x1)
      for (Site x2 = std::max(e.cols.lo, base.cols.lo); x2 < std::min(e.cols.hi, base.cols.hi); ++x2)
        acc[static_cast<std::size_t>((x1 - base.rows.lo) * base.cols.length() + (x2 - base.cols.lo))] +=
            std::fabs(e.at(x1, x2));
  }
  double m = 0.0;
  for (double v : acc) m = std::max(m, v);
  return m * std::pow(static_cast<double>(N), alpha);
}

// ---------------------------------------------------------------------------

/// mu_N * 1_Q / |Q|
inline LatticeFunction averaged_kernel(Site N, const DyadicInterval& Q, double alpha, const BumpFunction& phi) {
  const auto ones = LatticeFunction::from_dense(Q.begin(), std::vector<double>(static_cast<std::size_t>(Q.length()),
                                                                                1.0 / static_cast<double>(Q.length())));
  return convolve(mu(N, alpha, phi), ones);
}

/// sum_x |K(x + h) - K(x)|^2
inline double increment_energy(const LatticeFunction& K, Site h) {
  if (h == 0 || K.empty()) return 0.0;
  // every x with K(x) or K(x+h) nonzero
  std::vector<Site> xs(K.sites().begin(), K.sites().end());
  for (Site x : K.sites()) xs.push_back(x - h);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  double s = 0.0;
  for (Site x : xs) {
    const double d = K(x + h) - K(x);
    s += d * d;
  }
  return s;
}

struct AveragedKernelProbe {
  LogLogFit fit;
  std::vector<Site> h;
  std::vector<double> energy;  ///< sum_x |K(x+h) - K(x)|^2 N^alpha
  bool below_threshold = false;  ///< |Q| < M^{alpha - 1 + eps}
};

/// Regresses N^alpha sum_x |K_N(x+h) - K_N(x)|^2 on h / N^alpha.
inline AveragedKernelProbe averaged_kernel_holder(Site N, const DyadicInterval& Q, double alpha, const BumpFunction& phi,
                                                  std::vector<Site> hs = {}, double min_cube = 0.0) {
  if (hs.empty()) hs = default_h_list(N, alpha);
  AveragedKernelProbe p;
  p.h = hs;
  p.below_threshold = static_cast<double>(Q.length()) < min_cube;
  const auto K = averaged_kernel(N, Q, alpha, phi);
  const double scale = std::pow(static_cast<double>(N), alpha);
  std::vector<double> xs;
  for (Site h : hs) {
    p.energy.push_back(increment_energy(K, h) * scale);
    xs.push_back(static_cast<double>(h) / scale);
  }
  p.fit = fit_loglog(xs, p.energy);
  return p;
}

}  // namespace rough_ht
