#pragma once

// (m * f)(x) = sum_s w_s f(x - s), either by direct accumulation or by a
// zero-padded FFT. Both paths accumulate into a dense buffer spanning the
// Minkowski sum of the two supports.

#include <complex>
#include <cstring>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "rough_ht/lattice.hpp"
#include "rough_ht/measures.hpp"

namespace rough_ht {

enum class ConvolutionMode { Direct, Fft, Auto };

/// Largest FFT buffer (in samples) accepted before refusing.
inline constexpr std::size_t kMaxFftLength = std::size_t{1} << 26;
/// Auto mode switches to FFT at this many multiply-adds.
inline constexpr double kDirectWorkLimit = static_cast<double>(1 << 22);

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

template <class T>
std::unique_ptr<T[], FftwFree> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) throw std::bad_alloc();
  return std::unique_ptr<T[], FftwFree>(p);
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Real linear convolution of two dense sequences through a length-n FFT.
inline std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
  const std::size_t out_len = a.size() + b.size() - 1;
  const std::size_t n = next_pow2(out_len);
  if (n > kMaxFftLength) throw std::length_error("convolve: FFT buffer would exceed 2^26 samples");
  const std::size_t nc = n / 2 + 1;
  auto ra = fftw_buffer<double>(n);
  auto rb = fftw_buffer<double>(n);
  auto ca = fftw_buffer<fftw_complex>(nc);
  auto cb = fftw_buffer<fftw_complex>(nc);
  std::memset(ra.get(), 0, sizeof(double) * n);
  std::memset(rb.get(), 0, sizeof(double) * n);
  std::copy(a.begin(), a.end(), ra.get());
  std::copy(b.begin(), b.end(), rb.get());

  fftw_plan fwd_a, fwd_b, inv;
  {
    std::lock_guard lock(fftw_planner_mutex());
    const int len = static_cast<int>(n);
    fwd_a = fftw_plan_dft_r2c_1d(len, ra.get(), ca.get(), FFTW_ESTIMATE);
    fwd_b = fftw_plan_dft_r2c_1d(len, rb.get(), cb.get(), FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(len, ca.get(), ra.get(), FFTW_ESTIMATE);
  }
  fftw_execute(fwd_a);
  fftw_execute(fwd_b);
  for (std::size_t k = 0; k < nc; ++k) {
    const double re = ca[k][0] * cb[k][0] - ca[k][1] * cb[k][1];
    const double im = ca[k][0] * cb[k][1] + ca[k][1] * cb[k][0];
    ca[k][0] = re;
    ca[k][1] = im;
  }
  fftw_execute(inv);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_a);
    fftw_destroy_plan(fwd_b);
    fftw_destroy_plan(inv);
  }
  std::vector<double> out(out_len);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = ra[i] * scale;
  return out;
}

}  // namespace detail

/// Output range of m * f: [f.min + m.min, f.max + m.max].
inline Interval convolution_range(const PointMassMeasure& m, const LatticeFunction& f) {
  if (m.empty() || f.empty()) return {};
  return {f.min_site() + m.min_site(), f.max_site() + m.max_site() + 1};
}

inline ConvolutionMode resolve_mode(ConvolutionMode mode, const PointMassMeasure& m, const LatticeFunction& f) {
  if (mode != ConvolutionMode::Auto) return mode;
  const double work = static_cast<double>(m.size()) * static_cast<double>(f.size());
  return work < kDirectWorkLimit ? ConvolutionMode::Direct : ConvolutionMode::Fft;
}

/// Adds (m * f) into `acc`, whose range must cover convolution_range(m, f).
inline void convolve_into(DenseSignal& acc, const PointMassMeasure& m, const LatticeFunction& f,
                          ConvolutionMode mode = ConvolutionMode::Auto) {
  if (m.empty() || f.empty()) return;
  const Interval r = convolution_range(m, f);
  if (r.lo < acc.offset || r.hi > acc.range().hi) throw std::out_of_range("convolve_into: accumulator too small");

  if (resolve_mode(mode, m, f) == ConvolutionMode::Direct) {
    auto fs = f.sites();
    auto fv = f.values();
    double* data = acc.values.data();
    for (const auto& a : m.atoms()) {
      const Site shift = a.site - acc.offset;
      for (std::size_t i = 0; i < fs.size(); ++i) data[shift + fs[i]] += a.weight * fv[i];
    }
    return;
  }

  // FFT path: dense copies of both operands.
  const Site mlo = m.min_site();
  std::vector<double> md(static_cast<std::size_t>(m.max_site() - mlo + 1), 0.0);
  for (const auto& a : m.atoms()) md[static_cast<std::size_t>(a.site - mlo)] = a.weight;
  const Site flo = f.min_site();
  std::vector<double> fd(static_cast<std::size_t>(f.max_site() - flo + 1), 0.0);
  {
    auto fs = f.sites();
    auto fv = f.values();
    for (std::size_t i = 0; i < fs.size(); ++i) fd[static_cast<std::size_t>(fs[i] - flo)] = fv[i];
  }
  const auto out = detail::fft_convolve(md, fd);
  // Entries below the transform's roundoff floor are structural zeros.
  double wsum = 0.0, fmax = 0.0;
  for (double w : md) wsum += std::fabs(w);
  for (double v : fd) fmax = std::max(fmax, std::fabs(v));
  const double floor = 1e-14 * wsum * fmax;
  double* base = acc.values.data() + (r.lo - acc.offset);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (std::fabs(out[i]) > floor) base[i] += out[i];
}

inline LatticeFunction convolve(const PointMassMeasure& m, const LatticeFunction& f,
                                ConvolutionMode mode = ConvolutionMode::Auto) {
  if (m.empty() || f.empty()) return {};
  DenseSignal acc(convolution_range(m, f));
  convolve_into(acc, m, f, mode);
  return acc.to_lattice();
}

}  // namespace rough_ht
