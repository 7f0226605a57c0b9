#pragma once

// Point-mass measures on Z supported along the curve m -> [m^alpha], and the
// bump functions that weight them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "rough_ht/lattice.hpp"

namespace rough_ht {

/// A bump with declared support (1, 2), bounded by 1.
class BumpFunction {
 public:
  BumpFunction() : BumpFunction(standard()) {}
  BumpFunction(std::string name, std::function<double(double)> fn) : name_(std::move(name)), fn_(std::move(fn)) {}

  double operator()(double t) const {
    if (t <= 1.0 || t >= 2.0) return 0.0;
    return fn_(t);
  }
  const std::string& name() const { return name_; }

  /// exp(4 - 1/((t-1)(2-t))) on (1,2); equals 1 at t = 1.5.
  static BumpFunction standard() {
    return BumpFunction("standard", [](double t) { return std::exp(4.0 - 1.0 / ((t - 1.0) * (2.0 - t))); });
  }
  static BumpFunction zero() {
    return BumpFunction("zero", [](double) { return 0.0; });
  }
  static BumpFunction by_name(const std::string& name) {
    if (name == "standard") return standard();
    if (name == "zero") return zero();
    throw std::invalid_argument("unknown bump: " + name);
  }

 private:
  std::string name_;
  std::function<double(double)> fn_;
};

inline BumpFunction default_bump() { return BumpFunction::standard(); }

struct Atom {
  Site site = 0;
  double weight = 0.0;
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Signed atomic measure: sites strictly increasing, weights nonzero.
class PointMassMeasure {
 public:
  PointMassMeasure() = default;

  static PointMassMeasure from_atoms(std::vector<Atom> atoms) {
    std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.site < b.site; });
    PointMassMeasure m;
    for (std::size_t i = 0; i < atoms.size();) {
      Atom acc{atoms[i].site, 0.0};
      for (; i < atoms.size() && atoms[i].site == acc.site; ++i) acc.weight += atoms[i].weight;
      if (acc.weight != 0.0) m.atoms_.push_back(acc);
    }
    return m;
  }

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  Site min_site() const { return atoms_.front().site; }
  Site max_site() const { return atoms_.back().site; }

  double operator()(Site x) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x, [](const Atom& a, Site s) { return a.site < s; });
    return (it != atoms_.end() && it->site == x) ? it->weight : 0.0;
  }

  double total_mass() const {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
  }

  LatticeFunction as_function() const {
    LatticeFunction f;
    for (const auto& a : atoms_) f.push_back(a.site, a.weight);
    return f;
  }

  friend bool operator==(const PointMassMeasure&, const PointMassMeasure&) = default;

 private:
  std::vector<Atom> atoms_;
};

/// floor(m^alpha), exact for every m <= 2^24: long double first, with a
/// 50-digit recomputation when the value sits within 2^-30 of an integer.
inline Site floor_power(Site m, double alpha) {
  if (m <= 0) throw std::invalid_argument("floor_power: m must be positive");
  const long double p = std::pow(static_cast<long double>(m), static_cast<long double>(alpha));
  const long double fl = std::floor(p);
  const long double frac = p - fl;
  constexpr long double kNear = 0x1p-30L;
  if (frac > kNear && 1.0L - frac > kNear) return static_cast<Site>(fl);
  using boost::multiprecision::cpp_bin_float_50;
  const cpp_bin_float_50 exact = boost::multiprecision::pow(cpp_bin_float_50(m), cpp_bin_float_50(alpha));
  // An integer power comes back a few ulps off in either direction.
  const cpp_bin_float_50 nearest = boost::multiprecision::round(exact);
  if (boost::multiprecision::abs(exact - nearest) < cpp_bin_float_50(1e-35)) return static_cast<Site>(nearest);
  return static_cast<Site>(boost::multiprecision::floor(exact));
}

/// mu_N = sum_{N <= m <= 2N} phi(m/N) delta_{[m^alpha]} / m
inline PointMassMeasure mu(Site N, double alpha, const BumpFunction& phi) {
  if (N < 2 || !is_dyadic(N)) throw std::invalid_argument("mu: N must be a dyadic integer >= 2");
  if (!(alpha > 1.0)) throw std::invalid_argument("mu: alpha must exceed 1");
  std::vector<Atom> atoms;
  atoms.reserve(static_cast<std::size_t>(N + 1));
  for (Site m = N; m <= 2 * N; ++m) {
    const double w = phi(static_cast<double>(m) / static_cast<double>(N)) / static_cast<double>(m);
    if (w != 0.0) atoms.push_back({floor_power(m, alpha), w});
  }
  return PointMassMeasure::from_atoms(std::move(atoms));
}

/// True when two m in [N, 2N] share a floor [m^alpha].
inline bool mu_has_collisions(Site N, double alpha) {
  Site prev = floor_power(N, alpha);
  for (Site m = N + 1; m <= 2 * N; ++m) {
    const Site s = floor_power(m, alpha);
    if (s == prev) return true;
    prev = s;
  }
  return false;
}

inline PointMassMeasure reflect(const PointMassMeasure& m) {
  std::vector<Atom> atoms;
  atoms.reserve(m.size());
  for (auto it = m.atoms().rbegin(); it != m.atoms().rend(); ++it) atoms.push_back({-it->site, it->weight});
  return PointMassMeasure::from_atoms(std::move(atoms));
}

inline PointMassMeasure difference(const PointMassMeasure& a, const PointMassMeasure& b) {
  std::vector<Atom> atoms(a.atoms().begin(), a.atoms().end());
  for (const auto& x : b.atoms()) atoms.push_back({x.site, -x.weight});
  return PointMassMeasure::from_atoms(std::move(atoms));
}

/// mu_N - reflect(mu_N)
inline PointMassMeasure antisymmetric_part(Site N, double alpha, const BumpFunction& phi) {
  const auto m = mu(N, alpha, phi);
  return difference(m, reflect(m));
}

/// mu * reflect(mu) as a dense function of the lag, centred at index span-1.
inline std::vector<double> autocorrelation(const PointMassMeasure& m) {
  if (m.empty()) return {};
  const Site lo = m.min_site();
  const Site span = m.max_site() - lo + 1;
  std::vector<double> dense(static_cast<std::size_t>(span), 0.0);
  for (const auto& a : m.atoms()) dense[static_cast<std::size_t>(a.site - lo)] = a.weight;
  std::vector<double> ac(static_cast<std::size_t>(2 * span - 1), 0.0);
  for (Site lag = 0; lag < span; ++lag) {
    double s = 0.0;
    for (Site i = 0; i + lag < span; ++i) s += dense[static_cast<std::size_t>(i + lag)] * dense[static_cast<std::size_t>(i)];
    ac[static_cast<std::size_t>(span - 1 + lag)] = s;
    ac[static_cast<std::size_t>(span - 1 - lag)] = s;
  }
  return ac;
}

/// N^alpha * sup_{x != 0} |mu_N * reflect(mu_N)(x)|
inline double autocorrelation_offdiag_sup(Site N, double alpha, const BumpFunction& phi) {
  const auto m = mu(N, alpha, phi);
  if (m.size() < 2) return 0.0;
  const auto ac = autocorrelation(m);
  const std::size_t zero = (ac.size() - 1) / 2;
  double best = 0.0;
  for (std::size_t i = 0; i < ac.size(); ++i)
    if (i != zero) best = std::max(best, std::fabs(ac[i]));
  return best * std::pow(static_cast<double>(N), alpha);
}

inline void write_measure(std::ostream& os, const PointMassMeasure& m) { write_lattice(os, m.as_function()); }

}  // namespace rough_ht
