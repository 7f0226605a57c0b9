#pragma once

// Finitely supported functions on Z, dyadic intervals, and the elementary
// operations on them (norms, truncations, conditional expectations, the
// Hardy-Littlewood maximal function).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rough_ht {

using Site = std::int64_t;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline constexpr bool is_dyadic(Site n) { return n > 0 && (n & (n - 1)) == 0; }

inline int log2_exact(Site n) {
  if (!is_dyadic(n)) throw std::invalid_argument("not a power of two: " + std::to_string(n));
  int k = 0;
  while ((Site{1} << k) < n) ++k;
  return k;
}

inline constexpr Site floor_div(Site a, Site b) {
  Site q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

/// Half-open interval [lo, hi) of integers, not necessarily dyadic.
struct Interval {
  Site lo = 0;
  Site hi = 0;

  Site length() const { return hi - lo; }
  bool empty() const { return hi <= lo; }
  bool contains(Site x) const { return lo <= x && x < hi; }
  /// Midpoint of the integer points lo..hi-1.
  double center() const { return 0.5 * static_cast<double>(lo + hi - 1); }
  /// The set {-x : x in this}.
  Interval reflected() const { return {-hi + 1, -lo + 1}; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// [index * 2^scale, (index + 1) * 2^scale), anchored at 0.
class DyadicInterval {
 public:
  DyadicInterval() = default;
  DyadicInterval(int scale, Site index) : scale_(scale), index_(index) {
    if (scale < 0 || scale > 60) throw std::invalid_argument("dyadic scale out of range");
  }

  static DyadicInterval containing(Site x, int scale) {
    return DyadicInterval(scale, floor_div(x, Site{1} << scale));
  }

  int scale() const { return scale_; }
  Site index() const { return index_; }
  Site length() const { return Site{1} << scale_; }
  Site begin() const { return index_ * length(); }
  Site end() const { return begin() + length(); }
  Interval interval() const { return {begin(), end()}; }

  bool contains(Site x) const { return begin() <= x && x < end(); }
  bool contains(const DyadicInterval& o) const { return begin() <= o.begin() && o.end() <= end(); }
  bool intersects(const DyadicInterval& o) const { return begin() < o.end() && o.begin() < end(); }

  DyadicInterval parent() const { return DyadicInterval(scale_ + 1, floor_div(index_, 2)); }
  DyadicInterval left_child() const { return DyadicInterval(scale_ - 1, 2 * index_); }
  DyadicInterval right_child() const { return DyadicInterval(scale_ - 1, 2 * index_ + 1); }

  /// Concentric interval with `factor` times the length.
  Interval dilated(Site factor) const {
    const Site extra = (factor - 1) * length() / 2;
    return {begin() - extra, end() + extra};
  }

  friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;
  friend auto operator<=>(const DyadicInterval& a, const DyadicInterval& b) {
    if (auto c = a.begin() <=> b.begin(); c != 0) return c;
    return a.scale_ <=> b.scale_;
  }

 private:
  int scale_ = 0;
  Site index_ = 0;
};

/// Pairwise-disjoint dyadic intervals, kept sorted by left endpoint.
class IntervalFamily {
 public:
  IntervalFamily() = default;
  explicit IntervalFamily(std::vector<DyadicInterval> members) : members_(std::move(members)) {
    std::sort(members_.begin(), members_.end());
    for (std::size_t i = 1; i < members_.size(); ++i) {
      if (members_[i - 1].end() > members_[i].begin())
        throw std::invalid_argument("interval family is not pairwise disjoint");
    }
  }

  std::span<const DyadicInterval> members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }
  const DyadicInterval& operator[](std::size_t i) const { return members_[i]; }

  /// Index of the member containing x, or -1.
  std::ptrdiff_t find(Site x) const {
    auto it = std::upper_bound(members_.begin(), members_.end(), x,
                               [](Site v, const DyadicInterval& q) { return v < q.begin(); });
    if (it == members_.begin()) return -1;
    --it;
    return it->contains(x) ? std::distance(members_.begin(), it) : -1;
  }

  Site total_length() const {
    Site t = 0;
    for (const auto& q : members_) t += q.length();
    return t;
  }

 private:
  std::vector<DyadicInterval> members_;
};

/// Equal-length dyadic intervals of the given scale covering `window`.
inline IntervalFamily dyadic_grid(int scale, Interval window) {
  std::vector<DyadicInterval> out;
  if (window.empty()) return IntervalFamily{};
  const Site first = floor_div(window.lo, Site{1} << scale);
  const Site last = floor_div(window.hi - 1, Site{1} << scale);
  out.reserve(static_cast<std::size_t>(last - first + 1));
  for (Site a = first; a <= last; ++a) out.emplace_back(scale, a);
  return IntervalFamily(std::move(out));
}

/// A finitely supported real function on Z in canonical sparse form:
/// sites strictly increasing, no stored zero.
class LatticeFunction {
 public:
  LatticeFunction() = default;

  /// Duplicate sites are summed; zeros dropped.
  static LatticeFunction from_pairs(std::vector<std::pair<Site, double>> pairs) {
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    LatticeFunction f;
    f.sites_.reserve(pairs.size());
    f.values_.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size();) {
      Site s = pairs[i].first;
      double v = 0.0;
      for (; i < pairs.size() && pairs[i].first == s; ++i) v += pairs[i].second;
      f.push_back_unchecked(s, v);
    }
    return f;
  }

  /// values[i] lives at site offset + i.
  static LatticeFunction from_dense(Site offset, std::span<const double> values) {
    LatticeFunction f;
    for (std::size_t i = 0; i < values.size(); ++i)
      f.push_back_unchecked(offset + static_cast<Site>(i), values[i]);
    return f;
  }

  static LatticeFunction delta(Site x, double height = 1.0) {
    LatticeFunction f;
    f.push_back_unchecked(x, height);
    return f;
  }

  /// Appends (s, v); s must exceed every stored site. Zeros are skipped.
  void push_back(Site s, double v) {
    if (!sites_.empty() && s <= sites_.back())
      throw std::invalid_argument("LatticeFunction::push_back: sites must increase");
    push_back_unchecked(s, v);
  }

  std::span<const Site> sites() const { return sites_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  Site min_site() const { return sites_.front(); }
  Site max_site() const { return sites_.back(); }
  Interval support_hull() const { return empty() ? Interval{} : Interval{min_site(), max_site() + 1}; }

  double operator()(Site x) const {
    auto it = std::lower_bound(sites_.begin(), sites_.end(), x);
    if (it == sites_.end() || *it != x) return 0.0;
    return values_[static_cast<std::size_t>(it - sites_.begin())];
  }

  /// Index range [first, last) of stored sites inside [lo, hi).
  std::pair<std::size_t, std::size_t> range(Site lo, Site hi) const {
    auto a = std::lower_bound(sites_.begin(), sites_.end(), lo);
    auto b = std::lower_bound(a, sites_.end(), hi);
    return {static_cast<std::size_t>(a - sites_.begin()), static_cast<std::size_t>(b - sites_.begin())};
  }

  double sum() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
  }

  double sum_over(Site lo, Site hi) const {
    auto [a, b] = range(lo, hi);
    double s = 0.0;
    for (std::size_t i = a; i < b; ++i) s += values_[i];
    return s;
  }

  /// Keeps entries where pred(site, value) holds.
  template <class Pred>
  LatticeFunction filter(Pred pred) const {
    LatticeFunction out;
    for (std::size_t i = 0; i < size(); ++i)
      if (pred(sites_[i], values_[i])) out.push_back_unchecked(sites_[i], values_[i]);
    return out;
  }

  template <class Fn>
  LatticeFunction transform(Fn fn) const {
    LatticeFunction out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back_unchecked(sites_[i], fn(values_[i]));
    return out;
  }

  LatticeFunction scaled(double a) const {
    return transform([a](double v) { return a * v; });
  }

  LatticeFunction translated(Site k) const {
    LatticeFunction out = *this;
    for (auto& s : out.sites_) s += k;
    return out;
  }

  /// x -> f(-x)
  LatticeFunction reflected() const {
    LatticeFunction out;
    for (std::size_t i = size(); i-- > 0;) out.push_back_unchecked(-sites_[i], values_[i]);
    return out;
  }

  LatticeFunction abs() const {
    return transform([](double v) { return std::fabs(v); });
  }

  /// Restriction to [lo, hi).
  LatticeFunction restricted(Site lo, Site hi) const {
    auto [a, b] = range(lo, hi);
    LatticeFunction out;
    for (std::size_t i = a; i < b; ++i) out.push_back_unchecked(sites_[i], values_[i]);
    return out;
  }

  friend LatticeFunction operator+(const LatticeFunction& f, const LatticeFunction& g) {
    return merge(f, g, 1.0);
  }
  friend LatticeFunction operator-(const LatticeFunction& f, const LatticeFunction& g) {
    return merge(f, g, -1.0);
  }
  LatticeFunction& operator+=(const LatticeFunction& g) { return *this = *this + g; }
  LatticeFunction& operator-=(const LatticeFunction& g) { return *this = *this - g; }

  friend bool operator==(const LatticeFunction&, const LatticeFunction&) = default;

 private:
  void push_back_unchecked(Site s, double v) {
    if (v == 0.0) return;
    sites_.push_back(s);
    values_.push_back(v);
  }

  static LatticeFunction merge(const LatticeFunction& f, const LatticeFunction& g, double sign) {
    LatticeFunction out;
    out.sites_.reserve(f.size() + g.size());
    out.values_.reserve(f.size() + g.size());
    std::size_t i = 0, j = 0;
    while (i < f.size() || j < g.size()) {
      if (j == g.size() || (i < f.size() && f.sites_[i] < g.sites_[j])) {
        out.push_back_unchecked(f.sites_[i], f.values_[i]);
        ++i;
      } else if (i == f.size() || g.sites_[j] < f.sites_[i]) {
        out.push_back_unchecked(g.sites_[j], sign * g.values_[j]);
        ++j;
      } else {
        out.push_back_unchecked(f.sites_[i], f.values_[i] + sign * g.values_[j]);
        ++i;
        ++j;
      }
    }
    return out;
  }

  std::vector<Site> sites_;
  std::vector<double> values_;
};

/// A contiguous block of samples; scratch representation for heavy kernels.
struct DenseSignal {
  Site offset = 0;
  std::vector<double> values;

  DenseSignal() = default;
  DenseSignal(Interval range) : offset(range.lo), values(static_cast<std::size_t>(std::max<Site>(range.length(), 0)), 0.0) {}

  Interval range() const { return {offset, offset + static_cast<Site>(values.size())}; }
  double& at(Site x) { return values[static_cast<std::size_t>(x - offset)]; }
  double at(Site x) const { return values[static_cast<std::size_t>(x - offset)]; }

  void add(const LatticeFunction& f, double scale = 1.0) {
    auto s = f.sites();
    auto v = f.values();
    for (std::size_t i = 0; i < s.size(); ++i) at(s[i]) += scale * v[i];
  }

  static DenseSignal from(const LatticeFunction& f, Interval range) {
    DenseSignal d(range);
    d.add(f);
    return d;
  }

  LatticeFunction to_lattice() const { return LatticeFunction::from_dense(offset, values); }
};

// ---------------------------------------------------------------------------

inline double lp_norm(const LatticeFunction& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  double acc = 0.0;
  if (p == kInfinity) {
    for (double v : f.values()) acc = std::max(acc, std::fabs(v));
    return acc;
  }
  if (p == 1.0) {
    for (double v : f.values()) acc += std::fabs(v);
    return acc;
  }
  if (p == 2.0) {
    for (double v : f.values()) acc += v * v;
    return std::sqrt(acc);
  }
  for (double v : f.values()) acc += std::pow(std::fabs(v), p);
  return std::pow(acc, 1.0 / p);
}

struct TruncatedParts {
  LatticeFunction low;   ///< f on {|f| < cutoff}
  LatticeFunction high;  ///< the rest
};

inline TruncatedParts truncate_split(const LatticeFunction& f, double cutoff) {
  if (!(cutoff > 0.0)) throw std::invalid_argument("truncate_split: cutoff must be positive");
  TruncatedParts out;
  auto s = f.sites();
  auto v = f.values();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::fabs(v[i]) < cutoff)
      out.low.push_back(s[i], v[i]);
    else
      out.high.push_back(s[i], v[i]);
  }
  return out;
}

/// f restricted to the dyadic height band top/(2A) <= |f| < top/A.
inline LatticeFunction band(const LatticeFunction& f, double top, Site A) {
  if (!(top > 0.0)) throw std::invalid_argument("band: top must be positive");
  if (!is_dyadic(A)) throw std::invalid_argument("band: A must be a power of two");
  const double hi = top / static_cast<double>(A);
  const double lo = hi / 2.0;
  return f.filter([lo, hi](Site, double v) {
    const double a = std::fabs(v);
    return lo <= a && a < hi;
  });
}

/// Dyadic A for which band(f, top, A) is nonzero, increasing.
inline std::vector<Site> active_bands(const LatticeFunction& f, double top) {
  std::vector<Site> out;
  for (double v : f.values()) {
    const double a = std::fabs(v);
    if (a >= top) continue;
    // smallest A with a >= top/(2A)
    Site A = 1;
    while (a < top / static_cast<double>(2 * A)) A *= 2;
    out.push_back(A);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Average of f on each member of `family`; zero off the union.
inline LatticeFunction conditional_expectation(const LatticeFunction& f, const IntervalFamily& family) {
  LatticeFunction out;
  for (const auto& q : family) {
    const double mean = f.sum_over(q.begin(), q.end()) / static_cast<double>(q.length());
    if (mean == 0.0) continue;
    for (Site x = q.begin(); x < q.end(); ++x) out.push_back(x, mean);
  }
  return out;
}

/// Centered Hardy-Littlewood maximal function of |f| evaluated on `window`.
inline LatticeFunction hl_maximal(const LatticeFunction& f, Interval window) {
  LatticeFunction out;
  if (f.empty()) return out;
  auto sites = f.sites();
  auto vals = f.values();
  std::vector<double> prefix(sites.size() + 1, 0.0);
  for (std::size_t i = 0; i < sites.size(); ++i) prefix[i + 1] = prefix[i] + std::fabs(vals[i]);

  std::vector<Site> radii;
  for (Site x = window.lo; x < window.hi; ++x) {
    // The average only decreases between radii that reach a new support point.
    radii.clear();
    for (Site s : sites) radii.push_back(s > x ? s - x : x - s);
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    double best = std::fabs(f(x));
    for (Site r : radii) {
      if (r == 0) continue;
      auto [a, b] = f.range(x - r, x + r + 1);
      best = std::max(best, (prefix[b] - prefix[a]) / static_cast<double>(2 * r + 1));
    }
    out.push_back(x, best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text serialization: one "site value" pair per line, sorted by site.

inline void write_lattice(std::ostream& os, const LatticeFunction& f) {
  auto s = f.sites();
  auto v = f.values();
  char buf[64];
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    os << s[i] << ' ' << buf << '\n';
  }
}

inline LatticeFunction read_lattice(std::istream& is) {
  std::vector<std::pair<Site, double>> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    Site s;
    double v;
    if (!(ls >> s)) continue;
    if (!(ls >> v)) throw std::runtime_error("malformed lattice line " + std::to_string(lineno));
    pairs.emplace_back(s, v);
  }
  return LatticeFunction::from_pairs(std::move(pairs));
}

}  // namespace rough_ht
