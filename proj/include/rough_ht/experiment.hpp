#pragma once

// Experiment configuration, input generators and a deterministic parallel map.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <exception>
#include <istream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rough_ht/lattice.hpp"
#include "rough_ht/measures.hpp"

namespace rough_ht {

inline constexpr double kAlphaCeiling = 1.001;

struct ExperimentConfig {
  double alpha = 1.001;
  double theta = 0.8;
  double epsilon = 0.05;
  std::vector<Site> M_list{Site{1} << 10};
  std::vector<double> lambdas;  ///< explicit grid; empty means the log grid per instance
  int lambdas_per_decade = 12;
  std::string bump = "standard";
  std::vector<std::string> families{"delta"};
  std::vector<std::uint64_t> seeds{1};
  int spikes = 8;
  double height = 1.0;  ///< generator scale before l1 normalisation
  unsigned workers = 1;
  std::string output_dir = "out";
  bool allow_alpha = false;
  bool terms = true;  ///< compute the four split terms per lambda
  int trials = 1000;

  void validate() const {
    if (!(alpha > 1.0)) throw std::invalid_argument("alpha must exceed 1");
    if (alpha > kAlphaCeiling + 1e-15 && !allow_alpha)
      throw std::invalid_argument("alpha above 1.001 requires --allow-alpha");
    if (!(theta > 0.0 && theta < 1.0)) throw std::invalid_argument("theta must lie in (0,1)");
    if (!(epsilon > 0.0 && epsilon < theta / 2.0)) throw std::invalid_argument("epsilon must lie in (0, theta/2)");
    if (M_list.empty()) throw std::invalid_argument("M list is empty");
    for (Site M : M_list)
      if (!is_dyadic(M) || M < 4) throw std::invalid_argument("M must be a dyadic integer >= 4");
    for (double l : lambdas)
      if (!(l > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (lambdas_per_decade < 1) throw std::invalid_argument("lambdas_per_decade must be >= 1");
    if (families.empty()) throw std::invalid_argument("no input family");
    if (seeds.empty()) throw std::invalid_argument("no seeds");
    if (spikes < 1) throw std::invalid_argument("spikes must be >= 1");
    if (!(height >= 0.0)) throw std::invalid_argument("height must be >= 0");
    if (trials < 0) throw std::invalid_argument("trials must be >= 0");
    BumpFunction::by_name(bump);
  }

  BumpFunction phi() const { return BumpFunction::by_name(bump); }

  /// |J| = 2^round((theta - eps) log2 M)
  int j_scale(Site M) const {
    return static_cast<int>(std::lround((theta - epsilon) * static_cast<double>(log2_exact(M))));
  }
  /// [-4 M^alpha, 4 M^alpha]
  Interval window(Site M) const {
    const auto W = static_cast<Site>(std::ceil(4.0 * std::pow(static_cast<double>(M), alpha)));
    return {-W, W + 1};
  }
  /// Cubes of length <= M^{theta - 2 eps} are purged.
  double purge_threshold(Site M) const { return std::pow(static_cast<double>(M), theta - 2.0 * epsilon); }

  /// Applies one key=value setting.
  void set(const std::string& key, const std::string& value) {
    auto list = [&](auto parse) {
      std::vector<decltype(parse(std::string{}))> out;
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(parse(item));
      }
      return out;
    };
    auto to_site = [](const std::string& s) { return static_cast<Site>(std::stoll(s)); };
    auto to_double = [](const std::string& s) { return std::stod(s); };
    auto to_seed = [](const std::string& s) { return static_cast<std::uint64_t>(std::stoull(s)); };
    auto to_string = [](const std::string& s) { return s; };
    auto to_bool = [](const std::string& s) {
      if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
      if (s == "0" || s == "false" || s == "no" || s == "off") return false;
      throw std::invalid_argument("not a boolean: " + s);
    };
    if (key == "alpha") alpha = std::stod(value);
    else if (key == "theta") theta = std::stod(value);
    else if (key == "epsilon") epsilon = std::stod(value);
    else if (key == "M" || key == "M_list") M_list = list(to_site);
    else if (key == "lambda" || key == "lambdas") lambdas = list(to_double);
    else if (key == "lambdas_per_decade") lambdas_per_decade = std::stoi(value);
    else if (key == "bump") bump = value;
    else if (key == "family" || key == "families") families = list(to_string);
    else if (key == "seed" || key == "seeds") seeds = list(to_seed);
    else if (key == "spikes") spikes = std::stoi(value);
    else if (key == "height") height = std::stod(value);
    else if (key == "workers") workers = static_cast<unsigned>(std::stoul(value));
    else if (key == "out" || key == "output_dir") output_dir = value;
    else if (key == "allow_alpha") allow_alpha = to_bool(value);
    else if (key == "terms") terms = to_bool(value);
    else if (key == "trials") trials = std::stoi(value);
    else throw std::invalid_argument("unknown config key: " + key);
  }

  /// Flat key=value lines; '#' starts a comment.
  void load(std::istream& is) {
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      line.erase(0, line.find_first_not_of(" \t\r"));
      line.erase(line.find_last_not_of(" \t\r") + 1);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": missing '='");
      std::string key = line.substr(0, eq), value = line.substr(eq + 1);
      key.erase(key.find_last_not_of(" \t") + 1);
      value.erase(0, value.find_first_not_of(" \t"));
      set(key, value);
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    load(in);
  }
};

/// lo * 10^{i / per_decade} for i = 0, 1, ... while <= hi.
inline std::vector<double> lambda_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0.0) || !(hi >= lo)) throw std::invalid_argument("lambda_grid: need 0 < lo <= hi");
  std::vector<double> out;
  const int n = static_cast<int>(std::floor(per_decade * std::log10(hi / lo) + 1e-9));
  for (int i = 0; i <= n; ++i) out.push_back(lo * std::pow(10.0, static_cast<double>(i) / per_decade));
  return out;
}

// ---------------------------------------------------------------------------

/// splitmix64 step, for deriving independent per-cell seeds.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

/// Platform-independent draws on top of mt19937_64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// integer in [lo, hi)
  Site integer(Site lo, Site hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo);
    return lo + static_cast<Site>(gen_() % span);
  }
  double gaussian() {
    const double u1 = 1.0 - uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

struct GeneratorParams {
  double height = 1.0;
  std::optional<Site> at;  ///< delta position; drawn from the seed when unset
  int spikes = 8;
  std::string base = "uniform-random";  ///< family rescaled by normalized-l1
};

inline LatticeFunction normalize_l1(const LatticeFunction& f) {
  const double l1 = lp_norm(f, 1.0);
  return l1 > 0.0 ? f.scaled(1.0 / l1) : f;
}

inline const std::vector<std::string>& input_families() {
  static const std::vector<std::string> names{"delta", "spaced-deltas", "cz-stress", "uniform-random", "normalized-l1"};
  return names;
}

/// Deterministic under (family, M, seed, params).
inline LatticeFunction generate_input(const std::string& family, Site M, double alpha, std::uint64_t seed,
                                      const GeneratorParams& p = {}) {
  Rng rng(mix_seed(seed, fnv1a(family)));
  if (family == "delta") {
    const Site x = p.at ? *p.at : rng.integer(-M / 2, M / 2);
    return LatticeFunction::from_pairs({{x, p.height}});
  }
  if (family == "spaced-deltas") {
    // spikes at curve sites [m^alpha], so differences of spikes meet measure atoms
    std::vector<std::pair<Site, double>> pts;
    for (int i = 0; i < p.spikes; ++i) {
      const Site m = rng.integer(1, M + 1);
      pts.emplace_back(floor_power(m, alpha), p.height);
    }
    return LatticeFunction::from_pairs(std::move(pts));
  }
  if (family == "cz-stress") {
    // spikes of height ~2^t, each isolated by at least 2^{t+1} empty sites: at
    // lambda ~ 1 each is caught by a cube of length ~ its height, the extreme case
    // of the key CZ bound
    std::vector<std::pair<Site, double>> pts;
    const Site gap = std::max<Site>(2 * M / p.spikes, 4);
    int top = 1;
    while ((Site{1} << (top + 1)) <= gap / 2) ++top;
    const int bottom = std::min(top, std::max(1, static_cast<int>(std::ceil(0.5 * log2_exact(M)))));
    for (int i = 0; i < p.spikes; ++i) {
      const int t = static_cast<int>(rng.integer(bottom, top + 1));
      pts.emplace_back(-M + i * gap, std::ldexp(rng.uniform(0.75, 1.5), t) * p.height);
    }
    return LatticeFunction::from_pairs(std::move(pts));
  }
  if (family == "uniform-random") {
    std::vector<double> v(static_cast<std::size_t>(2 * M));
    for (auto& x : v) x = rng.uniform() * p.height;
    return LatticeFunction::from_dense(-M, v);
  }
  if (family == "normalized-l1") {
    if (p.base == "normalized-l1") throw std::invalid_argument("normalized-l1 cannot wrap itself");
    return normalize_l1(generate_input(p.base, M, alpha, seed, p));
  }
  throw std::invalid_argument("unknown input family: " + family);
}

// ---------------------------------------------------------------------------

/// out[i] = fn(i), i < n, computed by up to `workers` threads; the result never
/// depends on the worker count.
template <class Fn>
auto parallel_map(std::size_t n, unsigned workers, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (w == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < w; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace rough_ht
