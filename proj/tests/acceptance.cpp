// Acceptance run: one PASS/FAIL line per criterion.
// usage: acceptance <path-to-rough-ht> <work-dir> [criterion numbers...]

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "oracles.hpp"

using namespace rough_ht;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

unsigned hw_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double rel_sup_diff(const LatticeFunction& a, const LatticeFunction& b) {
  const double scale = std::max(lp_norm(a, kInfinity), lp_norm(b, kInfinity));
  return scale == 0.0 ? 0.0 : lp_norm(a - b, kInfinity) / scale;
}

bool identical(const LatticeFunction& a, const LatticeFunction& b) {
  return std::equal(a.sites().begin(), a.sites().end(), b.sites().begin(), b.sites().end()) &&
         std::equal(a.values().begin(), a.values().end(), b.values().begin(), b.values().end());
}

Outcome cz_oracle() {
  std::mt19937_64 gen(1001);
  std::uniform_int_distribution<int> lam_exp(-6, 5), count(1, 400), vmax(1, 100);
  std::size_t bad = 0, cubes = 0;
  for (int t = 0; t < 500; ++t) {
    const auto f = oracle::integer_function(gen, Site{1} << 11, count(gen), vmax(gen));
    const double lambda = std::ldexp(1.0, lam_exp(gen));
    const auto dec = cz_decompose(f, lambda);
    const auto expect = oracle::maximal_cubes(f, lambda);
    bool ok = std::equal(dec.cubes.begin(), dec.cubes.end(), expect.begin(), expect.end());
    for (std::size_t i = 0; ok && i < dec.cubes.size(); ++i) {
      const auto& q = dec.cubes[i];
      const double m = oracle::mass(f, q.begin(), q.end());
      const double len = static_cast<double>(q.length());
      ok = m > lambda * len && m <= 2.0 * lambda * len && dec.averages[i] * len == m;
    }
    for (std::size_t i = 0; ok && i < f.size(); ++i)
      ok = dec.cubes.find(f.sites()[i]) >= 0 || f.values()[i] <= lambda;
    ok = ok && lp_norm(conditional_expectation(f, dec.cubes), kInfinity) <= 2.0 * lambda;
    bad += !ok;
    cubes += dec.cubes.size();
  }
  return {bad == 0, "500 cases, " + std::to_string(cubes) + " cubes, " + std::to_string(bad) + " mismatches"};
}

Outcome convolution_cross() {
  std::mt19937_64 gen(1002);
  std::uniform_int_distribution<int> scale(4, 17);
  std::normal_distribution<double> w;
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Site span = Site{1} << scale(gen);
    std::uniform_int_distribution<Site> site(-span, span - 1);
    std::vector<Atom> atoms;
    for (int i = 0; i < 200; ++i) atoms.push_back({site(gen), w(gen)});
    const auto m = PointMassMeasure::from_atoms(std::move(atoms));
    const auto f = oracle::gaussian_function(gen, 0, span, 1000);
    worst = std::max(worst, rel_sup_diff(convolve(m, f, ConvolutionMode::Direct), convolve(m, f, ConvolutionMode::Fft)));
  }
  return {worst <= 1e-9, "200 pairs up to 2^18-site windows, worst relative sup error " + fmt(worst)};
}

Outcome hmax_oracle() {
  std::mt19937_64 gen(1003);
  std::size_t mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const Site M = Site{1} << (8 + 2 * (t % 3));
    const TransformConfig tc(M, 0.8, 1.001);
    const auto f = oracle::gaussian_function(gen, -M, M, 50);
    mismatches += !identical(h_max(f, tc), h_max_bruteforce(f, tc));
  }
  return {mismatches == 0, "100 instances, " + std::to_string(mismatches) + " not bit-identical"};
}

Outcome lemmas() {
  const ExperimentConfig cfg;
  const auto rows = lemma_suite(lemma_context(cfg), hw_workers());
  std::size_t violations = 0;
  std::string failed;
  for (const auto& r : rows) {
    if (r.theorem_backed) violations += r.violations;
    if (!r.passed()) failed += " " + r.name;
  }
  return {failed.empty(), std::to_string(rows.size()) + " checks at " + std::to_string(cfg.trials) +
                              " trials, " + std::to_string(violations) + " violations" +
                              (failed.empty() ? "" : "; failing:" + failed)};
}

const ProbeSuite& probes() {
  static const ProbeSuite s = probe_suite(4, 9, 5, 12, 1.001, default_bump(), 0.05, hw_workers());
  return s;
}

Outcome kernel_probes() {
  const auto& s = probes();
  std::size_t leakage = 0, nonpositive = 0;
  for (const auto& r : s.kernel) {
    leakage += r.leakage;
    nonpositive += !(r.holder1.slope > 0.0) + !(r.holder2.slope > 0.0);
  }
  for (const auto& r : s.diagonal) nonpositive += !(r.holder_smooth.slope > 0.0);
  for (const auto& r : s.averaged) nonpositive += !(r.fit.slope > 0.0);
  const double c = column_spread(s.kernel, [](const auto& r) { return r.c_size; });
  const double d = column_spread(s.diagonal, [](const auto& r) { return r.diag_normalized; });
  const double a = column_spread(s.averaged, [](const auto& r) { return r.fit.constant; });
  const bool ok = leakage == 0 && nonpositive == 0 && c <= 8.0 && d <= 8.0 && a <= 8.0;
  return {ok, std::to_string(s.kernel.size()) + " kernel cells, leakage " + std::to_string(leakage) +
                  ", size spread " + fmt(c) + ", diagonal spread " + fmt(d) + ", averaged spread " + fmt(a) +
                  ", non-positive exponents " + std::to_string(nonpositive)};
}

Outcome autocorrelation_probe() {
  const double sp = column_spread(probes().autocorrelation, [](const auto& r) { return r.normalized_sup; });
  return {sp <= 8.0, "N = 2^5..2^12, spread " + fmt(sp)};
}

ExperimentConfig probe_sweep_config() {
  ExperimentConfig cfg;
  cfg.families = {"delta", "spaced-deltas", "cz-stress"};
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.workers = hw_workers();
  return cfg;
}

Outcome weak_uniformity() {
  auto cfg = probe_sweep_config();
  cfg.M_list = {Site{1} << 10, Site{1} << 12, Site{1} << 14, Site{1} << 16};
  cfg.terms = false;
  const auto s = summarize(weak11_sweep(cfg));
  std::string per_M;
  for (const auto& [M, v] : s.max_ratio) per_M += " " + fmt(v);
  const bool ok = s.failed_rows == 0 && s.ratio_spread <= 4.0 && s.g_spread <= 4.0;
  return {ok, "sup ratio by M:" + per_M + "; ratio spread " + fmt(s.ratio_spread) + ", G spread " +
                  fmt(s.g_spread) + ", failed rows " + std::to_string(s.failed_rows)};
}

Outcome er_decay() {
  auto cfg = probe_sweep_config();
  cfg.M_list.clear();
  for (int k = 8; k <= 14; ++k) cfg.M_list.push_back(Site{1} << k);
  const auto by_M = er_sup_by_M(er_sweep(cfg));
  std::string per_M;
  for (const auto& [M, v] : by_M) per_M += " " + fmt(v);
  const auto inv = inversions(by_M);
  return {inv <= 1, "sup ER ratio by M:" + per_M + "; " + std::to_string(inv) + " inversions"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  const std::string common = " --M 256,1024 --family delta,spaced-deltas,cz-stress,uniform-random --seed 3,4 "
                             "--trials 50 > /dev/null 2>&1";
  std::vector<std::string> files{"sweep.csv", "summary.json", "ratio.dat", "lemma_suite.csv", "probe_kernel.csv",
                                 "probe_diagonal.csv", "probe_averaged.csv", "probe_autocorrelation.csv"};
  std::vector<fs::path> dirs;
  for (unsigned w : {1u, 3u}) {
    const fs::path dir = work / ("workers" + std::to_string(w));
    fs::remove_all(dir);
    const std::string tail = " --workers " + std::to_string(w) + " --out " + dir.string() + common;
    if (std::system(("\"" + cli + "\" sweep" + tail).c_str()) != 0 ||
        std::system(("\"" + cli + "\" lemma-suite" + tail).c_str()) != 0)
      return {false, "CLI run failed for workers=" + std::to_string(w)};
    dirs.push_back(dir);
  }
  std::string differing;
  for (const auto& name : files) {
    auto a = slurp(dirs[0] / name), b = slurp(dirs[1] / name);
    if (name == "summary.json") {
      // wall-clock runtime is the one field allowed to differ
      auto strip = [](std::string& s) {
        const auto p = s.find("\"runtime_s\"");
        if (p != std::string::npos) s.erase(p, s.find('\n', p) - p);
      };
      strip(a);
      strip(b);
    }
    if (a.empty() || a != b) differing += " " + name;
  }
  return {differing.empty(), "workers 1 vs 3 over " + std::to_string(files.size()) + " outputs" +
                                 (differing.empty() ? ", byte-identical" : "; differing:" + differing)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: acceptance <rough-ht> <work-dir> [criteria...]\n";
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path work = argv[2];
  fs::create_directories(work);
  std::set<int> only;
  for (int i = 3; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"CZ decomposition matches the maximal-cube oracle", cz_oracle},
      {"direct and FFT convolution agree", convolution_cross},
      {"maximal truncation matches brute force bit-exactly", hmax_oracle},
      {"executable lemmas have zero violations", lemmas},
      {"kernel support, size, diagonal and averaged probes", kernel_probes},
      {"autocorrelation bound within factor 8", autocorrelation_probe},
      {"weak-type ratio uniform in M", weak_uniformity},
      {"error-function ratio decreases in M", er_decay},
      {"outputs independent of worker count", [&] { return determinism(cli, work); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << criteria[i].first << ": " << o.detail << " ("
              << fmt(secs) << " s)" << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
