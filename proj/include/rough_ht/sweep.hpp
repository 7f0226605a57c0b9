#pragma once

// Weak-type (1,1) sweep over (M, family, seed, lambda), the error-function
// decay probe, and their CSV / gnuplot emitters.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "rough_ht/czdecomp.hpp"
#include "rough_ht/experiment.hpp"
#include "rough_ht/operators.hpp"
#include "rough_ht/stopping.hpp"

namespace rough_ht {

struct SweepRow {
  Site M = 0;
  std::string family;
  std::uint64_t seed = 0;
  std::size_t lambda_index = 0;
  double lambda = 0.0;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  std::array<double, 4> terms{};  ///< lambda |{T_k > lambda/4}| / ||f_0||_1, k = I..IV
  double g_ratio = 0.0;           ///< ||G_M||_2^2 / (lambda ||f_0||_1)
  double recon_err = 0.0;         ///< max |four-term reconstruction - purged f_0|, relative
  std::string status = "ok";
};

struct CellTiming {
  Site M = 0;
  std::string family;
  std::uint64_t seed = 0;
  double runtime_ms = 0.0;
  std::string status = "ok";
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<CellTiming> timings;
};

struct SweepCell {
  Site M;
  std::string family;
  std::uint64_t seed;
};

inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg) {
  std::vector<SweepCell> cells;
  for (Site M : cfg.M_list)
    for (const auto& fam : cfg.families)
      for (auto seed : cfg.seeds) cells.push_back({M, fam, seed});
  return cells;
}

/// Transform configurations, one per M, shared read-only by the cells.
inline std::map<Site, std::shared_ptr<const TransformConfig>> transform_configs(const ExperimentConfig& cfg) {
  std::map<Site, std::shared_ptr<const TransformConfig>> out;
  for (Site M : cfg.M_list)
    if (!out.count(M)) out[M] = std::make_shared<const TransformConfig>(M, cfg.theta, cfg.alpha, cfg.phi());
  return out;
}

inline LatticeFunction sweep_input(const ExperimentConfig& cfg, const SweepCell& c) {
  GeneratorParams p;
  p.spikes = cfg.spikes;
  p.height = cfg.height;
  return normalize_l1(generate_input(c.family, c.M, cfg.alpha, c.seed, p));
}

inline std::vector<double> sweep_lambdas(const ExperimentConfig& cfg, const LatticeFunction& f0, Site M) {
  if (!cfg.lambdas.empty()) return cfg.lambdas;
  double sup = 0.0;
  for (double v : f0.values()) sup = std::max(sup, std::fabs(v));
  return lambda_grid(lp_norm(f0, 1.0) / static_cast<double>(cfg.window(M).length()), 2.0 * sup,
                     cfg.lambdas_per_decade);
}

/// The pipeline at one lambda: CZ, purge, four-term split, maxima and G_M.
inline void split_terms(const LatticeFunction& f0, const TransformConfig& tc, const ExperimentConfig& cfg, SweepRow& row) {
  const double lambda = row.lambda;
  const double l1 = lp_norm(f0, 1.0);
  const auto dec = cz_decompose(f0, lambda);
  const auto purged = purge_small_cubes(f0, dec, cfg.purge_threshold(tc.M()));
  const auto split = four_term_split(purged, tc, lambda, dec.cubes, !cfg.terms);
  double sup = 0.0;
  for (double v : purged.values()) sup = std::max(sup, std::fabs(v));
  for (const auto& s : split.per_scale) {
    const auto diff = s.reconstruction() - purged;
    for (double v : diff.values()) row.recon_err = std::max(row.recon_err, std::fabs(v) / std::max(sup, 1e-300));
  }
  LatticeFunction G;
  if (cfg.terms) {
    const auto maxima = four_term_maxima(split, tc, &G);
    for (int k = 0; k < 4; ++k)
      row.terms[static_cast<std::size_t>(k)] =
          lambda * static_cast<double>(level_set_size(maxima.term[k], lambda / 4.0)) / l1;
  } else {
    G = split.G;
  }
  double g2 = 0.0;
  for (double v : G.values()) g2 += v * v;
  row.g_ratio = g2 / (lambda * l1);
}

inline std::pair<std::vector<SweepRow>, CellTiming> run_sweep_cell(const ExperimentConfig& cfg, const SweepCell& c,
                                                                   const TransformConfig& tc) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<SweepRow> rows;
  CellTiming timing{c.M, c.family, c.seed, 0.0, "ok"};
  auto base = [&](std::size_t i, double lambda) {
    SweepRow r;
    r.M = c.M;
    r.family = c.family;
    r.seed = c.seed;
    r.lambda_index = i;
    r.lambda = lambda;
    return r;
  };
  try {
    const auto f0 = sweep_input(cfg, c);
    if (f0.empty()) {
      auto r = base(0, 0.0);
      r.status = "degenerate";
      rows.push_back(r);
      timing.status = "degenerate";
    } else {
      const auto hmax = h_max(f0, tc);
      const Interval win = cfg.window(c.M);
      const bool overflow = !hmax.empty() && (hmax.min_site() < win.lo || hmax.max_site() >= win.hi);
      const auto lambdas = sweep_lambdas(cfg, f0, c.M);
      const double l1 = lp_norm(f0, 1.0);
      for (std::size_t i = 0; i < lambdas.size(); ++i) {
        auto r = base(i, lambdas[i]);
        r.ratio = weak11_ratio_from(hmax, l1, lambdas[i]);
        split_terms(f0, tc, cfg, r);
        if (overflow) r.status = "window-overflow";
        rows.push_back(r);
      }
      if (overflow) timing.status = "window-overflow";
    }
  } catch (const std::exception& e) {
    auto r = base(0, 0.0);
    r.status = std::string("error: ") + e.what();
    rows.push_back(r);
    timing.status = "error";
  }
  timing.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(rows), timing};
}

inline SweepReport weak11_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto tcs = transform_configs(cfg);
  const auto cells = sweep_cells(cfg);
  auto results = parallel_map(cells.size(), cfg.workers,
                              [&](std::size_t i) { return run_sweep_cell(cfg, cells[i], *tcs.at(cells[i].M)); });
  SweepReport rep;
  for (auto& [rows, timing] : results) {
    rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
    rep.timings.push_back(timing);
  }
  auto key = [](const SweepRow& r) { return std::tie(r.M, r.family, r.seed, r.lambda_index); };
  std::sort(rep.rows.begin(), rep.rows.end(), [&](const SweepRow& a, const SweepRow& b) { return key(a) < key(b); });
  return rep;
}

// ---------------------------------------------------------------------------

struct SweepSummary {
  std::map<Site, double> max_ratio;    ///< sup over families, seeds, lambda
  std::map<Site, double> max_g_ratio;
  std::map<std::string, std::map<Site, double>> max_ratio_by_family;
  double ratio_spread = 0.0;  ///< max over M / min over M of max_ratio
  double g_spread = 0.0;
  std::size_t failed_rows = 0;
};

inline double spread(const std::map<Site, double>& m) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& [M, v] : m) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (m.empty()) return 0.0;
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

inline SweepSummary summarize(const SweepReport& rep) {
  SweepSummary s;
  for (const auto& r : rep.rows) {
    if (r.status != "ok") {
      ++s.failed_rows;
      continue;
    }
    s.max_ratio[r.M] = std::max(s.max_ratio[r.M], r.ratio);
    s.max_g_ratio[r.M] = std::max(s.max_g_ratio[r.M], r.g_ratio);
    auto& fam = s.max_ratio_by_family[r.family];
    fam[r.M] = std::max(fam[r.M], r.ratio);
  }
  s.ratio_spread = spread(s.max_ratio);
  s.g_spread = spread(s.max_g_ratio);
  return s;
}

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// RFC 4180: quote fields holding commas, quotes or line breaks.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline void write_sweep_csv(std::ostream& os, const SweepReport& rep) {
  os << "M,family,seed,lambda_index,lambda,ratio,term_I,term_II,term_III,term_IV,g_ratio,recon_err,status\r\n";
  for (const auto& r : rep.rows) {
    os << r.M << ',' << csv_field(r.family) << ',' << r.seed << ',' << r.lambda_index << ',' << fmt_double(r.lambda)
       << ',' << fmt_double(r.ratio);
    for (double t : r.terms) os << ',' << fmt_double(t);
    os << ',' << fmt_double(r.g_ratio) << ',' << fmt_double(r.recon_err) << ',' << csv_field(r.status) << "\r\n";
  }
}

inline void write_timing_csv(std::ostream& os, const SweepReport& rep) {
  os << "M,family,seed,runtime_ms,status\r\n";
  for (const auto& t : rep.timings)
    os << t.M << ',' << csv_field(t.family) << ',' << t.seed << ',' << fmt_double(t.runtime_ms) << ','
       << csv_field(t.status) << "\r\n";
}

/// gnuplot columns: M max_ratio max_g_ratio
inline void write_ratio_dat(std::ostream& os, const SweepSummary& s) {
  os << "# M max_ratio max_g_ratio\n";
  for (const auto& [M, v] : s.max_ratio)
    os << M << ' ' << fmt_double(v) << ' ' << fmt_double(s.max_g_ratio.at(M)) << '\n';
}

// ---------------------------------------------------------------------------

/// sum over (A, i) of ||ER_{A,i}||_1 / ||f_0||_1 at height lambda, with the J grid of the config.
inline double er_ratio(const LatticeFunction& f0, const TransformConfig& tc, const ExperimentConfig& cfg, double lambda) {
  const double l1 = lp_norm(f0, 1.0);
  if (!(l1 > 0.0)) return 0.0;
  const auto dec = cz_decompose(f0, lambda);
  const auto purged = purge_small_cubes(f0, dec, cfg.purge_threshold(tc.M()));
  const auto fam_J = j_grid(cfg.j_scale(tc.M()), cfg.window(tc.M()));
  std::vector<Site> bands;
  for (Site N : tc.scales())
    for (Site A : active_bands(purged, lambda * static_cast<double>(N))) bands.push_back(A);
  std::sort(bands.begin(), bands.end());
  bands.erase(std::unique(bands.begin(), bands.end()), bands.end());
  double total = 0.0;
  for (Site A : bands)
    for (int i = 1; i <= 2; ++i) {
      std::vector<LatticeFunction> good;
      bool any = false;
      for (Site N : tc.scales()) {
        good.push_back(good_sum(purged, dec, A, N, i, lambda, cfg.alpha));
        any = any || !good.back().empty();
      }
      if (!any) continue;
      total += error_function(AveragedField(good, dec.cubes, tc), fam_J, l1).l1;
    }
  return total / l1;
}

struct ErRow {
  Site M = 0;
  std::string family;
  std::uint64_t seed = 0;
  double lambda = 0.0;  ///< level attaining the sup
  double ratio = 0.0;   ///< sup over the level grid
};

/// lambda = level / N_min, so lambda N_min is the same at every M.
inline double er_lambda(const TransformConfig& tc, double level) { return level / static_cast<double>(tc.min_scale()); }

/// lambda N_min in [1/16, 4], six points per decade.
inline std::vector<double> default_er_levels() { return lambda_grid(1.0 / 16.0, 4.0, 6); }

inline std::vector<ErRow> er_sweep(const ExperimentConfig& cfg, const std::vector<double>& levels = default_er_levels()) {
  cfg.validate();
  const auto tcs = transform_configs(cfg);
  const auto cells = sweep_cells(cfg);
  auto rows = parallel_map(cells.size(), cfg.workers, [&](std::size_t i) {
    const auto& c = cells[i];
    const auto& tc = *tcs.at(c.M);
    const auto f0 = sweep_input(cfg, c);
    ErRow r{c.M, c.family, c.seed, 0.0, -1.0};
    for (double level : levels) {
      const double lambda = er_lambda(tc, level);
      const double v = er_ratio(f0, tc, cfg, lambda);
      if (v > r.ratio) {
        r.ratio = v;
        r.lambda = lambda;
      }
    }
    return r;
  });
  return rows;
}

/// sup over families and seeds of the ER ratio, per M.
inline std::map<Site, double> er_sup_by_M(const std::vector<ErRow>& rows) {
  std::map<Site, double> out;
  for (const auto& r : rows) out[r.M] = std::max(out[r.M], r.ratio);
  return out;
}

/// Number of consecutive M pairs where the value does not decrease.
inline std::size_t inversions(const std::map<Site, double>& by_M) {
  std::size_t n = 0;
  const double* prev = nullptr;
  for (const auto& [M, v] : by_M) {
    if (prev && v >= *prev) ++n;
    prev = &v;
  }
  return n;
}

inline void write_er_csv(std::ostream& os, const std::vector<ErRow>& rows) {
  os << "M,family,seed,lambda,er_ratio\r\n";
  for (const auto& r : rows)
    os << r.M << ',' << csv_field(r.family) << ',' << r.seed << ',' << fmt_double(r.lambda) << ','
       << fmt_double(r.ratio) << "\r\n";
}

}  // namespace rough_ht
