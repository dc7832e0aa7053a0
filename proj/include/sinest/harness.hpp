#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "cascade.hpp"
#include "doa.hpp"
#include "signal.hpp"
#include "types.hpp"

namespace sinest {

enum class Method {
  Esprit,          // raw subspace estimate
  EspritAc,        // raw zero-padded subspace estimate
  Proposed,        // full cascade
  MleGrid,         // grid-initialized maximum likelihood
  FastMl,          // coordinate-wise search from periodogram peaks
  EspritPlusRR,    // ablation: ungated remove-and-re-estimate
  EspritAcDescent, // ablation: zero-padded subspace + descent only
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::Esprit: return "esprit";
    case Method::EspritAc: return "esprit-ac";
    case Method::Proposed: return "proposed";
    case Method::MleGrid: return "ml";
    case Method::FastMl: return "fast-ml";
    case Method::EspritPlusRR: return "esprit-rr";
    case Method::EspritAcDescent: return "esprit-ac-descent";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::Esprit, Method::EspritAc, Method::Proposed, Method::MleGrid,
                   Method::FastMl, Method::EspritPlusRR, Method::EspritAcDescent})
    if (s == method_name(m)) return m;
  throw std::invalid_argument("unknown method: " + s);
}

namespace detail {

// minimum sum-of-squares assignment of estimates to ground truth; p <= 5 in
// practice so exhaustive permutation search is exact and cheap
template <typename ErrFn>
inline RVec pair_with(const RVec& est, const RVec& truth, ErrFn err) {
  const int p = static_cast<int>(truth.size());
  if (est.size() != p) throw std::invalid_argument("pair_estimates: size mismatch");
  std::vector<int> perm(p), best_perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  best_perm = perm;
  double best = kInf;
  do {
    double s = 0.0;
    for (int i = 0; i < p; ++i) {
      double e = err(est[perm[i]], truth[i]);
      s += e * e;
    }
    if (s < best) {
      best = s;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  RVec e(p);
  for (int i = 0; i < p; ++i) e[i] = err(est[best_perm[i]], truth[i]);
  return e;
}

}  // namespace detail

// paired frequency errors on the unit circle, component i against truth i
inline RVec pair_estimates(const RVec& est, const RVec& truth) {
  return detail::pair_with(est, truth, [](double a, double b) { return wrapped_error(a, b); });
}

// paired plain differences, for angles
inline RVec pair_linear(const RVec& est, const RVec& truth) {
  return detail::pair_with(est, truth, [](double a, double b) { return a - b; });
}

enum class SweepFamily { Fixed, RandomPhase, RandomParams };

struct SweepSpec {
  SweepFamily family = SweepFamily::Fixed;
  Scenario base;                  // layout for Fixed/RandomPhase; p and n for all
  std::vector<double> snr_grid;
  std::vector<Method> methods;
  int n_scenarios = 1;
  int trials_per_scenario = 100;
  uint64_t master_seed = 1;
  int jobs = 1;
  CascadeConfig cascade;          // m, beta, variant knobs; p is taken from the scenario
  int mle_grid_points = 0;
  int fast_ml_grid_mult = 8;
  bool keep_errors = false;
  bool keep_trials = false;       // retain the per-trial dump rows
};

struct CellStats {
  double snr_db = 0.0;
  Method method = Method::Proposed;
  double overall_mse = 0.0;       // sum over components of per-component mse
  double avg_bias = 0.0;          // mean over components of per-component bias
  RVec bias_per_component;
  long n_trials = 0;              // successful trials
  long n_failed = 0;
  long n_clamped = 0;             // array case: estimates pushed to end-fire
  double frac_esprit = 0.0;
  double frac_espritac = 0.0;
  double frac_rr = 0.0;
  std::vector<RVec> errors;       // per successful trial, when requested
};

struct TrialDump {
  long scenario_id = 0;
  uint64_t trial_seed = 0;
  double snr_db = 0.0;
  Method method = Method::Proposed;
  RVec f_true, f_est;
  double cost = 0.0;
  Branch branch = Branch::Esprit;
  bool failed = false;
};

struct SweepResult {
  std::vector<double> snr_grid;
  std::vector<Method> methods;
  std::vector<CellStats> cells;   // snr-major
  std::vector<TrialDump> trials;  // populated when the spec asks for a dump

  const CellStats& at(size_t si, size_t mi) const { return cells[si * methods.size() + mi]; }
  CellStats& at(size_t si, size_t mi) { return cells[si * methods.size() + mi]; }
};

namespace detail {

constexpr uint64_t kTagScenario = 0x5C11;
constexpr uint64_t kTagNoise = 0x4015;

struct TrialRecord {
  bool failed = true;
  bool clamped = false;
  Branch branch = Branch::Esprit;
  RVec errors;
  RVec est;
  double cost = std::numeric_limits<double>::quiet_NaN();
};

// one record per (unit, snr, method); preallocated so workers write disjoint
// slots and the reduction never depends on scheduling
struct UnitGrid {
  std::vector<TrialRecord> recs;
  size_t n_snr = 0, n_methods = 0;
  TrialRecord& at(size_t u, size_t si, size_t mi) {
    return recs[(u * n_snr + si) * n_methods + mi];
  }
};

template <typename Work>
inline void run_parallel(long n_units, int jobs, Work work) {
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    for (long u = 0; u < n_units; ++u) work(u);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  auto body = [&] {
    for (;;) {
      long u = next.fetch_add(1);
      if (u >= n_units) return;
      try {
        work(u);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < jobs; ++i) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline void reduce_cells(SweepResult& out, UnitGrid& grid, long n_units, int p,
                         bool keep_errors) {
  const size_t n_snr = out.snr_grid.size();
  const size_t n_methods = out.methods.size();
  for (size_t si = 0; si < n_snr; ++si)
    for (size_t mi = 0; mi < n_methods; ++mi) {
      CellStats& c = out.at(si, mi);
      c.snr_db = out.snr_grid[si];
      c.method = out.methods[mi];
      c.bias_per_component = RVec::Zero(p);
      double se2 = 0.0;
      long n_esprit = 0, n_ac = 0, n_rr = 0;
      for (long u = 0; u < n_units; ++u) {
        const TrialRecord& r = grid.at(u, si, mi);
        if (r.failed) {
          ++c.n_failed;
          continue;
        }
        ++c.n_trials;
        if (r.clamped) ++c.n_clamped;
        se2 += r.errors.squaredNorm();
        c.bias_per_component += r.errors;
        switch (r.branch) {
          case Branch::Esprit: ++n_esprit; break;
          case Branch::EspritAc: ++n_ac; break;
          case Branch::EspritAcRemoveReestimate: ++n_rr; break;
        }
        if (keep_errors) c.errors.push_back(r.errors);
      }
      // branch provenance is a cascade concept; likelihood-only methods
      // report zero fractions
      const bool branchful =
          c.method != Method::MleGrid && c.method != Method::FastMl;
      if (c.n_trials > 0) {
        c.overall_mse = se2 / static_cast<double>(c.n_trials);
        c.bias_per_component /= static_cast<double>(c.n_trials);
        c.avg_bias = c.bias_per_component.mean();
        if (branchful) {
          c.frac_esprit = static_cast<double>(n_esprit) / c.n_trials;
          c.frac_espritac = static_cast<double>(n_ac) / c.n_trials;
          c.frac_rr = static_cast<double>(n_rr) / c.n_trials;
        }
      }
    }
}

}  // namespace detail

inline SweepResult run_sweep(const SweepSpec& spec) {
  spec.base.validate();
  if (spec.snr_grid.empty()) throw std::invalid_argument("run_sweep: empty snr grid");
  if (spec.methods.empty()) throw std::invalid_argument("run_sweep: no methods");
  if (spec.n_scenarios < 1 || spec.trials_per_scenario < 1)
    throw std::invalid_argument("run_sweep: trial counts must be >= 1");
  const int p = spec.base.p;
  const int n = spec.base.n;
  for (Method m : spec.methods)
    if (m == Method::MleGrid && p > 3)
      throw std::invalid_argument("run_sweep: ml method supports p <= 3 only");

  const long n_scen = spec.n_scenarios;
  const long trials = spec.trials_per_scenario;
  const long n_units = n_scen * trials;
  const size_t n_snr = spec.snr_grid.size();
  const size_t n_methods = spec.methods.size();

  // scenario layouts and clean signals are fixed per scenario index
  std::vector<Scenario> scen(n_scen);
  std::vector<CVec> clean(n_scen);
  for (long s = 0; s < n_scen; ++s) {
    uint64_t sseed = derive_seed(spec.master_seed, detail::kTagScenario, s);
    switch (spec.family) {
      case SweepFamily::Fixed: scen[s] = spec.base; break;
      case SweepFamily::RandomPhase: scen[s] = random_phase_scenario(spec.base, sseed); break;
      case SweepFamily::RandomParams: scen[s] = random_scenario(p, n, spec.base.snr_db, sseed); break;
    }
    clean[s] = synthesize_noiseless(scen[s]);
  }

  detail::UnitGrid grid;
  grid.n_snr = n_snr;
  grid.n_methods = n_methods;
  grid.recs.resize(static_cast<size_t>(n_units) * n_snr * n_methods);

  CascadeConfig base_cfg = spec.cascade;
  base_cfg.p = p;

  detail::run_parallel(n_units, spec.jobs, [&](long u) {
    const long s = u / trials;
    const long t = u % trials;
    // noise excludes the snr index so realizations are common across snr
    CVec w = unit_noise(n, derive_seed(spec.master_seed, detail::kTagNoise, s, t));
    for (size_t si = 0; si < n_snr; ++si) {
      double sigma2 = std::isinf(spec.snr_grid[si]) ? 0.0
                          : std::pow(10.0, -spec.snr_grid[si] / 10.0);
      CVec x = clean[s] + std::sqrt(sigma2) * w;
      for (size_t mi = 0; mi < n_methods; ++mi) {
        detail::TrialRecord& rec = grid.at(u, si, mi);
        try {
          FrequencyEstimate est;
          switch (spec.methods[mi]) {
            case Method::Esprit: {
              est = esprit(x, p, base_cfg.m, base_cfg.tls);
              rec.branch = Branch::Esprit;
              break;
            }
            case Method::EspritAc: {
              est = esprit_ac(x, p, base_cfg.m, base_cfg.tls);
              rec.branch = Branch::EspritAc;
              break;
            }
            case Method::Proposed: {
              CascadeResult cr = cascade_estimate(x, base_cfg);
              est = cr.estimate;
              rec.branch = cr.trace.branch;
              break;
            }
            case Method::MleGrid: {
              est = mle_grid(x, p, spec.mle_grid_points, base_cfg.descend);
              break;
            }
            case Method::FastMl: {
              RVec init = periodogram_peaks(x, p, spec.fast_ml_grid_mult);
              est = fast_ml(x, p, init, spec.fast_ml_grid_mult, 50, base_cfg.descend);
              break;
            }
            case Method::EspritPlusRR: {
              CascadeConfig cfg = base_cfg;
              cfg.variant = CascadeVariant::EspritPlusRemoveReestimate;
              CascadeResult cr = cascade_estimate(x, cfg);
              est = cr.estimate;
              rec.branch = cr.trace.branch;
              break;
            }
            case Method::EspritAcDescent: {
              CascadeConfig cfg = base_cfg;
              cfg.variant = CascadeVariant::EspritAcPlusDescentOnly;
              CascadeResult cr = cascade_estimate(x, cfg);
              est = cr.estimate;
              rec.branch = cr.trace.branch;
              break;
            }
          }
          rec.errors = pair_estimates(est.freqs, scen[s].frequencies);
          rec.est = est.freqs;
          if (est.cost) rec.cost = *est.cost;
          rec.failed = false;
        } catch (const numerical_error&) {
          rec.failed = true;
        }
      }
    }
  });

  SweepResult out;
  out.snr_grid = spec.snr_grid;
  out.methods = spec.methods;
  out.cells.resize(n_snr * n_methods);
  detail::reduce_cells(out, grid, n_units, p, spec.keep_errors);
  if (spec.keep_trials) {
    out.trials.reserve(static_cast<size_t>(n_units) * n_snr * n_methods);
    for (long u = 0; u < n_units; ++u) {
      const long s = u / trials;
      const long t = u % trials;
      for (size_t si = 0; si < n_snr; ++si)
        for (size_t mi = 0; mi < n_methods; ++mi) {
          const detail::TrialRecord& r = grid.at(u, si, mi);
          TrialDump d;
          d.scenario_id = s;
          d.trial_seed = derive_seed(spec.master_seed, detail::kTagNoise, s, t);
          d.snr_db = spec.snr_grid[si];
          d.method = spec.methods[mi];
          d.f_true = scen[s].frequencies;
          d.f_est = r.est;
          d.cost = r.cost;
          d.branch = r.branch;
          d.failed = r.failed;
          out.trials.push_back(std::move(d));
        }
    }
  }
  return out;
}

struct DoaSweepSpec {
  ArrayScenario base;
  std::vector<double> snr_grid;
  std::vector<Method> methods;    // esprit, esprit-ac, proposed, ml and the ablations
  int trials = 100;
  uint64_t master_seed = 1;
  int jobs = 1;
  DoaConfig doa;
};

inline SweepResult run_doa_sweep(const DoaSweepSpec& spec) {
  spec.base.validate();
  if (spec.snr_grid.empty()) throw std::invalid_argument("run_doa_sweep: empty snr grid");
  if (spec.methods.empty()) throw std::invalid_argument("run_doa_sweep: no methods");
  if (spec.trials < 1) throw std::invalid_argument("run_doa_sweep: trials must be >= 1");
  for (Method m : spec.methods)
    if (m == Method::FastMl)
      throw std::invalid_argument("run_doa_sweep: fast-ml has no array form");

  const int p = spec.base.p;
  const int m_ant = spec.base.m_ant;
  const size_t n_snr = spec.snr_grid.size();
  const size_t n_methods = spec.methods.size();

  DoaConfig base_cfg = spec.doa;
  base_cfg.p = p;
  const int m_sub = base_cfg.m_sub > 0 ? base_cfg.m_sub : m_ant;

  detail::UnitGrid grid;
  grid.n_snr = n_snr;
  grid.n_methods = n_methods;
  grid.recs.resize(static_cast<size_t>(spec.trials) * n_snr * n_methods);

  detail::run_parallel(spec.trials, spec.jobs, [&](long t) {
    auto [clean, w] = synthesize_array_parts(
        spec.base, derive_seed(spec.master_seed, detail::kTagNoise, t));
    for (size_t si = 0; si < n_snr; ++si) {
      double sigma2 = std::isinf(spec.snr_grid[si]) ? 0.0
                          : std::pow(10.0, -spec.snr_grid[si] / 10.0);
      CMat xs = clean + std::sqrt(sigma2) * w;
      for (size_t mi = 0; mi < n_methods; ++mi) {
        detail::TrialRecord& rec = grid.at(t, si, mi);
        try {
          DoaEstimate est;
          switch (spec.methods[mi]) {
            case Method::Esprit: {
              CMat r = snapshot_covariance(xs, m_sub).first;
              est = detail::freqs_to_angles(esprit_from_eigs(herm_eig(r), p, base_cfg.tls));
              break;
            }
            case Method::EspritAc: {
              CMat r = snapshot_covariance(zero_pad_snapshots(xs, m_sub), m_sub).first;
              FrequencyEstimate fe = esprit_from_eigs(herm_eig(r), p, base_cfg.tls);
              fe.branch = Branch::EspritAc;
              est = detail::freqs_to_angles(fe);
              break;
            }
            case Method::MleGrid: {
              est = doa_ml(xs, base_cfg);
              break;
            }
            default: {
              DoaConfig cfg = base_cfg;
              if (spec.methods[mi] == Method::EspritPlusRR)
                cfg.variant = CascadeVariant::EspritPlusRemoveReestimate;
              else if (spec.methods[mi] == Method::EspritAcDescent)
                cfg.variant = CascadeVariant::EspritAcPlusDescentOnly;
              est = doa_estimate(xs, cfg);
              break;
            }
          }
          rec.errors = pair_linear(est.angles_deg, spec.base.angles_deg);
          rec.branch = est.branch;
          rec.clamped = est.clamped;
          rec.failed = false;
        } catch (const numerical_error&) {
          rec.failed = true;
        }
      }
    }
  });

  SweepResult out;
  out.snr_grid = spec.snr_grid;
  out.methods = spec.methods;
  out.cells.resize(n_snr * n_methods);
  detail::reduce_cells(out, grid, spec.trials, p, true);
  return out;
}

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<long> counts;
  long underflow = 0, overflow = 0;
};

inline Histogram histogram(const std::vector<double>& values, int bins, double lo, double hi) {
  if (bins < 2) throw std::invalid_argument("histogram: bins must be >= 2");
  if (!(hi > lo)) throw std::invalid_argument("histogram: need hi > lo");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (v < lo) {
      ++h.underflow;
    } else if (v >= hi) {
      ++h.overflow;
    } else {
      int b = static_cast<int>((v - lo) / (hi - lo) * bins);
      if (b == bins) b = bins - 1;
      ++h.counts[b];
    }
  }
  return h;
}

}  // namespace sinest
