// command-line front end: synthesizes scenarios, runs the estimators and
// the monte carlo sweeps, and writes csv artifacts

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <sinest/sinest.hpp>

namespace {

using namespace sinest;

uint64_t default_seed() {
  if (const char* env = std::getenv("SINEST_SEED")) {
    try {
      return std::stoull(env);
    } catch (...) {
      throw std::invalid_argument("SINEST_SEED is not a valid unsigned integer");
    }
  }
  return 1;
}

struct CommonOpts {
  std::string preset;
  std::string preset_file;
  std::optional<uint64_t> seed;
  std::string out;

  uint64_t master_seed() const { return seed ? *seed : default_seed(); }

  RunConfig load() const {
    if (!preset.empty() && !preset_file.empty())
      throw std::invalid_argument("give either --preset or --preset-file, not both");
    if (!preset.empty()) return parse_run_config(parse_kv(get_preset(preset)));
    if (!preset_file.empty()) return parse_run_config(parse_kv_file(preset_file));
    throw std::invalid_argument("a --preset or --preset-file is required");
  }
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--preset", c.preset, "named built-in preset");
  cmd->add_option("--preset-file", c.preset_file, "key=value preset file");
  cmd->add_option("--seed", c.seed, "master seed (default: SINEST_SEED or 1)");
  cmd->add_option("--out", c.out, "output csv path (default: stdout)");
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::invalid_argument("cannot open output file: " + out_path);
  f << text;
}

CVec load_series(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open input file: " + path);
  std::vector<cxd> vals;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    for (char& ch : t)
      if (ch == ',' || ch == '\t') ch = ' ';
    std::istringstream in(t);
    double re, im;
    if (!(in >> re >> im))
      throw std::invalid_argument("input line " + std::to_string(lineno) +
                                  ": expected 're im'");
    vals.emplace_back(re, im);
  }
  if (vals.empty()) throw std::invalid_argument("input file has no samples");
  CVec x(static_cast<int>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) x[static_cast<int>(i)] = vals[i];
  return x;
}

struct EstimatorOpts {
  std::string method = "proposed";
  std::optional<double> snr;
  std::optional<int> m;
  std::optional<double> beta;
  std::optional<int> m_sub;
  bool no_descend_esprit = false;
  bool tls = false;
  int grid = 0;
  int jobs = 1;
};

void add_estimator(CLI::App* cmd, EstimatorOpts& e, bool with_jobs) {
  cmd->add_option("--method", e.method, "estimator (default proposed)");
  cmd->add_option("--snr", e.snr, "snr in db; 'inf' for noiseless")
      ->transform([](std::string s) {
        if (s == "inf" || s == "+inf") return std::string("inf");
        return s;
      });
  cmd->add_option("--m", e.m, "covariance order");
  cmd->add_option("--beta", e.beta, "gate threshold scale");
  cmd->add_option("--m-sub", e.m_sub, "subarray length (array kind)");
  cmd->add_flag("--no-descend-esprit", e.no_descend_esprit,
                "skip descent on the gated esprit branch");
  cmd->add_flag("--tls", e.tls, "total-least-squares rotation solve");
  cmd->add_option("--grid", e.grid, "ml grid points (0: default)");
  if (with_jobs) cmd->add_option("--jobs", e.jobs, "worker threads");
}

void apply_estimator(const EstimatorOpts& e, RunConfig& rc) {
  if (e.m) rc.m = *e.m;
  if (e.beta) rc.beta = *e.beta;
  if (e.m_sub) rc.m_sub = *e.m_sub;
  if (e.snr) {
    rc.scenario.snr_db = *e.snr;
    rc.array.snr_db = *e.snr;
  }
}

CascadeConfig make_cascade(const RunConfig& rc, const EstimatorOpts& e) {
  CascadeConfig cfg;
  cfg.p = rc.scenario.p;
  cfg.m = rc.m;
  cfg.beta = rc.beta;
  cfg.descend_esprit_branch = !e.no_descend_esprit;
  cfg.tls = e.tls;
  return cfg;
}

DoaConfig make_doa(const RunConfig& rc, const EstimatorOpts& e) {
  DoaConfig cfg;
  cfg.p = rc.array.p;
  cfg.m_sub = rc.m_sub;
  cfg.beta = rc.beta;
  cfg.descend_esprit_branch = !e.no_descend_esprit;
  cfg.tls = e.tls;
  cfg.grid_points = e.grid;
  return cfg;
}

int cmd_estimate(const CommonOpts& com, const EstimatorOpts& eopt,
                 const std::string& input) {
  RunConfig rc = com.load();
  Method method = parse_method(eopt.method);
  EstimatorOpts e = eopt;
  apply_estimator(e, rc);

  if (rc.kind == "array") {
    CMat xs = synthesize_array(rc.array, com.master_seed());
    DoaConfig cfg = make_doa(rc, e);
    DoaEstimate est;
    switch (method) {
      case Method::MleGrid: est = doa_ml(xs, cfg); break;
      case Method::Esprit: {
        int ms = cfg.m_sub > 0 ? cfg.m_sub : rc.array.m_ant;
        CMat r = snapshot_covariance(xs, ms).first;
        est = detail::freqs_to_angles(esprit_from_eigs(herm_eig(r), cfg.p, cfg.tls));
        break;
      }
      case Method::EspritAc: {
        int ms = cfg.m_sub > 0 ? cfg.m_sub : rc.array.m_ant;
        CMat r = snapshot_covariance(zero_pad_snapshots(xs, ms), ms).first;
        est = detail::freqs_to_angles(esprit_from_eigs(herm_eig(r), cfg.p, cfg.tls));
        break;
      }
      default: {
        if (method == Method::EspritPlusRR)
          cfg.variant = CascadeVariant::EspritPlusRemoveReestimate;
        else if (method == Method::EspritAcDescent)
          cfg.variant = CascadeVariant::EspritAcPlusDescentOnly;
        else if (method != Method::Proposed)
          throw std::invalid_argument("method has no array form: " + eopt.method);
        est = doa_estimate(xs, cfg);
        break;
      }
    }
    std::cout << "angles_deg:";
    for (int i = 0; i < est.angles_deg.size(); ++i) std::cout << ' ' << fmt_double(est.angles_deg[i]);
    std::cout << "\nspatial_freqs:";
    for (int i = 0; i < est.spatial_freqs.size(); ++i)
      std::cout << ' ' << fmt_double(est.spatial_freqs[i]);
    std::cout << '\n';
    if (est.cost) std::cout << "cost: " << fmt_double(*est.cost) << '\n';
    std::cout << "branch: " << branch_name(est.branch) << '\n';
    if (est.clamped) std::cout << "clamped: 1\n";
    if (!com.out.empty()) {
      std::string csv = "component,angle_deg\n";
      for (int i = 0; i < est.angles_deg.size(); ++i)
        csv += std::to_string(i) + ',' + fmt_double(est.angles_deg[i]) + '\n';
      emit(com.out, csv);
    }
    return 0;
  }

  CVec x = input.empty() ? synthesize(rc.scenario, com.master_seed()) : load_series(input);
  CascadeConfig cfg = make_cascade(rc, e);
  const int p = cfg.p;
  FrequencyEstimate est;
  switch (method) {
    case Method::Esprit: est = esprit(x, p, cfg.m, cfg.tls); break;
    case Method::EspritAc: est = esprit_ac(x, p, cfg.m, cfg.tls); break;
    case Method::MleGrid: est = mle_grid(x, p, e.grid, cfg.descend); break;
    case Method::FastMl:
      est = fast_ml(x, p, periodogram_peaks(x, p), 8, 50, cfg.descend);
      break;
    case Method::EspritPlusRR: {
      cfg.variant = CascadeVariant::EspritPlusRemoveReestimate;
      est = cascade_estimate(x, cfg).estimate;
      break;
    }
    case Method::EspritAcDescent: {
      cfg.variant = CascadeVariant::EspritAcPlusDescentOnly;
      est = cascade_estimate(x, cfg).estimate;
      break;
    }
    case Method::Proposed: est = cascade_estimate(x, cfg).estimate; break;
  }
  if (!est.cost) est.cost = likelihood_cost(x, est.freqs);

  std::cout << "frequencies:";
  for (int i = 0; i < est.freqs.size(); ++i) std::cout << ' ' << fmt_double(est.freqs[i]);
  std::cout << '\n';
  std::cout << "cost: " << fmt_double(*est.cost) << '\n';
  std::cout << "branch: " << branch_name(est.branch) << '\n';
  if (!com.out.empty()) {
    std::string csv = "component,frequency\n";
    for (int i = 0; i < est.freqs.size(); ++i)
      csv += std::to_string(i) + ',' + fmt_double(est.freqs[i]) + '\n';
    emit(com.out, csv);
  }
  return 0;
}

struct SweepOpts {
  std::string methods;
  std::string snr_grid;
  std::optional<int> scenarios;
  std::optional<int> trials;
  std::string family;
  std::string dump_trials;
};

void apply_sweep(const SweepOpts& so, RunConfig& rc) {
  if (!so.methods.empty()) {
    rc.methods.clear();
    for (const std::string& m : split_list(so.methods)) rc.methods.push_back(parse_method(m));
  }
  if (!so.snr_grid.empty()) rc.snr_grid = parse_grid(so.snr_grid, "snr-grid");
  if (so.scenarios) rc.n_scenarios = *so.scenarios;
  if (so.trials) rc.trials = *so.trials;
  if (!so.family.empty()) rc.family = parse_family(so.family);
}

int cmd_sweep(const CommonOpts& com, const EstimatorOpts& eopt, const SweepOpts& sopt) {
  RunConfig rc = com.load();
  if (rc.kind != "time")
    throw std::invalid_argument("sweep needs a time-series preset; use doa-sweep");
  EstimatorOpts e = eopt;
  apply_estimator(e, rc);
  apply_sweep(sopt, rc);
  if (rc.snr_grid.empty()) throw std::invalid_argument("sweep: no snr grid configured");
  if (rc.methods.empty()) throw std::invalid_argument("sweep: no methods configured");
  if (rc.trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");

  SweepSpec spec;
  spec.family = rc.family;
  spec.base = rc.scenario;
  spec.methods = rc.methods;
  spec.n_scenarios = rc.n_scenarios;
  spec.trials_per_scenario = rc.trials;
  spec.master_seed = com.master_seed();
  spec.jobs = e.jobs;
  spec.cascade = make_cascade(rc, e);
  spec.mle_grid_points = e.grid;
  spec.keep_trials = !sopt.dump_trials.empty();

  // per-trial noise is independent of the snr index, so running the grid
  // one point at a time is bit-identical to one combined run and lets us
  // report progress
  SweepResult all;
  all.snr_grid = rc.snr_grid;
  all.methods = spec.methods;
  for (size_t si = 0; si < rc.snr_grid.size(); ++si) {
    SweepSpec one = spec;
    one.snr_grid = {rc.snr_grid[si]};
    SweepResult r = run_sweep(one);
    for (CellStats& c : r.cells) all.cells.push_back(std::move(c));
    for (TrialDump& d : r.trials) all.trials.push_back(std::move(d));
    std::cerr << "snr " << fmt_double(rc.snr_grid[si]) << " db done ("
              << (si + 1) << '/' << rc.snr_grid.size() << ")\n";
  }
  emit(com.out, csv_sweep(all));
  if (!sopt.dump_trials.empty()) {
    std::ofstream f(sopt.dump_trials, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open dump file: " + sopt.dump_trials);
    f << csv_trials(all, rc.scenario.p);
  }
  return 0;
}

int cmd_doa_sweep(const CommonOpts& com, const EstimatorOpts& eopt, const SweepOpts& sopt) {
  RunConfig rc = com.load();
  if (rc.kind != "array")
    throw std::invalid_argument("doa-sweep needs an array preset (kind = array)");
  EstimatorOpts e = eopt;
  apply_estimator(e, rc);
  apply_sweep(sopt, rc);
  if (rc.snr_grid.empty()) throw std::invalid_argument("doa-sweep: no snr grid configured");
  if (rc.methods.empty()) throw std::invalid_argument("doa-sweep: no methods configured");
  if (rc.trials < 1) throw std::invalid_argument("doa-sweep: trials must be >= 1");

  DoaSweepSpec spec;
  spec.base = rc.array;
  spec.methods = rc.methods;
  spec.trials = rc.trials;
  spec.master_seed = com.master_seed();
  spec.jobs = e.jobs;
  spec.doa = make_doa(rc, e);

  SweepResult all;
  all.snr_grid = rc.snr_grid;
  all.methods = spec.methods;
  for (size_t si = 0; si < rc.snr_grid.size(); ++si) {
    DoaSweepSpec one = spec;
    one.snr_grid = {rc.snr_grid[si]};
    SweepResult r = run_doa_sweep(one);
    for (CellStats& c : r.cells) all.cells.push_back(std::move(c));
    std::cerr << "snr " << fmt_double(rc.snr_grid[si]) << " db done ("
              << (si + 1) << '/' << rc.snr_grid.size() << ")\n";
  }
  emit(com.out, csv_sweep(all));
  return 0;
}

int cmd_histogram(const CommonOpts& com, const EstimatorOpts& eopt, const SweepOpts& sopt,
                  int bins, double lo, double hi, int component,
                  const std::string& values_kind) {
  RunConfig rc = com.load();
  if (rc.kind != "time")
    throw std::invalid_argument("histogram supports time-series presets only");
  EstimatorOpts e = eopt;
  apply_estimator(e, rc);
  apply_sweep(sopt, rc);
  rc.methods = {parse_method(e.method)};
  if (component < 0 || component >= rc.scenario.p)
    throw std::invalid_argument("histogram: component out of range");
  if (values_kind != "estimates" && values_kind != "errors")
    throw std::invalid_argument("histogram: --values must be estimates or errors");

  SweepSpec spec;
  spec.family = rc.family;
  spec.base = rc.scenario;
  spec.methods = rc.methods;
  spec.n_scenarios = rc.n_scenarios;
  spec.trials_per_scenario = rc.trials;
  spec.master_seed = com.master_seed();
  spec.jobs = e.jobs;
  spec.cascade = make_cascade(rc, e);
  spec.mle_grid_points = e.grid;
  spec.snr_grid = {rc.scenario.snr_db};
  if (!sopt.snr_grid.empty()) spec.snr_grid = parse_grid(sopt.snr_grid, "snr");
  if (spec.snr_grid.size() != 1)
    throw std::invalid_argument("histogram: exactly one snr point");
  spec.keep_trials = true;

  SweepResult r = run_sweep(spec);
  std::vector<double> vals;
  for (const TrialDump& d : r.trials) {
    if (d.failed) continue;
    RVec err = pair_estimates(d.f_est, d.f_true);
    if (values_kind == "errors") {
      vals.push_back(err[component]);
    } else {
      double v = d.f_true[component] + err[component];
      v -= std::floor(v);
      vals.push_back(v);
    }
  }
  emit(com.out, csv_histogram(histogram(vals, bins, lo, hi)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-snr multi-sinusoid frequency estimation toolkit"};
  app.require_subcommand(1);

  CommonOpts com_est, com_sweep, com_doa, com_hist;
  EstimatorOpts e_est, e_sweep, e_doa, e_hist;
  SweepOpts s_sweep, s_doa, s_hist;
  std::string input;
  int bins = 100, component = 0;
  double lo = 0.0, hi = 1.0;
  std::string values_kind = "estimates";

  CLI::App* est = app.add_subcommand("estimate", "run one estimator on one record");
  add_common(est, com_est);
  add_estimator(est, e_est, false);
  est->add_option("--input", input, "load samples from file ('re im' per line)");

  CLI::App* sw = app.add_subcommand("sweep", "monte carlo sweep over snr");
  add_common(sw, com_sweep);
  add_estimator(sw, e_sweep, true);
  sw->add_option("--methods", s_sweep.methods, "comma list of methods");
  sw->add_option("--snr-grid", s_sweep.snr_grid, "grid: values and lo:hi:step ranges");
  sw->add_option("--scenarios", s_sweep.scenarios, "scenario draws");
  sw->add_option("--trials", s_sweep.trials, "trials per scenario");
  sw->add_option("--family", s_sweep.family, "fixed | random-phase | random-params");
  sw->add_option("--dump-trials", s_sweep.dump_trials, "write per-trial csv");

  CLI::App* dsw = app.add_subcommand("doa-sweep", "monte carlo sweep for the array case");
  add_common(dsw, com_doa);
  add_estimator(dsw, e_doa, true);
  dsw->add_option("--methods", s_doa.methods, "comma list of methods");
  dsw->add_option("--snr-grid", s_doa.snr_grid, "grid: values and lo:hi:step ranges");
  dsw->add_option("--trials", s_doa.trials, "trials");

  CLI::App* hg = app.add_subcommand("histogram", "histogram of estimates at one snr");
  add_common(hg, com_hist);
  add_estimator(hg, e_hist, true);
  hg->add_option("--trials", s_hist.trials, "trials");
  hg->add_option("--bins", bins, "bin count");
  hg->add_option("--lo", lo, "range low edge");
  hg->add_option("--hi", hi, "range high edge");
  hg->add_option("--component", component, "which component (by ascending truth)");
  hg->add_option("--values", values_kind, "estimates | errors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (est->parsed()) return cmd_estimate(com_est, e_est, input);
    if (sw->parsed()) return cmd_sweep(com_sweep, e_sweep, s_sweep);
    if (dsw->parsed()) return cmd_doa_sweep(com_doa, e_doa, s_doa);
    if (hg->parsed()) return cmd_histogram(com_hist, e_hist, s_hist, bins, lo, hi,
                                           component, values_kind);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
