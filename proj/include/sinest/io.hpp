#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "harness.hpp"
#include "types.hpp"

namespace sinest {

// shortest round-trip decimal
inline std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

using KvSection = std::map<std::string, std::string>;
using KvConfig = std::map<std::string, KvSection>;

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// ini-style key = value text with [section] headers and # comments
inline KvConfig parse_kv(const std::string& text) {
  KvConfig cfg;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(t.substr(1, t.size() - 2));
      cfg[section];
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    cfg[section][key] = val;
  }
  return cfg;
}

inline KvConfig parse_kv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_kv(ss.str());
}

inline double parse_double(const std::string& s, const std::string& what) {
  std::string t = trim(s);
  if (t == "inf" || t == "+inf") return kInf;
  if (t == "-inf") return -kInf;
  try {
    size_t pos = 0;
    double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("bad number for " + what + ": '" + s + "'");
  }
}

inline long parse_long(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    long v = std::stol(trim(s), &pos);
    if (pos != trim(s).size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("bad integer for " + what + ": '" + s + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

inline RVec parse_double_list(const std::string& s, const std::string& what) {
  auto toks = split_list(s);
  RVec v(static_cast<int>(toks.size()));
  for (size_t i = 0; i < toks.size(); ++i) v[static_cast<int>(i)] = parse_double(toks[i], what);
  return v;
}

// comma list of values and lo:hi:step ranges (inclusive ends)
inline std::vector<double> parse_grid(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const std::string& tok : split_list(s)) {
    size_t c1 = tok.find(':');
    if (c1 == std::string::npos) {
      out.push_back(parse_double(tok, what));
      continue;
    }
    size_t c2 = tok.find(':', c1 + 1);
    if (c2 == std::string::npos)
      throw std::invalid_argument(what + ": range needs lo:hi:step, got '" + tok + "'");
    double lo = parse_double(tok.substr(0, c1), what);
    double hi = parse_double(tok.substr(c1 + 1, c2 - c1 - 1), what);
    double step = parse_double(tok.substr(c2 + 1), what);
    if (!(step > 0) || hi < lo)
      throw std::invalid_argument(what + ": bad range '" + tok + "'");
    for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument(what + ": empty grid");
  return out;
}

inline SweepFamily parse_family(const std::string& s) {
  if (s == "fixed") return SweepFamily::Fixed;
  if (s == "random-phase") return SweepFamily::RandomPhase;
  if (s == "random-params") return SweepFamily::RandomParams;
  throw std::invalid_argument("unknown family: " + s);
}

inline const char* family_name(SweepFamily f) {
  switch (f) {
    case SweepFamily::Fixed: return "fixed";
    case SweepFamily::RandomPhase: return "random-phase";
    case SweepFamily::RandomParams: return "random-params";
  }
  return "?";
}

// one parsed run configuration: scenario, estimator knobs and sweep shape
struct RunConfig {
  int version = 1;
  std::string kind = "time";      // "time" or "array"
  Scenario scenario;
  ArrayScenario array;
  int m = 18;
  double beta = 0.72;
  int m_sub = 0;
  SweepFamily family = SweepFamily::Fixed;
  std::vector<double> snr_grid;
  std::vector<Method> methods;
  int n_scenarios = 1;
  int trials = 10000;
};

inline RunConfig parse_run_config(const KvConfig& cfg) {
  RunConfig rc;
  auto top = cfg.find("");
  if (top != cfg.end()) {
    if (auto it = top->second.find("version"); it != top->second.end()) {
      rc.version = static_cast<int>(parse_long(it->second, "version"));
      if (rc.version != 1) throw std::invalid_argument("unsupported config version");
    }
    if (auto it = top->second.find("kind"); it != top->second.end()) {
      rc.kind = it->second;
      if (rc.kind != "time" && rc.kind != "array")
        throw std::invalid_argument("kind must be time or array");
    }
  }

  auto sc = cfg.find("scenario");
  if (sc == cfg.end()) throw std::invalid_argument("config: missing [scenario]");
  const KvSection& s = sc->second;
  auto need = [&](const char* k) -> const std::string& {
    auto it = s.find(k);
    if (it == s.end()) throw std::invalid_argument(std::string("scenario: missing ") + k);
    return it->second;
  };
  if (rc.kind == "time") {
    rc.scenario.p = static_cast<int>(parse_long(need("p"), "p"));
    rc.scenario.n = static_cast<int>(parse_long(need("n"), "n"));
    rc.scenario.frequencies = parse_double_list(need("freqs"), "freqs");
    rc.scenario.amplitudes = parse_double_list(need("amps"), "amps");
    rc.scenario.phases = parse_double_list(need("phases"), "phases");
    if (auto it = s.find("snr_db"); it != s.end())
      rc.scenario.snr_db = parse_double(it->second, "snr_db");
    rc.scenario.validate();
  } else {
    rc.array.p = static_cast<int>(parse_long(need("p"), "p"));
    rc.array.m_ant = static_cast<int>(parse_long(need("m_ant"), "m_ant"));
    rc.array.k = static_cast<int>(parse_long(need("k"), "k"));
    rc.array.angles_deg = parse_double_list(need("angles"), "angles");
    if (auto it = s.find("snr_db"); it != s.end())
      rc.array.snr_db = parse_double(it->second, "snr_db");
    if (auto it = s.find("sources"); it != s.end()) {
      if (it->second == "gaussian") rc.array.sources = SourceModel::Gaussian;
      else if (it->second == "constant-modulus") rc.array.sources = SourceModel::ConstantModulus;
      else throw std::invalid_argument("sources must be gaussian or constant-modulus");
    }
    rc.array.validate();
  }

  if (auto es = cfg.find("estimator"); es != cfg.end()) {
    const KvSection& e = es->second;
    if (auto it = e.find("m"); it != e.end()) rc.m = static_cast<int>(parse_long(it->second, "m"));
    if (auto it = e.find("beta"); it != e.end()) rc.beta = parse_double(it->second, "beta");
    if (auto it = e.find("m_sub"); it != e.end())
      rc.m_sub = static_cast<int>(parse_long(it->second, "m_sub"));
  }

  if (auto sw = cfg.find("sweep"); sw != cfg.end()) {
    const KvSection& w = sw->second;
    if (auto it = w.find("family"); it != w.end()) rc.family = parse_family(it->second);
    if (auto it = w.find("snr_grid"); it != w.end())
      rc.snr_grid = parse_grid(it->second, "snr_grid");
    if (auto it = w.find("methods"); it != w.end())
      for (const std::string& m : split_list(it->second)) rc.methods.push_back(parse_method(m));
    if (auto it = w.find("scenarios"); it != w.end())
      rc.n_scenarios = static_cast<int>(parse_long(it->second, "scenarios"));
    if (auto it = w.find("trials"); it != w.end())
      rc.trials = static_cast<int>(parse_long(it->second, "trials"));
  }
  return rc;
}

// ---- embedded presets ----------------------------------------------------

inline const std::map<std::string, std::string>& preset_table() {
  static const std::map<std::string, std::string> t = {
      {"kt82", R"(version = 1
kind = time

[scenario]
p = 2
n = 25
freqs = 0.5, 0.52
amps = 1, 1
phases = 0, 0
snr_db = 10

[estimator]
m = 18
beta = 0.72

[sweep]
family = fixed
snr_grid = 0:24:1
methods = esprit, esprit-ac, proposed
trials = 10000
)"},
      {"fig2", R"(version = 1
kind = time

[scenario]
p = 2
n = 25
freqs = 0.5, 0.52
amps = 1, 1
phases = 0, 0
snr_db = 10

[estimator]
m = 18
beta = 0.72

[sweep]
family = fixed
snr_grid = 0:24:1
methods = esprit, esprit-ac, ml
trials = 10000
)"},
      {"sec3-three-sin", R"(version = 1
kind = time

[scenario]
p = 3
n = 25
freqs = 0.35, 0.5, 0.52
amps = 1, 0.5, 0.53
phases = 0, 0.7853981633974483, 0
snr_db = 10

[estimator]
m = 18
beta = 0.72

[sweep]
family = fixed
snr_grid = 10:20:2
methods = proposed
trials = 10000
)"},
      {"table1", R"(version = 1
kind = time

[scenario]
p = 2
n = 25
freqs = 0.5, 0.52
amps = 1, 1
phases = 0, 0
snr_db = 10

[estimator]
m = 18
beta = 0.72

[sweep]
family = random-phase
snr_grid = 6, 10, 14
methods = proposed
scenarios = 200
trials = 50
)"},
      {"table1-p3", R"(version = 1
kind = time

[scenario]
p = 3
n = 25
freqs = 0.35, 0.5, 0.52
amps = 1, 0.5, 0.53
phases = 0, 0.7853981633974483, 0
snr_db = 16

[estimator]
m = 18
beta = 0.72

[sweep]
family = random-phase
snr_grid = 14, 16, 18
methods = proposed
scenarios = 200
trials = 50
)"},
      {"fig4a", R"(version = 1
kind = time

[scenario]
p = 3
n = 25
freqs = 0.3, 0.5, 0.52
amps = 1, 1, 1
phases = 0, 0.7853981633974483, 0
snr_db = 12

[estimator]
m = 18
beta = 0.72

[sweep]
family = fixed
snr_grid = 8:24:2
methods = fast-ml, proposed
trials = 2000
)"},
      {"fig4b", R"(version = 1
kind = time

[scenario]
p = 3
n = 25
freqs = 0.3, 0.5, 0.52
amps = 1, 1, 1
phases = 3.141592653589793, 1.5707963267948966, 0
snr_db = 12

[estimator]
m = 18
beta = 0.72

[sweep]
family = fixed
snr_grid = 8:24:2
methods = fast-ml, proposed
trials = 2000
)"},
      {"rand-p2", R"(version = 1
kind = time

[scenario]
p = 2
n = 25
freqs = 0.5, 0.52
amps = 1, 1
phases = 0, 0
snr_db = 10

[estimator]
m = 18
beta = 0.72

[sweep]
family = random-phase
snr_grid = 6:20:2
methods = proposed, ml
scenarios = 200
trials = 50
)"},
      {"fig6", R"(version = 1
kind = array

[scenario]
p = 2
m_ant = 10
k = 10
angles = 35, 37
sources = gaussian
snr_db = 10

[estimator]
m_sub = 10
beta = 0.72

[sweep]
snr_grid = 0:20:2
methods = esprit, proposed, ml
trials = 2000
)"},
  };
  return t;
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : preset_table()) out.push_back(k);
  return out;
}

inline const std::string& get_preset(const std::string& name) {
  auto it = preset_table().find(name);
  if (it == preset_table().end()) throw std::invalid_argument("unknown preset: " + name);
  return it->second;
}

// ---- csv -------------------------------------------------------------------

inline std::string csv_sweep(const SweepResult& r) {
  std::string out =
      "snr_db,method,overall_mse,avg_bias,n_trials,n_failed,"
      "frac_branch_esprit,frac_branch_espritac,frac_branch_rr\n";
  for (size_t si = 0; si < r.snr_grid.size(); ++si)
    for (size_t mi = 0; mi < r.methods.size(); ++mi) {
      const CellStats& c = r.at(si, mi);
      out += fmt_double(c.snr_db);
      out += ',';
      out += method_name(c.method);
      out += ',';
      out += fmt_double(c.overall_mse);
      out += ',';
      out += fmt_double(c.avg_bias);
      out += ',';
      out += std::to_string(c.n_trials);
      out += ',';
      out += std::to_string(c.n_failed);
      out += ',';
      out += fmt_double(c.frac_esprit);
      out += ',';
      out += fmt_double(c.frac_espritac);
      out += ',';
      out += fmt_double(c.frac_rr);
      out += '\n';
    }
  return out;
}

inline std::string csv_trials(const SweepResult& r, int p) {
  std::string out = "scenario_id,trial_seed,snr_db,method";
  for (int i = 0; i < p; ++i) out += ",f_true_" + std::to_string(i);
  for (int i = 0; i < p; ++i) out += ",f_est_" + std::to_string(i);
  out += ",cost,branch,failed\n";
  for (const TrialDump& d : r.trials) {
    out += std::to_string(d.scenario_id);
    out += ',';
    out += std::to_string(d.trial_seed);
    out += ',';
    out += fmt_double(d.snr_db);
    out += ',';
    out += method_name(d.method);
    for (int i = 0; i < p; ++i)
      out += ',' + fmt_double(static_cast<int>(d.f_true.size()) > i ? d.f_true[i] : 0.0);
    for (int i = 0; i < p; ++i)
      out += ',' + (d.failed || static_cast<int>(d.f_est.size()) <= i ? std::string("nan")
                                                                      : fmt_double(d.f_est[i]));
    out += ',';
    out += d.failed ? "nan" : fmt_double(d.cost);
    out += ',';
    out += branch_name(d.branch);
    out += ',';
    out += d.failed ? "1" : "0";
    out += '\n';
  }
  return out;
}

inline std::string csv_histogram(const Histogram& h) {
  std::string out = "bin_lo,bin_hi,count\n";
  out += "-inf," + fmt_double(h.lo) + ',' + std::to_string(h.underflow) + '\n';
  const int bins = static_cast<int>(h.counts.size());
  const double w = (h.hi - h.lo) / bins;
  for (int b = 0; b < bins; ++b) {
    out += fmt_double(h.lo + b * w);
    out += ',';
    out += fmt_double(b + 1 == bins ? h.hi : h.lo + (b + 1) * w);
    out += ',';
    out += std::to_string(h.counts[b]);
    out += '\n';
  }
  out += fmt_double(h.hi) + ",inf," + std::to_string(h.overflow) + '\n';
  return out;
}

}  // namespace sinest
