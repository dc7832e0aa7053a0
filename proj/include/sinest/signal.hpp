#pragma once

#include <cmath>
#include <numbers>

#include "rng.hpp"
#include "types.hpp"

namespace sinest {

inline CVec synthesize_noiseless(const Scenario& s) {
  s.validate();
  CVec x = CVec::Zero(s.n);
  for (int l = 0; l < s.p; ++l) {
    const double w = 2.0 * std::numbers::pi * s.frequencies[l];
    for (int n = 0; n < s.n; ++n)
      x[n] += s.amplitudes[l] * std::exp(cxd(0.0, w * n + s.phases[l]));
  }
  return x;
}

// unit-variance circular complex noise (E|w[n]|^2 = 1); scaled by the caller
inline CVec unit_noise(int n, uint64_t seed) {
  Rng rng(seed);
  CVec w(n);
  for (int i = 0; i < n; ++i) w[i] = rng.cgauss();
  return w;
}

inline CVec synthesize(const Scenario& s, uint64_t seed) {
  CVec x = synthesize_noiseless(s);
  const double sigma = std::sqrt(s.noise_sigma2());
  if (sigma > 0) x += sigma * unit_noise(s.n, seed);
  return x;
}

// signed frequency error on the unit circle, in (-0.5, 0.5]
inline double wrapped_error(double est, double truth) {
  double d = est - truth;
  d -= std::floor(d);                       // into [0,1)
  return 0.5 - std::fmod(1.5 - d, 1.0);
}

// draw p frequencies uniformly with circular separation >= min_sep;
// amplitudes U[0.5,1], phases U[0,2pi)
inline Scenario random_scenario(int p, int n, double snr_db, uint64_t seed,
                                double min_sep = -1.0) {
  if (p < 1 || n < 1) throw std::invalid_argument("random_scenario: p and n must be >= 1");
  if (min_sep < 0) min_sep = 1.0 / (2.0 * n);
  if (p * min_sep >= 1.0)
    throw std::invalid_argument("random_scenario: separation infeasible");
  Rng rng(seed);
  Scenario s;
  s.p = p;
  s.n = n;
  s.snr_db = snr_db;
  s.amplitudes = RVec(p);
  s.phases = RVec(p);
  s.frequencies = RVec(p);
  for (int l = 0; l < p; ++l) {
    s.amplitudes[l] = rng.uniform(0.5, 1.0);
    s.phases[l] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  constexpr long kBudget = 1000000;
  for (long attempt = 0; attempt < kBudget; ++attempt) {
    RVec f(p);
    for (int l = 0; l < p; ++l) f[l] = rng.uniform();
    std::sort(f.begin(), f.end());
    bool ok = true;
    for (int l = 0; ok && l < p; ++l) {
      double gap = (l + 1 < p) ? f[l + 1] - f[l] : f[0] + 1.0 - f[p - 1];
      if (gap < min_sep) ok = false;
    }
    if (ok) {
      s.frequencies = f;
      return s;
    }
  }
  throw numerical_error("random_scenario: rejection sampling budget exhausted");
}

// same sinusoid layout, fresh phases
inline Scenario random_phase_scenario(const Scenario& base, uint64_t seed) {
  base.validate();
  Rng rng(seed);
  Scenario s = base;
  for (int l = 0; l < s.p; ++l) s.phases[l] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return s;
}

}  // namespace sinest
