#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "numeric.hpp"
#include "types.hpp"

namespace sinest {

inline CMat steering(const RVec& freqs, int n) {
  if (n < 1) throw std::invalid_argument("steering: n must be >= 1");
  const int p = static_cast<int>(freqs.size());
  CMat s(n, p);
  for (int k = 0; k < p; ++k) {
    const double w = 2.0 * std::numbers::pi * freqs[k];
    for (int t = 0; t < n; ++t) s(t, k) = std::exp(cxd(0.0, w * t));
  }
  return s;
}

// residual energy after projecting x onto the span of the steering columns.
// evaluated through a thin qr so noiseless data drives the cost to roundoff
// rather than to a difference of two large numbers.
inline double likelihood_cost(const CVec& x, const RVec& freqs) {
  const int n = static_cast<int>(x.size());
  const int p = static_cast<int>(freqs.size());
  if (p < 1 || p > n) throw std::invalid_argument("likelihood_cost: need 1 <= p <= n");
  CMat s = steering(freqs, n);
  Eigen::HouseholderQR<CMat> qr(s);
  CMat q = qr.householderQ() * CMat::Identity(n, p);
  CVec r = x - q * (q.adjoint() * x);
  return r.squaredNorm();
}

// remove the listed components from x by least squares projection
inline CVec notch_filter(const CVec& x, const RVec& freqs) {
  CMat s = steering(freqs, static_cast<int>(x.size()));
  CMat c = ls_solve(s, x);
  return x - s * c;
}

// dL/df_k = -2 Re{ r^H d_k c_k } with d_k the frequency derivative of
// steering column k and r the projection residual
inline RVec likelihood_gradient(const CVec& x, const RVec& freqs) {
  const int n = static_cast<int>(x.size());
  const int p = static_cast<int>(freqs.size());
  CMat s = steering(freqs, n);
  CMat c = ls_solve(s, x);
  CVec r = x - s * c;
  RVec g(p);
  for (int k = 0; k < p; ++k) {
    cxd acc = 0.0;
    for (int t = 0; t < n; ++t) {
      cxd d = cxd(0.0, 2.0 * std::numbers::pi * t) * s(t, k);
      acc += std::conj(r[t]) * d * c(k, 0);
    }
    g[k] = -2.0 * acc.real();
  }
  return g;
}

struct DescendOptions {
  int max_iters = 3000;
  double armijo = 1e-4;
  double initial_step = 1e-3;
  double carry_mult = 2.0;   // step memory across iterations
  double rel_tol = 1e-12;    // relative cost decrease stop
  double grad_tol = 1e-10;   // infinity-norm stop, scaled by the cost scale
  double min_gap = 1e-9;     // circular separation floor during line search
  int max_halvings = 60;
};

struct DescendResult {
  RVec freqs;
  double cost = kInf;
  int iterations = 0;
};

namespace detail {

inline RVec wrap_sorted(RVec f) {
  for (double& v : f) {
    v -= std::floor(v);
    if (v >= 1.0) v = 0.0;
  }
  std::sort(f.begin(), f.end());
  return f;
}

inline bool gap_ok(const RVec& f, double min_gap) {
  const int p = static_cast<int>(f.size());
  if (p < 2) return true;
  for (int i = 0; i + 1 < p; ++i)
    if (f[i + 1] - f[i] < min_gap) return false;
  return f[0] + 1.0 - f[p - 1] >= min_gap;
}

// backtracking gradient descent with armijo acceptance, step carryover and
// forward tracking.  cost and grad are callbacks so stacked-data variants
// can reuse the loop unchanged.
inline DescendResult descend_impl(const std::function<double(const RVec&)>& cost,
                                  const std::function<RVec(const RVec&)>& grad,
                                  const RVec& f0, double scale,
                                  const DescendOptions& opt) {
  DescendResult res;
  RVec f = wrap_sorted(f0);
  if (!gap_ok(f, opt.min_gap))
    throw std::invalid_argument("descend: initial frequencies nearly coincident");
  double l = cost(f);
  if (!std::isfinite(l)) throw numerical_error("descend: initial cost not finite");
  double t = opt.initial_step;

  auto trial = [&](const RVec& base, const RVec& g, double step, RVec& fn) {
    fn = wrap_sorted(base - step * g);
    if (!gap_ok(fn, opt.min_gap)) return kInf;
    return cost(fn);
  };

  int it = 0;
  for (; it < opt.max_iters; ++it) {
    RVec g = grad(f);
    double gmax = g.cwiseAbs().maxCoeff();
    if (gmax < opt.grad_tol * scale) break;
    double g2 = g.squaredNorm();

    double step = t;
    RVec fn;
    double ln = trial(f, g, step, fn);
    int h = 0;
    while (ln > l - opt.armijo * step * g2 && h < opt.max_halvings) {
      step /= 2.0;
      ++h;
      ln = trial(f, g, step, fn);
    }
    if (ln > l - opt.armijo * step * g2) break;  // line search stalled

    if (h == 0) {
      // step was accepted immediately; push further while it keeps paying
      for (;;) {
        RVec f2;
        double l2 = trial(f, g, 2.0 * step, f2);
        if (l2 < ln) {
          step *= 2.0;
          ln = l2;
          fn = std::move(f2);
        } else {
          break;
        }
      }
    }

    double drop = l - ln;
    f = std::move(fn);
    l = ln;
    t = opt.carry_mult * step;
    if (drop < opt.rel_tol * std::max(l, 1e-300)) {
      ++it;
      break;
    }
  }

  res.freqs = std::move(f);
  res.cost = l;
  res.iterations = it;
  return res;
}

}  // namespace detail

inline FrequencyEstimate descend(const CVec& x, const RVec& f0,
                                 const DescendOptions& opt = {}) {
  if (f0.size() < 1) throw std::invalid_argument("descend: empty initial point");
  auto cost = [&x](const RVec& f) { return likelihood_cost(x, f); };
  auto grad = [&x](const RVec& f) { return likelihood_gradient(x, f); };
  DescendResult r = detail::descend_impl(cost, grad, f0, x.squaredNorm(), opt);
  FrequencyEstimate out;
  out.freqs = std::move(r.freqs);
  out.cost = r.cost;
  return out;
}

namespace detail {

// correlations of x against every grid frequency: a[g] = s_g^H x
inline CVec grid_correlations(const CVec& x, int g) {
  const int n = static_cast<int>(x.size());
  CVec a(g);
  for (int i = 0; i < g; ++i) {
    const double w = -2.0 * std::numbers::pi * i / g;
    cxd acc = 0.0;
    for (int t = 0; t < n; ++t) acc += x[t] * std::exp(cxd(0.0, w * t));
    a[i] = acc;
  }
  return a;
}

// geometric sums over the n samples for every grid spacing
inline CVec grid_gram_sums(int n, int g) {
  CVec s(g);
  for (int d = 0; d < g; ++d) {
    cxd acc = 0.0;
    const double w = 2.0 * std::numbers::pi * d / g;
    for (int t = 0; t < n; ++t) acc += std::exp(cxd(0.0, w * t));
    s[d] = acc;
  }
  s[0] = static_cast<double>(n);
  return s;
}

// exhaustive captured-energy maximization over ascending grid tuples;
// first strict maximum wins so ties resolve lexicographically
inline RVec grid_argmax(const CVec& x, int p, int g) {
  const int n = static_cast<int>(x.size());
  CVec a = grid_correlations(x, g);
  CVec gs = grid_gram_sums(n, g);
  const double dn = static_cast<double>(n);
  double best = -kInf;
  RVec bf(p);
  if (p == 1) {
    for (int i = 0; i < g; ++i) {
      double q = std::norm(a[i]) / dn;
      if (q > best) {
        best = q;
        bf[0] = static_cast<double>(i) / g;
      }
    }
  } else if (p == 2) {
    for (int i = 0; i < g; ++i)
      for (int j = i + 1; j < g; ++j) {
        cxd g12 = gs[j - i];
        double det = dn * dn - std::norm(g12);
        if (det <= 1e-9 * dn * dn) continue;
        double q = (dn * (std::norm(a[i]) + std::norm(a[j])) -
                    2.0 * (std::conj(a[i]) * a[j] * g12).real()) / det;
        if (q > best) {
          best = q;
          bf[0] = static_cast<double>(i) / g;
          bf[1] = static_cast<double>(j) / g;
        }
      }
  } else if (p == 3) {
    Eigen::Matrix3cd gm;
    Eigen::Vector3cd av;
    for (int i = 0; i < g; ++i)
      for (int j = i + 1; j < g; ++j)
        for (int k = j + 1; k < g; ++k) {
          gm << dn, gs[j - i], gs[k - i],
                std::conj(gs[j - i]), dn, gs[k - j],
                std::conj(gs[k - i]), std::conj(gs[k - j]), dn;
          av << a[i], a[j], a[k];
          Eigen::LLT<Eigen::Matrix3cd> llt(gm);
          if (llt.info() != Eigen::Success) continue;
          double q = av.dot(llt.solve(av)).real();
          if (q > best) {
            best = q;
            bf[0] = static_cast<double>(i) / g;
            bf[1] = static_cast<double>(j) / g;
            bf[2] = static_cast<double>(k) / g;
          }
        }
  } else {
    throw std::invalid_argument("grid_argmax: p must be 1, 2 or 3");
  }
  if (best == -kInf) throw numerical_error("grid_argmax: no admissible tuple");
  return bf;
}

}  // namespace detail

// grid search over all ascending frequency tuples followed by local descent.
// exhaustive enumeration keeps this honest as a reference method but limits
// it to p <= 3; grid_points = 0 picks the per-order default.
inline FrequencyEstimate mle_grid(const CVec& x, int p, int grid_points = 0,
                                  const DescendOptions& opt = {}) {
  if (p < 1 || p > 3) throw std::invalid_argument("mle_grid: p must be 1, 2 or 3");
  if (grid_points == 0) grid_points = (p == 3) ? 100 : 500;
  if (grid_points < 2 * p) throw std::invalid_argument("mle_grid: grid too coarse");
  RVec f0 = detail::grid_argmax(x, p, grid_points);
  return descend(x, f0, opt);
}

// greedy periodogram peaks with a circular keep-out, for initializing
// coordinate-wise search; falls back to the largest remaining bins when
// fewer than p separated peaks exist
inline RVec periodogram_peaks(const CVec& x, int p, int grid_mult = 8,
                              double keep_out = -1.0) {
  const int n = static_cast<int>(x.size());
  if (p < 1) throw std::invalid_argument("periodogram_peaks: p must be >= 1");
  if (keep_out < 0) keep_out = 1.0 / (2.0 * n);
  const int g = grid_mult * n;
  CVec a = detail::grid_correlations(x, g);
  std::vector<int> order(g);
  for (int i = 0; i < g; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return std::norm(a[i]) > std::norm(a[j]); });
  std::vector<int> picked;
  for (int idx : order) {
    if (static_cast<int>(picked.size()) == p) break;
    bool clear = true;
    for (int q : picked) {
      int d = std::abs(idx - q);
      d = std::min(d, g - d);
      if (static_cast<double>(d) / g < keep_out) {
        clear = false;
        break;
      }
    }
    if (clear) picked.push_back(idx);
  }
  for (int idx : order) {
    if (static_cast<int>(picked.size()) == p) break;
    if (std::find(picked.begin(), picked.end(), idx) == picked.end())
      picked.push_back(idx);
  }
  RVec f(p);
  for (int i = 0; i < p; ++i) f[i] = static_cast<double>(picked[i]) / g;
  std::sort(f.begin(), f.end());
  return f;
}

// cyclic coordinate minimization: per coordinate, the best point of a dense
// grid (current value included) seeds a one-dimensional descent while the
// other coordinates stay frozen
inline FrequencyEstimate fast_ml(const CVec& x, int p, const RVec& f_init,
                                 int grid_mult = 8, int max_cycles = 50,
                                 const DescendOptions& opt = {}) {
  const int n = static_cast<int>(x.size());
  if (f_init.size() != p) throw std::invalid_argument("fast_ml: init size mismatch");
  if (p < 1 || p > n) throw std::invalid_argument("fast_ml: need 1 <= p <= n");
  RVec f = detail::wrap_sorted(f_init);
  double l = likelihood_cost(x, f);
  const int g = grid_mult * n;
  const double scale = x.squaredNorm();

  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    const double l_before = l;
    for (int k = 0; k < p; ++k) {
      RVec probe = f;
      double best_v = f[k];
      double best_l = l;
      for (int i = 0; i < g; ++i) {
        const double cand = static_cast<double>(i) / g;
        bool collides = false;
        for (int j = 0; j < p && !collides; ++j) {
          if (j == k) continue;
          double d = std::abs(cand - f[j]);
          if (std::min(d, 1.0 - d) < opt.min_gap) collides = true;
        }
        if (collides) continue;
        probe[k] = cand;
        double li = likelihood_cost(x, probe);
        if (li < best_l) {
          best_l = li;
          best_v = cand;
        }
      }
      RVec f_full = f;
      f_full[k] = best_v;
      auto cost1 = [&](const RVec& v) {
        RVec ff = f_full;
        ff[k] = v[0] - std::floor(v[0]);
        return likelihood_cost(x, ff);
      };
      auto grad1 = [&](const RVec& v) {
        RVec ff = f_full;
        ff[k] = v[0] - std::floor(v[0]);
        RVec gg = likelihood_gradient(x, ff);
        RVec out(1);
        out[0] = gg[k];
        return out;
      };
      RVec v0(1);
      v0[0] = best_v;
      try {
        DescendResult r = detail::descend_impl(cost1, grad1, v0, scale, opt);
        f[k] = r.freqs[0] - std::floor(r.freqs[0]);
        l = r.cost;
      } catch (const ill_conditioned&) {
        f[k] = best_v;
        l = best_l;
      }
    }
    if (l_before - l < 1e-12) break;
  }

  FrequencyEstimate out;
  out.freqs = detail::wrap_sorted(f);
  out.cost = likelihood_cost(x, out.freqs);
  return out;
}

}  // namespace sinest
