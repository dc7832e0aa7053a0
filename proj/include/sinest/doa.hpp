#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "cascade.hpp"
#include "likelihood.hpp"
#include "rng.hpp"
#include "subspace.hpp"
#include "types.hpp"

namespace sinest {

// half-wavelength uniform line array: element n sees e^{j pi n sin(theta)},
// i.e. a complex exponential at spatial frequency f = sin(theta)/2
inline double angle_to_freq(double theta_deg) {
  return 0.5 * std::sin(theta_deg * std::numbers::pi / 180.0);
}

enum class SourceModel { Gaussian, ConstantModulus };

struct ArrayScenario {
  int p = 0;
  int m_ant = 0;   // sensors
  int k = 0;       // snapshots
  RVec angles_deg; // strictly ascending, in (-90, 90)
  double snr_db = kInf;
  SourceModel sources = SourceModel::Gaussian;

  void validate() const {
    if (p < 1) throw std::invalid_argument("array scenario: p must be >= 1");
    if (m_ant <= p) throw std::invalid_argument("array scenario: need m_ant > p");
    if (k < 1) throw std::invalid_argument("array scenario: k must be >= 1");
    if (angles_deg.size() != p)
      throw std::invalid_argument("array scenario: angles must have length p");
    for (int i = 0; i < p; ++i) {
      if (!(angles_deg[i] > -90.0 && angles_deg[i] < 90.0))
        throw std::invalid_argument("array scenario: angles must lie in (-90, 90)");
      if (i > 0 && !(angles_deg[i] > angles_deg[i - 1]))
        throw std::invalid_argument("array scenario: angles must be strictly ascending");
    }
  }

  double noise_sigma2() const {
    return std::isinf(snr_db) ? 0.0 : std::pow(10.0, -snr_db / 10.0);
  }
};

// noiseless snapshots and a unit-power noise block, kept separate so a
// sweep can reuse the same noise realization across snr points
inline std::pair<CMat, CMat> synthesize_array_parts(const ArrayScenario& s, uint64_t seed) {
  s.validate();
  Rng src_rng(derive_seed(seed, 0x501Cull));
  Rng noise_rng(derive_seed(seed, 0x0153ull));
  RVec f(s.p);
  for (int l = 0; l < s.p; ++l) f[l] = angle_to_freq(s.angles_deg[l]);
  CMat a = steering(f, s.m_ant);
  CMat sig(s.p, s.k);
  for (int t = 0; t < s.k; ++t)
    for (int l = 0; l < s.p; ++l)
      sig(l, t) = s.sources == SourceModel::Gaussian
                      ? src_rng.cgauss()
                      : std::exp(cxd(0.0, src_rng.uniform(0.0, 2.0 * std::numbers::pi)));
  CMat w(s.m_ant, s.k);
  for (int t = 0; t < s.k; ++t)
    for (int n = 0; n < s.m_ant; ++n) w(n, t) = noise_rng.cgauss();
  return {a * sig, std::move(w)};
}

inline CMat synthesize_array(const ArrayScenario& s, uint64_t seed) {
  auto [clean, w] = synthesize_array_parts(s, seed);
  const double sigma = std::sqrt(s.noise_sigma2());
  if (sigma > 0) clean += sigma * w;
  return clean;
}

// covariance over snapshots (columns), optionally with spatial smoothing
// over sliding length-m_sub subarrays; returns the matrix and the number
// of averaged vectors, which bounds its rank under fb averaging
inline std::pair<CMat, int> snapshot_covariance(const CMat& xs, int m_sub) {
  const int m_ant = static_cast<int>(xs.rows());
  const int k = static_cast<int>(xs.cols());
  if (m_sub < 1 || m_sub > m_ant)
    throw std::invalid_argument("snapshot_covariance: need 1 <= m_sub <= m_ant");
  const int wins = m_ant - m_sub + 1;
  CMat rf = CMat::Zero(m_sub, m_sub);
  for (int t = 0; t < k; ++t)
    for (int w = 0; w < wins; ++w) {
      auto seg = xs.col(t).segment(w, m_sub);
      rf.noalias() += seg * seg.adjoint();
    }
  rf /= static_cast<double>(k * wins);
  return {detail::fb_symmetrize(std::move(rf)), k * wins};
}

// zero-extend every snapshot by m_sub on both ends
inline CMat zero_pad_snapshots(const CMat& xs, int m_sub) {
  if (m_sub < 1) throw std::invalid_argument("zero_pad_snapshots: m_sub must be >= 1");
  CMat y = CMat::Zero(xs.rows() + 2 * m_sub, xs.cols());
  y.middleRows(m_sub, xs.rows()) = xs;
  return y;
}

// likelihood cost summed over snapshots: squared frobenius residual after
// projecting every column onto the steering span
inline double stacked_cost(const CMat& xs, const RVec& freqs) {
  const int n = static_cast<int>(xs.rows());
  const int p = static_cast<int>(freqs.size());
  if (p < 1 || p > n) throw std::invalid_argument("stacked_cost: need 1 <= p <= n");
  CMat s = steering(freqs, n);
  Eigen::HouseholderQR<CMat> qr(s);
  CMat q = qr.householderQ() * CMat::Identity(n, p);
  CMat r = xs - q * (q.adjoint() * xs);
  return r.squaredNorm();
}

inline RVec stacked_gradient(const CMat& xs, const RVec& freqs) {
  const int n = static_cast<int>(xs.rows());
  const int p = static_cast<int>(freqs.size());
  CMat s = steering(freqs, n);
  CMat c = ls_solve(s, xs);       // p x k coefficients
  CMat r = xs - s * c;
  RVec g(p);
  for (int j = 0; j < p; ++j) {
    cxd acc = 0.0;
    for (int t = 0; t < n; ++t) {
      cxd d = cxd(0.0, 2.0 * std::numbers::pi * t) * s(t, j);
      for (int col = 0; col < xs.cols(); ++col)
        acc += std::conj(r(t, col)) * d * c(j, col);
    }
    g[j] = -2.0 * acc.real();
  }
  return g;
}

inline FrequencyEstimate stacked_descend(const CMat& xs, const RVec& f0,
                                         const DescendOptions& opt = {}) {
  auto cost = [&xs](const RVec& f) { return stacked_cost(xs, f); };
  auto grad = [&xs](const RVec& f) { return stacked_gradient(xs, f); };
  DescendResult r = detail::descend_impl(cost, grad, f0, xs.squaredNorm(), opt);
  FrequencyEstimate out;
  out.freqs = std::move(r.freqs);
  out.cost = r.cost;
  return out;
}

struct DoaConfig {
  int p = 2;
  int m_sub = 0;            // 0: full aperture, no smoothing
  double beta = 0.72;       // calibrated for the time-series geometry; reused as-is
  int max_rr_iters = 5;
  CascadeVariant variant = CascadeVariant::Proposed;
  bool descend_esprit_branch = true;
  bool tls = false;
  DescendOptions descend{};
  int grid_points = 0;      // ml baseline grid, 0: per-order default
};

struct DoaEstimate {
  RVec angles_deg;          // ascending
  RVec spatial_freqs;       // matched order, wrapped to [-0.5, 0.5)
  std::optional<double> cost;
  Branch branch = Branch::Esprit;
  bool clamped = false;     // an estimate fell outside the visible region
};

namespace detail {

// wrap [0,1) frequencies to [-0.5, 0.5) and map to arrival angles; values
// outside |sin| <= 1 are clamped to end-fire and flagged
inline DoaEstimate freqs_to_angles(const FrequencyEstimate& fe) {
  const int p = static_cast<int>(fe.freqs.size());
  DoaEstimate out;
  out.spatial_freqs = RVec(p);
  out.angles_deg = RVec(p);
  out.cost = fe.cost;
  out.branch = fe.branch;
  for (int i = 0; i < p; ++i) {
    double f = fe.freqs[i];
    if (f >= 0.5) f -= 1.0;
    double u = 2.0 * f;
    if (u > 1.0 || u < -1.0) {
      u = std::clamp(u, -1.0, 1.0);
      out.clamped = true;
    }
    out.spatial_freqs[i] = f;
    out.angles_deg[i] = std::asin(u) * 180.0 / std::numbers::pi;
  }
  // sort angles with their freqs attached
  std::vector<int> idx(p);
  for (int i = 0; i < p; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    return out.angles_deg[a] < out.angles_deg[b];
  });
  RVec af(p), ff(p);
  for (int i = 0; i < p; ++i) {
    af[i] = out.angles_deg[idx[i]];
    ff[i] = out.spatial_freqs[idx[i]];
  }
  out.angles_deg = af;
  out.spatial_freqs = ff;
  return out;
}

inline FrequencyEstimate doa_refine(const CMat& xs, const RVec& f0,
                                    const DescendOptions& opt) {
  try {
    return stacked_descend(xs, f0, opt);
  } catch (const std::invalid_argument& e) {
    throw numerical_error(std::string("doa: degenerate initializer: ") + e.what());
  }
}

}  // namespace detail

// remove-and-re-estimate over snapshots; mirrors the time-series version
// with per-column notching and subarray covariance re-estimation
inline FrequencyEstimate doa_remove_reestimate(const CMat& xs, const RVec& f_start,
                                               const DoaConfig& cfg, int m_sub) {
  const int p = cfg.p;
  if (p < 3) throw std::invalid_argument("doa_remove_reestimate: p must be >= 3");
  const bool use_ac = cfg.variant != CascadeVariant::EspritPlusRemoveReestimate;

  FrequencyEstimate cur = detail::doa_refine(xs, f_start, cfg.descend);
  for (int iter = 0; iter < cfg.max_rr_iters; ++iter) {
    std::optional<FrequencyEstimate> best;
    for (int i = 0; i < p; ++i)
      for (int j = i + 1; j < p; ++j) {
        RVec kept(p - 2);
        int w = 0;
        for (int k = 0; k < p; ++k)
          if (k != i && k != j) kept[w++] = cur.freqs[k];
        try {
          CMat s = steering(kept, static_cast<int>(xs.rows()));
          CMat xt = xs - s * ls_solve(s, xs);
          CMat form = use_ac ? zero_pad_snapshots(xt, m_sub) : xt;
          CMat r2 = snapshot_covariance(form, m_sub).first;
          FrequencyEstimate pe = esprit_from_eigs(herm_eig(r2), 2, cfg.tls);
          RVec cand(p);
          cand << kept, pe.freqs;
          FrequencyEstimate ref = stacked_descend(xs, cand, cfg.descend);
          if (!best || *ref.cost < *best->cost) best = std::move(ref);
        } catch (const std::invalid_argument&) {
          continue;
        } catch (const ill_conditioned&) {
          continue;
        }
      }
    if (!best || !(*best->cost < *cur.cost)) break;
    cur = std::move(*best);
  }
  cur.branch = Branch::EspritAcRemoveReestimate;
  return cur;
}

// the three-stage estimator on array snapshots: identical control flow to
// the time-series cascade, with the covariance and likelihood replaced by
// their multi-snapshot forms
inline DoaEstimate doa_estimate(const CMat& xs, const DoaConfig& cfg) {
  const int m_ant = static_cast<int>(xs.rows());
  const int m_sub = cfg.m_sub > 0 ? cfg.m_sub : m_ant;
  if (cfg.p < 1) throw std::invalid_argument("doa: p must be >= 1");
  if (m_sub <= cfg.p || m_sub > m_ant)
    throw std::invalid_argument("doa: need p < m_sub <= m_ant");

  if (cfg.variant == CascadeVariant::EspritAcPlusDescentOnly) {
    CMat r = snapshot_covariance(zero_pad_snapshots(xs, m_sub), m_sub).first;
    FrequencyEstimate fe = esprit_from_eigs(herm_eig(r), cfg.p, cfg.tls);
    FrequencyEstimate ref = detail::doa_refine(xs, fe.freqs, cfg.descend);
    ref.branch = Branch::EspritAc;
    return detail::freqs_to_angles(ref);
  }

  if (cfg.variant == CascadeVariant::EspritPlusRemoveReestimate) {
    CMat r = snapshot_covariance(xs, m_sub).first;
    FrequencyEstimate fe = esprit_from_eigs(herm_eig(r), cfg.p, cfg.tls);
    FrequencyEstimate ref = cfg.p < 3 ? detail::doa_refine(xs, fe.freqs, cfg.descend)
                                      : doa_remove_reestimate(xs, fe.freqs, cfg, m_sub);
    ref.branch = Branch::EspritAcRemoveReestimate;
    return detail::freqs_to_angles(ref);
  }

  auto [r1, cnt1] = snapshot_covariance(xs, m_sub);
  EigenSystem es1 = herm_eig(r1);
  FrequencyEstimate fe1 = esprit_from_eigs(es1, cfg.p, cfg.tls);
  GammaBetaReport g1 = gamma_from_eigs(es1.values, cfg.p, cfg.beta, cnt1);
  if (g1.gamma_db > 0) {
    FrequencyEstimate ref = cfg.descend_esprit_branch
                                ? detail::doa_refine(xs, fe1.freqs, cfg.descend)
                                : fe1;
    if (!ref.cost) ref.cost = stacked_cost(xs, ref.freqs);
    ref.branch = Branch::Esprit;
    return detail::freqs_to_angles(ref);
  }

  auto [r2, cnt2] = snapshot_covariance(zero_pad_snapshots(xs, m_sub), m_sub);
  EigenSystem es2 = herm_eig(r2);
  FrequencyEstimate fe2 = esprit_from_eigs(es2, cfg.p, cfg.tls);
  GammaBetaReport g2 = gamma_from_eigs(es2.values, cfg.p, cfg.beta, cnt2);
  if (g2.gamma_db > 0 || cfg.p < 3) {
    FrequencyEstimate ref = detail::doa_refine(xs, fe2.freqs, cfg.descend);
    ref.branch = g2.gamma_db > 0 ? Branch::EspritAc : Branch::EspritAcRemoveReestimate;
    return detail::freqs_to_angles(ref);
  }

  FrequencyEstimate rr = doa_remove_reestimate(xs, fe2.freqs, cfg, m_sub);
  return detail::freqs_to_angles(rr);
}

// exhaustive grid over the visible region followed by stacked descent;
// reference method for the array case, p <= 3
inline DoaEstimate doa_ml(const CMat& xs, const DoaConfig& cfg) {
  const int m_ant = static_cast<int>(xs.rows());
  const int k = static_cast<int>(xs.cols());
  const int p = cfg.p;
  if (p < 1 || p > 3) throw std::invalid_argument("doa_ml: p must be 1, 2 or 3");
  int g = cfg.grid_points > 0 ? cfg.grid_points : (p == 3 ? 100 : 500);
  if (g < 2 * p) throw std::invalid_argument("doa_ml: grid too coarse");
  const double dm = static_cast<double>(m_ant);

  // correlations of every snapshot against every grid frequency
  CMat a(g, k);
  for (int i = 0; i < g; ++i) {
    const double w = -2.0 * std::numbers::pi * i / g;
    for (int col = 0; col < k; ++col) {
      cxd acc = 0.0;
      for (int t = 0; t < m_ant; ++t) acc += xs(t, col) * std::exp(cxd(0.0, w * t));
      a(i, col) = acc;
    }
  }
  CMat pm = a * a.adjoint();  // pm(i,j) = sum_k a_i conj(a_j)
  CVec gs = detail::grid_gram_sums(m_ant, g);

  double best = -kInf;
  RVec bf(p);
  if (p == 1) {
    for (int i = 0; i < g; ++i) {
      double q = pm(i, i).real() / dm;
      if (q > best) {
        best = q;
        bf[0] = static_cast<double>(i) / g;
      }
    }
  } else if (p == 2) {
    for (int i = 0; i < g; ++i)
      for (int j = i + 1; j < g; ++j) {
        cxd g12 = gs[j - i];
        double det = dm * dm - std::norm(g12);
        if (det <= 1e-9 * dm * dm) continue;
        double q = (dm * (pm(i, i).real() + pm(j, j).real()) -
                    2.0 * (g12 * std::conj(pm(i, j))).real()) / det;
        if (q > best) {
          best = q;
          bf[0] = static_cast<double>(i) / g;
          bf[1] = static_cast<double>(j) / g;
        }
      }
  } else {
    Eigen::Matrix3cd gm, bm;
    for (int i = 0; i < g; ++i)
      for (int j = i + 1; j < g; ++j)
        for (int l = j + 1; l < g; ++l) {
          gm << dm, gs[j - i], gs[l - i],
                std::conj(gs[j - i]), dm, gs[l - j],
                std::conj(gs[l - i]), std::conj(gs[l - j]), dm;
          bm << pm(i, i), pm(i, j), pm(i, l),
                pm(j, i), pm(j, j), pm(j, l),
                pm(l, i), pm(l, j), pm(l, l);
          Eigen::LLT<Eigen::Matrix3cd> llt(gm);
          if (llt.info() != Eigen::Success) continue;
          double q = llt.solve(bm).trace().real();
          if (q > best) {
            best = q;
            bf[0] = static_cast<double>(i) / g;
            bf[1] = static_cast<double>(j) / g;
            bf[2] = static_cast<double>(l) / g;
          }
        }
  }
  if (best == -kInf) throw numerical_error("doa_ml: no admissible tuple");
  return detail::freqs_to_angles(detail::doa_refine(xs, bf, cfg.descend));
}

}  // namespace sinest
