#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "likelihood.hpp"
#include "subspace.hpp"
#include "types.hpp"

namespace sinest {

enum class CascadeVariant {
  Proposed,
  EspritPlusRemoveReestimate,   // ablation: no gates, plain esprit re-estimator
  EspritAcPlusDescentOnly,      // ablation: zero-padded esprit + descent, no gates
};

struct CascadeConfig {
  int p = 2;
  int m = 18;
  double beta = 0.72;
  int max_rr_iters = 5;
  CascadeVariant variant = CascadeVariant::Proposed;
  bool descend_esprit_branch = true;
  bool tls = false;
  DescendOptions descend{};
};

struct CascadeTrace {
  Branch branch = Branch::Esprit;
  std::optional<GammaBetaReport> gamma_esprit;
  std::optional<GammaBetaReport> gamma_ac;
  std::optional<RVec> esprit_freqs;
  std::optional<RVec> esprit_ac_freqs;
  int rr_iterations = 0;
  std::vector<double> rr_costs;   // cost of the incumbent after each accepted pass
};

struct CascadeResult {
  FrequencyEstimate estimate;
  CascadeTrace trace;
};

namespace detail {

// descend whose failure is a data condition, not caller misuse
inline FrequencyEstimate refine(const CVec& x, const RVec& f0, const DescendOptions& opt) {
  try {
    return descend(x, f0, opt);
  } catch (const std::invalid_argument& e) {
    throw numerical_error(std::string("cascade: degenerate initializer: ") + e.what());
  }
}

}  // namespace detail

// iterative remove-and-re-estimate: starting from a descended incumbent,
// every pair of components is replaced by a fresh two-sinusoid estimate on
// the signal with the remaining components notched out, each candidate is
// descended, and the best one becomes the next incumbent while it still
// lowers the cost
inline FrequencyEstimate remove_reestimate(const CVec& x, const RVec& f_start,
                                           const CascadeConfig& cfg,
                                           CascadeTrace* trace = nullptr) {
  const int p = cfg.p;
  if (p < 3) throw std::invalid_argument("remove_reestimate: p must be >= 3");
  if (f_start.size() != p) throw std::invalid_argument("remove_reestimate: start size mismatch");
  const bool use_ac = cfg.variant != CascadeVariant::EspritPlusRemoveReestimate;

  FrequencyEstimate cur = detail::refine(x, f_start, cfg.descend);
  if (trace) trace->rr_costs.push_back(*cur.cost);

  for (int iter = 0; iter < cfg.max_rr_iters; ++iter) {
    std::optional<FrequencyEstimate> best;
    for (int i = 0; i < p; ++i) {
      for (int j = i + 1; j < p; ++j) {
        RVec kept(p - 2);
        int w = 0;
        for (int k = 0; k < p; ++k)
          if (k != i && k != j) kept[w++] = cur.freqs[k];
        try {
          CVec xt = notch_filter(x, kept);
          FrequencyEstimate pair_est = use_ac ? esprit_ac(xt, 2, cfg.m, cfg.tls)
                                              : esprit(xt, 2, cfg.m, cfg.tls);
          RVec cand(p);
          cand << kept, pair_est.freqs;
          FrequencyEstimate ref = descend(x, cand, cfg.descend);
          if (!best || *ref.cost < *best->cost) best = std::move(ref);
        } catch (const std::invalid_argument&) {
          continue;  // degenerate candidate, try the next pair
        } catch (const ill_conditioned&) {
          continue;
        }
      }
    }
    if (!best || !(*best->cost < *cur.cost)) break;
    cur = std::move(*best);
    if (trace) {
      trace->rr_costs.push_back(*cur.cost);
      ++trace->rr_iterations;
    }
  }

  cur.branch = Branch::EspritAcRemoveReestimate;
  return cur;
}

// three-stage estimator: esprit gated on gamma, then zero-padded esprit
// gated again, then remove-and-re-estimate; every accepted initializer is
// polished by local likelihood descent
inline CascadeResult cascade_estimate(const CVec& x, const CascadeConfig& cfg) {
  const int n = static_cast<int>(x.size());
  if (cfg.p < 1) throw std::invalid_argument("cascade: p must be >= 1");
  if (cfg.m <= cfg.p || cfg.m > n) throw std::invalid_argument("cascade: need p < m <= n");

  CascadeResult out;
  CascadeTrace& tr = out.trace;

  if (cfg.variant == CascadeVariant::EspritAcPlusDescentOnly) {
    FrequencyEstimate ac = esprit_ac(x, cfg.p, cfg.m, cfg.tls);
    tr.esprit_ac_freqs = ac.freqs;
    out.estimate = detail::refine(x, ac.freqs, cfg.descend);
    out.estimate.branch = tr.branch = Branch::EspritAc;
    return out;
  }

  if (cfg.variant == CascadeVariant::EspritPlusRemoveReestimate) {
    FrequencyEstimate fe = esprit(x, cfg.p, cfg.m, cfg.tls);
    tr.esprit_freqs = fe.freqs;
    if (cfg.p < 3) {
      out.estimate = detail::refine(x, fe.freqs, cfg.descend);
    } else {
      FrequencyEstimate rr = remove_reestimate(x, fe.freqs, cfg, &tr);
      out.estimate = detail::refine(x, rr.freqs, cfg.descend);
    }
    out.estimate.branch = tr.branch = Branch::EspritAcRemoveReestimate;
    return out;
  }

  // stage 1: plain esprit, one eigendecomposition shared with the gate
  EigenSystem es = herm_eig(fb_covariance(x, cfg.m));
  FrequencyEstimate fe = esprit_from_eigs(es, cfg.p, cfg.tls);
  tr.esprit_freqs = fe.freqs;
  GammaBetaReport g1 = gamma_from_eigs(es.values, cfg.p, cfg.beta, n - cfg.m + 1);
  tr.gamma_esprit = g1;
  if (g1.gamma_db > 0) {
    if (cfg.descend_esprit_branch) {
      out.estimate = detail::refine(x, fe.freqs, cfg.descend);
    } else {
      out.estimate = fe;
      out.estimate.cost = likelihood_cost(x, fe.freqs);
    }
    out.estimate.branch = tr.branch = Branch::Esprit;
    return out;
  }

  // stage 2: zero-padded esprit with its own gate
  CVec xz = zero_pad(x, cfg.m);
  EigenSystem es2 = herm_eig(fb_covariance(xz, cfg.m));
  FrequencyEstimate fe2 = esprit_from_eigs(es2, cfg.p, cfg.tls);
  fe2.branch = Branch::EspritAc;
  tr.esprit_ac_freqs = fe2.freqs;
  GammaBetaReport g2 = gamma_from_eigs(es2.values, cfg.p, cfg.beta,
                                       static_cast<int>(xz.size()) - cfg.m + 1);
  tr.gamma_ac = g2;
  if (g2.gamma_db > 0 || cfg.p < 3) {
    out.estimate = detail::refine(x, fe2.freqs, cfg.descend);
    out.estimate.branch = tr.branch =
        g2.gamma_db > 0 ? Branch::EspritAc : Branch::EspritAcRemoveReestimate;
    return out;
  }

  // stage 3: remove and re-estimate from the zero-padded initializer
  FrequencyEstimate rr = remove_reestimate(x, fe2.freqs, cfg, &tr);
  out.estimate = detail::refine(x, rr.freqs, cfg.descend);
  out.estimate.branch = tr.branch = Branch::EspritAcRemoveReestimate;
  return out;
}

}  // namespace sinest
