#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "numeric.hpp"
#include "types.hpp"

namespace sinest {

// ls rotation: solve E1 F = E2. tls: joint svd of [E1 E2]
inline CMat rotation_operator(const CMat& e1, const CMat& e2, bool tls) {
  const int p = static_cast<int>(e1.cols());
  if (!tls) return ls_solve(e1, e2);
  CMat c(e1.rows(), 2 * p);
  c << e1, e2;
  Eigen::JacobiSVD<CMat> svd(c, Eigen::ComputeFullV);
  CMat v12 = svd.matrixV().block(0, p, p, p);
  CMat v22 = svd.matrixV().block(p, p, p, p);
  Eigen::FullPivLU<CMat> lu(v22);
  if (!lu.isInvertible()) throw ill_conditioned("rotation_operator: tls block singular");
  return CMat(-v12 * lu.inverse());
}

inline RVec rotation_frequencies(const CMat& phi) {
  Eigen::ComplexEigenSolver<CMat> es(phi);
  if (es.info() != Eigen::Success) throw numerical_error("rotation eigendecomposition failed");
  const int p = static_cast<int>(phi.rows());
  RVec f(p);
  for (int i = 0; i < p; ++i) {
    double a = std::arg(es.eigenvalues()[i]) / (2.0 * std::numbers::pi);
    a -= std::floor(a);
    if (a >= 1.0) a = 0.0;
    f[i] = a;
  }
  std::sort(f.begin(), f.end());
  return f;
}

inline FrequencyEstimate esprit_from_eigs(const EigenSystem& es, int p, bool tls = false) {
  const int m = static_cast<int>(es.vectors.rows());
  if (p < 1 || p >= m) throw std::invalid_argument("esprit: need 1 <= p < m");
  CMat sig = es.vectors.leftCols(p);
  CMat e1 = sig.topRows(m - 1);
  CMat e2 = sig.bottomRows(m - 1);
  FrequencyEstimate out;
  out.freqs = rotation_frequencies(rotation_operator(e1, e2, tls));
  out.branch = Branch::Esprit;
  return out;
}

inline FrequencyEstimate esprit(const CVec& x, int p, int m, bool tls = false) {
  return esprit_from_eigs(herm_eig(fb_covariance(x, m)), p, tls);
}

// esprit on the zero-extended sequence; the padding acts as an
// autocorrelation-style taper on the covariance snapshots
inline FrequencyEstimate esprit_ac(const CVec& x, int p, int m, bool tls = false) {
  FrequencyEstimate out = esprit_from_eigs(herm_eig(fb_covariance(zero_pad(x, m), m)), p, tls);
  out.branch = Branch::EspritAc;
  return out;
}

// signal-vs-noise eigenvalue gate.  n_snapshots bounds the achievable
// covariance rank: fb averaging of k snapshots gives rank <= min(m, 2k),
// so only the first min(m, 2k) - p trailing eigenvalues carry noise power
// and the structurally null ones are excluded from the noise estimate.
inline GammaBetaReport gamma_from_eigs(const RVec& values, int p, double beta,
                                       int n_snapshots) {
  const int m = static_cast<int>(values.size());
  if (p < 1 || p >= m) throw std::invalid_argument("gamma_beta: need 1 <= p < m");
  if (!(beta > 0)) throw std::invalid_argument("gamma_beta: beta must be > 0");
  if (n_snapshots < 1) throw std::invalid_argument("gamma_beta: need n_snapshots >= 1");
  const int rank = std::min(m, 2 * n_snapshots);
  if (rank <= p) throw std::invalid_argument("gamma_beta: too few snapshots for p");
  GammaBetaReport rep;
  rep.beta = beta;
  rep.M = m;
  rep.lambda_p = values[p - 1];
  double s = 0.0;
  for (int i = p; i < rank; ++i) s += values[i];
  rep.sigma2_hat = s / static_cast<double>(rank - p);
  if (rep.sigma2_hat <= 1e-300) {
    rep.sigma2_hat = 1e-300;
    rep.degenerate = true;
  }
  const double num = rep.lambda_p - rep.sigma2_hat;
  rep.gamma_db = (num <= 0) ? -kInf
                            : 10.0 * std::log10(num / (m * beta * rep.sigma2_hat));
  return rep;
}

inline GammaBetaReport gamma_beta(const CVec& x, int p, int m, double beta) {
  const int k = static_cast<int>(x.size()) - m + 1;
  return gamma_from_eigs(herm_eig(fb_covariance(x, m)).values, p, beta, k);
}

}  // namespace sinest
