#pragma once

#include <Eigen/Dense>

#include "types.hpp"

namespace sinest {

// prepend and append M zeros
inline CVec zero_pad(const CVec& x, int m) {
  if (m < 1) throw std::invalid_argument("zero_pad: m must be >= 1");
  CVec y = CVec::Zero(x.size() + 2 * m);
  y.segment(m, x.size()) = x;
  return y;
}

namespace detail {

// hermitize first, then backward-average; this order makes the result
// exactly hermitian and exactly persymmetric in floating point
inline CMat fb_symmetrize(CMat rf) {
  const int m = static_cast<int>(rf.rows());
  rf = ((rf + rf.adjoint()) / 2.0).eval();
  CMat r(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      r(i, j) = (rf(i, j) + std::conj(rf(m - 1 - i, m - 1 - j))) / 2.0;
  return r;
}

}  // namespace detail

// forward-backward averaged covariance from sliding length-m snapshots
inline CMat fb_covariance(const CVec& x, int m) {
  const int n = static_cast<int>(x.size());
  if (m < 1 || m > n) throw std::invalid_argument("fb_covariance: need 1 <= m <= n");
  const int k = n - m + 1;
  CMat rf = CMat::Zero(m, m);
  for (int t = 0; t < k; ++t) {
    auto xt = x.segment(t, m);
    rf.noalias() += xt * xt.adjoint();
  }
  rf /= static_cast<double>(k);
  return detail::fb_symmetrize(std::move(rf));
}

struct EigenSystem {
  RVec values;   // descending
  CMat vectors;  // columns matched to values
};

inline EigenSystem herm_eig(const CMat& r) {
  Eigen::SelfAdjointEigenSolver<CMat> es(r);
  if (es.info() != Eigen::Success) throw numerical_error("herm_eig: eigensolver failed");
  const int m = static_cast<int>(r.rows());
  EigenSystem out;
  out.values = es.eigenvalues().reverse();
  out.vectors = CMat(m, m);
  for (int i = 0; i < m; ++i) out.vectors.col(i) = es.eigenvectors().col(m - 1 - i);
  return out;
}

// least squares via column-pivoted QR; refuses rank-deficient systems
inline CMat ls_solve(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("ls_solve: row mismatch");
  if (a.rows() < a.cols()) throw std::invalid_argument("ls_solve: underdetermined system");
  Eigen::ColPivHouseholderQR<CMat> qr(a);
  qr.setThreshold(1e-10);
  if (qr.rank() < a.cols()) throw ill_conditioned("ls_solve: rank-deficient matrix");
  return qr.solve(b);
}

}  // namespace sinest
