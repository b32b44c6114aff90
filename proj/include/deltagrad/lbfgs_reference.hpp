#ifndef DELTAGRAD_LBFGS_REFERENCE_HPP
#define DELTAGRAD_LBFGS_REFERENCE_HPP

// Dense O(m p^2) reference implementations of the quasi-Hessian and its
// inverse, built by the rank-two recursions. Test oracles only.

#include <Eigen/Dense>

#include "deltagrad/lbfgs.hpp"

namespace deltagrad::reference {

namespace detail {

inline double initial_scale(const CurvaturePairBuffer& buf) {
  if (buf.empty()) throw InvalidArgument("reference quasi-Hessian needs at least one pair");
  const auto& newest = buf.pairs().back();
  return newest.dg.dot(newest.dw) / newest.dw.squaredNorm();
}

}  // namespace detail

/// B_{k+1} = B_k - B_k s s' B_k / (s' B_k s) + y y' / (y' s), B_0 = sigma I,
/// sigma from the newest pair (the same scaling the compact form uses).
inline Eigen::MatrixXd quasi_hessian(const CurvaturePairBuffer& buf) {
  const double sigma = detail::initial_scale(buf);
  const auto p = buf.pairs().front().dw.size();
  Eigen::MatrixXd b = sigma * Eigen::MatrixXd::Identity(p, p);
  for (const auto& pr : buf.pairs()) {
    const Vector bs = b * pr.dw;
    b -= bs * bs.transpose() / pr.dw.dot(bs);
    b += pr.dg * pr.dg.transpose() / pr.dg.dot(pr.dw);
  }
  return b;
}

/// H_{k+1} = (I - rho s y') H_k (I - rho y s') + rho s s', H_0 = I / sigma.
inline Eigen::MatrixXd inverse_quasi_hessian(const CurvaturePairBuffer& buf) {
  const double sigma = detail::initial_scale(buf);
  const auto p = buf.pairs().front().dw.size();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
  Eigen::MatrixXd h = eye / sigma;
  for (const auto& pr : buf.pairs()) {
    const double rho = 1.0 / pr.dg.dot(pr.dw);
    const Eigen::MatrixXd left = eye - rho * pr.dw * pr.dg.transpose();
    h = left * h * left.transpose() + rho * pr.dw * pr.dw.transpose();
  }
  return h;
}

inline Vector recursive_B_apply(const CurvaturePairBuffer& buf, const Vector& v) {
  return quasi_hessian(buf) * v;
}

inline Vector inverse_apply(const CurvaturePairBuffer& buf, const Vector& v) {
  return inverse_quasi_hessian(buf) * v;
}

}  // namespace deltagrad::reference

#endif  // DELTAGRAD_LBFGS_REFERENCE_HPP
