#ifndef DELTAGRAD_LBFGS_HPP
#define DELTAGRAD_LBFGS_HPP

#include <cmath>
#include <deque>
#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "deltagrad/error.hpp"
#include "deltagrad/models.hpp"

namespace deltagrad {

struct CurvaturePair {
  Vector dw;  // parameter gap
  Vector dg;  // gradient gap
  Index tag;  // iteration the pair was taken at
};

/// Compact (low-rank) representation of the limited-memory BFGS matrix
///
///   B = sigma I - [dG  sigma dW] M^{-1} [dG' ; sigma dW'],
///   M = [ -D   L' ; L   sigma dW'dW ],
///
/// with D = diag(dW'dG), L the strictly lower triangle of dW'dG and sigma
/// taken from the newest pair. M is applied through the block factorization
///
///   M = [ D^1/2  0 ; -L D^-1/2  J ] [ -D^1/2  D^-1/2 L' ; 0  J' ],
///   J J' = sigma dW'dW + L D^-1 L'.
///
/// Building costs O(m^2 p + m^3); each apply costs O(m p).
class CompactFactorization {
public:
  template <class Pairs>
  static CompactFactorization build(const Pairs& pairs) {
    const auto m = static_cast<Eigen::Index>(pairs.size());
    if (m == 0) throw InvalidArgument("compact factorization needs at least one curvature pair");
    const auto p = pairs.front().dw.size();

    CompactFactorization f;
    f.dw_.resize(p, m);
    f.dg_.resize(p, m);
    Eigen::Index k = 0;
    for (const auto& pair : pairs) {
      f.dw_.col(k) = pair.dw;
      f.dg_.col(k) = pair.dg;
      ++k;
    }

    const Eigen::MatrixXd wtw = f.dw_.transpose() * f.dw_;
    const Eigen::MatrixXd wtg = f.dw_.transpose() * f.dg_;
    const Eigen::VectorXd d = wtg.diagonal();
    if ((d.array() <= 0.0).any()) throw CholeskyFailure();

    f.sigma_ = d[m - 1] / wtw(m - 1, m - 1);
    f.lower_ = wtg.triangularView<Eigen::StrictlyLower>();
    f.d_sqrt_ = d.cwiseSqrt();
    f.d_inv_sqrt_ = f.d_sqrt_.cwiseInverse();

    const Eigen::MatrixXd l_dinv = f.lower_ * d.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd middle = f.sigma_ * wtw + l_dinv * f.lower_.transpose();
    f.chol_.compute(middle);
    if (f.chol_.info() != Eigen::Success) throw CholeskyFailure();
    const Eigen::MatrixXd jl = f.chol_.matrixL();
    if (!(jl.diagonal().array() > 0.0).all() || !jl.allFinite()) throw CholeskyFailure();
    return f;
  }

  /// B v
  Vector apply(const Vector& v) const {
    if (v.size() != dw_.rows()) throw DimensionMismatch("quasi-Hessian product direction");
    // forward block solve
    const Eigen::VectorXd q1 = d_inv_sqrt_.cwiseProduct(dg_.transpose() * v);
    Eigen::VectorXd q2 = sigma_ * (dw_.transpose() * v);
    q2.noalias() += lower_ * d_inv_sqrt_.cwiseProduct(q1);
    chol_.matrixL().solveInPlace(q2);
    // backward block solve
    chol_.matrixU().solveInPlace(q2);
    const Eigen::VectorXd p1 =
        d_inv_sqrt_.cwiseProduct(d_inv_sqrt_.cwiseProduct(lower_.transpose() * q2) - q1);

    Vector out = sigma_ * v;
    out.noalias() -= dg_ * p1;
    out.noalias() -= sigma_ * (dw_ * q2);
    return out;
  }

  double sigma() const noexcept { return sigma_; }
  Eigen::Index size() const noexcept { return dw_.cols(); }

private:
  Eigen::MatrixXd dw_;
  Eigen::MatrixXd dg_;
  double sigma_ = 1.0;
  Eigen::MatrixXd lower_;
  Eigen::VectorXd d_sqrt_;
  Eigen::VectorXd d_inv_sqrt_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
};

/// Ring buffer of the most recent m curvature pairs, oldest first.
/// The compact factorization is rebuilt on every successful insert, so a
/// const buffer can be applied from several threads.
class CurvaturePairBuffer {
public:
  enum class Insert { stored, zero_step, curvature_rejected };

  /// Pairs with dg'dw <= floor * |dw|^2 are refused.
  static constexpr double curvature_floor = 1e-12;

  explicit CurvaturePairBuffer(Index capacity = 2) : capacity_(capacity) {
    if (capacity_ == 0) throw InvalidArgument("history size m must be at least 1");
  }

  Insert append(Vector dw, Vector dg, Index tag) {
    if (dw.size() != dg.size()) throw DimensionMismatch("curvature pair halves differ in length");
    if (!pairs_.empty() && dw.size() != pairs_.front().dw.size()) {
      throw DimensionMismatch("curvature pair length differs from stored pairs");
    }
    const double ww = dw.squaredNorm();
    if (ww == 0.0) return Insert::zero_step;
    if (!(dg.dot(dw) > curvature_floor * ww)) return Insert::curvature_rejected;

    if (pairs_.size() == capacity_) pairs_.pop_front();
    pairs_.push_back({std::move(dw), std::move(dg), tag});
    refactor();
    return Insert::stored;
  }

  /// B v through the compact representation.
  /// Throws CholeskyFailure when the current pairs give an indefinite middle matrix.
  Vector apply(const Vector& v) const {
    if (pairs_.empty()) throw InvalidArgument("quasi-Hessian product on an empty pair buffer");
    if (!factorization_) throw CholeskyFailure();
    return factorization_->apply(v);
  }

  bool usable() const noexcept { return factorization_.has_value(); }
  bool empty() const noexcept { return pairs_.empty(); }
  Index size() const noexcept { return pairs_.size(); }
  Index capacity() const noexcept { return capacity_; }
  const std::deque<CurvaturePair>& pairs() const noexcept { return pairs_; }

  void clear() {
    pairs_.clear();
    factorization_.reset();
  }

private:
  void refactor() {
    try {
      factorization_ = CompactFactorization::build(pairs_);
    } catch (const CholeskyFailure&) {
      factorization_.reset();
    }
  }

  Index capacity_;
  std::deque<CurvaturePair> pairs_;
  std::optional<CompactFactorization> factorization_;
};

inline CurvaturePairBuffer::Insert append_pair(CurvaturePairBuffer& buf, Vector dw, Vector dg, Index tag) {
  return buf.append(std::move(dw), std::move(dg), tag);
}

inline Vector quasi_hvp(const CurvaturePairBuffer& buf, const Vector& v) { return buf.apply(v); }

}  // namespace deltagrad

#endif  // DELTAGRAD_LBFGS_HPP
