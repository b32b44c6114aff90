#ifndef DELTAGRAD_PRIVACY_HPP
#define DELTAGRAD_PRIVACY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "deltagrad/error.hpp"
#include "deltagrad/models.hpp"
#include "deltagrad/random.hpp"
#include "deltagrad/trainer.hpp"

namespace deltagrad {

/// Empirical stand-ins for the problem constants entering the deletion bound.
/// They are estimates: the true suprema are not computable at runtime.
struct ConstantEstimates {
  double mu = 0.0;  // strong convexity (= l2)
  double L = 0.0;   // smoothness
  double c0 = 0.0;  // Hessian Lipschitz constant
  double c2 = 0.0;  // per-sample gradient bound over the cached iterates
  double c1 = 0.2;  // strong-independence constant (assumed)
  Index m = 2;
  double K1 = 0.0;  // quasi-Hessian eigenvalue bounds
  double K2 = 0.0;
  double e = 0.0;
  double M1 = 0.0;  // 2 c2 / mu
  double A = 0.0;
};

struct EstimateOptions {
  Index history = 2;
  double c1 = 0.2;
  /// Random iterate pairs probed for the Hessian Lipschitz constant.
  Index lipschitz_pairs = 100;
  double power_tolerance = 1e-6;
  Index power_max_iterations = 1000;
  std::uint64_t seed = 0;
};

namespace detail {

/// Spectral norm of the symmetric operator v -> H(a) v - H(b) v.
template <MarginLoss Loss>
double hessian_gap_norm(const Model<Loss>& model, const Dataset& data, const Vector& a, const Vector& b,
                        const EstimateOptions& opt, const CounterRng& rng) {
  const auto p = a.size();
  Vector v(p);
  for (Eigen::Index j = 0; j < p; ++j) v[j] = rng.normal(static_cast<std::uint64_t>(j)) + 1e-3;
  v.normalize();
  double estimate = 0.0;
  for (Index it = 0; it < opt.power_max_iterations; ++it) {
    Vector dv = hessian_vector_product(model, data, a, v) - hessian_vector_product(model, data, b, v);
    const double norm = dv.norm();
    if (norm == 0.0) return 0.0;
    const bool converged = std::abs(norm - estimate) <= opt.power_tolerance * norm;
    estimate = norm;
    v = dv / norm;
    if (converged) break;
  }
  return estimate;
}

/// |grad F_i(w)| for every sample i, maximised.
template <MarginLoss Loss>
double max_sample_gradient_norm(const Model<Loss>& model, const Dataset& data, const Vector& w) {
  const double ww = w.squaredNorm();
  double best = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    const auto x = data.row(i);
    const double xw = x.dot(w);
    const double c = model.loss.derivative(xw, data.label(i));
    const double sq = c * c * x.squaredNorm() + 2.0 * c * model.l2 * xw + model.l2 * model.l2 * ww;
    best = std::max(best, std::sqrt(std::max(sq, 0.0)));
  }
  return best;
}

}  // namespace detail

/// K1 = 1 / [ (1+L/mu)^{2m} L/mu + (1-(1+L/mu)^{2m}) / (1-(1+L/mu)^2) / mu ],
/// K2 = (m+1) L, e = (L(L+1) + K2 L) / (mu K1),
/// A = c0 sqrt(m) [(1+e)^m - 1] / c1 + c0, M1 = 2 c2 / mu.
inline void derive_dependent_constants(ConstantEstimates& c) {
  if (!(c.mu > 0.0)) throw PrivacyError("strong convexity constant must be positive (l2 > 0)");
  const double ratio = c.L / c.mu;
  const double grow = std::pow(1.0 + ratio, 2.0 * static_cast<double>(c.m));
  const double q = (1.0 + ratio) * (1.0 + ratio);
  c.K1 = 1.0 / (grow * ratio + (1.0 - grow) / (1.0 - q) / c.mu);
  c.K2 = static_cast<double>(c.m + 1) * c.L;
  c.e = (c.L * (c.L + 1.0) + c.K2 * c.L) / (c.mu * c.K1);
  c.A = c.c0 * std::sqrt(static_cast<double>(c.m)) * (std::pow(1.0 + c.e, static_cast<double>(c.m)) - 1.0) / c.c1 + c.c0;
  c.M1 = 2.0 * c.c2 / c.mu;
}

template <MarginLoss Loss>
ConstantEstimates estimate_constants(const Model<Loss>& model, const LossConfig& kind, const Dataset& data,
                                     const TrainingHistory& history, const EstimateOptions& opt = {}) {
  if (!(model.l2 > 0.0)) throw PrivacyError("privacy bound needs l2 > 0 (no strong convexity otherwise)");
  if (!(opt.c1 > 0.0)) throw PrivacyError("strong-independence constant c1 must be positive");
  ConstantEstimates c;
  c.mu = model.l2;
  c.L = smoothness_estimate(kind, data);
  c.c1 = opt.c1;
  c.m = opt.history;
  for (const auto& w : history.params) {
    c.c2 = std::max(c.c2, detail::max_sample_gradient_norm(model, data, w));
  }

  if (kind.kind != LossKind::ridge && history.params.size() >= 2) {
    const CounterRng rng(opt.seed, 0xc0);
    const auto count = history.params.size();
    for (Index k = 0; k < opt.lipschitz_pairs; ++k) {
      const auto i = static_cast<Index>(rng.below(2 * k, count));
      auto j = static_cast<Index>(rng.below(2 * k + 1, count - 1));
      if (j >= i) ++j;
      const Vector& a = history.params[i];
      const Vector& b = history.params[j];
      const double gap = (a - b).norm();
      if (gap == 0.0) continue;
      const double h = detail::hessian_gap_norm(model, data, a, b, opt, rng.substream(k));
      c.c0 = std::max(c.c0, h / gap);
    }
  }
  derive_dependent_constants(c);
  return c;
}

inline ConstantEstimates estimate_constants(const Dataset& data, const TrainingHistory& history,
                                            const EstimateOptions& opt = {}) {
  return with_model(history.config.loss, [&](const auto& m) {
    return estimate_constants(m, history.config.loss, data, history, opt);
  });
}

struct PrivacyParams {
  double epsilon = 1.0;
  Index p = 1;
  double A = 0.0;
  double M1 = 0.0;
  double mu = 0.0;
  double c0 = 0.0;
  double eta = 0.1;
  Index n = 1;
  Index r = 0;

  static PrivacyParams from(const ConstantEstimates& c, double epsilon, Index p, double eta, Index n, Index r) {
    return {epsilon, p, c.A, c.M1, c.mu, c.c0, eta, n, r};
  }
};

/// Bound on sqrt(p) |w^U - w^I| used to calibrate the Laplace noise:
///
///   delta = sqrt(p) A M1^2 r^2 / ( eta (mu/2 - r/(n-r) mu - c0 M1 r/(2n))^2 (n-r) (n/2-r) ).
inline double delta_bound(const PrivacyParams& pp) {
  const double n = static_cast<double>(pp.n);
  const double r = static_cast<double>(pp.r);
  if (!(pp.eta > 0.0)) throw PrivacyError("learning rate must be positive");
  if (!(pp.mu > 0.0)) throw PrivacyError("strong convexity constant must be positive");
  const double gap = 0.5 * pp.mu - r / (n - r) * pp.mu - pp.c0 * pp.M1 * r / (2.0 * n);
  if (!(r < n / 2.0) || !(gap > 0.0)) {
    throw PrivacyError("deletion fraction too large for privacy bound");
  }
  const double numerator = std::sqrt(static_cast<double>(pp.p)) * pp.A * pp.M1 * pp.M1 * r * r;
  return numerator / (pp.eta * gap * gap * (n - r) * (n / 2.0 - r));
}

/// One Laplace(0, b) draw per counter, by inverse CDF:
/// X = -b sgn(U) ln(1 - 2|U|), U uniform on (-1/2, 1/2).
inline double laplace_draw(const CounterRng& rng, std::uint64_t counter, double scale) {
  const double u = (static_cast<double>(rng.bits(counter) >> 11) + 0.5) * 0x1.0p-53 - 0.5;
  const double s = u < 0 ? -1.0 : 1.0;
  return -scale * s * std::log1p(-2.0 * std::abs(u));
}

/// w plus i.i.d. Laplace(0, scale) noise per coordinate; deterministic in seed.
inline Vector laplace_noise(const Vector& w, double scale, std::uint64_t seed) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw PrivacyError("Laplace scale must be positive and finite");
  const CounterRng rng(seed, 0x1a91ace);
  Vector out = w;
  for (Eigen::Index j = 0; j < out.size(); ++j) out[j] += laplace_draw(rng, static_cast<std::uint64_t>(j), scale);
  return out;
}

inline double laplace_cdf(double x, double scale) {
  return x < 0 ? 0.5 * std::exp(x / scale) : 1.0 - 0.5 * std::exp(-x / scale);
}

/// log of density(noised a = z) / density(noised b = z) for per-coordinate
/// Laplace(scale) noise. Bounded by |a - b|_1 / scale.
inline double laplace_log_density_ratio(const Vector& z, const Vector& a, const Vector& b, double scale) {
  return ((z - b).cwiseAbs().sum() - (z - a).cwiseAbs().sum()) / scale;
}

}  // namespace deltagrad

#endif  // DELTAGRAD_PRIVACY_HPP
