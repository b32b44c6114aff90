#ifndef DELTAGRAD_MODELS_HPP
#define DELTAGRAD_MODELS_HPP

#include <cmath>
#include <cstddef>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "deltagrad/error.hpp"

namespace deltagrad {

using Index = std::size_t;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using IndexList = std::vector<Index>;

/// Training samples, one row per sample. Immutable after construction.
class Dataset {
public:
  Dataset() = default;

  Dataset(RowMatrix features, Vector labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
    if (features_.rows() < 1) throw InvalidArgument("dataset needs at least one sample");
    if (features_.cols() < 1) throw InvalidArgument("dataset needs at least one feature");
    if (labels_.size() != features_.rows()) {
      throw DimensionMismatch(std::to_string(features_.rows()) + " rows but " +
                              std::to_string(labels_.size()) + " labels");
    }
    if (!features_.allFinite() || !labels_.allFinite()) {
      throw InvalidArgument("dataset contains non-finite values");
    }
  }

  Index n() const noexcept { return static_cast<Index>(features_.rows()); }
  Index p() const noexcept { return static_cast<Index>(features_.cols()); }

  const RowMatrix& features() const noexcept { return features_; }
  const Vector& labels() const noexcept { return labels_; }

  auto row(Index i) const { return features_.row(static_cast<Eigen::Index>(i)); }
  double label(Index i) const { return labels_[static_cast<Eigen::Index>(i)]; }

  /// Rows `indices` in the given order.
  Dataset select(std::span<const Index> indices) const {
    RowMatrix x(static_cast<Eigen::Index>(indices.size()), features_.cols());
    Vector y(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] >= n()) throw InvalidArgument("row index out of range");
      x.row(static_cast<Eigen::Index>(k)) = row(indices[k]);
      y[static_cast<Eigen::Index>(k)] = label(indices[k]);
    }
    return Dataset(std::move(x), std::move(y));
  }

  /// This dataset followed by the rows of `extra`.
  Dataset concat(const Dataset& extra) const {
    if (extra.p() != p()) throw DimensionMismatch("appended rows have a different feature count");
    RowMatrix x(features_.rows() + extra.features_.rows(), features_.cols());
    x << features_, extra.features_;
    Vector y(labels_.size() + extra.labels_.size());
    y << labels_, extra.labels_;
    return Dataset(std::move(x), std::move(y));
  }

  bool operator==(const Dataset& other) const {
    return features_.rows() == other.features_.rows() &&
           features_.cols() == other.features_.cols() && features_ == other.features_ &&
           labels_ == other.labels_;
  }

private:
  RowMatrix features_;
  Vector labels_;
};

enum class LossKind { logistic, ridge };

inline std::string_view to_string(LossKind kind) {
  return kind == LossKind::logistic ? "logistic" : "ridge";
}

inline LossKind parse_loss_kind(std::string_view name) {
  if (name == "logistic") return LossKind::logistic;
  if (name == "ridge") return LossKind::ridge;
  throw InvalidArgument("unknown loss '" + std::string(name) + "'");
}

struct LossConfig {
  LossKind kind = LossKind::logistic;
  double l2 = 0.0;
};

// Per-sample losses are functions of the margin z = x'w and the label y.
// A loss policy supplies value, first and second derivative in z.

/// ln(1 + exp(-y z)), labels in {-1, +1}.
struct LogisticLoss {
  static constexpr bool binary_labels = true;

  static double value(double z, double y) noexcept {
    const double m = y * z;
    return m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
  }
  static double derivative(double z, double y) noexcept {
    const double m = y * z;
    if (m > 0) {
      const double e = std::exp(-m);
      return -y * e / (1.0 + e);
    }
    return -y / (1.0 + std::exp(m));
  }
  static double curvature(double z, double /*y*/) noexcept {
    const double s = 1.0 / (1.0 + std::exp(-z));
    return s * (1.0 - s);
  }
};

/// 0.5 (z - y)^2.
struct RidgeLoss {
  static constexpr bool binary_labels = false;

  static double value(double z, double y) noexcept { return 0.5 * (z - y) * (z - y); }
  static double derivative(double z, double y) noexcept { return z - y; }
  static double curvature(double, double) noexcept { return 1.0; }
};

template <class L>
concept MarginLoss = requires(double z, double y) {
  { L::value(z, y) } -> std::convertible_to<double>;
  { L::derivative(z, y) } -> std::convertible_to<double>;
  { L::curvature(z, y) } -> std::convertible_to<double>;
  { L::binary_labels } -> std::convertible_to<bool>;
};

/// A margin loss plus the L2 term. The regularizer is part of every F_i:
/// F_i(w) = loss(x_i'w, y_i) + l2/2 |w|^2.
template <MarginLoss Loss>
struct Model {
  Loss loss{};
  double l2 = 0.0;
};

namespace detail {

inline void check_params(const Dataset& data, const Vector& w, const char* what) {
  if (static_cast<Index>(w.size()) != data.p()) {
    throw DimensionMismatch(std::string(what) + " has length " + std::to_string(w.size()) +
                            ", dataset has " + std::to_string(data.p()) + " features");
  }
}

inline auto all_rows(const Dataset& data) { return std::views::iota(Index{0}, data.n()); }

}  // namespace detail

template <MarginLoss Loss>
void validate(const Model<Loss>& model, const Dataset& data) {
  if (!(model.l2 >= 0.0) || !std::isfinite(model.l2)) {
    throw InvalidArgument("l2 coefficient must be finite and non-negative");
  }
  if constexpr (Loss::binary_labels) {
    for (Index i = 0; i < data.n(); ++i) {
      const double y = data.label(i);
      if (y != 1.0 && y != -1.0) {
        throw InvalidArgument("logistic loss needs labels in {-1,+1}; sample " +
                              std::to_string(i) + " has " + std::to_string(y));
      }
    }
  }
}

/// Sum over `rows` of the data part of the per-sample gradient, i.e.
/// sum_i loss'(x_i'w, y_i) x_i, accumulated in the order given.
/// Every gradient in the library goes through this loop, so two calls over
/// the same row sequence agree bit for bit.
template <MarginLoss Loss, std::ranges::input_range Rows>
Vector data_gradient_sum(const Model<Loss>& model, const Dataset& data, const Vector& w,
                         const Rows& rows) {
  detail::check_params(data, w, "parameter vector");
  Vector acc = Vector::Zero(w.size());
  for (const Index i : rows) {
    const auto x = data.row(i);
    const double c = model.loss.derivative(x.dot(w), data.label(i));
    acc.noalias() += c * x.transpose();
  }
  return acc;
}

template <MarginLoss Loss>
double loss(const Model<Loss>& model, const Dataset& data, const Vector& w) {
  detail::check_params(data, w, "parameter vector");
  double total = 0.0;
  for (Index i = 0; i < data.n(); ++i) {
    total += model.loss.value(data.row(i).dot(w), data.label(i));
  }
  return total / static_cast<double>(data.n()) + 0.5 * model.l2 * w.squaredNorm();
}

/// Turns a data-gradient sum over `count` samples into the averaged
/// regularized gradient: sum / count + l2 w.
template <MarginLoss Loss>
Vector average_gradient(const Model<Loss>& model, Vector sum, double count, const Vector& w) {
  sum /= count;
  sum.noalias() += model.l2 * w;
  return sum;
}

/// (1/|rows|) sum_{i in rows} grad F_i(w). `rows` must be non-empty.
template <MarginLoss Loss, std::ranges::sized_range Rows>
Vector mean_gradient(const Model<Loss>& model, const Dataset& data, const Vector& w,
                     const Rows& rows) {
  return average_gradient(model, data_gradient_sum(model, data, w, rows),
                          static_cast<double>(std::ranges::size(rows)), w);
}

template <MarginLoss Loss>
Vector full_gradient(const Model<Loss>& model, const Dataset& data, const Vector& w) {
  return mean_gradient(model, data, w, detail::all_rows(data));
}

/// Unnormalized sum of per-sample gradients (regularizer included per sample).
template <MarginLoss Loss>
Vector subset_gradient_sum(const Model<Loss>& model, const Dataset& data, const Vector& w,
                           std::span<const Index> indices) {
  for (const Index i : indices) {
    if (i >= data.n()) throw InvalidArgument("sample index " + std::to_string(i) + " out of range");
  }
  Vector g = data_gradient_sum(model, data, w, indices);
  g.noalias() += (static_cast<double>(indices.size()) * model.l2) * w;
  return g;
}

template <MarginLoss Loss>
Vector sample_gradient(const Model<Loss>& model, const Dataset& data, const Vector& w, Index i) {
  const auto x = data.row(i);
  Vector g = model.loss.derivative(x.dot(w), data.label(i)) * x.transpose();
  g.noalias() += model.l2 * w;
  return g;
}

/// Exact H(w) v of the averaged objective. Used by tests and guards, never
/// in the incremental update loop.
template <MarginLoss Loss>
Vector hessian_vector_product(const Model<Loss>& model, const Dataset& data, const Vector& w,
                              const Vector& v) {
  detail::check_params(data, w, "parameter vector");
  detail::check_params(data, v, "direction vector");
  Vector acc = Vector::Zero(w.size());
  for (Index i = 0; i < data.n(); ++i) {
    const auto x = data.row(i);
    const double c = model.loss.curvature(x.dot(w), data.label(i)) * x.dot(v);
    acc.noalias() += c * x.transpose();
  }
  acc /= static_cast<double>(data.n());
  acc.noalias() += model.l2 * v;
  return acc;
}

/// Fraction of rows whose prediction sign matches the label (ties count as +1).
inline double accuracy(const Dataset& data, const Vector& w) {
  detail::check_params(data, w, "parameter vector");
  Index hits = 0;
  for (Index i = 0; i < data.n(); ++i) {
    const double predicted = data.row(i).dot(w) >= 0.0 ? 1.0 : -1.0;
    if (predicted == data.label(i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.n());
}

/// Calls `fn(Model<...>)` with the loss selected at runtime.
template <class Fn>
decltype(auto) with_model(const LossConfig& cfg, Fn&& fn) {
  switch (cfg.kind) {
    case LossKind::logistic:
      return std::forward<Fn>(fn)(Model<LogisticLoss>{{}, cfg.l2});
    case LossKind::ridge:
      return std::forward<Fn>(fn)(Model<RidgeLoss>{{}, cfg.l2});
  }
  throw InvalidArgument("unknown loss kind");
}

// Runtime-dispatched convenience wrappers.

inline double loss(const LossConfig& cfg, const Dataset& data, const Vector& w) {
  return with_model(cfg, [&](const auto& m) { return loss(m, data, w); });
}

inline Vector full_gradient(const LossConfig& cfg, const Dataset& data, const Vector& w) {
  return with_model(cfg, [&](const auto& m) { return full_gradient(m, data, w); });
}

inline Vector subset_gradient_sum(const LossConfig& cfg, const Dataset& data, const Vector& w,
                                  std::span<const Index> indices) {
  return with_model(cfg, [&](const auto& m) { return subset_gradient_sum(m, data, w, indices); });
}

inline Vector hessian_vector_product(const LossConfig& cfg, const Dataset& data, const Vector& w,
                                     const Vector& v) {
  return with_model(cfg, [&](const auto& m) { return hessian_vector_product(m, data, w, v); });
}

/// Smoothness constant estimate: l2 + 0.25 max|x_i|^2 (logistic) or
/// l2 + lambda_max(X'X/n) (ridge).
inline double smoothness_estimate(const LossConfig& cfg, const Dataset& data) {
  if (cfg.kind == LossKind::logistic) {
    return cfg.l2 + 0.25 * data.features().rowwise().squaredNorm().maxCoeff();
  }
  const Eigen::MatrixXd gram =
      data.features().transpose() * data.features() / static_cast<double>(data.n());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  return cfg.l2 + eig.eigenvalues().maxCoeff();
}

}  // namespace deltagrad

#endif  // DELTAGRAD_MODELS_HPP
