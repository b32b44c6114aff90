#ifndef DELTAGRAD_TRAINER_HPP
#define DELTAGRAD_TRAINER_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "deltagrad/error.hpp"
#include "deltagrad/fingerprint.hpp"
#include "deltagrad/models.hpp"
#include "deltagrad/random.hpp"

namespace deltagrad {

/// Piecewise-constant learning rate. Segment k applies to iterations
/// [until_{k-1}, until_k); the last segment's rate holds forever.
class LearningRateSchedule {
public:
  struct Segment {
    Index until;  // exclusive; ignored for the last segment
    double rate;
    bool operator==(const Segment&) const = default;
  };

  LearningRateSchedule() : LearningRateSchedule(0.1) {}
  LearningRateSchedule(double constant) : segments_{{0, constant}} { validate(); }  // NOLINT
  explicit LearningRateSchedule(std::vector<Segment> segments) : segments_(std::move(segments)) {
    validate();
  }

  /// "0.2:10,0.1" means 0.2 for iterations [0,10) and 0.1 afterwards.
  static LearningRateSchedule parse(std::string_view text) {
    std::vector<Segment> segs;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto comma = text.find(',', pos);
      const auto item = text.substr(pos, comma == std::string_view::npos ? text.size() - pos : comma - pos);
      const auto colon = item.find(':');
      try {
        const double rate = std::stod(std::string(item.substr(0, colon)));
        Index until = 0;
        if (colon != std::string_view::npos) until = std::stoull(std::string(item.substr(colon + 1)));
        segs.push_back({until, rate});
      } catch (const std::logic_error&) {
        throw InvalidArgument("bad learning-rate schedule '" + std::string(text) + "'");
      }
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return LearningRateSchedule(std::move(segs));
  }

  double at(Index t) const noexcept {
    for (std::size_t k = 0; k + 1 < segments_.size(); ++k) {
      if (t < segments_[k].until) return segments_[k].rate;
    }
    return segments_.back().rate;
  }

  double max_rate() const noexcept {
    double m = 0;
    for (const auto& s : segments_) m = std::max(m, s.rate);
    return m;
  }

  const std::vector<Segment>& segments() const noexcept { return segments_; }

  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      if (k) os << ',';
      os << segments_[k].rate;
      if (k + 1 < segments_.size()) os << ':' << segments_[k].until;
    }
    return os.str();
  }

  bool operator==(const LearningRateSchedule&) const = default;

private:
  void validate() const {
    if (segments_.empty()) throw InvalidArgument("learning-rate schedule is empty");
    Index prev = 0;
    for (std::size_t k = 0; k < segments_.size(); ++k) {
      const auto& s = segments_[k];
      if (!(s.rate > 0.0) || !std::isfinite(s.rate)) throw InvalidArgument("learning rates must be positive");
      if (k + 1 < segments_.size()) {
        if (s.until <= prev) throw InvalidArgument("schedule boundaries must increase");
        prev = s.until;
      }
    }
  }

  std::vector<Segment> segments_;
};

struct TrainConfig {
  LearningRateSchedule lr;
  Index iterations = 0;
  /// Minibatch size; 0 or n means deterministic full-batch GD.
  Index batch_size = 0;
  std::uint64_t seed = 0;
  LossConfig loss;

  Index effective_batch(Index n) const noexcept {
    return batch_size == 0 || batch_size >= n ? n : batch_size;
  }
  bool stochastic(Index n) const noexcept { return effective_batch(n) < n; }
};

/// Per-iteration minibatches. Each batch is sorted ascending.
using MinibatchSchedule = std::vector<IndexList>;

/// Epoch-shuffled sampling without replacement: each epoch is a permutation
/// of [0,n) keyed by (seed, epoch), cut into ceil(n/B) consecutive batches.
/// The final batch of an epoch holds the n mod B leftovers when B does not
/// divide n.
inline MinibatchSchedule derive_schedule(std::uint64_t seed, Index n, Index batch, Index iterations) {
  if (n == 0) throw InvalidArgument("cannot derive a schedule for zero samples");
  if (batch == 0 || batch > n) throw InvalidArgument("batch size must be in [1, n]");
  const Index per_epoch = (n + batch - 1) / batch;
  const CounterRng rng(seed, 0x5eed'ba7c'4e5ULL);

  MinibatchSchedule schedule;
  schedule.reserve(iterations);
  IndexList perm(n);
  for (Index t = 0; t < iterations; ++t) {
    const Index epoch = t / per_epoch;
    const Index slot = t % per_epoch;
    if (slot == 0) {
      std::iota(perm.begin(), perm.end(), Index{0});
      if (batch < n) {
        const CounterRng epoch_rng = rng.substream(epoch);
        for (Index i = n - 1; i > 0; --i) {
          const auto j = static_cast<Index>(epoch_rng.below(i, i + 1));
          std::swap(perm[i], perm[j]);
        }
      }
    }
    const Index begin = slot * batch;
    const Index end = std::min(n, begin + batch);
    IndexList b(perm.begin() + static_cast<std::ptrdiff_t>(begin), perm.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(b.begin(), b.end());
    schedule.push_back(std::move(b));
  }
  return schedule;
}

/// Everything recorded during training that incremental updates consume.
struct TrainingHistory {
  TrainConfig config;
  Index n = 0;
  Index p = 0;
  /// w_0 .. w_T
  std::vector<Vector> params;
  /// Gradient at w_0 .. w_{T-1}: full-batch average for GD, minibatch
  /// average for SGD.
  std::vector<Vector> gradients;
  Fingerprint fingerprint{};
  /// Non-fatal diagnostics (not persisted).
  std::vector<std::string> warnings;

  Index iterations() const noexcept { return gradients.size(); }
  const Vector& final_params() const { return params.back(); }
  Index batch_size() const noexcept { return config.effective_batch(n); }
  bool stochastic() const noexcept { return config.stochastic(n); }

  MinibatchSchedule schedule() const {
    return derive_schedule(config.seed, n, batch_size(), iterations());
  }

  bool same_trajectory(const TrainingHistory& o) const {
    if (params.size() != o.params.size() || gradients.size() != o.gradients.size()) return false;
    for (std::size_t t = 0; t < params.size(); ++t) {
      if (params[t] != o.params[t]) return false;
    }
    for (std::size_t t = 0; t < gradients.size(); ++t) {
      if (gradients[t] != o.gradients[t]) return false;
    }
    return true;
  }
};

namespace detail {

inline void check_finite(const Vector& v, const char* stage, Index t) {
  if (!v.allFinite()) throw DivergenceError(stage, t);
}

inline std::vector<std::string> step_size_warnings(const TrainConfig& cfg, const Dataset& data) {
  std::vector<std::string> out;
  const double mu = cfg.loss.l2;
  const double L = smoothness_estimate(cfg.loss, data);
  const double limit = 2.0 / (L + mu);
  if (cfg.lr.max_rate() > limit) {
    std::ostringstream os;
    os << "learning rate " << cfg.lr.max_rate() << " exceeds 2/(L+mu) = " << limit
       << " (L estimate " << L << ", mu " << mu << "); convergence is not guaranteed";
    out.push_back(os.str());
  }
  return out;
}

template <MarginLoss Loss>
TrainingHistory run_training(const Model<Loss>& model, const Dataset& data, const TrainConfig& cfg,
                             const MinibatchSchedule* schedule) {
  validate(model, data);
  TrainingHistory h;
  h.config = cfg;
  h.n = data.n();
  h.p = data.p();
  h.fingerprint = fingerprint(data);
  h.warnings = step_size_warnings(cfg, data);
  h.params.reserve(cfg.iterations + 1);
  h.gradients.reserve(cfg.iterations);

  Vector w = Vector::Zero(static_cast<Eigen::Index>(data.p()));
  h.params.push_back(w);
  for (Index t = 0; t < cfg.iterations; ++t) {
    Vector g = schedule ? mean_gradient(model, data, w, (*schedule)[t])
                        : mean_gradient(model, data, w, detail::all_rows(data));
    check_finite(g, "train", t);
    w.noalias() -= cfg.lr.at(t) * g;
    check_finite(w, "train", t);
    h.gradients.push_back(std::move(g));
    h.params.push_back(w);
  }
  return h;
}

}  // namespace detail

/// Full-batch gradient descent from w_0 = 0, caching every iterate and gradient.
template <MarginLoss Loss>
TrainingHistory train_gd(const Model<Loss>& model, const Dataset& data, const TrainConfig& cfg) {
  if (cfg.effective_batch(data.n()) != data.n()) {
    throw InvalidArgument("train_gd needs batch size n (or 0)");
  }
  return detail::run_training(model, data, cfg, nullptr);
}

/// Minibatch SGD over the schedule derived from (seed, n, B, T).
template <MarginLoss Loss>
TrainingHistory train_sgd(const Model<Loss>& model, const Dataset& data, const TrainConfig& cfg) {
  if (cfg.batch_size == 0 || cfg.batch_size > data.n()) {
    throw InvalidArgument("batch size must be in [1, n]");
  }
  const MinibatchSchedule schedule =
      derive_schedule(cfg.seed, data.n(), cfg.batch_size, cfg.iterations);
  return detail::run_training(model, data, cfg, &schedule);
}

/// GD when the batch covers the data set, SGD otherwise; loss from `cfg.loss`.
inline TrainingHistory train(const Dataset& data, const TrainConfig& cfg) {
  return with_model(cfg.loss, [&](const auto& model) {
    return cfg.stochastic(data.n()) ? train_sgd(model, data, cfg) : train_gd(model, data, cfg);
  });
}

}  // namespace deltagrad

#endif  // DELTAGRAD_TRAINER_HPP
