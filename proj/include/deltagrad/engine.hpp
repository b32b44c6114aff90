#ifndef DELTAGRAD_ENGINE_HPP
#define DELTAGRAD_ENGINE_HPP

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "deltagrad/error.hpp"
#include "deltagrad/lbfgs.hpp"
#include "deltagrad/models.hpp"
#include "deltagrad/trainer.hpp"

namespace deltagrad {

enum class Direction { remove, add };

enum class EngineMode { gd, sgd, general };

inline std::string_view to_string(EngineMode m) {
  switch (m) {
    case EngineMode::gd: return "gd";
    case EngineMode::sgd: return "sgd";
    case EngineMode::general: return "general";
  }
  return "?";
}

inline EngineMode parse_engine_mode(std::string_view s) {
  if (s == "gd") return EngineMode::gd;
  if (s == "sgd") return EngineMode::sgd;
  if (s == "general") return EngineMode::general;
  throw InvalidArgument("unknown engine mode '" + std::string(s) + "'");
}

struct DeltaGradConfig {
  /// Explicit-gradient period T0.
  Index period = 5;
  /// Burn-in j0: iterations 0..j0 are always explicit.
  Index burn_in = 10;
  /// Curvature history size m.
  Index history = 2;
  EngineMode mode = EngineMode::gd;
  /// Local smoothness threshold of the general engine.
  double smoothness_threshold = 1.0;
  /// Keep every corrected iterate in the outcome.
  bool record_trajectory = false;

  void validate() const {
    if (period < 1) throw InvalidArgument("period T0 must be at least 1");
    if (history < 1) throw InvalidArgument("history size m must be at least 1");
    if (burn_in < history) throw InvalidArgument("burn-in j0 must be at least m");
    if (!(smoothness_threshold > 0.0)) throw InvalidArgument("smoothness threshold must be positive");
  }
};

/// Samples removed from, or appended to, the training set.
struct ChangeSet {
  Direction direction = Direction::remove;
  /// Row indices into the training set (remove only).
  IndexList removed;
  /// New rows (add only).
  std::optional<Dataset> added;

  static ChangeSet deletion(IndexList ids) {
    ChangeSet c;
    c.direction = Direction::remove;
    c.removed = std::move(ids);
    return c;
  }

  static ChangeSet addition(Dataset rows) {
    ChangeSet c;
    c.direction = Direction::add;
    c.added = std::move(rows);
    return c;
  }

  Index size() const noexcept {
    return direction == Direction::remove ? removed.size() : (added ? added->n() : 0);
  }
  bool empty() const noexcept { return size() == 0; }
};

enum class IterationMode : std::uint8_t { explicit_step, approximated, skipped_empty_batch, fallback };

inline char mode_letter(IterationMode m) {
  switch (m) {
    case IterationMode::explicit_step: return 'E';
    case IterationMode::approximated: return 'A';
    case IterationMode::skipped_empty_batch: return 'S';
    case IterationMode::fallback: return 'F';
  }
  return '?';
}

struct UpdateOutcome {
  Vector params;
  /// w^I_0 .. w^I_T when requested.
  std::vector<Vector> trajectory;
  std::vector<IterationMode> mode_trace;
  /// Iterations that evaluated the gradient over the whole (base) set.
  Index full_gradient_evaluations = 0;
  Index stored_pairs = 0;
  Index rejected_pairs = 0;
  /// General engine: explicit iterations whose pair failed the local convexity check.
  Index convexity_guard_hits = 0;
  /// General engine: approximate iterations redirected by the local smoothness check.
  Index smoothness_guard_hits = 0;
  double seconds = 0.0;
  std::vector<std::string> warnings;

  Index count(IterationMode m) const {
    return static_cast<Index>(std::count(mode_trace.begin(), mode_trace.end(), m));
  }

  std::string trace_string() const {
    std::string s;
    s.reserve(mode_trace.size());
    for (auto m : mode_trace) s.push_back(mode_letter(m));
    return s;
  }
};

/// Distances between the original model w, the retrained model w^U and
/// the incrementally updated model w^I.
struct Distances {
  double retrained_vs_original = 0.0;     // |w^U - w|
  double retrained_vs_incremental = 0.0;  // |w^U - w^I|
  double original_vs_incremental = 0.0;   // |w - w^I|

  static Distances between(const Vector& original, const Vector& retrained, const Vector& incremental) {
    return {(retrained - original).norm(), (retrained - incremental).norm(),
            (original - incremental).norm()};
  }

  /// |w^U - w^I| / |w^U - w|; zero when both vanish.
  double ratio() const noexcept {
    if (retrained_vs_original == 0.0) return retrained_vs_incremental == 0.0 ? 0.0 : INFINITY;
    return retrained_vs_incremental / retrained_vs_original;
  }
};

/// Number of explicit iterations the periodic schedule performs:
/// j0 + ceil((T - j0) / T0) when T > j0, T otherwise.
constexpr Index expected_explicit_iterations(Index iterations, Index burn_in, Index period) {
  if (iterations <= burn_in + 1) return iterations;
  return burn_in + (iterations - burn_in + period - 1) / period;
}

/// Largest change fraction r/n treated as "small" before a warning is attached.
inline constexpr double small_change_fraction = 0.05;

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

inline void check_history(const Dataset& data, const TrainingHistory& history, bool verify_fingerprint = true) {
  if (history.params.size() != history.gradients.size() + 1) {
    throw InvalidArgument("history must hold T+1 parameter vectors and T gradients");
  }
  if (history.n != data.n() || history.p != data.p()) throw FingerprintMismatch();
  if (verify_fingerprint && fingerprint(data) != history.fingerprint) throw FingerprintMismatch();
}

/// Sorted, de-duplicated removal set; rejects out-of-range and repeated ids.
inline IndexList normalized_removal(const IndexList& ids, Index n) {
  IndexList r = ids;
  std::sort(r.begin(), r.end());
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r[k] >= n) throw InvalidArgument("removal index " + std::to_string(r[k]) + " out of range");
    if (k > 0 && r[k] == r[k - 1]) throw InvalidArgument("removal index " + std::to_string(r[k]) + " repeated");
  }
  return r;
}

/// `base` minus the sorted list `removed`, order of `base` preserved.
inline IndexList set_difference(const IndexList& base, const std::vector<bool>& removed_mask) {
  IndexList out;
  out.reserve(base.size());
  for (Index i : base) {
    if (!removed_mask[i]) out.push_back(i);
  }
  return out;
}

inline IndexList iota_list(Index n) {
  IndexList v(n);
  for (Index i = 0; i < n; ++i) v[i] = i;
  return v;
}

inline std::vector<std::string> change_warnings(Index r, Index n) {
  std::vector<std::string> w;
  if (n > 0 && static_cast<double>(r) / static_cast<double>(n) > small_change_fraction) {
    std::ostringstream os;
    os << "change fraction r/n = " << static_cast<double>(r) / static_cast<double>(n)
       << " exceeds " << small_change_fraction << "; the incremental update may lose accuracy";
    w.push_back(os.str());
  }
  return w;
}

/// Where the cached gradient at iteration t was averaged.
struct BaseSets {
  /// Full-batch histories: one list for every iteration.
  const IndexList* full = nullptr;
  /// Minibatch histories: one list per iteration.
  const MinibatchSchedule* batches = nullptr;

  const IndexList& at(Index t) const { return batches ? (*batches)[t] : *full; }
};

/// Inputs to one incremental pass.
struct UpdateProblem {
  /// All rows the pass may touch (original rows, then any added rows).
  const Dataset* rows = nullptr;
  const std::vector<Vector>* params = nullptr;
  const std::vector<Vector>* gradients = nullptr;
  const LearningRateSchedule* lr = nullptr;
  BaseSets base;
  Direction direction = Direction::remove;
  /// Removed rows (sorted) or added rows, as indices into `rows`.
  const IndexList* changed = nullptr;
  /// Online mode writes the corrected iterates and gradients here.
  std::vector<Vector>* overwrite_params = nullptr;
  std::vector<Vector>* overwrite_gradients = nullptr;
};

/// The DeltaGrad iteration. Explicit iterations evaluate the gradient over
/// the surviving samples and record a curvature pair; approximate
/// iterations rebuild the full gradient from the cached one plus the
/// quasi-Hessian correction and only touch the changed samples.
template <MarginLoss Loss>
UpdateOutcome run_update(const Model<Loss>& model, const UpdateProblem& pb, const DeltaGradConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();
  const Dataset& rows = *pb.rows;
  const auto& params = *pb.params;
  const auto& grads = *pb.gradients;
  const Index iterations = grads.size();
  const bool removing = pb.direction == Direction::remove;
  const bool general = cfg.mode == EngineMode::general;

  std::vector<bool> changed_mask(rows.n(), false);
  for (Index i : *pb.changed) changed_mask[i] = true;

  // Full-batch problems share one surviving set across iterations.
  std::optional<IndexList> shared_remaining;
  if (!pb.base.batches && removing) shared_remaining = set_difference(*pb.base.full, changed_mask);

  UpdateOutcome out;
  out.mode_trace.reserve(iterations);
  if (cfg.record_trajectory) out.trajectory.reserve(iterations + 1);

  CurvaturePairBuffer buffer(cfg.history);
  Vector w = params.front();
  Index anchor = cfg.burn_in;
  IndexList batch_changed;
  IndexList batch_remaining;

  for (Index t = 0; t < iterations; ++t) {
    if (cfg.record_trajectory) out.trajectory.push_back(w);
    const IndexList& base = pb.base.at(t);
    const auto base_count = static_cast<double>(base.size());

    // Changed samples that take part in this iteration.
    const IndexList* changed = pb.changed;
    const IndexList* remaining = shared_remaining ? &*shared_remaining : nullptr;
    if (pb.base.batches && removing) {
      batch_changed.clear();
      batch_remaining.clear();
      for (Index i : base) (changed_mask[i] ? batch_changed : batch_remaining).push_back(i);
      changed = &batch_changed;
      remaining = &batch_remaining;
    }
    const auto r_t = static_cast<double>(changed->size());
    const double denom = removing ? base_count - r_t : base_count + r_t;

    if (removing && remaining->empty()) {
      // every sample of the batch was removed: parameters stay put
      out.mode_trace.push_back(IterationMode::skipped_empty_batch);
      if (pb.overwrite_params) {
        (*pb.overwrite_params)[t] = w;
        (*pb.overwrite_gradients)[t] = Vector::Zero(w.size());
      }
      continue;
    }

    const Vector& cached_w = params[t];
    const Vector& cached_g = grads[t];
    const Vector v = w - cached_w;
    const bool v_zero = v.isZero(0.0);

    IterationMode mode = (t <= cfg.burn_in || (t - anchor) % cfg.period == 0)
                             ? IterationMode::explicit_step
                             : IterationMode::approximated;
    Vector bv;
    if (mode == IterationMode::approximated && !v_zero) {
      if (!buffer.usable()) {
        mode = IterationMode::fallback;
      } else {
        bv = buffer.apply(v);
        if (general && bv.norm() >= cfg.smoothness_threshold * v.norm()) {
          ++out.smoothness_guard_hits;
          mode = IterationMode::fallback;
        }
      }
    }

    Vector step;
    if (mode == IterationMode::approximated) {
      if (r_t == 0.0) {
        step = v_zero ? cached_g : Vector(bv + cached_g);
      } else {
        // n [B v + g_t] -/+ sum over changed samples, averaged over the new size
        const Vector approx_full = v_zero ? cached_g : Vector(bv + cached_g);
        Vector changed_sum = data_gradient_sum(model, rows, w, *changed);
        changed_sum.noalias() += (r_t * model.l2) * w;
        step = (base_count / denom) * approx_full;
        if (removing) {
          step.noalias() -= changed_sum / denom;
        } else {
          step.noalias() += changed_sum / denom;
        }
      }
    } else {
      if (general) anchor = t;
      Vector base_grad;
      if (removing) {
        Vector kept = data_gradient_sum(model, rows, w, *remaining);
        const Vector dropped = data_gradient_sum(model, rows, w, *changed);
        base_grad = average_gradient(model, Vector(kept + dropped), base_count, w);
        step = average_gradient(model, std::move(kept), denom, w);
      } else {
        const Vector kept = data_gradient_sum(model, rows, w, base);
        const Vector extra = data_gradient_sum(model, rows, w, *changed);
        base_grad = average_gradient(model, kept, base_count, w);
        step = average_gradient(model, Vector(kept + extra), denom, w);
      }
      ++out.full_gradient_evaluations;

      Vector dg = base_grad - cached_g;
      if (general && !v_zero && !(dg.dot(v) > 0.0)) {
        ++out.convexity_guard_hits;
      } else {
        switch (buffer.append(v, std::move(dg), t)) {
          case CurvaturePairBuffer::Insert::stored: ++out.stored_pairs; break;
          case CurvaturePairBuffer::Insert::curvature_rejected: ++out.rejected_pairs; break;
          case CurvaturePairBuffer::Insert::zero_step: break;
        }
      }
    }
    out.mode_trace.push_back(mode);

    if (!step.allFinite()) throw DivergenceError("incremental update", t);
    if (pb.overwrite_params) {
      (*pb.overwrite_params)[t] = w;
      (*pb.overwrite_gradients)[t] = step;
    }
    w.noalias() -= pb.lr->at(t) * step;
    if (!w.allFinite()) throw DivergenceError("incremental update", t);
  }

  if (cfg.record_trajectory) out.trajectory.push_back(w);
  if (pb.overwrite_params) pb.overwrite_params->back() = w;
  out.params = std::move(w);
  out.seconds = seconds_since(start);
  return out;
}

/// Plain retraining over `kept` rows (full batch) or the schedule with
/// `dropped` rows masked out (minibatch).
template <MarginLoss Loss>
Vector retrain(const Model<Loss>& model, const Dataset& rows, const Vector& w0,
               const LearningRateSchedule& lr, Index iterations, const IndexList* kept,
               const MinibatchSchedule* batches, const std::vector<bool>* dropped) {
  Vector w = w0;
  IndexList batch_kept;
  for (Index t = 0; t < iterations; ++t) {
    const IndexList* use = kept;
    if (batches) {
      batch_kept.clear();
      for (Index i : (*batches)[t]) {
        if (!dropped || !(*dropped)[i]) batch_kept.push_back(i);
      }
      if (batch_kept.empty()) continue;
      use = &batch_kept;
    }
    const Vector g = mean_gradient(model, rows, w, *use);
    w.noalias() -= lr.at(t) * g;
    if (!w.allFinite()) throw DivergenceError("baseline retrain", t);
  }
  return w;
}

}  // namespace detail

/// Naive retraining: replays the recorded schedule from w_0 over the changed
/// data. Minibatch histories keep their batches with removed rows masked out
/// and leave the parameters unchanged on batches that become empty.
template <MarginLoss Loss>
Vector baseline_retrain(const Model<Loss>& model, const Dataset& data, const TrainingHistory& history,
                        const ChangeSet& change) {
  detail::check_history(data, history);
  const Index iterations = history.iterations();
  const Vector& w0 = history.params.front();
  if (change.direction == Direction::remove) {
    const IndexList removed = detail::normalized_removal(change.removed, data.n());
    std::vector<bool> mask(data.n(), false);
    for (Index i : removed) mask[i] = true;
    if (history.stochastic()) {
      const MinibatchSchedule schedule = history.schedule();
      return detail::retrain(model, data, w0, history.config.lr, iterations, nullptr, &schedule, &mask);
    }
    if (removed.size() == data.n()) throw InvalidArgument("cannot remove every training sample");
    const IndexList kept = detail::set_difference(detail::iota_list(data.n()), mask);
    return detail::retrain(model, data, w0, history.config.lr, iterations, &kept, nullptr, nullptr);
  }
  if (history.stochastic()) throw InvalidArgument("additions are supported for full-batch histories only");
  const Dataset rows = change.added ? data.concat(*change.added) : data;
  validate(model, rows);
  const IndexList kept = detail::iota_list(rows.n());
  return detail::retrain(model, rows, w0, history.config.lr, iterations, &kept, nullptr, nullptr);
}

namespace detail {

template <MarginLoss Loss>
UpdateOutcome batch_update(const Model<Loss>& model, const Dataset& data, const TrainingHistory& history,
                           const ChangeSet& change, const DeltaGradConfig& cfg) {
  check_history(data, history);
  UpdateProblem pb;
  pb.params = &history.params;
  pb.gradients = &history.gradients;
  pb.lr = &history.config.lr;
  pb.direction = change.direction;

  const IndexList all = iota_list(data.n());
  std::optional<MinibatchSchedule> schedule;
  if (history.stochastic()) {
    schedule = history.schedule();
    pb.base.batches = &*schedule;
  } else {
    pb.base.full = &all;
  }

  if (change.direction == Direction::remove) {
    const IndexList removed = normalized_removal(change.removed, data.n());
    if (!history.stochastic() && removed.size() == data.n()) {
      throw InvalidArgument("cannot remove every training sample");
    }
    pb.rows = &data;
    pb.changed = &removed;
    UpdateOutcome out = run_update(model, pb, cfg);
    out.warnings = change_warnings(removed.size(), data.n());
    return out;
  }

  if (history.stochastic()) throw InvalidArgument("additions are supported for full-batch histories only");
  const Dataset rows = change.added ? data.concat(*change.added) : data;
  validate(model, rows);
  IndexList added;
  for (Index i = data.n(); i < rows.n(); ++i) added.push_back(i);
  pb.rows = &rows;
  pb.changed = &added;
  UpdateOutcome out = run_update(model, pb, cfg);
  out.warnings = change_warnings(added.size(), data.n());
  return out;
}

}  // namespace detail

/// Batch deletion for a full-batch GD history.
template <MarginLoss Loss>
UpdateOutcome unlearn_batch_gd(const Model<Loss>& model, const Dataset& data, const TrainingHistory& history,
                               const ChangeSet& change, DeltaGradConfig cfg) {
  if (history.stochastic()) throw InvalidArgument("unlearn_batch_gd needs a full-batch history");
  if (change.direction != Direction::remove) throw InvalidArgument("unlearn_batch_gd expects a deletion");
  cfg.mode = EngineMode::gd;
  return detail::batch_update(model, data, history, change, cfg);
}

/// Batch addition for a full-batch GD history; the added rows follow the
/// original ones.
template <MarginLoss Loss>
UpdateOutcome relearn_batch_gd(const Model<Loss>& model, const Dataset& data, const TrainingHistory& history,
                               const ChangeSet& change, DeltaGradConfig cfg) {
  if (history.stochastic()) throw InvalidArgument("relearn_batch_gd needs a full-batch history");
  if (change.direction != Direction::add) throw InvalidArgument("relearn_batch_gd expects an addition");
  cfg.mode = EngineMode::gd;
  return detail::batch_update(model, data, history, change, cfg);
}

/// Batch deletion for a minibatch SGD history (also accepts B = n).
template <MarginLoss Loss>
UpdateOutcome unlearn_batch_sgd(const Model<Loss>& model, const Dataset& data, const TrainingHistory& history,
                                const ChangeSet& change, DeltaGradConfig cfg) {
  if (change.direction != Direction::remove) throw InvalidArgument("unlearn_batch_sgd expects a deletion");
  cfg.mode = EngineMode::sgd;
  return detail::batch_update(model, data, history, change, cfg);
}

/// Batch deletion or addition with the local convexity and smoothness checks
/// enabled, for objectives that are not strongly convex everywhere.
template <MarginLoss Loss>
UpdateOutcome unlearn_general(const Model<Loss>& model, const Dataset& data, const TrainingHistory& history,
                              const ChangeSet& change, DeltaGradConfig cfg) {
  cfg.mode = EngineMode::general;
  return detail::batch_update(model, data, history, change, cfg);
}

// ---------------------------------------------------------------------------
// Online stream

struct OnlineRequest {
  Direction direction = Direction::remove;
  /// Row to delete (index into the original rows, or into previously added rows
  /// numbered n, n+1, ... in arrival order).
  Index index = 0;
  /// Row to add: a single-row dataset.
  std::optional<Dataset> row;

  static OnlineRequest deletion(Index i) { return {Direction::remove, i, std::nullopt}; }
  static OnlineRequest addition(Dataset r) { return {Direction::add, 0, std::move(r)}; }
};

struct OnlineStep {
  Direction direction;
  Index index;                 // row deleted or assigned to the added row
  double shift = 0.0;          // |w^I(k) - w^I(k-1)|
  double from_original = 0.0;  // |w^I(k) - w_T|
  Index full_gradient_evaluations = 0;
  Index fallbacks = 0;
};

struct OnlineOutcome {
  Vector params;
  std::vector<OnlineStep> steps;
  /// Rows alive after the stream, as indices into `rows`.
  IndexList live;
  /// Original rows followed by every added row.
  Dataset rows;
  /// The corrected trajectory after the last request.
  std::vector<Vector> params_history;
  std::vector<Vector> gradient_history;
  double seconds = 0.0;
};

/// Sequential single-sample deletions/additions on a GD history. After each
/// request the working copy of the cached iterates and gradients is replaced
/// by the corrected ones, so the next request starts from the updated model.
template <MarginLoss Loss>
OnlineOutcome unlearn_online(const Model<Loss>& model, const Dataset& data, const TrainingHistory& history,
                             const std::vector<OnlineRequest>& requests, DeltaGradConfig cfg) {
  detail::check_history(data, history);
  if (history.stochastic()) throw InvalidArgument("the online engine needs a full-batch history");
  cfg.mode = EngineMode::gd;
  const auto start = detail::Clock::now();

  OnlineOutcome out;
  out.rows = data;
  {
    std::vector<Dataset> extra;
    for (const auto& rq : requests) {
      if (rq.direction == Direction::add) {
        if (!rq.row || rq.row->n() != 1) throw InvalidArgument("online additions carry exactly one row");
        out.rows = out.rows.concat(*rq.row);
      }
    }
    validate(model, out.rows);
  }

  std::vector<bool> alive(out.rows.n(), false);
  for (Index i = 0; i < data.n(); ++i) alive[i] = true;
  out.params_history = history.params;
  out.gradient_history = history.gradients;

  Index next_added = data.n();
  Vector previous = history.final_params();
  for (const auto& rq : requests) {
    IndexList live;
    for (Index i = 0; i < out.rows.n(); ++i) {
      if (alive[i]) live.push_back(i);
    }
    IndexList changed;
    if (rq.direction == Direction::remove) {
      if (rq.index >= next_added || !alive[rq.index]) {
        throw InvalidArgument("online deletion of row " + std::to_string(rq.index) +
                              " which is not in the training set");
      }
      if (live.size() == 1) throw InvalidArgument("cannot remove the last training sample");
      changed.push_back(rq.index);
    } else {
      changed.push_back(next_added);
    }

    const std::vector<Vector> params_in = out.params_history;
    const std::vector<Vector> grads_in = out.gradient_history;
    detail::UpdateProblem pb;
    pb.rows = &out.rows;
    pb.params = &params_in;
    pb.gradients = &grads_in;
    pb.lr = &history.config.lr;
    pb.base.full = &live;
    pb.direction = rq.direction;
    pb.changed = &changed;
    pb.overwrite_params = &out.params_history;
    pb.overwrite_gradients = &out.gradient_history;
    const UpdateOutcome step = detail::run_update(model, pb, cfg);

    if (rq.direction == Direction::remove) {
      alive[rq.index] = false;
    } else {
      alive[next_added] = true;
      ++next_added;
    }
    OnlineStep rec{rq.direction, changed.front()};
    rec.shift = (step.params - previous).norm();
    rec.from_original = (step.params - history.final_params()).norm();
    rec.full_gradient_evaluations = step.full_gradient_evaluations;
    rec.fallbacks = step.count(IterationMode::fallback);
    out.steps.push_back(rec);
    previous = step.params;
  }

  out.params = out.params_history.back();
  for (Index i = 0; i < out.rows.n(); ++i) {
    if (alive[i]) out.live.push_back(i);
  }
  out.seconds = detail::seconds_since(start);
  return out;
}

/// Retraining oracle for an online stream: GD over the rows alive at the end.
template <MarginLoss Loss>
Vector baseline_retrain_online(const Model<Loss>& model, const OnlineOutcome& online,
                               const TrainingHistory& history) {
  return detail::retrain(model, online.rows, history.params.front(), history.config.lr,
                         history.iterations(), &online.live, nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// Runtime-dispatched entry points (loss taken from the history).

inline Vector baseline_retrain(const Dataset& data, const TrainingHistory& history, const ChangeSet& change) {
  return with_model(history.config.loss,
                    [&](const auto& m) { return baseline_retrain(m, data, history, change); });
}

/// Picks the engine from `cfg.mode` and `change.direction`.
inline UpdateOutcome update(const Dataset& data, const TrainingHistory& history, const ChangeSet& change,
                            const DeltaGradConfig& cfg) {
  return with_model(history.config.loss, [&](const auto& m) -> UpdateOutcome {
    switch (cfg.mode) {
      case EngineMode::gd:
        return change.direction == Direction::remove ? unlearn_batch_gd(m, data, history, change, cfg)
                                                     : relearn_batch_gd(m, data, history, change, cfg);
      case EngineMode::sgd:
        return unlearn_batch_sgd(m, data, history, change, cfg);
      case EngineMode::general:
        return unlearn_general(m, data, history, change, cfg);
    }
    throw InvalidArgument("unknown engine mode");
  });
}

inline OnlineOutcome unlearn_online(const Dataset& data, const TrainingHistory& history,
                                    const std::vector<OnlineRequest>& requests, const DeltaGradConfig& cfg) {
  return with_model(history.config.loss,
                    [&](const auto& m) { return unlearn_online(m, data, history, requests, cfg); });
}

}  // namespace deltagrad

#endif  // DELTAGRAD_ENGINE_HPP
