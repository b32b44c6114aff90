#ifndef DELTAGRAD_BENCHMARK_HPP
#define DELTAGRAD_BENCHMARK_HPP

#include "deltagrad/engine.hpp"

namespace deltagrad {

struct BenchmarkReport {
  double baseline_seconds = 0.0;
  double deltagrad_seconds = 0.0;
  /// Full-gradient evaluations: T for retraining, the explicit iterations for DeltaGrad.
  Index baseline_gradient_evaluations = 0;
  Index deltagrad_gradient_evaluations = 0;
  Index expected_deltagrad_evaluations = 0;
  Distances distances;
  UpdateOutcome outcome;
  Vector retrained;

  double speedup() const noexcept {
    return deltagrad_seconds > 0.0 ? baseline_seconds / deltagrad_seconds : 0.0;
  }
};

/// Times retraining against the selected incremental engine on the same change.
inline BenchmarkReport record_benchmark(const Dataset& data, const TrainingHistory& history,
                                        const ChangeSet& change, const DeltaGradConfig& cfg) {
  BenchmarkReport rep;
  const auto t0 = detail::Clock::now();
  rep.retrained = baseline_retrain(data, history, change);
  rep.baseline_seconds = detail::seconds_since(t0);
  rep.baseline_gradient_evaluations = history.iterations();

  rep.outcome = update(data, history, change, cfg);
  rep.deltagrad_seconds = rep.outcome.seconds;
  rep.deltagrad_gradient_evaluations = rep.outcome.full_gradient_evaluations;
  rep.expected_deltagrad_evaluations = expected_explicit_iterations(history.iterations(), cfg.burn_in, cfg.period);
  rep.distances = Distances::between(history.final_params(), rep.retrained, rep.outcome.params);
  return rep;
}

}  // namespace deltagrad

#endif  // DELTAGRAD_BENCHMARK_HPP
