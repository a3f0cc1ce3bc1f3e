#pragma once

// Online per-client queue-delay predictors.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fedqueue/errors.hpp"

namespace fedqueue {

/// Interface for anything that forecasts the next admission delay of a client.
/// The protocol only needs predict/observe; richer predictors plug in here.
class QueuePredictor {
 public:
  virtual ~QueuePredictor() = default;
  virtual double predict(std::size_t k) const = 0;
  virtual void observe(std::size_t k, double observed_q) = 0;
  // Full-weight assignment used by the warm-up probe.
  virtual void seed(std::size_t k, double observed_q) = 0;
  virtual std::unique_ptr<QueuePredictor> clone() const = 0;
};

enum class PredictorKind { EWMA, Static };

struct PredictorState {
  PredictorKind kind = PredictorKind::EWMA;
  std::vector<double> q_hat;
  double alpha = 0.5;
  double q_init = 2.0;
  std::vector<std::uint64_t> observations;

  static PredictorState ewma(std::size_t K, double alpha, double q_init) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]", "alpha");
    if (!(q_init >= 0.0)) throw ConfigError("q_init must be >= 0", "q_init");
    return {PredictorKind::EWMA, std::vector<double>(K, q_init), alpha, q_init,
            std::vector<std::uint64_t>(K, 0)};
  }

  // Ablation: predictions pinned to fixed per-client estimates.
  static PredictorState fixed(std::vector<double> estimates) {
    const auto K = estimates.size();
    return {PredictorKind::Static, std::move(estimates), 1.0, 0.0, std::vector<std::uint64_t>(K, 0)};
  }
};

inline double predict(const PredictorState& state, std::size_t k) { return state.q_hat.at(k); }

inline PredictorState& ewma_update(PredictorState& state, std::size_t k, double observed_q) {
  if (!(observed_q >= 0.0)) throw InputError("observed queue delay must be >= 0");
  auto& q = state.q_hat.at(k);
  if (state.kind == PredictorKind::EWMA) q = (1.0 - state.alpha) * q + state.alpha * observed_q;
  ++state.observations[k];
  return state;
}

inline PredictorState ewma_update(const PredictorState& state, std::size_t k, double observed_q) {
  PredictorState next = state;
  ewma_update(next, k, observed_q);
  return next;
}

class StatePredictor final : public QueuePredictor {
 public:
  explicit StatePredictor(PredictorState state) : state_(std::move(state)) {}

  double predict(std::size_t k) const override { return fedqueue::predict(state_, k); }
  void observe(std::size_t k, double observed_q) override { ewma_update(state_, k, observed_q); }
  void seed(std::size_t k, double observed_q) override {
    if (!(observed_q >= 0.0)) throw InputError("observed queue delay must be >= 0");
    if (state_.kind == PredictorKind::EWMA) state_.q_hat.at(k) = observed_q;
  }
  std::unique_ptr<QueuePredictor> clone() const override {
    return std::make_unique<StatePredictor>(state_);
  }

  const PredictorState& state() const noexcept { return state_; }

 private:
  PredictorState state_;
};

}  // namespace fedqueue
