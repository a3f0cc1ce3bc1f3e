#pragma once

// Synthetic batch-scheduler admission delays and client compute times.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedqueue/errors.hpp"
#include "fedqueue/rng.hpp"

namespace fedqueue {

enum class QueueKind { Fixed, Lognormal };

// How queue_means is read for the lognormal model. Median: q = exp(ln mu + rho Z),
// so mu is the median delay. Mean: the location is shifted by -rho^2/2 so that
// E[q] = mu.
enum class MeanSemantics { Median, Mean };

struct QueueModel {
  QueueKind kind = QueueKind::Lognormal;
  std::vector<double> fixed_delays;
  std::vector<double> means;
  double rho = 0.0;
  MeanSemantics semantics = MeanSemantics::Median;
  // Non-stationary load: per-client AR(1) offset added in log space, one step
  // per T_sync window. drift == 0 gives a stationary queue.
  double drift = 0.0;
  double drift_corr = 0.9;

  std::size_t num_clients() const {
    return kind == QueueKind::Fixed ? fixed_delays.size() : means.size();
  }

  void validate(std::size_t K) const {
    if (rho < 0.0 || !std::isfinite(rho)) throw ConfigError("queue_rho must be >= 0", "queue_rho");
    if (drift < 0.0) throw ConfigError("queue_drift must be >= 0", "queue_drift");
    if (drift_corr < 0.0 || drift_corr >= 1.0)
      throw ConfigError("queue_drift_corr must lie in [0, 1)", "queue_drift_corr");
    const auto& params = kind == QueueKind::Fixed ? fixed_delays : means;
    const char* key = kind == QueueKind::Fixed ? "queue_fixed" : "queue_means";
    if (params.size() != K)
      throw ConfigError(std::string(key) + " has " + std::to_string(params.size()) +
                            " entries, expected num_clients=" + std::to_string(K),
                        key);
    for (double v : params)
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(key) + " entries must be >= 0", key);
  }
};

struct ComputeProfile {
  std::vector<double> throughput;  // c_k, local steps per second
  std::vector<double> slowdown;    // multiplier on the time of each step
  double per_step_jitter = 0.0;    // fractional, uniform in [-j, j]

  void validate(std::size_t K) const {
    if (throughput.size() != K)
      throw ConfigError("throughput must have num_clients entries", "throughput");
    if (slowdown.size() != K) throw ConfigError("slowdown must have num_clients entries", "slowdown");
    for (double c : throughput)
      if (!(c > 0.0)) throw ConfigError("throughput entries must be > 0", "throughput");
    for (double s : slowdown)
      if (!(s >= 0.0)) throw ConfigError("slowdown entries must be >= 0", "slowdown");
    if (per_step_jitter < 0.0 || per_step_jitter >= 1.0)
      throw ConfigError("compute_jitter must lie in [0, 1)", "compute_jitter");
  }
};

/// Draws one admission delay for client k. `log_offset` carries the
/// non-stationary load term (0 for a stationary queue).
inline double sample_queue_delay(const QueueModel& model, std::size_t k, Stream& rng,
                                 double log_offset = 0.0) {
  switch (model.kind) {
    case QueueKind::Fixed:
      return model.fixed_delays.at(k);
    case QueueKind::Lognormal: {
      const double mu = model.means.at(k);
      if (mu == 0.0) return 0.0;
      double location = std::log(mu) + log_offset;
      if (model.semantics == MeanSemantics::Mean) location -= 0.5 * model.rho * model.rho;
      const double z = model.rho == 0.0 ? 0.0 : rng.normal();
      return std::exp(location + model.rho * z);
    }
  }
  throw ConfigError("unknown queue kind", "sim_queue");
}

/// Seconds needed for `steps` local steps on client k. With jitter, each step
/// duration is scaled by (1 + U[-j, j]) drawn from `rng`.
inline double compute_time(const ComputeProfile& profile, std::size_t k, std::int64_t steps,
                           Stream* rng = nullptr) {
  if (steps <= 0) return 0.0;
  const double slow = profile.slowdown.at(k);
  const double c = profile.throughput.at(k);
  if (profile.per_step_jitter == 0.0 || rng == nullptr) return static_cast<double>(steps) * slow / c;
  const double per_step = slow / c;
  double total = 0.0;
  for (std::int64_t i = 0; i < steps; ++i)
    total += per_step * (1.0 + profile.per_step_jitter * (2.0 * rng->uniform() - 1.0));
  return total;
}

/// Zero-mean Gaussian error with standard deviation rho_k.
inline double sample_prediction_error(double rho_k, Stream& rng) {
  if (rho_k == 0.0) return 0.0;
  return rho_k * rng.normal();
}

/// Per-client AR(1) log-load path, materialized lazily window by window.
/// Window w covers submissions in [w T_sync, (w+1) T_sync).
class DriftPath {
 public:
  DriftPath(std::uint64_t seed, std::size_t K, double innovation, double corr)
      : seed_(seed), innovation_(innovation), corr_(corr), levels_(K) {}

  double offset(std::size_t k, std::int64_t window) {
    if (innovation_ == 0.0 || window < 0) return 0.0;
    auto& path = levels_.at(k);
    while (static_cast<std::int64_t>(path.size()) <= window) {
      const double prev = path.empty() ? 0.0 : path.back();
      Stream rng(seed_, Purpose::Drift, k, path.size());
      path.push_back(corr_ * prev + innovation_ * rng.normal());
    }
    return path[static_cast<std::size_t>(window)];
  }

 private:
  std::uint64_t seed_;
  double innovation_;
  double corr_;
  std::vector<std::vector<double>> levels_;
};

/// Delay source shared by every orchestrator: the n-th job of client k always
/// sees the same delay for a given seed, independent of the algorithm.
class QueueSampler {
 public:
  QueueSampler(QueueModel model, std::uint64_t seed, double window_length)
      : model_(std::move(model)),
        seed_(seed),
        window_(window_length),
        drift_(seed, model_.num_clients(), model_.drift, model_.drift_corr) {}

  double delay(std::size_t k, std::uint64_t submission_index, double submit_time) {
    Stream rng(seed_, Purpose::QueueDelay, k, submission_index);
    const auto window = static_cast<std::int64_t>(std::floor(submit_time / window_));
    return sample_queue_delay(model_, k, rng, drift_.offset(k, window));
  }

  const QueueModel& model() const noexcept { return model_; }

 private:
  QueueModel model_;
  std::uint64_t seed_;
  double window_;
  DriftPath drift_;
};

}  // namespace fedqueue
