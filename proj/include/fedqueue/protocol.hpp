#pragma once

// Queue-aware protocol mechanisms as pure functions over values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fedqueue/errors.hpp"
#include "fedqueue/learn.hpp"
#include "fedqueue/queue_sim.hpp"
#include "fedqueue/rng.hpp"

namespace fedqueue {

struct RoundBudget {
  double J = 0.0;         // job-time budget, seconds
  std::int64_t E = 0;     // local step budget
  double eta = 0.0;       // learning rate handed to the client
};

struct ClientUpdateMessage {
  std::size_t k = 0;
  std::int64_t s = 0;        // round of the model the update was computed from
  Vec delta;
  double observed_q = 0.0;
  double submit = 0.0;       // absolute submission time
  double arrival = 0.0;      // absolute arrival time
  std::int64_t steps_done = 0;
  std::uint64_t job_id = 0;  // unique per run, used to track jobs through logs
};

enum class DecayMode { Harmonic, Exponential };

struct StalenessDecay {
  DecayMode mode = DecayMode::Harmonic;
  double beta = 0.5;
};

/// J = T_sync - q_hat - delta, E = max(E_floor, floor(c J)) with J clamped at 0
/// for the step count.
inline RoundBudget compute_budget(double T_sync, double q_hat, double delta, double c_k, std::int64_t E_floor) {
  RoundBudget b;
  b.J = T_sync - q_hat - delta;
  const auto steps = static_cast<std::int64_t>(std::floor(c_k * std::max(b.J, 0.0)));
  b.E = std::max(E_floor, steps);
  return b;
}

inline double scale_learning_rate(double eta_base, std::int64_t E_min, std::int64_t E_k) {
  if (E_k <= 0 || E_min <= 0) throw InputError("learning-rate scaling needs E_k >= E_min >= 1");
  if (E_k == E_min) return eta_base;
  return eta_base * static_cast<double>(E_min) / static_cast<double>(E_k);
}

inline double staleness_weight(const StalenessDecay& decay, std::int64_t tau) {
  if (tau < 0) throw InputError("staleness must be >= 0");
  if (tau == 0) return 1.0;
  const double t = static_cast<double>(tau);
  switch (decay.mode) {
    case DecayMode::Harmonic:
      return 1.0 / (1.0 + decay.beta * t);
    case DecayMode::Exponential:
      return std::exp(-decay.beta * t);
  }
  return 1.0;
}

struct RoundAssignment {
  std::int64_t round = 0;
  std::int64_t tau = 0;
};

/// First round r >= s whose cutoff (r+1) T_sync is not earlier than `arrival`.
inline RoundAssignment assign_aggregation_round(std::int64_t s, double arrival, double T_sync) {
  if (arrival < static_cast<double>(s) * T_sync)
    throw CausalityError("update arrives before its submission round started");
  auto r = std::max<std::int64_t>(s, static_cast<std::int64_t>(std::ceil(arrival / T_sync)) - 1);
  // The quotient can be off by one ulp near a cutoff; settle on the exact comparison.
  while (r > s && arrival <= static_cast<double>(r) * T_sync) --r;
  while (arrival > static_cast<double>(r + 1) * T_sync) ++r;
  return {r, r - s};
}

/// Splits the buffer into updates that made the cutoff (inclusive) and the rest.
/// Relative order is preserved on both sides.
inline std::pair<std::vector<ClientUpdateMessage>, std::vector<ClientUpdateMessage>> partition_admissions(
    std::vector<ClientUpdateMessage> buffer, double cutoff) {
  std::vector<ClientUpdateMessage> admitted, remaining;
  for (auto& m : buffer) (m.arrival <= cutoff ? admitted : remaining).push_back(std::move(m));
  return {std::move(admitted), std::move(remaining)};
}

struct WeightedDelta {
  double p = 0.0;
  std::int64_t tau = 0;
  std::span<const double> delta;
};

/// p_k phi(tau_k) / S for each admitted update.
inline std::vector<double> aggregation_coefficients(std::span<const WeightedDelta> admitted,
                                                    const StalenessDecay& decay) {
  std::vector<double> raw;
  raw.reserve(admitted.size());
  double S = 0.0;
  for (const auto& u : admitted) {
    raw.push_back(u.p * staleness_weight(decay, u.tau));
    S += raw.back();
  }
  if (!(S > 0.0)) throw InputError("aggregation weights sum to zero");
  for (auto& c : raw) c /= S;
  return raw;
}

/// w + (1/S) sum p_k phi(tau_k) delta_k.
inline Vec aggregate(std::span<const double> w, std::span<const WeightedDelta> admitted,
                     const StalenessDecay& decay) {
  if (admitted.empty()) throw InputError("aggregate needs at least one admitted update");
  for (const auto& u : admitted)
    if (u.delta.size() != w.size()) throw InputError("update dimension does not match the model");
  const auto coef = aggregation_coefficients(admitted, decay);
  Vec out(w.begin(), w.end());
  if (admitted.size() == 1) {
    axpy(1.0, admitted.front().delta, out);
    return out;
  }
  Vec step(w.size(), 0.0);
  for (std::size_t i = 0; i < admitted.size(); ++i) axpy(coef[i], admitted[i].delta, step);
  axpy(1.0, step, out);
  return out;
}

struct LocalResult {
  Vec delta;
  std::int64_t steps_done = 0;
  double local_time = 0.0;
};

/// Largest step count <= E whose compute time fits in J.
inline std::int64_t steps_within(const ComputeProfile& profile, std::size_t k, std::int64_t E, double J) {
  if (E <= 0 || !(J > 0.0)) return 0;
  const double per = profile.slowdown.at(k) / profile.throughput.at(k);
  if (per == 0.0) return E;
  auto n = std::min<double>(static_cast<double>(E), std::floor(J / per * (1.0 + 1e-12)));
  auto steps = static_cast<std::int64_t>(n);
  while (steps > 0 && compute_time(profile, k, steps) > J * (1.0 + 1e-12)) --steps;
  return steps;
}

/// Runs up to E SGD steps from w_start, stopping early when the next step would
/// overrun the job-time budget J. Minibatches come from `sgd_rng`, per-step
/// timing jitter from `time_rng`.
inline LocalResult client_local_update(std::span<const double> w_start, std::int64_t E, double J, double eta,
                                       const Objective& objective, std::size_t k, const ComputeProfile& profile,
                                       std::size_t batch_size, Stream& sgd_rng, Stream& time_rng) {
  if (E < 0) throw InputError("step budget must be >= 0");
  if (!(eta > 0.0)) throw InputError("learning rate must be > 0");
  LocalResult out;
  std::int64_t steps = 0;
  double elapsed = 0.0;
  if (profile.per_step_jitter == 0.0) {
    steps = steps_within(profile, k, E, J);
    elapsed = compute_time(profile, k, steps);
  } else {
    const double per = profile.slowdown.at(k) / profile.throughput.at(k);
    while (steps < E) {
      const double d = per * (1.0 + profile.per_step_jitter * (2.0 * time_rng.uniform() - 1.0));
      if (elapsed + d > J) break;
      elapsed += d;
      ++steps;
    }
  }
  Vec w(w_start.begin(), w_start.end());
  for (std::int64_t i = 0; i < steps; ++i) {
    const Vec g = objective.stochastic_gradient(k, w, batch_size, sgd_rng);
    if (!all_finite(g)) throw NumericalError("non-finite gradient in local update");
    axpy(-eta, g, w);
  }
  out.delta = std::move(w);
  axpy(-1.0, w_start, out.delta);
  out.steps_done = steps;
  out.local_time = elapsed;
  return out;
}

}  // namespace fedqueue
