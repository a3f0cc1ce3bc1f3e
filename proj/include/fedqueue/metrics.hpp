#pragma once

// Run logs and every quantity computed from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedqueue/errors.hpp"
#include "fedqueue/protocol.hpp"
#include "fedqueue/queue_sim.hpp"
#include "fedqueue/rng.hpp"

namespace fedqueue {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One aggregation step (a server round for the round-based methods, one
/// buffer flush or arrival for the asynchronous ones).
struct RoundRecord {
  std::int64_t round = 0;
  double time = 0.0;
  double loss = kNaN;
  double accuracy = kNaN;  // NaN when the objective has no accuracy
  std::vector<std::size_t> admitted;
  std::vector<std::int64_t> taus;
  std::int64_t buffered = 0;  // jobs in flight past their own round's cutoff
  bool skipped = false;       // nothing admitted, model unchanged
  // Per-client columns. q and steps describe updates admitted this round
  // (NaN / 0 when none); q_hat, E, eta describe the dispatch made at the
  // start of this round (NaN / 0 when the client was busy).
  std::vector<double> q;
  std::vector<double> q_hat;
  std::vector<std::int64_t> E;
  std::vector<double> eta;
  std::vector<std::int64_t> steps;

  double mean_tau() const {
    if (taus.empty()) return kNaN;
    double s = 0.0;
    for (auto t : taus) s += static_cast<double>(t);
    return s / static_cast<double>(taus.size());
  }
  std::int64_t max_tau() const { return taus.empty() ? 0 : *std::max_element(taus.begin(), taus.end()); }
};

/// One submitted job, from dispatch to aggregation.
struct UpdateRecord {
  std::uint64_t job_id = 0;
  std::size_t k = 0;
  std::int64_t s = 0;  // model version the job started from
  double submit = 0.0;
  double q = 0.0;
  double q_hat = kNaN;
  double local_time = 0.0;
  double arrival = 0.0;
  std::int64_t E = 0;
  double eta = 0.0;
  std::int64_t steps_done = 0;
  std::int64_t agg_round = -1;  // -1: never aggregated (still in flight at the end)
  double agg_time = kNaN;
  std::int64_t tau = -1;
};

enum class TraceKind { Submit, JobStart, Arrival, Aggregate, RoundBoundary, Deadline };

inline const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::Submit: return "submit";
    case TraceKind::JobStart: return "job_start";
    case TraceKind::Arrival: return "arrival";
    case TraceKind::Aggregate: return "aggregate";
    case TraceKind::RoundBoundary: return "round_boundary";
    case TraceKind::Deadline: return "deadline";
  }
  return "?";
}

/// One line of the event stream.
struct TraceEvent {
  double time = 0.0;
  TraceKind kind = TraceKind::Submit;
  std::int64_t k = -1;
  std::int64_t job = -1;
  std::int64_t round = -1;
};

struct MetricsLog {
  std::string method;
  std::size_t num_clients = 0;
  double T_sync = 0.0;
  std::uint64_t seed = 0;
  bool higher_is_better = true;  // accuracy; false when the quality metric is a loss
  std::int64_t transfers_per_dispatch = 2;
  double initial_loss = kNaN;
  double initial_accuracy = kNaN;
  std::vector<RoundRecord> rounds;
  std::vector<UpdateRecord> updates;
  std::vector<TraceEvent> events;
  bool failed = false;
  std::string failure;

  double quality(const RoundRecord& r) const { return higher_is_better ? r.accuracy : r.loss; }
};

// ---------------------------------------------------------------------------
// Time to quality

/// First logged time at which quality reaches `target` (>= for accuracy,
/// <= for loss). nullopt when never reached.
inline std::optional<double> time_to_target(const MetricsLog& log, double target) {
  for (const auto& r : log.rounds) {
    const double q = log.quality(r);
    if (std::isnan(q)) continue;
    if (log.higher_is_better ? q >= target : q <= target) return r.time;
  }
  return std::nullopt;
}

inline std::optional<double> max_accuracy(const MetricsLog& log) {
  std::optional<double> best;
  for (const auto& r : log.rounds)
    if (!std::isnan(r.accuracy)) best = best ? std::max(*best, r.accuracy) : r.accuracy;
  return best;
}

inline std::optional<double> final_accuracy(const MetricsLog& log) {
  for (auto it = log.rounds.rbegin(); it != log.rounds.rend(); ++it)
    if (!std::isnan(it->accuracy)) return it->accuracy;
  return std::nullopt;
}

inline std::optional<double> final_loss(const MetricsLog& log) {
  for (auto it = log.rounds.rbegin(); it != log.rounds.rend(); ++it)
    if (!std::isnan(it->loss)) return it->loss;
  return std::nullopt;
}

/// Jobs submitted strictly before `until` (all jobs when nullopt).
inline std::int64_t dispatches_until(const MetricsLog& log, std::optional<double> until) {
  std::int64_t n = 0;
  for (const auto& u : log.updates)
    if (!until || u.submit < *until) ++n;
  return n;
}

inline std::int64_t transfers_until(const MetricsLog& log, std::optional<double> until) {
  return log.transfers_per_dispatch * dispatches_until(log, until);
}

/// Sum of steps_done over jobs submitted strictly before `until`.
inline std::int64_t total_local_steps(const MetricsLog& log, std::optional<double> until) {
  std::int64_t n = 0;
  for (const auto& u : log.updates)
    if (!until || u.submit < *until) n += u.steps_done;
  return n;
}

/// D_r per method: transfers needed to reach `target`, relative to the
/// reference method. nullopt for methods that never reach it.
inline std::map<std::string, std::optional<double>> movement_ratio(const std::map<std::string, MetricsLog>& logs,
                                                                   const std::string& reference, double target) {
  const auto ref = logs.find(reference);
  if (ref == logs.end()) throw InputError("reference method '" + reference + "' missing");
  const auto ref_time = time_to_target(ref->second, target);
  if (!ref_time) throw InputError("reference method never reached the target");
  const auto ref_transfers = static_cast<double>(transfers_until(ref->second, ref_time));
  std::map<std::string, std::optional<double>> out;
  for (const auto& [name, log] : logs) {
    const auto t = time_to_target(log, target);
    if (!t) {
      out[name] = std::nullopt;
      continue;
    }
    out[name] = static_cast<double>(transfers_until(log, t)) / ref_transfers;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Delay and admission statistics

struct DelayStats {
  double P_late = 0.0;             // fraction with (a - submit) / T_sync > 1
  std::optional<double> E_hat_d;   // mean ratio among late arrivals
  double R_d = 0.0;                // max ratio over all arrivals
  std::size_t arrivals = 0;
};

inline DelayStats delay_statistics(std::span<const double> ratios) {
  if (ratios.empty()) throw InputError("delay statistics need at least one arrival");
  DelayStats d;
  d.arrivals = ratios.size();
  double late_sum = 0.0;
  std::size_t late = 0;
  for (double r : ratios) {
    d.R_d = std::max(d.R_d, r);
    if (r > 1.0) {
      ++late;
      late_sum += r;
    }
  }
  d.P_late = static_cast<double>(late) / static_cast<double>(ratios.size());
  if (late) d.E_hat_d = late_sum / static_cast<double>(late);
  return d;
}

inline std::vector<double> delay_ratios(const MetricsLog& log) {
  std::vector<double> r;
  for (const auto& u : log.updates)
    if (u.agg_round >= 0) r.push_back((u.arrival - u.submit) / log.T_sync);
  return r;
}

inline DelayStats delay_statistics(const MetricsLog& log) {
  const auto r = delay_ratios(log);
  return delay_statistics(std::span<const double>(r));
}

struct AdmissionRow {
  std::size_t k = 0;
  std::int64_t submitted = 0;
  std::int64_t admitted = 0;  // aggregated in their own round (tau = 0)
  std::int64_t deferred = 0;  // tau >= 1
  double max_delay_ratio = 0.0;
};

inline std::vector<AdmissionRow> admission_summary(const MetricsLog& log) {
  std::vector<AdmissionRow> rows(log.num_clients);
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k].k = k;
  for (const auto& u : log.updates) {
    if (u.agg_round < 0) continue;
    auto& row = rows.at(u.k);
    (u.tau == 0 ? row.admitted : row.deferred) += 1;
    row.submitted = row.admitted + row.deferred;
    row.max_delay_ratio = std::max(row.max_delay_ratio, (u.arrival - u.submit) / log.T_sync);
  }
  return rows;
}

/// Every deferred job shows up exactly once among the stale admissions.
inline bool staleness_ledger_consistent(const MetricsLog& log) {
  std::int64_t stale_admissions = 0;
  std::int64_t admissions = 0;
  for (const auto& r : log.rounds) {
    admissions += static_cast<std::int64_t>(r.taus.size());
    stale_admissions += std::count_if(r.taus.begin(), r.taus.end(), [](auto t) { return t >= 1; });
  }
  std::int64_t deferred = 0;
  std::int64_t aggregated = 0;
  for (const auto& row : admission_summary(log)) {
    deferred += row.deferred;
    aggregated += row.submitted;
  }
  return stale_admissions == deferred && admissions == aggregated;
}

struct ErrorStats {
  std::size_t n = 0;
  std::optional<double> mean;
  std::optional<double> std;  // sample standard deviation
};

inline ErrorStats error_stats(std::span<const double> errors, std::optional<double> outlier_m = std::nullopt) {
  auto summarize = [](std::span<const double> e) {
    ErrorStats s;
    s.n = e.size();
    if (e.size() < 2) return s;
    double m = 0.0;
    for (double x : e) m += x;
    m /= static_cast<double>(e.size());
    double v = 0.0;
    for (double x : e) v += (x - m) * (x - m);
    s.mean = m;
    s.std = std::sqrt(v / static_cast<double>(e.size() - 1));
    return s;
  };
  auto s = summarize(errors);
  if (!outlier_m || !s.std) return s;
  std::vector<double> kept;
  for (double x : errors)
    if (std::abs(x - *s.mean) <= *outlier_m * *s.std) kept.push_back(x);
  return summarize(kept);
}

/// Per-client mean and std of e = q - q_hat over recorded predictions.
inline std::vector<ErrorStats> prediction_error_stats(const MetricsLog& log,
                                                      std::optional<double> outlier_m = std::nullopt) {
  std::vector<std::vector<double>> per(log.num_clients);
  for (const auto& u : log.updates)
    if (!std::isnan(u.q_hat) && u.agg_round >= 0) per.at(u.k).push_back(u.q - u.q_hat);
  std::vector<ErrorStats> out;
  for (const auto& e : per) out.push_back(error_stats(e, outlier_m));
  return out;
}

// ---------------------------------------------------------------------------
// Admission-induced staleness bound

struct TheoryParams {
  std::vector<double> rho;  // per-client sub-Gaussian scale of e = q - q_hat
  double epsilon = 0.05;
  double gamma = 0.2;

  std::int64_t tau_max() const { return static_cast<std::int64_t>(std::ceil(1.0 + gamma)); }
};

/// Smallest safety buffer satisfying gamma T + delta >= max_k sqrt(2 rho_k^2 ln(K R / eps)).
inline double delta_threshold(const TheoryParams& params, double T_sync, std::size_t K, std::size_t R) {
  if (!(params.epsilon > 0.0 && params.epsilon < 1.0)) throw InputError("epsilon must lie in (0, 1)");
  if (K * R < 1) throw InputError("K R must be >= 1");
  double worst = 0.0;
  const double log_term = std::log(static_cast<double>(K) * static_cast<double>(R) / params.epsilon);
  for (double r : params.rho) worst = std::max(worst, std::sqrt(2.0 * r * r * log_term));
  return std::max(0.0, worst - params.gamma * T_sync);
}

struct Lemma1Result {
  double violation_rate = 0.0;             // runs with any tau > tau_max
  double completion_violation_rate = 0.0;  // runs with any completion past (1 + gamma) T_sync
  std::size_t trials = 0;
};

/// Worst-case completion model: the job uses its whole budget, h = J, so
/// a - s T_sync = q + J = T_sync + e - delta with e ~ N(0, rho_k^2).
inline Lemma1Result lemma1_monte_carlo(const TheoryParams& params, double T_sync, double delta, std::size_t K,
                                       std::size_t R, std::size_t trials, std::uint64_t seed) {
  if (trials < 100) throw InputError("lemma1_monte_carlo needs at least 100 trials");
  if (params.rho.size() != K) throw InputError("rho must have K entries");
  const auto tau_max = params.tau_max();
  const double completion_limit = (1.0 + params.gamma) * T_sync;
  std::size_t violations = 0;
  std::size_t completion_violations = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Stream rng(seed, Purpose::Theory, t);
    bool bad = false;
    bool late = false;
    for (std::size_t r = 0; r < R; ++r) {
      const double submit = static_cast<double>(r) * T_sync;
      for (std::size_t k = 0; k < K; ++k) {
        const double e = sample_prediction_error(params.rho[k], rng);
        const double elapsed = std::max(0.0, T_sync + e - delta);
        const double arrival = submit + elapsed;
        if (elapsed > completion_limit) late = true;
        const auto a = assign_aggregation_round(static_cast<std::int64_t>(r), arrival, T_sync);
        if (a.tau > tau_max) bad = true;
      }
    }
    violations += bad;
    completion_violations += late;
  }
  return {static_cast<double>(violations) / static_cast<double>(trials),
          static_cast<double>(completion_violations) / static_cast<double>(trials), trials};
}

// ---------------------------------------------------------------------------
// Log fingerprint

inline std::uint64_t checksum(const MetricsLog& log) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_bytes = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 0x100000001b3ULL;
  };
  auto mix = [&](const auto& v) { mix_bytes(&v, sizeof(v)); };
  mix_bytes(log.method.data(), log.method.size());
  mix(log.num_clients);
  mix(log.T_sync);
  mix(log.seed);
  for (const auto& r : log.rounds) {
    mix(r.round), mix(r.time), mix(r.loss), mix(r.accuracy), mix(r.buffered), mix(r.skipped);
    for (auto k : r.admitted) mix(k);
    for (auto t : r.taus) mix(t);
    for (auto x : r.q) mix(x);
    for (auto x : r.q_hat) mix(x);
    for (auto x : r.E) mix(x);
    for (auto x : r.eta) mix(x);
    for (auto x : r.steps) mix(x);
  }
  for (const auto& u : log.updates) {
    mix(u.job_id), mix(u.k), mix(u.s), mix(u.submit), mix(u.q), mix(u.q_hat), mix(u.local_time);
    mix(u.arrival), mix(u.E), mix(u.eta), mix(u.steps_done), mix(u.agg_round), mix(u.agg_time), mix(u.tau);
  }
  for (const auto& e : log.events) mix(e.time), mix(e.kind), mix(e.k), mix(e.job), mix(e.round);
  mix(log.failed);
  return h;
}

}  // namespace fedqueue
