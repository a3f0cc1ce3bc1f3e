#pragma once

// Queue-aware semi-asynchronous orchestration, experiment dispatch and
// multi-seed sweeps.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fedqueue/baselines.hpp"
#include "fedqueue/config.hpp"
#include "fedqueue/errors.hpp"
#include "fedqueue/metrics.hpp"
#include "fedqueue/predictor.hpp"
#include "fedqueue/protocol.hpp"
#include "fedqueue/sim.hpp"

namespace fedqueue {

/// Running estimate of the prediction-error scale per client:
/// s_k^2 <- (1 - alpha) s_k^2 + alpha e^2 with e = q - q_hat.
class ErrorScale {
 public:
  ErrorScale(std::size_t K, double alpha) : alpha_(alpha), var_(K, 0.0), seen_(K, false) {}

  void observe(std::size_t k, double error) {
    auto& v = var_.at(k);
    v = seen_[k] ? (1.0 - alpha_) * v + alpha_ * error * error : error * error;
    seen_[k] = true;
  }

  double scale(std::size_t k) const { return std::sqrt(var_.at(k)); }

 private:
  double alpha_;
  std::vector<double> var_;
  std::vector<bool> seen_;
};

/// Budget for one dispatch: the admission margin is delta plus gamma times the
/// client's recent prediction-error scale.
inline RoundBudget fedqueue_budget(const ExperimentConfig& cfg, double q_hat, double error_scale, double c_k) {
  return compute_budget(cfg.Tsync - cfg.gamma * error_scale, q_hat, cfg.delta, c_k, cfg.E_floor);
}

inline RunResult run_fedqueue(const ExperimentConfig& cfg, std::shared_ptr<const Objective> objective) {
  const auto K = objective->num_clients();
  MetricsLog log = new_log(cfg, *objective, "fedqueue");
  Vec w = objective->initial_model();
  record_initial(*objective, w, log);
  try {
    JobRunner runner(cfg, objective, log);
    const auto p = client_weights(cfg, *objective);
    const double T = cfg.Tsync;
    const StalenessDecay decay{cfg.staleness_mode == "exp" ? DecayMode::Exponential : DecayMode::Harmonic,
                               cfg.use_staleness_decay ? cfg.staleness_beta : 0.0};
    const bool all_fresh = cfg.admission_horizon == "all";
    const bool immediate = cfg.broadcast_when == "immediate";

    StatePredictor predictor(cfg.use_ewma ? PredictorState::ewma(K, cfg.alpha, cfg.q_init)
                                          : PredictorState::fixed(static_delay_estimates(runner.queue())));
    ErrorScale errors(K, cfg.alpha);

    // Warm-up profiling, off the clock: one probe per client seeds q_hat and
    // the throughput estimate.
    std::vector<double> c_est = per_client(cfg.throughput, K, "throughput");
    if (cfg.warmup_steps > 0) {
      for (std::size_t k = 0; k < K; ++k) {
        const auto [q, h] = runner.probe(k, cfg.warmup_steps);
        predictor.seed(k, q);
        if (h > 0.0) c_est[k] = static_cast<double>(cfg.warmup_steps) / h;
      }
    }

    SimClock clock;
    std::map<std::uint64_t, Job> in_flight;
    std::vector<bool> busy(K, false);
    std::vector<Job> buffer;
    const std::int64_t R = num_boundaries(cfg);
    for (std::int64_t r = 0; r <= R; ++r)
      clock.schedule(static_cast<double>(r) * T, EventKind::RoundBoundary, -1, static_cast<std::uint64_t>(r));

    std::int64_t round = 0;    // round currently open
    std::int64_t E_min = 0;    // smallest step budget dispatched this round
    RoundRecord current = blank_record(K, 0, T);

    auto dispatch = [&](std::size_t k, double t) {
      const double q_hat = predictor.predict(k);
      const RoundBudget b = fedqueue_budget(cfg, q_hat + (t - static_cast<double>(round) * T),
                                            errors.scale(k), c_est[k]);
      const double limit = std::max(b.J, static_cast<double>(cfg.E_floor) / c_est[k]);
      E_min = E_min > 0 ? std::min(E_min, b.E) : b.E;
      const double eta =
          cfg.use_inverse_lr ? scale_learning_rate(cfg.lr_base, std::min(E_min, b.E), b.E) : cfg.lr_base;
      Job job = runner.run(k, round, w, t, b.E, limit, eta, q_hat);
      clock.schedule(t + job.msg.observed_q, EventKind::JobStart, static_cast<std::int64_t>(k), job.msg.job_id);
      clock.schedule(job.msg.arrival, EventKind::UpdateArrival, static_cast<std::int64_t>(k), job.msg.job_id);
      current.q_hat[k] = q_hat;
      current.E[k] = b.E;
      current.eta[k] = eta;
      busy[k] = true;
      in_flight.emplace(job.msg.job_id, std::move(job));
    };

    auto dispatch_round = [&](double t) {
      // E_min is fixed by the budgets of every client dispatched at the boundary.
      std::vector<std::size_t> idle;
      for (std::size_t k = 0; k < K; ++k)
        if (!busy[k]) idle.push_back(k);
      E_min = 0;
      for (auto k : idle) {
        const auto b = fedqueue_budget(cfg, predictor.predict(k), errors.scale(k), c_est[k]);
        E_min = E_min > 0 ? std::min(E_min, b.E) : b.E;
      }
      for (auto k : idle) dispatch(k, t);
    };

    auto close_round = [&](double t) {
      RoundRecord rec = std::move(current);
      rec.round = round;
      rec.time = t;
      std::vector<Job> admitted;
      std::vector<Job> rest;
      for (auto& j : buffer) (j.msg.arrival <= t ? admitted : rest).push_back(std::move(j));
      buffer = std::move(rest);
      std::vector<WeightedDelta> weighted;
      for (const auto& j : admitted) {
        const auto a = assign_aggregation_round(j.msg.s, j.msg.arrival, T);
        if (a.round != round) throw CausalityError("update admitted outside its aggregation round");
        weighted.push_back({p[j.msg.k], all_fresh ? 0 : a.tau, j.msg.delta});
        mark_aggregated(log, j.record, round, t, a.tau, rec);
      }
      if (weighted.empty()) {
        rec.skipped = true;
      } else {
        w = aggregate(w, weighted, decay);
      }
      for (const auto& [id, j] : in_flight)
        if (j.msg.s <= round) ++rec.buffered;
      evaluate_into(*objective, w, rec);
      log.events.push_back({t, TraceKind::Aggregate, -1, -1, round});
      log.rounds.push_back(std::move(rec));
    };

    while (!clock.empty()) {
      const SimEvent ev = clock.pop();
      const double t = ev.time;
      switch (ev.kind) {
        case EventKind::RoundBoundary: {
          const auto r = static_cast<std::int64_t>(ev.payload);
          log.events.push_back({t, TraceKind::RoundBoundary, -1, -1, r});
          if (r > 0) close_round(t);
          if (r == R) break;
          round = r;
          current = blank_record(K, r, static_cast<double>(r + 1) * T);
          dispatch_round(t);
          break;
        }
        case EventKind::JobStart:
          log.events.push_back({t, TraceKind::JobStart, ev.client, static_cast<std::int64_t>(ev.payload), round});
          break;
        case EventKind::UpdateArrival: {
          auto node = in_flight.extract(ev.payload);
          Job job = std::move(node.mapped());
          const std::size_t k = job.msg.k;
          log.events.push_back({t, TraceKind::Arrival, ev.client, static_cast<std::int64_t>(ev.payload), round});
          const double q_hat_then = log.updates.at(job.record).q_hat;
          predictor.observe(k, job.msg.observed_q);
          errors.observe(k, job.msg.observed_q - q_hat_then);
          busy[k] = false;
          buffer.push_back(std::move(job));
          if (immediate && t < static_cast<double>(R) * T && t < static_cast<double>(round + 1) * T) dispatch(k, t);
          break;
        }
        case EventKind::Deadline:
          break;
      }
      if (ev.kind == EventKind::RoundBoundary && static_cast<std::int64_t>(ev.payload) == R) break;
    }
  } catch (const NumericalError& e) {
    log.failed = true;
    log.failure = e.what();
  }
  return {std::move(log), std::move(w)};
}

// ---------------------------------------------------------------------------

inline RunResult run_method(const ExperimentConfig& cfg, std::shared_ptr<const Objective> objective) {
  if (cfg.algo_name == "fedqueue") return run_fedqueue(cfg, std::move(objective));
  if (cfg.algo_name == "fedavg") return run_fedavg(cfg, std::move(objective));
  if (cfg.algo_name == "fedasync") return run_fedasync(cfg, std::move(objective));
  if (cfg.algo_name == "fedbuff") return run_fedbuff(cfg, std::move(objective));
  if (cfg.algo_name == "fedcompass") return run_fedcompass(cfg, std::move(objective));
  throw ConfigError("unknown algorithm '" + cfg.algo_name + "'", "algo.name");
}

/// Validates the configuration, builds the workload and runs the configured method.
inline RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_method(cfg, build_objective(cfg));
}

// ---------------------------------------------------------------------------
// Sweeps

/// Seed of trial t: the master seed for t = 0, a derived stream otherwise.
/// Every swept value reuses the same trial seeds so values are compared on
/// common queue and data draws.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t trial) {
  return trial == 0 ? master : mix_key(master, Purpose::Sweep, trial, 0);
}

struct RunSummary {
  std::string method;
  std::string axis;
  std::string value;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string failure;
  std::optional<double> time_to_target;
  std::optional<double> final_accuracy;
  std::optional<double> final_loss;
  std::optional<double> max_accuracy;
  double P_late = 0.0;
  std::optional<double> E_hat_d;
  double R_d = 0.0;
  std::int64_t rounds = 0;
  std::int64_t dispatches = 0;
  std::int64_t transfers_to_target = 0;
  std::int64_t steps_to_target = 0;
  std::uint64_t checksum = 0;
};

inline RunSummary summarize(const MetricsLog& log, double target) {
  RunSummary s;
  s.method = log.method;
  s.seed = log.seed;
  s.failed = log.failed;
  s.failure = log.failure;
  s.time_to_target = time_to_target(log, target);
  s.final_accuracy = final_accuracy(log);
  s.final_loss = final_loss(log);
  s.max_accuracy = max_accuracy(log);
  const auto ratios = delay_ratios(log);
  if (!ratios.empty()) {
    const auto d = delay_statistics(std::span<const double>(ratios));
    s.P_late = d.P_late;
    s.E_hat_d = d.E_hat_d;
    s.R_d = d.R_d;
  }
  s.rounds = static_cast<std::int64_t>(log.rounds.size());
  s.dispatches = dispatches_until(log, std::nullopt);
  s.transfers_to_target = transfers_until(log, s.time_to_target);
  s.steps_to_target = total_local_steps(log, s.time_to_target);
  s.checksum = checksum(log);
  return s;
}

struct SweepCell {
  ExperimentConfig cfg;
  std::string method;
  std::string value;
  std::size_t trial = 0;
};

/// Runs every cell, `jobs` at a time. Results come back in cell order
/// regardless of scheduling.
template <class Fn>
auto run_parallel(const std::vector<SweepCell>& cells, std::size_t jobs, Fn&& fn)
    -> std::vector<decltype(fn(cells.front()))> {
  using Out = decltype(fn(cells.front()));
  std::vector<std::optional<Out>> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      try {
        results[i] = fn(cells[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  std::vector<Out> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

/// Axis names accepted by sweeps; "rho" is shorthand for queue_rho.
inline std::string canonical_axis(const std::string& axis) {
  if (axis == "rho") return "queue_rho";
  if (!ExperimentConfig::has_key(axis)) throw ConfigError("unknown sweep axis '" + axis + "'", axis);
  return axis;
}

/// Cartesian product of values x methods x trials over one config key.
/// An empty `axis` runs the base configuration only.
inline std::vector<SweepCell> sweep_cells(const ExperimentConfig& base, const std::string& axis,
                                          const std::vector<std::string>& values, std::size_t trials,
                                          const std::vector<std::string>& methods) {
  if (trials < 1) throw InputError("a sweep needs at least one trial");
  const std::string key = axis.empty() ? std::string() : canonical_axis(axis);
  const std::vector<std::string> vals = key.empty() ? std::vector<std::string>{""} : values;
  if (vals.empty()) throw InputError("sweep axis has no values");
  const std::vector<std::string> ms = methods.empty() ? std::vector<std::string>{base.algo_name} : methods;
  std::vector<SweepCell> cells;
  for (const auto& v : vals)
    for (const auto& m : ms)
      for (std::size_t t = 0; t < trials; ++t) {
        ExperimentConfig c = base;
        if (!key.empty()) c.set(key, v);
        c.set("algo.name", m);
        c.seed = trial_seed(base.seed, t);
        c.validate();
        cells.push_back({std::move(c), m, v, t});
      }
  return cells;
}

inline std::vector<RunSummary> run_sweep(const ExperimentConfig& base, const std::string& axis,
                                         const std::vector<std::string>& values, std::size_t trials,
                                         const std::vector<std::string>& methods = {}, std::size_t jobs = 1) {
  const auto cells = sweep_cells(base, axis, values, trials, methods);
  return run_parallel(cells, jobs, [&](const SweepCell& cell) {
    auto s = summarize(run_experiment(cell.cfg).log, cell.cfg.target);
    s.axis = axis;
    s.value = cell.value;
    s.trial = cell.trial;
    return s;
  });
}

// ---------------------------------------------------------------------------
// Ablations

struct AblationVariant {
  std::string name;
  bool use_inverse_lr = true;
  bool use_ewma = true;
  bool use_staleness_decay = true;
};

inline const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> v{
      {"baseline", true, true, true},
      {"w/o inverse LR", false, true, true},
      {"w/o EWMA", true, false, true},
      {"w/o staleness decay", true, true, false},
  };
  return v;
}

inline ExperimentConfig apply_variant(ExperimentConfig cfg, const AblationVariant& v) {
  cfg.algo_name = "fedqueue";
  cfg.use_inverse_lr = v.use_inverse_lr;
  cfg.use_ewma = v.use_ewma;
  cfg.use_staleness_decay = v.use_staleness_decay;
  return cfg;
}

struct AblationRow {
  std::string variant;
  std::vector<RunSummary> trials;
};

inline std::vector<AblationRow> run_ablation(const ExperimentConfig& base, std::size_t trials, std::size_t jobs = 1) {
  std::vector<SweepCell> cells;
  for (const auto& v : ablation_variants())
    for (std::size_t t = 0; t < trials; ++t) {
      ExperimentConfig c = apply_variant(base, v);
      c.seed = trial_seed(base.seed, t);
      cells.push_back({std::move(c), "fedqueue", v.name, t});
    }
  const auto results = run_parallel(cells, jobs, [](const SweepCell& cell) {
    auto s = summarize(run_experiment(cell.cfg).log, cell.cfg.target);
    s.value = cell.value;
    s.trial = cell.trial;
    return s;
  });
  std::vector<AblationRow> rows;
  for (const auto& v : ablation_variants()) rows.push_back({v.name, {}});
  for (std::size_t i = 0; i < results.size(); ++i) rows.at(i / trials).trials.push_back(results[i]);
  return rows;
}

// ---------------------------------------------------------------------------
// Staleness injection

/// Runs synchronous rounds in which every update is computed from the model
/// `tau` rounds old (the initial model while fewer rounds exist) and
/// aggregated with the staleness weights. Returns ||grad F(w_r)||^2 for
/// r = 0..rounds.
inline std::vector<double> staleness_injection_run(const Objective& objective, std::span<const double> weights,
                                                   std::int64_t tau, std::size_t rounds, std::int64_t local_steps,
                                                   double eta, const StalenessDecay& decay, std::size_t batch_size,
                                                   std::uint64_t seed) {
  if (tau < 0) throw InputError("injected staleness must be >= 0");
  const auto K = objective.num_clients();
  std::vector<Vec> history{objective.initial_model()};
  std::vector<double> grad_norms{norm2(objective.global_gradient(history.back(), weights))};
  ComputeProfile instant{std::vector<double>(K, 1.0), std::vector<double>(K, 0.0), 0.0};
  for (std::size_t r = 0; r < rounds; ++r) {
    const auto src = static_cast<std::size_t>(std::max<std::int64_t>(0, static_cast<std::int64_t>(r) - tau));
    const std::int64_t eff_tau = static_cast<std::int64_t>(r - src);
    std::vector<Vec> deltas;
    std::vector<WeightedDelta> admitted;
    for (std::size_t k = 0; k < K; ++k) {
      Stream sgd(seed, Purpose::Minibatch, k, r);
      Stream timing(seed, Purpose::Compute, k, r);
      deltas.push_back(client_local_update(history[src], local_steps, kNoLimit, eta, objective, k, instant,
                                           batch_size, sgd, timing)
                           .delta);
    }
    for (std::size_t k = 0; k < K; ++k) admitted.push_back({weights[k], eff_tau, deltas[k]});
    history.push_back(aggregate(history.back(), admitted, decay));
    grad_norms.push_back(norm2(objective.global_gradient(history.back(), weights)));
  }
  return grad_norms;
}

}  // namespace fedqueue
