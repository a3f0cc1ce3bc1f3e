#pragma once

// Discrete-event plumbing shared by every orchestrator: the virtual clock,
// job execution against the queue and compute models, and experiment setup.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "fedqueue/config.hpp"
#include "fedqueue/errors.hpp"
#include "fedqueue/learn.hpp"
#include "fedqueue/metrics.hpp"
#include "fedqueue/protocol.hpp"
#include "fedqueue/queue_sim.hpp"
#include "fedqueue/rng.hpp"

namespace fedqueue {

// Lower values run first among events at the same instant: a job's start
// precedes its arrival, and arrivals at a cutoff are processed before the
// boundary so the inclusive cutoff admits them.
enum class EventKind : int { JobStart = 0, UpdateArrival = 1, Deadline = 2, RoundBoundary = 3 };

struct SimEvent {
  double time = 0.0;
  EventKind kind = EventKind::RoundBoundary;
  std::int64_t client = -1;
  std::uint64_t payload = 0;  // job id, round index or group id
  std::uint64_t seq = 0;      // insertion order, last tie-breaker
};

struct EventOrder {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    // priority_queue pops the largest; invert to pop the earliest.
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return static_cast<int>(a.kind) > static_cast<int>(b.kind);
    if (a.client != b.client) return a.client > b.client;
    return a.seq > b.seq;
  }
};

class SimClock {
 public:
  double now() const noexcept { return now_; }
  bool empty() const noexcept { return pending_.empty(); }
  std::size_t size() const noexcept { return pending_.size(); }

  void schedule(double time, EventKind kind, std::int64_t client, std::uint64_t payload) {
    if (time < now_) throw CausalityError("event scheduled in the past");
    pending_.push({time, kind, client, payload, seq_++});
  }

  const SimEvent& peek() const { return pending_.top(); }

  SimEvent pop() {
    SimEvent e = pending_.top();
    pending_.pop();
    now_ = e.time;
    return e;
  }

 private:
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::priority_queue<SimEvent, std::vector<SimEvent>, EventOrder> pending_;
};

// ---------------------------------------------------------------------------

inline std::shared_ptr<const Objective> build_objective(const ExperimentConfig& cfg) {
  const auto K = static_cast<std::size_t>(cfg.num_clients);
  if (cfg.dataset == "quadratic") {
    QuadraticSpec spec;
    spec.num_clients = K;
    spec.dimension = static_cast<std::size_t>(cfg.quad_dim);
    spec.L = cfg.quad_L;
    spec.mu = cfg.quad_mu;
    spec.b_spread = cfg.quad_spread;
    spec.sigma = per_client(cfg.grad_sigma, K, "grad_sigma");
    spec.seed = cfg.seed;
    return std::make_shared<QuadraticObjective>(make_quadratic(spec));
  }
  MixtureSpec spec;
  spec.feature_dim = static_cast<std::size_t>(cfg.feature_dim);
  spec.num_classes = static_cast<std::size_t>(cfg.num_classes);
  spec.train_samples = static_cast<std::size_t>(cfg.train_samples);
  spec.test_samples = static_cast<std::size_t>(cfg.test_samples);
  spec.class_sep = cfg.class_sep;
  spec.seed = cfg.seed;
  auto [train, test] = make_gaussian_mixture(spec);
  Stream rng(cfg.seed, Purpose::Partition, 0);
  DataPartition part = cfg.partition == "iid" ? iid_partition(train.size(), K, rng)
                                              : dirichlet_partition(train.labels, K, cfg.data_alpha, rng);
  const auto shape = cfg.model == "mlp" ? ModelShape::Hidden : ModelShape::Linear;
  return std::make_shared<ClassifyObjective>(std::move(train), std::move(test), std::move(part), shape,
                                             static_cast<std::size_t>(cfg.hidden), cfg.seed);
}

inline std::vector<double> client_weights(const ExperimentConfig& cfg, const Objective& objective) {
  const auto K = objective.num_clients();
  if (cfg.client_weight_mode == "data_size") {
    auto sizes = objective.client_sizes();
    double total = 0.0;
    for (double s : sizes) total += s;
    for (auto& s : sizes) s /= total;
    return sizes;
  }
  return std::vector<double>(K, 1.0 / static_cast<double>(K));
}

inline QueueModel queue_model(const ExperimentConfig& cfg) {
  QueueModel m;
  m.kind = cfg.sim_queue == "fixed" ? QueueKind::Fixed : QueueKind::Lognormal;
  m.fixed_delays = cfg.queue_fixed;
  m.means = cfg.queue_means;
  m.rho = cfg.queue_rho;
  m.semantics = cfg.queue_mean_semantics == "mean" ? MeanSemantics::Mean : MeanSemantics::Median;
  m.drift = cfg.queue_drift;
  m.drift_corr = cfg.queue_drift_corr;
  m.validate(static_cast<std::size_t>(cfg.num_clients));
  return m;
}

inline ComputeProfile compute_profile(const ExperimentConfig& cfg) {
  const auto K = static_cast<std::size_t>(cfg.num_clients);
  ComputeProfile p{per_client(cfg.throughput, K, "throughput"), per_client(cfg.slowdown, K, "slowdown"),
                   cfg.compute_jitter};
  p.validate(K);
  return p;
}

/// Static per-client delay estimate: the configured location of each queue.
inline std::vector<double> static_delay_estimates(const QueueModel& m) {
  return m.kind == QueueKind::Fixed ? m.fixed_delays : m.means;
}

struct RunResult {
  MetricsLog log;
  Vec model;  // global model at the end of the run
};

struct Job {
  ClientUpdateMessage msg;
  std::size_t record = 0;  // index into MetricsLog::updates
};

/// Executes client jobs: draws the admission delay, runs local SGD, and
/// timestamps the arrival. Delays and minibatches are keyed by
/// (seed, client, submission index), so every algorithm sees the same queue.
class JobRunner {
 public:
  JobRunner(const ExperimentConfig& cfg, std::shared_ptr<const Objective> objective, MetricsLog& log)
      : objective_(std::move(objective)),
        profile_(compute_profile(cfg)),
        queue_(queue_model(cfg), cfg.seed, cfg.Tsync),
        seed_(cfg.seed),
        batch_(static_cast<std::size_t>(cfg.batch_size)),
        submitted_(static_cast<std::size_t>(cfg.num_clients), 0),
        log_(log) {}

  Job run(std::size_t k, std::int64_t s, std::span<const double> w, double submit, std::int64_t E, double time_limit,
          double eta, double q_hat = kNaN) {
    const std::uint64_t n = submitted_.at(k)++;
    const double q = queue_.delay(k, n, submit);
    Stream sgd(seed_, Purpose::Minibatch, k, n);
    Stream timing(seed_, Purpose::Compute, k, n);
    LocalResult local = client_local_update(w, E, time_limit, eta, *objective_, k, profile_, batch_, sgd, timing);

    Job job;
    job.msg.k = k;
    job.msg.s = s;
    job.msg.observed_q = q;
    job.msg.submit = submit;
    job.msg.arrival = submit + q + local.local_time;
    job.msg.steps_done = local.steps_done;
    job.msg.job_id = log_.updates.size();
    job.msg.delta = std::move(local.delta);

    UpdateRecord rec;
    rec.job_id = job.msg.job_id;
    rec.k = k;
    rec.s = s;
    rec.submit = submit;
    rec.q = q;
    rec.q_hat = q_hat;
    rec.local_time = local.local_time;
    rec.arrival = job.msg.arrival;
    rec.E = E;
    rec.eta = eta;
    rec.steps_done = local.steps_done;
    job.record = log_.updates.size();
    log_.updates.push_back(rec);
    log_.events.push_back({submit, TraceKind::Submit, static_cast<std::int64_t>(k),
                           static_cast<std::int64_t>(job.msg.job_id), s});
    return job;
  }

  /// Off-the-clock profiling probe: one admission delay from a dedicated
  /// substream and the time of `steps` local steps.
  std::pair<double, double> probe(std::size_t k, std::int64_t steps) const {
    Stream rng(seed_, Purpose::Warmup, k);
    const double q = sample_queue_delay(queue_.model(), k, rng);
    return {q, compute_time(profile_, k, steps)};
  }

  const ComputeProfile& profile() const noexcept { return profile_; }
  const QueueModel& queue() const noexcept { return queue_.model(); }

 private:
  std::shared_ptr<const Objective> objective_;
  ComputeProfile profile_;
  QueueSampler queue_;
  std::uint64_t seed_;
  std::size_t batch_;
  std::vector<std::uint64_t> submitted_;
  MetricsLog& log_;
};

inline MetricsLog new_log(const ExperimentConfig& cfg, const Objective& objective, std::string method) {
  MetricsLog log;
  log.method = std::move(method);
  log.num_clients = objective.num_clients();
  log.T_sync = cfg.Tsync;
  log.seed = cfg.seed;
  log.higher_is_better = cfg.dataset != "quadratic";
  log.transfers_per_dispatch = cfg.transfers_per_dispatch;
  return log;
}

inline void evaluate_into(const Objective& objective, std::span<const double> w, RoundRecord& r) {
  const auto ev = objective.evaluate(w, Split::Test);
  r.loss = ev.loss;
  r.accuracy = ev.accuracy.value_or(kNaN);
  if (!std::isfinite(r.loss)) throw NumericalError("global loss is not finite");
}

inline void record_initial(const Objective& objective, std::span<const double> w, MetricsLog& log) {
  const auto ev = objective.evaluate(w, Split::Test);
  log.initial_loss = ev.loss;
  log.initial_accuracy = ev.accuracy.value_or(kNaN);
}

inline std::int64_t num_boundaries(const ExperimentConfig& cfg) {
  return static_cast<std::int64_t>(std::floor(cfg.horizon() / cfg.Tsync + 1e-9));
}

inline RoundRecord blank_record(std::size_t K, std::int64_t round, double time) {
  RoundRecord r;
  r.round = round;
  r.time = time;
  r.q.assign(K, kNaN);
  r.q_hat.assign(K, kNaN);
  r.E.assign(K, 0);
  r.eta.assign(K, 0.0);
  r.steps.assign(K, 0);
  return r;
}

inline void mark_aggregated(MetricsLog& log, std::size_t record, std::int64_t round, double time, std::int64_t tau,
                            RoundRecord& r) {
  auto& u = log.updates.at(record);
  u.agg_round = round;
  u.agg_time = time;
  u.tau = tau;
  r.admitted.push_back(u.k);
  r.taus.push_back(tau);
  r.q.at(u.k) = u.q;
  r.steps.at(u.k) += u.steps_done;
}

}  // namespace fedqueue
