#pragma once

// Comparison methods driven by the same queue and compute simulator:
// synchronous FedAvg, FedAsync, FedBuff and a compute-aware grouping scheme
// in the spirit of FedCompass.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedqueue/config.hpp"
#include "fedqueue/errors.hpp"
#include "fedqueue/metrics.hpp"
#include "fedqueue/protocol.hpp"
#include "fedqueue/sim.hpp"

namespace fedqueue {

inline constexpr double kNoLimit = std::numeric_limits<double>::infinity();

enum class StalenessFn { Constant, Polynomial, Hinge };

struct AsyncStaleness {
  StalenessFn fn = StalenessFn::Polynomial;
  double a = 1.0;
  double b = 4.0;  // hinge knee

  static AsyncStaleness parse(const std::string& name, double a, double b = 4.0) {
    if (name == "constant") return {StalenessFn::Constant, a, b};
    if (name == "polynomial") return {StalenessFn::Polynomial, a, b};
    if (name == "hinge") return {StalenessFn::Hinge, a, b};
    throw ConfigError("unknown staleness function '" + name + "'", "async.staleness_fn");
  }
};

/// Staleness discount used by the asynchronous baselines:
/// constant 1, polynomial (tau + 1)^-a, hinge 1 up to b then 1 / (a (tau - b) + 1).
inline double async_staleness(const AsyncStaleness& s, std::int64_t tau) {
  if (tau < 0) throw InputError("staleness must be >= 0");
  const double t = static_cast<double>(tau);
  switch (s.fn) {
    case StalenessFn::Constant:
      return 1.0;
    case StalenessFn::Polynomial:
      return std::pow(t + 1.0, -s.a);
    case StalenessFn::Hinge:
      return t <= s.b ? 1.0 : 1.0 / (s.a * (t - s.b) + 1.0);
  }
  return 1.0;
}

namespace baseline_detail {

inline RunResult fail(MetricsLog log, Vec w, const std::exception& e) {
  log.failed = true;
  log.failure = e.what();
  return {std::move(log), std::move(w)};
}

struct Context {
  const ExperimentConfig& cfg;
  std::shared_ptr<const Objective> objective;
  MetricsLog log;
  std::vector<double> p;
  Vec w;
  std::size_t K;

  Context(const ExperimentConfig& c, std::shared_ptr<const Objective> obj, const std::string& method)
      : cfg(c), objective(std::move(obj)), log(new_log(c, *objective, method)), K(objective->num_clients()) {
    p = client_weights(cfg, *objective);
    w = objective->initial_model();
    record_initial(*objective, w, log);
  }
};

// Warm-up speed estimate in steps per second, compute only.
inline double profiled_speed(const ExperimentConfig& cfg, const JobRunner& runner, std::size_t k) {
  const auto K = static_cast<std::size_t>(cfg.num_clients);
  if (cfg.warmup_steps > 0) {
    const double h = runner.probe(k, cfg.warmup_steps).second;
    if (h > 0.0) return static_cast<double>(cfg.warmup_steps) / h;
  }
  return per_client(cfg.throughput, K, "throughput").at(k);
}

}  // namespace baseline_detail

// ---------------------------------------------------------------------------

/// Synchronous rounds: every client runs its fixed step count from the
/// current model; the round closes when the slowest update arrives.
inline RunResult run_fedavg(const ExperimentConfig& cfg, std::shared_ptr<const Objective> objective) {
  baseline_detail::Context ctx(cfg, std::move(objective), "fedavg");
  auto& log = ctx.log;
  try {
    JobRunner runner(cfg, ctx.objective, log);
    const auto steps = per_client(cfg.fedavg_num_local_steps, ctx.K, "fedavg.num_local_steps");
    const double horizon = cfg.horizon();
    const StalenessDecay fresh{};
    double t = 0.0;
    for (std::int64_t r = 0;; ++r) {
      std::vector<Job> jobs;
      RoundRecord rec = blank_record(ctx.K, r, t);
      for (std::size_t k = 0; k < ctx.K; ++k) {
        jobs.push_back(runner.run(k, r, ctx.w, t, steps[k], kNoLimit, cfg.lr_base));
        rec.E[k] = steps[k];
        rec.eta[k] = cfg.lr_base;
      }
      double end = t;
      for (const auto& j : jobs) end = std::max(end, j.msg.arrival);
      if (end > horizon) break;
      std::vector<WeightedDelta> admitted;
      for (const auto& j : jobs) {
        log.events.push_back({j.msg.arrival, TraceKind::Arrival, static_cast<std::int64_t>(j.msg.k),
                              static_cast<std::int64_t>(j.msg.job_id), r});
        admitted.push_back({ctx.p[j.msg.k], 0, j.msg.delta});
      }
      ctx.w = aggregate(ctx.w, admitted, fresh);
      rec.time = end;
      for (const auto& j : jobs) mark_aggregated(log, j.record, r, end, 0, rec);
      evaluate_into(*ctx.objective, ctx.w, rec);
      log.events.push_back({end, TraceKind::Aggregate, -1, -1, r});
      log.rounds.push_back(std::move(rec));
      t = end;
    }
  } catch (const NumericalError& e) {
    return baseline_detail::fail(std::move(log), std::move(ctx.w), e);
  }
  return {std::move(log), std::move(ctx.w)};
}

/// Asynchronous methods: each arriving update is applied immediately
/// (FedAsync, buffer_size 0) or collected into a buffer of size K that is
/// flushed as one step (FedBuff). The client is restarted from the current
/// model right away.
inline RunResult run_async(const ExperimentConfig& cfg, std::shared_ptr<const Objective> objective,
                           std::int64_t buffer_size) {
  const bool buffered = buffer_size > 0;
  baseline_detail::Context ctx(cfg, std::move(objective), buffered ? "fedbuff" : "fedasync");
  auto& log = ctx.log;
  try {
    JobRunner runner(cfg, ctx.objective, log);
    const auto discount = AsyncStaleness::parse(cfg.async_staleness_fn, cfg.async_staleness_a, cfg.async_staleness_b);
    const std::int64_t E = cfg.async_num_local_steps;
    const double horizon = cfg.horizon();
    SimClock clock;
    std::map<std::uint64_t, Job> in_flight;
    std::int64_t version = 0;

    auto dispatch = [&](std::size_t k, double t) {
      Job job = runner.run(k, version, ctx.w, t, E, kNoLimit, cfg.lr_base);
      clock.schedule(job.msg.arrival, EventKind::UpdateArrival, static_cast<std::int64_t>(k), job.msg.job_id);
      in_flight.emplace(job.msg.job_id, std::move(job));
    };
    for (std::size_t k = 0; k < ctx.K; ++k) dispatch(k, 0.0);

    std::vector<Job> buffer;
    while (!clock.empty() && clock.peek().time <= horizon) {
      const SimEvent ev = clock.pop();
      auto node = in_flight.extract(ev.payload);
      Job job = std::move(node.mapped());
      const double t = ev.time;
      log.events.push_back({t, TraceKind::Arrival, static_cast<std::int64_t>(job.msg.k),
                            static_cast<std::int64_t>(job.msg.job_id), version});
      const std::size_t k = job.msg.k;
      if (!buffered) {
        const std::int64_t tau = version - job.msg.s;
        const double scale = cfg.async_alpha * async_staleness(discount, tau);
        axpy(scale, job.msg.delta, ctx.w);
        RoundRecord rec = blank_record(ctx.K, version, t);
        mark_aggregated(log, job.record, version, t, tau, rec);
        ++version;
        evaluate_into(*ctx.objective, ctx.w, rec);
        log.events.push_back({t, TraceKind::Aggregate, -1, -1, rec.round});
        dispatch(k, t);
        rec.E[k] = E;
        rec.eta[k] = cfg.lr_base;
        log.rounds.push_back(std::move(rec));
        continue;
      }
      buffer.push_back(std::move(job));
      if (static_cast<std::int64_t>(buffer.size()) >= buffer_size) {
        RoundRecord rec = blank_record(ctx.K, version, t);
        Vec step(ctx.w.size(), 0.0);
        for (const auto& b : buffer) {
          const std::int64_t tau = version - b.msg.s;
          axpy(async_staleness(discount, tau) / static_cast<double>(buffer_size), b.msg.delta, step);
          mark_aggregated(log, b.record, version, t, tau, rec);
        }
        axpy(1.0, step, ctx.w);
        buffer.clear();
        ++version;
        evaluate_into(*ctx.objective, ctx.w, rec);
        log.events.push_back({t, TraceKind::Aggregate, -1, -1, rec.round});
        log.rounds.push_back(std::move(rec));
      }
      dispatch(k, t);
      if (!log.rounds.empty() && log.rounds.back().time == t) {
        log.rounds.back().E[k] = E;
        log.rounds.back().eta[k] = cfg.lr_base;
      }
    }
  } catch (const NumericalError& e) {
    return baseline_detail::fail(std::move(log), std::move(ctx.w), e);
  }
  return {std::move(log), std::move(ctx.w)};
}

inline RunResult run_fedasync(const ExperimentConfig& cfg, std::shared_ptr<const Objective> objective) {
  return run_async(cfg, std::move(objective), 0);
}

inline RunResult run_fedbuff(const ExperimentConfig& cfg, std::shared_ptr<const Objective> objective) {
  return run_async(cfg, std::move(objective), cfg.fedbuff_K);
}

// ---------------------------------------------------------------------------
// Compute-aware grouping

/// speed <- m speed + (1 - m) observed.
inline double update_speed(double prior, double observed, double momentum) {
  return momentum * prior + (1.0 - momentum) * observed;
}

/// Step counts that make every client of a group finish its compute at the
/// same time: the fastest runs max_steps, the rest scale with their speed.
inline std::vector<std::int64_t> group_steps(std::span<const double> speeds, std::int64_t min_steps,
                                             std::int64_t max_steps, double* duration = nullptr) {
  if (speeds.empty()) throw InputError("group needs at least one client");
  double D = std::numeric_limits<double>::infinity();
  for (double s : speeds) {
    if (!(s > 0.0)) throw InputError("client speeds must be > 0");
    D = std::min(D, static_cast<double>(max_steps) / s);
  }
  std::vector<std::int64_t> out;
  for (double s : speeds)
    out.push_back(std::clamp(static_cast<std::int64_t>(std::llround(s * D)), min_steps, max_steps));
  if (duration) *duration = D;
  return out;
}

inline RunResult run_fedcompass(const ExperimentConfig& cfg, std::shared_ptr<const Objective> objective) {
  baseline_detail::Context ctx(cfg, std::move(objective), "fedcompass");
  auto& log = ctx.log;
  try {
    JobRunner runner(cfg, ctx.objective, log);
    const auto discount = AsyncStaleness::parse(cfg.compass_staleness_fn, cfg.compass_staleness_a);
    const double horizon = cfg.horizon();
    const auto K = ctx.K;

    std::vector<double> speed(K);
    for (std::size_t k = 0; k < K; ++k) speed[k] = baseline_detail::profiled_speed(cfg, runner, k);

    struct Group {
      std::vector<std::size_t> members;
      std::vector<Job> arrived;
      double expected_end = 0.0;
      std::int64_t min_steps = 1;
      bool deadline_passed = false;
      bool closed = false;
    };
    std::vector<Group> groups;
    std::vector<std::int64_t> group_of(K, -1);  // -1: idle
    std::map<std::uint64_t, Job> in_flight;
    SimClock clock;
    std::int64_t version = 0;

    auto launch = [&](std::size_t k, std::int64_t steps, double eta, double t, std::size_t g) {
      Job job = runner.run(k, version, ctx.w, t, steps, kNoLimit, eta);
      clock.schedule(job.msg.arrival, EventKind::UpdateArrival, static_cast<std::int64_t>(k), job.msg.job_id);
      in_flight.emplace(job.msg.job_id, std::move(job));
      group_of[k] = static_cast<std::int64_t>(g);
      groups[g].members.push_back(k);
    };

    auto form_group = [&](double t) -> std::optional<std::size_t> {
      std::vector<std::size_t> idle;
      std::vector<double> sp;
      for (std::size_t k = 0; k < K; ++k)
        if (group_of[k] < 0) idle.push_back(k), sp.push_back(speed[k]);
      if (idle.empty()) return std::nullopt;
      double D = 0.0;
      const auto steps = group_steps(sp, cfg.compass_min_local_steps, cfg.compass_max_local_steps, &D);
      const auto min_steps = *std::min_element(steps.begin(), steps.end());
      const std::size_t g = groups.size();
      groups.push_back({});
      groups[g].expected_end = t + D;
      groups[g].min_steps = min_steps;
      for (std::size_t i = 0; i < idle.size(); ++i)
        launch(idle[i], steps[i], scale_learning_rate(cfg.lr_base, min_steps, steps[i]), t, g);
      clock.schedule(t + cfg.compass_latest_time_factor * D, EventKind::Deadline, -1, g);
      return g;
    };

    auto aggregate_group = [&](std::size_t g, double t) {
      auto& grp = groups[g];
      RoundRecord rec = blank_record(K, version, t);
      std::vector<WeightedDelta> admitted;
      std::vector<double> weights;
      double S = 0.0;
      for (const auto& j : grp.arrived) {
        const std::int64_t tau = version - j.msg.s;
        weights.push_back(ctx.p[j.msg.k] * async_staleness(discount, tau));
        S += weights.back();
        mark_aggregated(log, j.record, version, t, tau, rec);
      }
      Vec step(ctx.w.size(), 0.0);
      for (std::size_t i = 0; i < grp.arrived.size(); ++i) axpy(weights[i] / S, grp.arrived[i].msg.delta, step);
      axpy(1.0, step, ctx.w);
      grp.closed = true;
      for (auto k : grp.members)
        if (group_of[k] == static_cast<std::int64_t>(g) &&
            std::any_of(grp.arrived.begin(), grp.arrived.end(), [k](const Job& j) { return j.msg.k == k; }))
          group_of[k] = -1;
      ++version;
      evaluate_into(*ctx.objective, ctx.w, rec);
      log.events.push_back({t, TraceKind::Aggregate, -1, -1, rec.round});
      log.rounds.push_back(std::move(rec));
      form_group(t);
    };

    form_group(0.0);
    while (!clock.empty() && clock.peek().time <= horizon) {
      const SimEvent ev = clock.pop();
      const double t = ev.time;
      if (ev.kind == EventKind::Deadline) {
        auto& grp = groups.at(ev.payload);
        if (grp.closed) continue;
        log.events.push_back({t, TraceKind::Deadline, -1, -1, static_cast<std::int64_t>(ev.payload)});
        if (grp.arrived.empty())
          grp.deadline_passed = true;
        else
          aggregate_group(ev.payload, t);
        continue;
      }
      auto node = in_flight.extract(ev.payload);
      Job job = std::move(node.mapped());
      const std::size_t k = job.msg.k;
      log.events.push_back({t, TraceKind::Arrival, static_cast<std::int64_t>(k),
                            static_cast<std::int64_t>(job.msg.job_id), version});
      const auto& urec = log.updates.at(job.record);
      if (urec.local_time > 0.0)
        speed[k] = update_speed(speed[k], static_cast<double>(urec.steps_done) / urec.local_time,
                                cfg.compass_speed_momentum);
      const auto g = static_cast<std::size_t>(group_of[k]);
      auto& grp = groups.at(g);
      if (!grp.closed) {
        grp.arrived.push_back(std::move(job));
        const bool all_in = grp.arrived.size() == grp.members.size();
        if (all_in || grp.deadline_passed) aggregate_group(g, t);
        continue;
      }
      // Late member of a group that was already aggregated: apply it on its own.
      const std::int64_t tau = version - job.msg.s;
      RoundRecord rec = blank_record(K, version, t);
      axpy(cfg.compass_alpha * async_staleness(discount, tau), job.msg.delta, ctx.w);
      mark_aggregated(log, job.record, version, t, tau, rec);
      ++version;
      evaluate_into(*ctx.objective, ctx.w, rec);
      log.events.push_back({t, TraceKind::Aggregate, -1, -1, rec.round});
      log.rounds.push_back(std::move(rec));
      group_of[k] = -1;
      // Join the open group if there is one, sized to finish with it.
      std::optional<std::size_t> open;
      for (std::size_t i = groups.size(); i-- > 0;)
        if (!groups[i].closed) {
          open = i;
          break;
        }
      if (open && groups[*open].expected_end > t) {
        const auto steps = std::clamp(
            static_cast<std::int64_t>(std::llround(speed[k] * (groups[*open].expected_end - t))),
            cfg.compass_min_local_steps, cfg.compass_max_local_steps);
        const auto ref = std::min(steps, groups[*open].min_steps);
        launch(k, steps, scale_learning_rate(cfg.lr_base, ref, steps), t, *open);
      } else {
        form_group(t);
      }
    }
  } catch (const NumericalError& e) {
    return baseline_detail::fail(std::move(log), std::move(ctx.w), e);
  }
  return {std::move(log), std::move(ctx.w)};
}

}  // namespace fedqueue
