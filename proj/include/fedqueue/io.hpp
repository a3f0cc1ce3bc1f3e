#pragma once

// Run outputs: summary.json, rounds.csv and events.jsonl.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedqueue/config.hpp"
#include "fedqueue/engine.hpp"
#include "fedqueue/errors.hpp"
#include "fedqueue/metrics.hpp"

namespace fedqueue {

namespace io_detail {

inline nlohmann::json opt(const std::optional<double>& v) {
  return v && std::isfinite(*v) ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline std::string csv_num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace io_detail

inline nlohmann::json summary_json(const MetricsLog& log, const ExperimentConfig& cfg) {
  using io_detail::opt;
  nlohmann::json j;
  j["method"] = log.method;
  j["seed"] = log.seed;
  j["num_clients"] = log.num_clients;
  j["T_sync"] = log.T_sync;
  j["failed"] = log.failed;
  if (log.failed) j["failure"] = log.failure;
  j["target"] = cfg.target;
  j["time_to_target"] = opt(time_to_target(log, cfg.target));
  j["max_accuracy"] = opt(max_accuracy(log));
  j["final_accuracy"] = opt(final_accuracy(log));
  j["final_loss"] = opt(final_loss(log));
  j["initial_loss"] = io_detail::num(log.initial_loss);
  j["initial_accuracy"] = io_detail::num(log.initial_accuracy);
  j["rounds"] = log.rounds.size();
  const auto ttt = time_to_target(log, cfg.target);
  j["dispatches"] = dispatches_until(log, std::nullopt);
  j["transfers_to_target"] = ttt ? nlohmann::json(transfers_until(log, ttt)) : nlohmann::json(nullptr);
  j["local_steps_to_target"] = ttt ? nlohmann::json(total_local_steps(log, ttt)) : nlohmann::json(nullptr);
  j["total_local_steps"] = total_local_steps(log, std::nullopt);
  const auto ratios = delay_ratios(log);
  if (!ratios.empty()) {
    const auto d = delay_statistics(std::span<const double>(ratios));
    j["P_late"] = d.P_late;
    j["E_hat_d"] = opt(d.E_hat_d);
    j["R_d"] = d.R_d;
  }
  nlohmann::json clients = nlohmann::json::array();
  const auto errs = prediction_error_stats(log);
  const auto rows = admission_summary(log);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::int64_t submitted = 0;
    for (const auto& u : log.updates)
      if (u.k == k) ++submitted;
    clients.push_back({{"client", k},
                       {"submitted", submitted},
                       {"admitted", rows[k].admitted},
                       {"deferred", rows[k].deferred},
                       {"max_delay_ratio", rows[k].max_delay_ratio},
                       {"error_mean", opt(errs[k].mean)},
                       {"error_std", opt(errs[k].std)}});
  }
  j["clients"] = std::move(clients);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(checksum(log)));
  j["checksum"] = hex;
  return j;
}

/// One row per aggregation: fixed columns, then q, q_hat, E, eta and steps
/// for each client.
inline std::string rounds_csv(const MetricsLog& log) {
  using io_detail::csv_num;
  std::ostringstream os;
  os << "round,time,loss,accuracy,admitted,deferred,buffered,skipped,mean_tau,max_tau";
  for (const char* col : {"q", "q_hat", "E", "eta", "steps"})
    for (std::size_t k = 0; k < log.num_clients; ++k) os << ',' << col << k;
  os << '\n';
  for (const auto& r : log.rounds) {
    std::string admitted;
    std::int64_t deferred = 0;
    for (std::size_t i = 0; i < r.admitted.size(); ++i) {
      if (i) admitted += ' ';
      admitted += std::to_string(r.admitted[i]);
      if (r.taus[i] >= 1) ++deferred;
    }
    os << r.round << ',' << csv_num(r.time) << ',' << csv_num(r.loss) << ',' << csv_num(r.accuracy) << ','
       << admitted << ',' << deferred << ',' << r.buffered << ',' << (r.skipped ? 1 : 0) << ','
       << csv_num(r.mean_tau()) << ',' << r.max_tau();
    for (double x : r.q) os << ',' << csv_num(x);
    for (double x : r.q_hat) os << ',' << csv_num(x);
    for (auto x : r.E) os << ',' << x;
    for (double x : r.eta) os << ',' << csv_num(x);
    for (auto x : r.steps) os << ',' << x;
    os << '\n';
  }
  return os.str();
}

inline std::string events_jsonl(const MetricsLog& log) {
  std::string out;
  for (const auto& e : log.events) {
    nlohmann::json j{{"time", e.time}, {"kind", to_string(e.kind)}};
    if (e.k >= 0) j["client"] = e.k;
    if (e.job >= 0) j["job"] = e.job;
    if (e.round >= 0) j["round"] = e.round;
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline nlohmann::json summary_json(const RunSummary& s) {
  using io_detail::opt;
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(s.checksum));
  return {{"method", s.method},
          {"axis", s.axis},
          {"value", s.value},
          {"trial", s.trial},
          {"seed", s.seed},
          {"failed", s.failed},
          {"time_to_target", opt(s.time_to_target)},
          {"final_accuracy", opt(s.final_accuracy)},
          {"final_loss", opt(s.final_loss)},
          {"max_accuracy", opt(s.max_accuracy)},
          {"P_late", s.P_late},
          {"E_hat_d", opt(s.E_hat_d)},
          {"R_d", s.R_d},
          {"rounds", s.rounds},
          {"dispatches", s.dispatches},
          {"transfers_to_target", s.transfers_to_target},
          {"checksum", hex}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

/// Writes config.ini, summary.json, rounds.csv and events.jsonl into `dir`.
inline void write_run(const std::filesystem::path& dir, const MetricsLog& log, const ExperimentConfig& cfg) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.ini", save_config(cfg));
  write_text(dir / "summary.json", summary_json(log, cfg).dump(2) + "\n");
  write_text(dir / "rounds.csv", rounds_csv(log));
  write_text(dir / "events.jsonl", events_jsonl(log));
}

}  // namespace fedqueue
