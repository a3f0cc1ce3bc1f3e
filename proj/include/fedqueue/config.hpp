#pragma once

// Experiment configuration: a sectioned `key = value` text format.
//
//   # comment
//   [fedqueue]
//   Tsync = 10.0
//   queue_means = 1.5,2.5,3.5,4.5
//   [fedavg]
//   num_local_steps = 67,155,147,15     # canonical key fedavg.num_local_steps
//
// Sections named after a key prefix (algo, data, fedavg, async, fedbuff,
// compass) prepend "<section>." to the keys below them; the grouping sections
// (workload, protocol, fedqueue, ablation, theory) do not. Dotted keys may also
// be written in full anywhere. Unknown keys and sections are errors.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "fedqueue/errors.hpp"

namespace fedqueue {

struct ExperimentConfig {
  // workload
  std::string dataset = "synthetic_classify";  // synthetic_classify | quadratic
  std::string partition = "non-iid";           // iid | non-iid
  double data_alpha = 0.5;
  std::string model = "linear";                // linear | mlp
  std::int64_t hidden = 32;
  std::int64_t feature_dim = 20;
  std::int64_t num_classes = 10;
  std::int64_t train_samples = 6000;
  std::int64_t test_samples = 2000;
  double class_sep = 1.0;
  std::int64_t quad_dim = 10;
  double quad_L = 1.0;
  double quad_mu = 0.1;
  double quad_spread = 0.0;
  std::vector<double> grad_sigma{0.0};
  double target = 0.95;  // accuracy for classification, loss for quadratic

  // protocol
  std::uint64_t seed = 42;
  std::int64_t num_clients = 4;
  std::int64_t num_rounds = 50;
  std::int64_t batch_size = 64;
  std::string optimizer = "sgd";
  std::int64_t local_steps = 100;
  double time_budget = 0.0;  // virtual seconds, 0 = num_rounds * Tsync

  // fedqueue
  std::string algo_name = "fedqueue";         // fedqueue | fedavg | fedasync | fedbuff | fedcompass
  std::string broadcast_when = "next_round";  // next_round | immediate
  std::string delay_mode = "simulate";
  double Tsync = 10.0;
  double q_init = 2.0;
  double gamma = 0.2;
  double delta = 2.0;
  double alpha = 0.5;
  std::int64_t warmup_steps = 10;
  std::string sim_queue = "lognormal";  // fixed | lognormal
  std::vector<double> queue_fixed{0.5, 1.5, 2.4, 6.0};
  std::vector<double> queue_means{1.5, 2.5, 3.5, 4.5};
  double queue_rho = 0.4;
  std::string queue_mean_semantics = "median";  // median | mean
  double queue_drift = 0.0;
  double queue_drift_corr = 0.9;
  std::vector<double> slowdown{1.0, 1.0, 1.0, 1.0};
  std::vector<double> throughput{10.0};
  double compute_jitter = 0.0;
  std::string staleness_mode = "harmonic";  // harmonic | exp
  double staleness_beta = 0.5;
  std::string admission_horizon = "horizon";  // horizon | all
  std::string client_weight_mode = "equal";   // equal | data_size
  double lr_base = 0.003;
  std::int64_t E_floor = 1;
  double epsilon = 0.05;
  std::int64_t transfers_per_dispatch = 2;

  // ablation toggles
  bool use_ewma = true;
  bool use_staleness_decay = true;
  bool use_inverse_lr = true;

  // baselines
  std::vector<std::int64_t> fedavg_num_local_steps{67, 155, 147, 15};
  std::int64_t async_num_local_steps = 155;
  std::string async_staleness_fn = "polynomial";  // constant | polynomial | hinge
  double async_staleness_a = 1.0;
  double async_staleness_b = 4.0;
  double async_alpha = 0.5;
  std::int64_t fedbuff_K = 3;
  std::int64_t compass_min_local_steps = 20;
  std::int64_t compass_max_local_steps = 200;
  double compass_speed_momentum = 0.6;
  double compass_latest_time_factor = 1.1;
  std::string compass_staleness_fn = "polynomial";
  double compass_staleness_a = 1.0;
  double compass_alpha = 0.5;

  double horizon() const { return time_budget > 0.0 ? time_budget : static_cast<double>(num_rounds) * Tsync; }

  bool operator==(const ExperimentConfig&) const = default;

  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();
  static bool has_key(std::string_view key);

  void validate() const;
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(std::string_view key, std::string_view v) {
  const auto s = trim(v);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw ConfigError("expected a number for " + std::string(key) + ", got '" + s + "'", std::string(key));
  return x;
}

inline std::int64_t parse_int(std::string_view key, std::string_view v) {
  const auto s = trim(v);
  std::int64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw ConfigError("expected an integer for " + std::string(key) + ", got '" + s + "'", std::string(key));
  return x;
}

inline std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  const auto s = trim(v);
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw ConfigError("expected an unsigned integer for " + std::string(key) + ", got '" + s + "'", std::string(key));
  return x;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  const auto s = trim(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("expected true/false for " + std::string(key) + ", got '" + s + "'", std::string(key));
}

inline std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>)
      out += format_double(v[i]);
    else
      out += std::to_string(v[i]);
  }
  return out;
}

struct Field {
  std::string key;
  std::string section;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class M>
Field make_field(std::string key, std::string section, M ExperimentConfig::*member,
                 std::vector<std::string> choices = {}) {
  Field f;
  f.key = key;
  f.section = std::move(section);
  f.set = [key, member, choices](ExperimentConfig& c, std::string_view v) {
    if constexpr (std::is_same_v<M, double>) {
      c.*member = parse_double(key, v);
    } else if constexpr (std::is_same_v<M, std::int64_t>) {
      c.*member = parse_int(key, v);
    } else if constexpr (std::is_same_v<M, std::uint64_t>) {
      c.*member = parse_uint(key, v);
    } else if constexpr (std::is_same_v<M, bool>) {
      c.*member = parse_bool(key, v);
    } else if constexpr (std::is_same_v<M, std::string>) {
      auto s = trim(v);
      if (!choices.empty() && std::find(choices.begin(), choices.end(), s) == choices.end()) {
        std::string allowed;
        for (const auto& ch : choices) allowed += (allowed.empty() ? "" : " | ") + ch;
        throw ConfigError("invalid value '" + s + "' for " + key + " (allowed: " + allowed + ")", key);
      }
      c.*member = std::move(s);
    } else if constexpr (std::is_same_v<M, std::vector<double>>) {
      std::vector<double> out;
      for (const auto& item : split_list(v)) out.push_back(parse_double(key, item));
      c.*member = std::move(out);
    } else if constexpr (std::is_same_v<M, std::vector<std::int64_t>>) {
      std::vector<std::int64_t> out;
      for (const auto& item : split_list(v)) out.push_back(parse_int(key, item));
      c.*member = std::move(out);
    }
  };
  f.get = [member](const ExperimentConfig& c) -> std::string {
    if constexpr (std::is_same_v<M, double>) {
      return format_double(c.*member);
    } else if constexpr (std::is_same_v<M, std::int64_t> || std::is_same_v<M, std::uint64_t>) {
      return std::to_string(c.*member);
    } else if constexpr (std::is_same_v<M, bool>) {
      return c.*member ? "true" : "false";
    } else if constexpr (std::is_same_v<M, std::string>) {
      return c.*member;
    } else {
      return join(c.*member);
    }
  };
  return f;
}

inline const std::vector<Field>& fields() {
  using C = ExperimentConfig;
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    t.push_back(make_field("dataset", "workload", &C::dataset, {"synthetic_classify", "quadratic"}));
    t.push_back(make_field("partition", "workload", &C::partition, {"iid", "non-iid"}));
    t.push_back(make_field("data.alpha", "workload", &C::data_alpha));
    t.push_back(make_field("model", "workload", &C::model, {"linear", "mlp"}));
    t.push_back(make_field("hidden", "workload", &C::hidden));
    t.push_back(make_field("feature_dim", "workload", &C::feature_dim));
    t.push_back(make_field("num_classes", "workload", &C::num_classes));
    t.push_back(make_field("train_samples", "workload", &C::train_samples));
    t.push_back(make_field("test_samples", "workload", &C::test_samples));
    t.push_back(make_field("class_sep", "workload", &C::class_sep));
    t.push_back(make_field("quad_dim", "workload", &C::quad_dim));
    t.push_back(make_field("quad_L", "workload", &C::quad_L));
    t.push_back(make_field("quad_mu", "workload", &C::quad_mu));
    t.push_back(make_field("quad_spread", "workload", &C::quad_spread));
    t.push_back(make_field("grad_sigma", "workload", &C::grad_sigma));
    t.push_back(make_field("target", "workload", &C::target));

    t.push_back(make_field("seed", "protocol", &C::seed));
    t.push_back(make_field("num_clients", "protocol", &C::num_clients));
    t.push_back(make_field("num_rounds", "protocol", &C::num_rounds));
    t.push_back(make_field("batch_size", "protocol", &C::batch_size));
    t.push_back(make_field("optimizer", "protocol", &C::optimizer, {"sgd"}));
    t.push_back(make_field("local_steps", "protocol", &C::local_steps));
    t.push_back(make_field("time_budget", "protocol", &C::time_budget));

    t.push_back(make_field("algo.name", "fedqueue", &C::algo_name,
                           {"fedqueue", "fedavg", "fedasync", "fedbuff", "fedcompass"}));
    t.push_back(make_field("algo.broadcast_when", "fedqueue", &C::broadcast_when, {"next_round", "immediate"}));
    t.push_back(make_field("algo.delay_mode", "fedqueue", &C::delay_mode, {"simulate"}));
    t.push_back(make_field("Tsync", "fedqueue", &C::Tsync));
    t.push_back(make_field("q_init", "fedqueue", &C::q_init));
    t.push_back(make_field("gamma", "fedqueue", &C::gamma));
    t.push_back(make_field("delta", "fedqueue", &C::delta));
    t.push_back(make_field("alpha", "fedqueue", &C::alpha));
    t.push_back(make_field("warmup_steps", "fedqueue", &C::warmup_steps));
    t.push_back(make_field("sim_queue", "fedqueue", &C::sim_queue, {"fixed", "lognormal"}));
    t.push_back(make_field("queue_fixed", "fedqueue", &C::queue_fixed));
    t.push_back(make_field("queue_means", "fedqueue", &C::queue_means));
    t.push_back(make_field("queue_rho", "fedqueue", &C::queue_rho));
    t.push_back(make_field("queue_mean_semantics", "fedqueue", &C::queue_mean_semantics, {"median", "mean"}));
    t.push_back(make_field("queue_drift", "fedqueue", &C::queue_drift));
    t.push_back(make_field("queue_drift_corr", "fedqueue", &C::queue_drift_corr));
    t.push_back(make_field("slowdown", "fedqueue", &C::slowdown));
    t.push_back(make_field("throughput", "fedqueue", &C::throughput));
    t.push_back(make_field("compute_jitter", "fedqueue", &C::compute_jitter));
    t.push_back(make_field("staleness_mode", "fedqueue", &C::staleness_mode, {"harmonic", "exp"}));
    t.push_back(make_field("staleness_beta", "fedqueue", &C::staleness_beta));
    t.push_back(make_field("admission_horizon", "fedqueue", &C::admission_horizon, {"horizon", "all"}));
    t.push_back(make_field("client_weight_mode", "fedqueue", &C::client_weight_mode, {"equal", "data_size"}));
    t.push_back(make_field("lr_base", "fedqueue", &C::lr_base));
    t.push_back(make_field("E_floor", "fedqueue", &C::E_floor));
    t.push_back(make_field("epsilon", "theory", &C::epsilon));
    t.push_back(make_field("transfers_per_dispatch", "theory", &C::transfers_per_dispatch));

    t.push_back(make_field("use_ewma", "ablation", &C::use_ewma));
    t.push_back(make_field("use_staleness_decay", "ablation", &C::use_staleness_decay));
    t.push_back(make_field("use_inverse_lr", "ablation", &C::use_inverse_lr));

    t.push_back(make_field("fedavg.num_local_steps", "fedavg", &C::fedavg_num_local_steps));
    t.push_back(make_field("async.num_local_steps", "async", &C::async_num_local_steps));
    t.push_back(make_field("async.staleness_fn", "async", &C::async_staleness_fn, {"constant", "polynomial", "hinge"}));
    t.push_back(make_field("async.staleness_a", "async", &C::async_staleness_a));
    t.push_back(make_field("async.staleness_b", "async", &C::async_staleness_b));
    t.push_back(make_field("async.alpha", "async", &C::async_alpha));
    t.push_back(make_field("fedbuff.K", "fedbuff", &C::fedbuff_K));
    t.push_back(make_field("compass.min_local_steps", "compass", &C::compass_min_local_steps));
    t.push_back(make_field("compass.max_local_steps", "compass", &C::compass_max_local_steps));
    t.push_back(make_field("compass.speed_momentum", "compass", &C::compass_speed_momentum));
    t.push_back(make_field("compass.latest_time_factor", "compass", &C::compass_latest_time_factor));
    t.push_back(make_field("compass.staleness_fn", "compass", &C::compass_staleness_fn,
                           {"constant", "polynomial", "hinge"}));
    t.push_back(make_field("compass.staleness_a", "compass", &C::compass_staleness_a));
    t.push_back(make_field("compass.alpha", "compass", &C::compass_alpha));
    return t;
  }();
  return table;
}

inline const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

inline bool is_prefix_section(std::string_view s) {
  return s == "algo" || s == "data" || s == "fedavg" || s == "async" || s == "fedbuff" || s == "compass";
}

inline bool is_group_section(std::string_view s) {
  return s == "workload" || s == "protocol" || s == "fedqueue" || s == "ablation" || s == "theory";
}

}  // namespace config_detail

inline void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const auto* f = config_detail::find_field(key);
  if (!f) throw ConfigError("unknown config key '" + std::string(key) + "'", std::string(key));
  f->set(*this, value);
}

inline std::string ExperimentConfig::get(std::string_view key) const {
  const auto* f = config_detail::find_field(key);
  if (!f) throw ConfigError("unknown config key '" + std::string(key) + "'", std::string(key));
  return f->get(*this);
}

inline const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : config_detail::fields()) out.push_back(f.key);
    return out;
  }();
  return names;
}

inline bool ExperimentConfig::has_key(std::string_view key) { return config_detail::find_field(key) != nullptr; }

/// Expands a per-client vector; a single entry applies to every client.
template <class T>
std::vector<T> per_client(const std::vector<T>& v, std::size_t K, const char* key) {
  if (v.size() == K) return v;
  if (v.size() == 1) return std::vector<T>(K, v.front());
  throw ConfigError(std::string(key) + " has " + std::to_string(v.size()) + " entries, expected num_clients=" +
                        std::to_string(K),
                    key);
}

inline void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(std::string(key) + ": " + what, key);
  };
  require(num_clients >= 1, "num_clients", "must be >= 1");
  require(num_rounds >= 1, "num_rounds", "must be >= 1");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(Tsync > 0.0, "Tsync", "must be > 0");
  require(delta >= 0.0, "delta", "must be >= 0");
  require(gamma >= 0.0, "gamma", "must be >= 0");
  require(alpha > 0.0 && alpha <= 1.0, "alpha", "must lie in (0, 1]");
  require(q_init >= 0.0, "q_init", "must be >= 0");
  require(warmup_steps >= 0, "warmup_steps", "must be >= 0");
  require(queue_rho >= 0.0, "queue_rho", "must be >= 0");
  require(queue_drift >= 0.0, "queue_drift", "must be >= 0");
  require(queue_drift_corr >= 0.0 && queue_drift_corr < 1.0, "queue_drift_corr", "must lie in [0, 1)");
  require(compute_jitter >= 0.0 && compute_jitter < 1.0, "compute_jitter", "must lie in [0, 1)");
  require(staleness_beta >= 0.0, "staleness_beta", "must be >= 0");
  require(lr_base > 0.0, "lr_base", "must be > 0");
  require(E_floor >= 1, "E_floor", "must be >= 1");
  require(epsilon > 0.0 && epsilon < 1.0, "epsilon", "must lie in (0, 1)");
  require(transfers_per_dispatch >= 1, "transfers_per_dispatch", "must be >= 1");
  require(data_alpha > 0.0, "data.alpha", "must be > 0");
  require(time_budget >= 0.0, "time_budget", "must be >= 0");
  require(async_alpha > 0.0 && async_alpha <= 1.0, "async.alpha", "must lie in (0, 1]");
  require(async_num_local_steps >= 1, "async.num_local_steps", "must be >= 1");
  require(async_staleness_a >= 0.0, "async.staleness_a", "must be >= 0");
  require(fedbuff_K >= 1, "fedbuff.K", "must be >= 1");
  require(compass_min_local_steps >= 1, "compass.min_local_steps", "must be >= 1");
  require(compass_min_local_steps <= compass_max_local_steps, "compass.min_local_steps",
          "must not exceed compass.max_local_steps");
  require(compass_speed_momentum >= 0.0 && compass_speed_momentum < 1.0, "compass.speed_momentum",
          "must lie in [0, 1)");
  require(compass_latest_time_factor >= 1.0, "compass.latest_time_factor", "must be >= 1");
  require(compass_alpha > 0.0 && compass_alpha <= 1.0, "compass.alpha", "must lie in (0, 1]");
  require(feature_dim >= 1, "feature_dim", "must be >= 1");
  require(num_classes >= 2, "num_classes", "must be >= 2");
  require(train_samples >= num_clients, "train_samples", "must be >= num_clients");
  require(test_samples >= 1, "test_samples", "must be >= 1");
  require(hidden >= 1, "hidden", "must be >= 1");
  require(quad_dim >= 1, "quad_dim", "must be >= 1");
  require(quad_L >= quad_mu && quad_mu >= 0.0, "quad_L", "need quad_L >= quad_mu >= 0");
  require(quad_spread >= 0.0, "quad_spread", "must be >= 0");

  const auto K = static_cast<std::size_t>(num_clients);
  // Only the active queue model's vector must match num_clients.
  if (sim_queue == "fixed") {
    require(queue_fixed.size() == K, "queue_fixed", "needs num_clients entries");
    for (double v : queue_fixed) require(v >= 0.0, "queue_fixed", "entries must be >= 0");
  } else {
    require(queue_means.size() == K, "queue_means", "needs num_clients entries");
    for (double v : queue_means) require(v >= 0.0, "queue_means", "entries must be >= 0");
  }
  for (double v : per_client(slowdown, K, "slowdown")) require(v >= 0.0, "slowdown", "entries must be >= 0");
  for (double v : per_client(throughput, K, "throughput")) require(v > 0.0, "throughput", "entries must be > 0");
  for (double v : per_client(grad_sigma, K, "grad_sigma")) require(v >= 0.0, "grad_sigma", "entries must be >= 0");
  for (auto v : per_client(fedavg_num_local_steps, K, "fedavg.num_local_steps"))
    require(v >= 0, "fedavg.num_local_steps", "entries must be >= 0");
}

/// Parses config text, applying it over the defaults. `origin` names the source
/// in diagnostics.
inline ExperimentConfig parse_config(std::string_view text, const std::string& origin = "<config>") {
  ExperimentConfig cfg;
  std::string prefix;
  std::map<std::string, int> seen;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
    auto hash = raw.find_first_of("#;");
    auto line = config_detail::trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "malformed section header", {}, line_no);
      const auto name = config_detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (config_detail::is_prefix_section(name))
        prefix = name + ".";
      else if (config_detail::is_group_section(name))
        prefix.clear();
      else
        throw ConfigError(where() + "unknown section [" + name + "]", name, line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected key = value", {}, line_no);
    auto key = config_detail::trim(std::string_view(line).substr(0, eq));
    const auto value = config_detail::trim(std::string_view(line).substr(eq + 1));
    if (!prefix.empty() && key.find('.') == std::string::npos) key = prefix + key;
    if (!ExperimentConfig::has_key(key)) throw ConfigError(where() + "unknown key '" + key + "'", key, line_no);
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
      throw ConfigError(where() + "duplicate key '" + key + "' (first set on line " + std::to_string(it->second) + ")",
                        key, line_no);
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what(), key, line_no);
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    const auto it = seen.find(e.key());
    const int line = it == seen.end() ? 0 : it->second;
    throw ConfigError(origin + (line ? ":" + std::to_string(line) : std::string()) + ": " + e.what(), e.key(), line);
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// Writes every key, grouped by section, in a form parse_config reads back exactly.
inline std::string save_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : config_detail::fields()) {
    if (f.section != section) {
      section = f.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    std::string key = f.key;
    if (config_detail::is_prefix_section(section) && key.starts_with(section + ".")) key = key.substr(section.size() + 1);
    out += key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

}  // namespace fedqueue
