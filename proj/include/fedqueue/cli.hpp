#pragma once

// Subcommand implementations behind the fedqueue executable. Each returns a
// process exit status and reports on the given streams.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fedqueue/config.hpp"
#include "fedqueue/engine.hpp"
#include "fedqueue/errors.hpp"
#include "fedqueue/io.hpp"
#include "fedqueue/metrics.hpp"

namespace fedqueue {

inline constexpr const char* kOutputRootEnv = "FEDQUEUE_OUTPUT_ROOT";

struct CliOptions {
  std::string config;  // empty: defaults
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t trials = 5;
  std::string axis;
  std::vector<std::string> values;
  std::vector<std::string> methods;
  // Bound-grid axes; all empty selects the representative grid.
  std::vector<double> rho;
  std::vector<double> gamma;
  std::vector<double> alpha;
  std::size_t mc_trials = 10000;
  bool force = false;
  std::size_t jobs = 1;
};

namespace cli_detail {

inline ExperimentConfig base_config(const CliOptions& opt) {
  ExperimentConfig cfg = opt.config.empty() ? ExperimentConfig{} : load_config(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  cfg.validate();
  return cfg;
}

/// Relative output paths land under $FEDQUEUE_OUTPUT_ROOT when it is set.
inline std::filesystem::path resolve_out(const std::string& out) {
  std::filesystem::path p(out);
  if (p.is_relative()) {
    if (const char* root = std::getenv(kOutputRootEnv); root && *root) p = std::filesystem::path(root) / p;
  }
  return p;
}

/// Claims an output directory. Refuses a non-empty one unless forced, in
/// which case the old contents are removed.
inline std::filesystem::path claim_out(const CliOptions& opt) {
  if (opt.out.empty()) throw InputError("--out is required");
  auto dir = resolve_out(opt.out);
  if (std::filesystem::exists(dir) && !std::filesystem::is_empty(dir)) {
    if (!opt.force) throw InputError("output directory " + dir.string() + " is not empty (use --force to overwrite)");
    std::filesystem::remove_all(dir);
  }
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string fmt(std::optional<double> v, int precision = 3) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << *v;
  return os.str();
}

inline std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Median time-to-target with unreached runs counted as +infinity, so a
/// group where most runs miss the target has no finite median.
inline std::optional<double> median_ttt(const std::vector<RunSummary>& runs) {
  std::vector<double> t;
  for (const auto& r : runs) t.push_back(r.time_to_target.value_or(std::numeric_limits<double>::infinity()));
  auto m = median(t);
  if (m && !std::isfinite(*m)) return std::nullopt;
  return m;
}

inline std::optional<double> median_of(const std::vector<RunSummary>& runs,
                                       std::optional<double> RunSummary::*field) {
  std::vector<double> v;
  for (const auto& r : runs)
    if (r.*field) v.push_back(*(r.*field));
  return median(v);
}

inline double mean_of(const std::vector<RunSummary>& runs, double RunSummary::*field) {
  double s = 0.0;
  for (const auto& r : runs) s += r.*field;
  return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
}

inline std::string summaries_csv(const std::vector<RunSummary>& runs) {
  std::ostringstream os;
  os.precision(17);
  os << "axis,value,method,trial,seed,failed,time_to_target,final_accuracy,final_loss,max_accuracy,P_late,E_hat_d,R_d,"
        "rounds,dispatches,transfers_to_target,steps_to_target\n";
  auto o = [](std::optional<double> v) {
    std::ostringstream s;
    s.precision(17);
    if (v) s << *v;
    return s.str();
  };
  for (const auto& r : runs)
    os << r.axis << ',' << r.value << ',' << r.method << ',' << r.trial << ',' << r.seed << ',' << r.failed << ','
       << o(r.time_to_target) << ',' << o(r.final_accuracy) << ',' << o(r.final_loss) << ',' << o(r.max_accuracy)
       << ',' << r.P_late << ',' << o(r.E_hat_d) << ',' << r.R_d << ',' << r.rounds << ',' << r.dispatches << ','
       << r.transfers_to_target << ',' << r.steps_to_target << '\n';
  return os.str();
}

template <class Body>
int guarded(std::ostream& err, const std::optional<std::filesystem::path>& created, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  if (created) {
    std::error_code ec;
    std::filesystem::remove_all(*created, ec);
  }
  return 1;
}

}  // namespace cli_detail

inline int cmd_run(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  std::optional<std::filesystem::path> dir;
  return cli_detail::guarded(err, dir, [&] {
    const auto cfg = cli_detail::base_config(opt);
    dir = cli_detail::claim_out(opt);
    const auto result = run_experiment(cfg);
    write_run(*dir, result.log, cfg);
    const auto s = summarize(result.log, cfg.target);
    out << result.log.method << " seed=" << cfg.seed << " rounds=" << s.rounds
        << " final_accuracy=" << cli_detail::fmt(s.final_accuracy, 4)
        << " final_loss=" << cli_detail::fmt(s.final_loss, 6)
        << " time_to_target=" << cli_detail::fmt(s.time_to_target, 2) << " P_late=" << cli_detail::fmt(s.P_late)
        << '\n';
    if (result.log.failed) err << "warning: run diverged: " << result.log.failure << '\n';
    out << "wrote " << dir->string() << '\n';
    return 0;
  });
}

inline int cmd_sweep(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  std::optional<std::filesystem::path> dir;
  return cli_detail::guarded(err, dir, [&] {
    const auto base = cli_detail::base_config(opt);
    if (opt.axis.empty()) throw InputError("--axis is required");
    if (opt.values.empty()) throw InputError("--values is required");
    const auto cells = sweep_cells(base, opt.axis, opt.values, opt.trials, opt.methods);
    dir = cli_detail::claim_out(opt);
    const auto root = *dir;
    auto runs = run_parallel(cells, opt.jobs, [&](const SweepCell& cell) {
      const auto result = run_experiment(cell.cfg);
      const auto sub = root / (opt.axis + "=" + cell.value) / cell.method / ("trial" + std::to_string(cell.trial));
      write_run(sub, result.log, cell.cfg);
      auto s = summarize(result.log, cell.cfg.target);
      s.axis = opt.axis;
      s.value = cell.value;
      s.trial = cell.trial;
      return s;
    });
    write_text(root / "comparison.csv", cli_detail::summaries_csv(runs));

    out << std::left << std::setw(10) << opt.axis << std::setw(12) << "method" << std::setw(10) << "P_late"
        << std::setw(10) << "R_d" << std::setw(14) << "max_acc" << "time_to_target\n";
    for (const auto& v : opt.values) {
      std::vector<std::string> methods = opt.methods.empty() ? std::vector<std::string>{base.algo_name} : opt.methods;
      for (const auto& m : methods) {
        std::vector<RunSummary> group;
        for (const auto& r : runs)
          if (r.value == v && r.method == m) group.push_back(r);
        out << std::setw(10) << v << std::setw(12) << m << std::setw(10)
            << cli_detail::fmt(cli_detail::mean_of(group, &RunSummary::P_late)) << std::setw(10)
            << cli_detail::fmt(cli_detail::mean_of(group, &RunSummary::R_d), 2) << std::setw(14)
            << cli_detail::fmt(cli_detail::median_of(group, &RunSummary::max_accuracy), 4)
            << cli_detail::fmt(cli_detail::median_ttt(group), 2) << '\n';
      }
    }
    out << "wrote " << root.string() << '\n';
    return 0;
  });
}

inline int cmd_ablate(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  std::optional<std::filesystem::path> dir;
  return cli_detail::guarded(err, dir, [&] {
    const auto base = cli_detail::base_config(opt);
    if (!opt.out.empty()) dir = cli_detail::claim_out(opt);
    const auto rows = run_ablation(base, opt.trials, opt.jobs);
    out << std::left << std::setw(22) << "variant" << std::setw(12) << "final_acc" << std::setw(16)
        << "time_to_target" << std::setw(8) << "P" << std::setw(8) << "E_d" << "R_d\n";
    std::vector<RunSummary> all;
    for (const auto& row : rows) {
      std::vector<double> ed;
      for (const auto& t : row.trials)
        if (t.E_hat_d) ed.push_back(*t.E_hat_d);
      out << std::setw(22) << row.variant << std::setw(12)
          << cli_detail::fmt(cli_detail::median_of(row.trials, &RunSummary::final_accuracy), 4) << std::setw(16)
          << cli_detail::fmt(cli_detail::median_ttt(row.trials), 2) << std::setw(8)
          << cli_detail::fmt(cli_detail::mean_of(row.trials, &RunSummary::P_late)) << std::setw(8)
          << cli_detail::fmt(cli_detail::median(ed), 2) << cli_detail::fmt(cli_detail::mean_of(row.trials, &RunSummary::R_d), 2)
          << '\n';
      for (auto t : row.trials) {
        t.axis = "variant";
        all.push_back(std::move(t));
      }
    }
    if (dir) {
      write_text(*dir / "ablation.csv", cli_detail::summaries_csv(all));
      write_text(*dir / "config.ini", save_config(base));
      out << "wrote " << dir->string() << '\n';
    }
    return 0;
  });
}

struct BoundRow {
  double rho = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double delta_star = 0.0;
  double mc_violation = 0.0;
  double P_late = 0.0;
  std::optional<double> E_hat_d;
  double R_d = 0.0;
  std::optional<double> time_to_target;
};

/// The bound-verification grid: for each (rho, gamma, alpha), the safety
/// buffer the bound asks for, the Monte Carlo violation rate at that buffer,
/// and the simulated delay statistics of the configured run over `trials` seeds.
struct GridPoint {
  double rho = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
};

/// Three one-factor blocks around (rho 0.1, gamma 4, alpha 0.5): rho varied,
/// gamma varied, alpha varied.
inline std::vector<GridPoint> representative_grid() {
  return {{0.1, 4, 0.5}, {0.5, 4, 0.5}, {0.9, 4, 0.5}, {0.1, 1, 0.5}, {0.1, 2, 0.5},
          {0.1, 4, 0.5}, {0.1, 4, 0.1}, {0.1, 4, 0.5}, {0.1, 4, 1.0}};
}

/// Cartesian product; an empty axis takes the base configuration's value.
inline std::vector<GridPoint> product_grid(const ExperimentConfig& base, std::vector<double> rhos,
                                           std::vector<double> gammas, std::vector<double> alphas) {
  if (rhos.empty()) rhos = {base.queue_rho};
  if (gammas.empty()) gammas = {base.gamma};
  if (alphas.empty()) alphas = {base.alpha};
  std::vector<GridPoint> out;
  for (double r : rhos)
    for (double g : gammas)
      for (double a : alphas) out.push_back({r, g, a});
  return out;
}

inline std::vector<BoundRow> bound_grid(const ExperimentConfig& base, const std::vector<GridPoint>& grid,
                                        std::size_t trials, std::size_t mc_trials, std::size_t jobs) {
  std::vector<BoundRow> rows;
  std::vector<SweepCell> cells;
  const auto K = static_cast<std::size_t>(base.num_clients);
  const auto R = static_cast<std::size_t>(base.num_rounds);
  for (const auto [rho, gamma, alpha] : grid) {
    BoundRow row;
    row.rho = rho;
    row.gamma = gamma;
    row.alpha = alpha;
    TheoryParams th{std::vector<double>(K, rho), base.epsilon, gamma};
    row.delta_star = delta_threshold(th, base.Tsync, K, R);
    row.mc_violation = lemma1_monte_carlo(th, base.Tsync, row.delta_star, K, R, mc_trials, base.seed).violation_rate;
    rows.push_back(row);
    for (std::size_t t = 0; t < trials; ++t) {
      ExperimentConfig c = base;
      c.algo_name = "fedqueue";
      c.queue_rho = rho;
      c.gamma = gamma;
      c.alpha = alpha;
      c.seed = trial_seed(base.seed, t);
      c.validate();
      cells.push_back({std::move(c), "fedqueue", std::to_string(rows.size() - 1), t});
    }
  }
  const auto runs = run_parallel(cells, jobs, [](const SweepCell& cell) {
    return summarize(run_experiment(cell.cfg).log, cell.cfg.target);
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<RunSummary> group(runs.begin() + static_cast<std::ptrdiff_t>(i * trials),
                                  runs.begin() + static_cast<std::ptrdiff_t>((i + 1) * trials));
    std::vector<double> ed;
    for (const auto& g : group)
      if (g.E_hat_d) ed.push_back(*g.E_hat_d);
    rows[i].P_late = cli_detail::mean_of(group, &RunSummary::P_late);
    rows[i].E_hat_d = cli_detail::median(ed);
    rows[i].R_d = cli_detail::mean_of(group, &RunSummary::R_d);
    rows[i].time_to_target = cli_detail::median_ttt(group);
  }
  return rows;
}

inline int cmd_check_lemma1(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  std::optional<std::filesystem::path> dir;
  return cli_detail::guarded(err, dir, [&] {
    const auto base = cli_detail::base_config(opt);
    if (!opt.out.empty()) dir = cli_detail::claim_out(opt);
    const bool custom = !opt.rho.empty() || !opt.gamma.empty() || !opt.alpha.empty();
    const auto grid = custom ? product_grid(base, opt.rho, opt.gamma, opt.alpha) : representative_grid();
    const auto rows = bound_grid(base, grid, opt.trials, opt.mc_trials, opt.jobs);
    std::ostringstream csv;
    csv << "rho,gamma,alpha,delta_star,mc_violation,P,E_d,R_d,time_to_target\n";
    out << std::left << std::setw(6) << "rho" << std::setw(7) << "gamma" << std::setw(7) << "alpha" << std::setw(8)
        << "P" << std::setw(7) << "E_d" << std::setw(7) << "R_d" << std::setw(10) << "TTT" << std::setw(9)
        << "delta*" << "violation\n";
    for (const auto& r : rows) {
      // R_d is reported only when some arrival was late, like E_d.
      std::optional<double> rd;
      if (r.P_late > 0.0) rd = r.R_d;
      out << std::setw(6) << cli_detail::fmt(r.rho, 1) << std::setw(7) << cli_detail::fmt(r.gamma, 1) << std::setw(7)
          << cli_detail::fmt(r.alpha, 1) << std::setw(8) << cli_detail::fmt(r.P_late) << std::setw(7)
          << cli_detail::fmt(r.E_hat_d, 2) << std::setw(7) << cli_detail::fmt(rd, 2) << std::setw(10)
          << cli_detail::fmt(r.time_to_target, 2) << std::setw(9) << cli_detail::fmt(r.delta_star, 3)
          << cli_detail::fmt(r.mc_violation) << '\n';
      csv << r.rho << ',' << r.gamma << ',' << r.alpha << ',' << r.delta_star << ',' << r.mc_violation << ','
          << r.P_late << ',' << cli_detail::fmt(r.E_hat_d, 6) << ',' << r.R_d << ','
          << cli_detail::fmt(r.time_to_target, 6) << '\n';
    }
    if (dir) {
      write_text(*dir / "bound_grid.csv", csv.str());
      out << "wrote " << dir->string() << '\n';
    }
    return 0;
  });
}

}  // namespace fedqueue
