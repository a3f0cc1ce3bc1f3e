#include <gtest/gtest.h>

#include <cmath>

#include "fedqueue/metrics.hpp"
#include "fedqueue/protocol.hpp"

using namespace fedqueue;

namespace {

MetricsLog series(std::vector<std::pair<double, double>> points) {
  MetricsLog log;
  log.num_clients = 1;
  log.T_sync = 10.0;
  std::int64_t r = 0;
  for (auto [acc, t] : points) {
    RoundRecord rec;
    rec.round = r++;
    rec.time = t;
    rec.accuracy = acc;
    rec.loss = 1.0 - acc;
    log.rounds.push_back(rec);
  }
  return log;
}

UpdateRecord update(std::size_t k, std::int64_t s, double submit, double arrival, double T) {
  UpdateRecord u;
  u.k = k;
  u.s = s;
  u.submit = submit;
  u.arrival = arrival;
  const auto a = assign_aggregation_round(s, arrival, T);
  u.agg_round = a.round;
  u.tau = a.tau;
  return u;
}

}  // namespace

TEST(TimeToTarget, Examples) {
  const auto log = series({{0.5, 10.0}, {0.96, 20.0}});
  EXPECT_EQ(time_to_target(log, 0.95), 20.0);
  EXPECT_FALSE(time_to_target(log, 0.97).has_value());
  EXPECT_EQ(time_to_target(log, 0.0), 10.0);
}

TEST(TimeToTarget, LossMetricUsesLessEqual) {
  auto log = series({{0.5, 10.0}, {0.75, 20.0}, {0.875, 30.0}});
  log.higher_is_better = false;
  EXPECT_EQ(time_to_target(log, 0.25), 20.0);
}

TEST(TimeToTarget, MonotoneInTargetForMonotoneSeries) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 50; ++i) pts.push_back({1.0 - std::exp(-0.1 * i), 10.0 * (i + 1)});
  const auto log = series(pts);
  double prev = 0.0;
  for (double target = 0.0; target < 0.99; target += 0.01) {
    const auto t = time_to_target(log, target);
    ASSERT_TRUE(t.has_value());
    EXPECT_GE(*t, prev);
    prev = *t;
  }
}

TEST(DelayStatistics, Examples) {
  auto none = delay_statistics(std::vector<double>{0.3, 0.9, 1.0});
  EXPECT_EQ(none.P_late, 0.0);
  EXPECT_FALSE(none.E_hat_d.has_value());
  EXPECT_LE(none.R_d, 1.0);

  auto single = delay_statistics(std::vector<double>{1.5});
  EXPECT_EQ(single.P_late, 1.0);
  EXPECT_DOUBLE_EQ(*single.E_hat_d, 1.5);
  EXPECT_DOUBLE_EQ(single.R_d, 1.5);

  const std::vector<double> r{0.8, 1.2, 1.4};
  auto three = delay_statistics(r);
  EXPECT_DOUBLE_EQ(three.P_late, 2.0 / 3.0);
  EXPECT_NEAR(*three.E_hat_d, (1.2 + 1.4) / 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(three.R_d, 1.4);
  EXPECT_THROW(delay_statistics(std::vector<double>{}), InputError);
}

TEST(DelayStatistics, FromLog) {
  MetricsLog log;
  log.num_clients = 1;
  log.T_sync = 10.0;
  log.updates.push_back(update(0, 1, 10.0, 25.0, 10.0));
  log.updates.push_back(update(0, 2, 20.0, 28.0, 10.0));
  const auto d = delay_statistics(log);
  EXPECT_DOUBLE_EQ(d.P_late, 0.5);
  EXPECT_DOUBLE_EQ(*d.E_hat_d, 1.5);
}

TEST(AdmissionSummary, ThreeArrivals) {
  MetricsLog log;
  log.num_clients = 1;
  log.T_sync = 10.0;
  for (double a : {9.0, 11.0, 13.0}) log.updates.push_back(update(0, 0, 0.0, a, 10.0));
  const auto rows = admission_summary(log);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].submitted, 3);
  EXPECT_EQ(rows[0].admitted, 1);
  EXPECT_EQ(rows[0].deferred, 2);
  EXPECT_DOUBLE_EQ(rows[0].max_delay_ratio, 1.3);
}

TEST(AdmissionSummary, ZeroDelayHasNoDeferrals) {
  MetricsLog log;
  log.num_clients = 3;
  log.T_sync = 10.0;
  for (std::size_t k = 0; k < 3; ++k)
    for (int r = 0; r < 5; ++r) log.updates.push_back(update(k, r, 10.0 * r, 10.0 * r + 2.0, 10.0));
  for (const auto& row : admission_summary(log)) {
    EXPECT_EQ(row.deferred, 0);
    EXPECT_EQ(row.submitted, 5);
  }
}

TEST(MovementRatio, Examples) {
  auto make = [](int dispatches_before_target) {
    MetricsLog log = series({{0.5, 10.0}, {0.99, 1000.0}});
    for (int i = 0; i < dispatches_before_target; ++i) {
      UpdateRecord u;
      u.submit = 1.0;
      log.updates.push_back(u);
    }
    UpdateRecord late;
    late.submit = 5000.0;
    log.updates.push_back(late);
    return log;
  };
  std::map<std::string, MetricsLog> logs{{"fedqueue", make(25)}, {"double", make(50)}, {"mixed", make(40)}};
  logs["never"] = series({{0.1, 10.0}});
  const auto d = movement_ratio(logs, "fedqueue", 0.95);
  EXPECT_EQ(*d.at("fedqueue"), 1.0);
  EXPECT_EQ(*d.at("double"), 2.0);
  EXPECT_DOUBLE_EQ(*d.at("mixed"), 1.6);
  EXPECT_FALSE(d.at("never").has_value());
  EXPECT_EQ(transfers_until(logs.at("fedqueue"), 1000.0), 50);
}

TEST(DeltaThreshold, Examples) {
  TheoryParams p;
  p.rho = {0, 0, 0, 0};
  EXPECT_EQ(delta_threshold(p, 10.0, 4, 50), 0.0);

  p.rho = {0.4, 0.4, 0.4, 0.4};
  p.epsilon = 0.05;
  p.gamma = 0.2;
  const long double rhs = std::sqrt(2.0L * 0.16L * std::log(4.0L * 50.0L / 0.05L));
  EXPECT_NEAR(static_cast<double>(rhs), 1.629, 1e-3);
  EXPECT_EQ(delta_threshold(p, 10.0, 4, 50), 0.0);
  p.gamma = 0.0;
  EXPECT_NEAR(delta_threshold(p, 10.0, 4, 50), static_cast<double>(rhs), 1e-12);
}

TEST(DeltaThreshold, Monotonicity) {
  auto eval = [](double rho, double eps, double gamma, std::size_t K, std::size_t R) {
    TheoryParams p;
    p.rho.assign(K, rho);
    p.epsilon = eps;
    p.gamma = gamma;
    return delta_threshold(p, 1.0, K, R);
  };
  for (double g : {0.0, 0.1, 0.5, 1.0}) EXPECT_GE(eval(0.9, 0.05, g, 4, 50), eval(0.9, 0.05, g + 0.1, 4, 50));
  for (double e : {0.01, 0.05, 0.2}) EXPECT_GE(eval(0.9, e, 0.0, 4, 50), eval(0.9, e * 2, 0.0, 4, 50));
  for (double r : {0.1, 0.5, 0.9}) EXPECT_LE(eval(r, 0.05, 0.1, 4, 50), eval(r + 0.1, 0.05, 0.1, 4, 50));
  EXPECT_LE(eval(0.5, 0.05, 0.1, 4, 50), eval(0.5, 0.05, 0.1, 8, 50));
  EXPECT_LE(eval(0.5, 0.05, 0.1, 4, 50), eval(0.5, 0.05, 0.1, 4, 100));
  TheoryParams bad;
  bad.epsilon = 1.0;
  EXPECT_THROW(delta_threshold(bad, 10.0, 4, 50), InputError);
}

TEST(StalenessBound, TauMaxIsCeiling) {
  TheoryParams p;
  p.gamma = 0.2;
  EXPECT_EQ(p.tau_max(), 2);
  p.gamma = 1.0;
  EXPECT_EQ(p.tau_max(), 2);
  p.gamma = 4.0;
  EXPECT_EQ(p.tau_max(), 5);
}

TEST(StalenessBound, NoNoiseNoViolations) {
  TheoryParams p;
  p.rho = {0, 0, 0, 0};
  const auto r = lemma1_monte_carlo(p, 10.0, 0.0, 4, 50, 1000, 1);
  EXPECT_EQ(r.violation_rate, 0.0);
  EXPECT_EQ(r.completion_violation_rate, 0.0);
}

TEST(StalenessBound, ThresholdBufferKeepsRateBelowEpsilon) {
  // T_sync = 1 makes the margin scale comparable to rho so the bound is tight
  TheoryParams p;
  p.rho = {0.5, 0.5, 0.5, 0.5};
  p.epsilon = 0.05;
  p.gamma = 0.2;
  const double delta = delta_threshold(p, 1.0, 4, 50);
  ASSERT_GT(delta, 0.0);
  const std::size_t trials = 4000;
  const auto r = lemma1_monte_carlo(p, 1.0, delta, 4, 50, trials, 3);
  const double bound = p.epsilon + 2.0 * std::sqrt(p.epsilon / trials);
  EXPECT_LE(r.violation_rate, bound);
  EXPECT_LE(r.completion_violation_rate, bound);
  // with no buffer the completion bound fails often
  const auto loose = lemma1_monte_carlo(p, 1.0, 0.0, 4, 50, 500, 3);
  EXPECT_GT(loose.completion_violation_rate, p.epsilon);
  EXPECT_THROW(lemma1_monte_carlo(p, 1.0, 0.0, 4, 50, 99, 3), InputError);
}

TEST(ErrorStats, Examples) {
  const auto perfect = error_stats(std::vector<double>{0.0, 0.0, 0.0});
  EXPECT_EQ(*perfect.mean, 0.0);
  EXPECT_EQ(*perfect.std, 0.0);
  const auto two = error_stats(std::vector<double>{-1.0, 1.0});
  EXPECT_EQ(*two.mean, 0.0);
  EXPECT_DOUBLE_EQ(*two.std, std::sqrt(2.0));
  EXPECT_FALSE(error_stats(std::vector<double>{1.0}).mean.has_value());

  Stream rng(8);
  std::vector<double> e;
  for (int i = 0; i < 10000; ++i) e.push_back(sample_prediction_error(0.4, rng));
  EXPECT_NEAR(*error_stats(e).std, 0.4, 0.02);
}

TEST(ErrorStats, OutlierExclusion) {
  std::vector<double> e(50, 0.0);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = i % 2 ? 0.1 : -0.1;
  e.push_back(25.0);
  const auto raw = error_stats(e);
  const auto clean = error_stats(e, 2.0);
  EXPECT_EQ(clean.n, 50u);
  EXPECT_LT(*clean.std, *raw.std);
  EXPECT_NEAR(*clean.mean, 0.0, 1e-12);
}

TEST(PredictionErrorStats, PerClientFromLog) {
  MetricsLog log;
  log.num_clients = 2;
  log.T_sync = 10.0;
  for (double err : {-1.0, 1.0}) {
    auto u = update(0, 0, 0.0, 5.0, 10.0);
    u.q = 3.0 + err;
    u.q_hat = 3.0;
    log.updates.push_back(u);
  }
  auto u = update(1, 0, 0.0, 5.0, 10.0);
  u.q_hat = 1.0;
  log.updates.push_back(u);
  const auto s = prediction_error_stats(log);
  EXPECT_EQ(*s[0].mean, 0.0);
  EXPECT_DOUBLE_EQ(*s[0].std, std::sqrt(2.0));
  EXPECT_FALSE(s[1].std.has_value());
}

TEST(Checksum, SensitiveToContent) {
  auto a = series({{0.5, 10.0}});
  auto b = a;
  EXPECT_EQ(checksum(a), checksum(b));
  b.rounds[0].accuracy = 0.5000001;
  EXPECT_NE(checksum(a), checksum(b));
}
