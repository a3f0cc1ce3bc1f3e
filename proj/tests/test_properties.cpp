#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedqueue/engine.hpp"
#include "fedqueue/io.hpp"

using namespace fedqueue;

namespace {

std::int64_t brute_round(std::int64_t s, double a, double T) {
  for (std::int64_t j = s;; ++j)
    if (a <= static_cast<double>(j + 1) * T) return j;
}

}  // namespace

TEST(Properties, ZeroDelayFedQueueIsFedAvg) {
  ExperimentConfig q;
  q.sim_queue = "fixed";
  q.queue_fixed = {0.0, 0.0, 0.0, 0.0};
  q.queue_means = {0.0, 0.0, 0.0, 0.0};
  q.q_init = 0.0;
  q.delta = 0.0;
  q.num_rounds = 20;
  q.train_samples = 1200;
  q.test_samples = 400;
  q.lr_base = 0.05;
  auto a = q;
  a.algo_name = "fedavg";
  a.fedavg_num_local_steps = {100, 100, 100, 100};

  const auto rq = run_experiment(q);
  const auto ra = run_experiment(a);
  ASSERT_FALSE(rq.log.failed);
  ASSERT_EQ(rq.log.rounds.size(), ra.log.rounds.size());
  for (const auto& u : rq.log.updates) {
    EXPECT_EQ(u.E, 100);
    EXPECT_EQ(u.tau, 0);
  }
  for (std::size_t r = 0; r < rq.log.rounds.size(); ++r) {
    EXPECT_NEAR(rq.log.rounds[r].loss, ra.log.rounds[r].loss, 1e-12);
    EXPECT_EQ(rq.log.rounds[r].accuracy, ra.log.rounds[r].accuracy);
  }
  ASSERT_EQ(rq.model.size(), ra.model.size());
  for (std::size_t i = 0; i < rq.model.size(); ++i) EXPECT_NEAR(rq.model[i], ra.model[i], 1e-12);
}

TEST(Properties, CoefficientsSumToOne) {
  Stream rng(7);
  const Vec dummy(1, 0.0);
  for (int trial = 0; trial < 20000; ++trial) {
    const std::size_t K = 1 + rng.below(64);
    std::vector<WeightedDelta> adm;
    for (std::size_t k = 0; k < K; ++k)
      adm.push_back({1e-3 + rng.uniform(), static_cast<std::int64_t>(rng.below(12)), dummy});
    const StalenessDecay decay{rng.uniform() < 0.5 ? DecayMode::Harmonic : DecayMode::Exponential,
                               3.0 * rng.uniform()};
    const auto c = aggregation_coefficients(adm, decay);
    double sum = 0.0;
    for (double x : c) {
      EXPECT_GT(x, 0.0);
      sum += x;
    }
    ASSERT_LE(std::fabs(sum - 1.0), static_cast<double>(K) * std::numeric_limits<double>::epsilon()) << K;
  }
}

TEST(Properties, AdmissionIsASetPartition) {
  Stream rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const double cutoff = 10.0 * static_cast<double>(1 + rng.below(5));
    std::vector<ClientUpdateMessage> buf;
    const std::size_t n = rng.below(20);
    for (std::size_t i = 0; i < n; ++i) {
      ClientUpdateMessage m;
      m.job_id = i;
      m.k = rng.below(4);
      // land some arrivals exactly on the cutoff
      m.arrival = rng.below(5) == 0 ? cutoff : cutoff + 20.0 * (rng.uniform() - 0.5);
      buf.push_back(m);
    }
    auto [in, out] = partition_admissions(buf, cutoff);
    ASSERT_EQ(in.size() + out.size(), buf.size());
    std::vector<std::uint64_t> ids;
    for (const auto& m : in) {
      EXPECT_LE(m.arrival, cutoff);
      ids.push_back(m.job_id);
    }
    for (const auto& m : out) {
      EXPECT_GT(m.arrival, cutoff);
      ids.push_back(m.job_id);
    }
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < ids.size(); ++i) ASSERT_EQ(ids[i], i);
  }
}

TEST(Properties, BufferingRuleMatchesBruteForce) {
  Stream rng(13);
  for (int trial = 0; trial < 100000; ++trial) {
    const double T = 0.1 + 20.0 * rng.uniform();
    const auto s = static_cast<std::int64_t>(rng.below(200));
    double a;
    switch (rng.below(3)) {
      case 0:  // exactly on a cutoff
        a = static_cast<double>(s + 1 + static_cast<std::int64_t>(rng.below(6))) * T;
        break;
      case 1:  // at the round start
        a = static_cast<double>(s) * T;
        break;
      default:
        a = static_cast<double>(s) * T + 8.0 * T * rng.uniform();
    }
    const auto got = assign_aggregation_round(s, a, T);
    const auto want = brute_round(s, a, T);
    ASSERT_EQ(got.round, want) << "s=" << s << " a=" << a << " T=" << T;
    ASSERT_EQ(got.tau, want - s);
  }
}

TEST(Properties, StalenessLedgerConserved) {
  for (double rho : {0.1, 0.9, 1.5}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      ExperimentConfig c;
      c.queue_rho = rho;
      c.seed = seed;
      c.num_rounds = 30;
      c.train_samples = 1200;
      c.test_samples = 400;
      const auto log = run_experiment(c).log;
      EXPECT_TRUE(staleness_ledger_consistent(log));
      std::map<std::uint64_t, int> seen;
      for (const auto& r : log.rounds) {
        ASSERT_EQ(r.admitted.size(), r.taus.size());
        for (auto t : r.taus) EXPECT_GE(t, 0);
      }
      for (const auto& u : log.updates) {
        if (u.agg_round < 0) continue;
        ++seen[u.job_id];
        EXPECT_EQ(u.tau, u.agg_round - u.s);
        EXPECT_EQ(u.agg_round, assign_aggregation_round(u.s, u.arrival, c.Tsync).round);
        const auto& r = log.rounds.at(static_cast<std::size_t>(u.agg_round));
        EXPECT_NE(std::find(r.admitted.begin(), r.admitted.end(), u.k), r.admitted.end());
      }
      std::size_t admissions = 0;
      for (const auto& r : log.rounds) admissions += r.admitted.size();
      EXPECT_EQ(admissions, seen.size());
    }
  }
}

TEST(Properties, RerunsAreBitIdentical) {
  for (std::string algo : {"fedqueue", "fedavg", "fedasync", "fedbuff", "fedcompass"}) {
    ExperimentConfig c;
    c.algo_name = algo;
    c.queue_rho = 0.9;
    c.num_rounds = 15;
    c.train_samples = 1200;
    c.test_samples = 400;
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    EXPECT_EQ(checksum(a.log), checksum(b.log)) << algo;
    EXPECT_EQ(rounds_csv(a.log), rounds_csv(b.log)) << algo;
    EXPECT_EQ(events_jsonl(a.log), events_jsonl(b.log)) << algo;
    EXPECT_EQ(a.model, b.model) << algo;
  }
}
