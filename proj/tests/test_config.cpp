#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "fedqueue/config.hpp"
#include "fedqueue/rng.hpp"

using namespace fedqueue;

TEST(Config, EmptyTextGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.Tsync, 10.0);
  EXPECT_EQ(c.delta, 2.0);
  EXPECT_EQ(c.alpha, 0.5);
  EXPECT_EQ(c.gamma, 0.2);
  EXPECT_EQ(c.num_rounds, 50);
  EXPECT_EQ(c.lr_base, 0.003);
  EXPECT_EQ(c.q_init, 2.0);
  EXPECT_EQ(c.warmup_steps, 10);
  EXPECT_EQ(c.queue_means, (std::vector<double>{1.5, 2.5, 3.5, 4.5}));
  EXPECT_EQ(c.queue_fixed, (std::vector<double>{0.5, 1.5, 2.4, 6.0}));
  EXPECT_EQ(c.queue_rho, 0.4);
  EXPECT_EQ(c.staleness_mode, "harmonic");
  EXPECT_EQ(c.staleness_beta, 0.5);
  EXPECT_EQ(c.fedavg_num_local_steps, (std::vector<std::int64_t>{67, 155, 147, 15}));
  EXPECT_EQ(c.fedbuff_K, 3);
  EXPECT_EQ(c.compass_min_local_steps, 20);
  EXPECT_EQ(c.compass_max_local_steps, 200);
  EXPECT_EQ(c.compass_speed_momentum, 0.6);
  EXPECT_EQ(c.compass_latest_time_factor, 1.1);
  EXPECT_EQ(c.data_alpha, 0.5);
  EXPECT_EQ(c, ExperimentConfig{});
}

TEST(Config, LoadsFileWithSections) {
  const auto path = std::filesystem::temp_directory_path() / "fedqueue_test_config.ini";
  {
    std::ofstream out(path);
    out << "# comment\n[fedqueue]\nTsync = 12.5\nqueue_means = 1,2,3,4\n[fedavg]\nnum_local_steps = 5,6,7,8\n"
           "[data]\nalpha = 0.1\n[async]\nstaleness_fn = hinge\n";
  }
  const auto c = load_config(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(c.Tsync, 12.5);
  EXPECT_EQ(c.queue_means, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(c.fedavg_num_local_steps, (std::vector<std::int64_t>{5, 6, 7, 8}));
  EXPECT_EQ(c.data_alpha, 0.1);
  EXPECT_EQ(c.async_staleness_fn, "hinge");
}

TEST(Config, LengthMismatchIsValidationError) {
  try {
    parse_config("queue_means = 1.5,2.5,3.5\n");
    FAIL() << "expected a ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "queue_means");
  }
}

TEST(Config, UnknownKeyNamesKeyAndLine) {
  try {
    parse_config("[fedqueue]\nTsync = 10\nTsnyc = 11\n");
    FAIL() << "expected a ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "Tsnyc");
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find("Tsnyc"), std::string::npos);
  }
  EXPECT_THROW(parse_config("[nonsense]\n"), ConfigError);
  EXPECT_THROW(parse_config("Tsync 10\n"), ConfigError);
  EXPECT_THROW(parse_config("Tsync = ten\n"), ConfigError);
  EXPECT_THROW(parse_config("staleness_mode = cubic\n"), ConfigError);
  EXPECT_THROW(parse_config("Tsync = 1\nTsync = 2\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/fedqueue.ini"), ConfigError);
}

TEST(Config, InvariantViolationsRejected) {
  EXPECT_THROW(parse_config("alpha = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("Tsync = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("delta = -0.5\n"), ConfigError);
  EXPECT_THROW(parse_config("fedbuff.K = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("compass.min_local_steps = 300\n"), ConfigError);
}

TEST(Config, HarmonicBetaRoundTrips) {
  auto c = parse_config("staleness_mode = harmonic\nstaleness_beta = 0.5\n");
  const auto back = parse_config(save_config(c));
  EXPECT_EQ(back.staleness_mode, "harmonic");
  EXPECT_EQ(back.staleness_beta, 0.5);
  EXPECT_EQ(back, c);
}

TEST(Config, RandomConfigsRoundTrip) {
  Stream rng(21);
  for (int i = 0; i < 200; ++i) {
    ExperimentConfig c;
    c.Tsync = 1.0 + 20.0 * rng.uniform();
    c.delta = 3.0 * rng.uniform();
    c.gamma = 4.0 * rng.uniform();
    c.alpha = 0.01 + 0.99 * rng.uniform();
    c.queue_rho = rng.uniform();
    c.lr_base = 1e-4 + rng.uniform() / 3.0;
    c.seed = rng();
    c.queue_means = {rng.uniform() * 9, rng.uniform() * 9, rng.uniform() * 9, rng.uniform() * 9};
    c.staleness_mode = rng.below(2) ? "harmonic" : "exp";
    c.use_ewma = rng.below(2);
    c.algo_name = rng.below(2) ? "fedbuff" : "fedqueue";
    c.validate();
    EXPECT_EQ(parse_config(save_config(c)), c);
  }
}

TEST(Config, SetAndGetByKey) {
  ExperimentConfig c;
  c.set("queue_rho", "0.9");
  EXPECT_EQ(c.queue_rho, 0.9);
  EXPECT_EQ(c.get("fedbuff.K"), "3");
  EXPECT_THROW(c.set("rhoo", "1"), ConfigError);
  EXPECT_TRUE(ExperimentConfig::has_key("compass.speed_momentum"));
}
