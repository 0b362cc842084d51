#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "sparsequbo/samplers/nebm.hpp"
#include "sparsequbo/samplers/random_sampler.hpp"
#include "support/instances.hpp"

namespace sq = sparsequbo;

TEST(NebmSchedule, FifteenLevelsCyclicOrHeld) {
  sq::NebmConfig c;
  EXPECT_EQ(sq::nebm_levels(c), 15u);
  EXPECT_DOUBLE_EQ(sq::nebm_temperature(c, 0), 15.0);
  EXPECT_DOUBLE_EQ(sq::nebm_temperature(c, 19), 15.0);
  EXPECT_DOUBLE_EQ(sq::nebm_temperature(c, 20), 14.0);
  EXPECT_DOUBLE_EQ(sq::nebm_temperature(c, 299), 1.0);
  EXPECT_DOUBLE_EQ(sq::nebm_temperature(c, 300), 15.0);
  EXPECT_DOUBLE_EQ(sq::nebm_temperature(c, 5999), 1.0);
  c.cycle = sq::TemperatureCycle::hold_at_floor;
  EXPECT_DOUBLE_EQ(sq::nebm_temperature(c, 300), 1.0);
  EXPECT_DOUBLE_EQ(sq::nebm_temperature(c, 5999), 1.0);
}

TEST(NebmConfigCheck, RejectsInvalidSettings) {
  auto expect_bad = [](auto mutate) {
    sq::NebmConfig c;
    mutate(c);
    EXPECT_THROW(sq::validate(c), sq::ConfigError);
  };
  expect_bad([](sq::NebmConfig& c) { c.t_min = 20.0; });
  expect_bad([](sq::NebmConfig& c) { c.t_min = 0.0; });
  expect_bad([](sq::NebmConfig& c) { c.delta_t = 0.0; });
  expect_bad([](sq::NebmConfig& c) { c.alpha = 1.0; });
  expect_bad([](sq::NebmConfig& c) { c.rho = 1.0; });
  expect_bad([](sq::NebmConfig& c) { c.gamma = -1.0; });
  expect_bad([](sq::NebmConfig& c) { c.sample_interval = 7; });
  expect_bad([](sq::NebmConfig& c) { c.refract_hold = {6, 5}; });
  expect_bad([](sq::NebmConfig& c) { c.refract_scaling = {-1, 2}; });
  EXPECT_NO_THROW(sq::validate(sq::NebmConfig{}));
}

TEST(Nebm, ThreeHundredSamplesPerRun) {
  const auto q = sq::testing::random_coding_qubo(5);
  const auto set = sq::nebm_sample({q, 2, std::nullopt, 1});
  EXPECT_EQ(set.num_reads(), 600u);
  for (const auto& r : set.records()) EXPECT_NEAR(r.energy, sq::energy(q, r.state), 1e-9);
  EXPECT_EQ(set.metadata().sampler, "nebm");
}

TEST(Nebm, StrongFieldDrivesAllNeuronsOn) {
  const auto q = sq::QuboProblem(8, std::vector<double>(8, -5.0), {});
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto set = sq::nebm_sample({q, 1, std::nullopt, seed});
    if (set.lowest().state == sq::BinaryState(8, 1)) ++hits;
  }
  EXPECT_GE(hits, 90);
}

TEST(Nebm, ReducesToLogisticActivationWithoutMemory) {
  sq::NebmConfig c;
  c.alpha = 0.0;
  c.gamma = 0.0;
  c.kappa = 0.0;
  c.refract_hold = {0, 0};
  c.t_max = 2.0;
  c.t_min = 1.0;
  c.steps_per_temperature = 1;
  c.cycle = sq::TemperatureCycle::hold_at_floor;
  const double h = 0.7;
  const auto q = sq::QuboProblem(1, {h}, {});
  sq::Rng rng = sq::make_rng(42);
  sq::NebmSimulator sim(q, c, {0}, rng);
  sim.step();
  ASSERT_DOUBLE_EQ(sim.state().temperature, 1.0);
  const int steps = 40000;
  int fired = 0;
  for (int t = 0; t < steps; ++t) {
    sim.step();
    fired += sim.state().a[0];
  }
  const double expected = 1.0 / (1.0 + std::exp(h / 1.0));
  EXPECT_NEAR(static_cast<double>(fired) / steps, expected, 0.01);
  EXPECT_DOUBLE_EQ(sim.state().v[0], -h);
}

TEST(Nebm, HeldNeuronsKeepTheirOutput) {
  const auto q = sq::testing::random_coding_qubo(9);
  sq::Rng rng = sq::make_rng(3);
  sq::NebmSimulator sim(q, {}, sq::testing::random_bits(3, q.size()), rng);
  const auto& holds = sim.hold_durations();
  for (int d : holds) {
    EXPECT_GE(d, 5);
    EXPECT_LE(d, 10);
  }
  std::vector<long> last_change(q.size(), -1000);
  sq::BinaryState prev = sim.state().a;
  std::size_t changes = 0;
  for (long t = 0; t < 2000; ++t) {
    sim.step();
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (sim.state().a[i] == prev[i]) continue;
      EXPECT_GT(t - last_change[i], holds[i]) << "neuron " << i << " step " << t;
      last_change[i] = t;
      ++changes;
    }
    prev = sim.state().a;
  }
  EXPECT_GT(changes, 0u);
}

TEST(Nebm, MatchesOrBeatsEqualBudgetRandomSampling) {
  int wins = 0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto q = sq::testing::random_coding_qubo(3000 + k);
    const double nebm = sq::nebm_sample({q, 1, std::nullopt, k}).lowest().energy;
    const double random = sq::random_sampler({q, 300, std::nullopt, k}).lowest().energy;
    if (nebm <= random + 1e-9) ++wins;
  }
  EXPECT_GE(wins, 95);
}

TEST(Nebm, ThresholdDoesNotAffectDynamics) {
  const auto q = sq::testing::random_coding_qubo(11);
  sq::NebmConfig with;
  with.threshold = 0.25;
  const auto a = sq::nebm_sample({q, 1, std::nullopt, 8}, with);
  const auto b = sq::nebm_sample({q, 1, std::nullopt, 8});
  EXPECT_EQ(a.records().size(), b.records().size());
  for (std::size_t k = 0; k < a.records().size(); ++k) {
    EXPECT_EQ(a.records()[k].state, b.records()[k].state);
    EXPECT_EQ(a.records()[k].count, b.records()[k].count);
  }
}

TEST(Nebm, SeededAndWorkerIndependent) {
  const auto q = sq::testing::random_coding_qubo(12);
  const sq::NebmSampler sampler;
  const auto a = sampler.sample({q, 4, std::nullopt, 21, 1});
  const auto b = sampler.sample({q, 4, std::nullopt, 21, 3});
  const auto c = sampler.sample({q, 4, std::nullopt, 22, 1});
  EXPECT_EQ(a.checksum(), b.checksum());
  EXPECT_NE(a.checksum(), c.checksum());
}

TEST(Nebm, WarmInitialStateIsUsed) {
  const auto q = sq::testing::random_coding_qubo(13);
  sq::NebmConfig c;
  c.total_steps = 20;
  c.refract_hold = {50, 50};
  const auto init = sq::testing::random_bits(4, q.size());
  sq::Rng rng = sq::make_rng(1);
  sq::NebmSimulator sim(q, c, init, rng);
  EXPECT_EQ(sim.state().a, init);
}
