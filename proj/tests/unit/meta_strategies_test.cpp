#include <algorithm>
#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "sparsequbo/meta_strategies.hpp"
#include "sparsequbo/samplers/brute_force.hpp"
#include "sparsequbo/samplers/nebm.hpp"
#include "sparsequbo/samplers/random_sampler.hpp"
#include "sparsequbo/samplers/simulated_annealing.hpp"
#include "support/instances.hpp"

namespace sq = sparsequbo;

namespace {

sq::SimulatedAnnealingSampler greedy_sa(std::size_t sweeps = 5) {
  sq::SaConfig c;
  c.sweeps = sweeps;
  c.beta_range = sq::BetaRange{1e12, 1e13};
  return sq::SimulatedAnnealingSampler(c);
}

sq::SimulatedAnnealingSampler short_sa(std::size_t sweeps) {
  sq::SaConfig c;
  c.sweeps = sweeps;
  return sq::SimulatedAnnealingSampler(c);
}

sq::ReverseAnnealSampler reverse(double s, std::size_t sweeps) {
  sq::ReverseScheduleConfig c;
  c.s = s;
  c.sweeps = sweeps;
  return sq::ReverseAnnealSampler(c);
}

class FailingSampler final : public sq::Sampler {
 public:
  explicit FailingSampler(std::size_t fail_at) : fail_at_(fail_at) {}
  std::string name() const override { return "failing"; }
  nlohmann::json parameters() const override { return nlohmann::json::object(); }
  sq::SampleSet sample(const sq::SamplerRequest& r) const override {
    if (calls_++ == fail_at_) throw std::runtime_error("device lost");
    return sq::random_sampler(r);
  }

 private:
  std::size_t fail_at_;
  mutable std::size_t calls_ = 0;
};

}  // namespace

TEST(ReverseSchedule, SegmentsAndEndpoints) {
  const sq::BetaRange range{0.1, 10.0};
  sq::ReverseScheduleConfig c;
  c.s = 0.5;
  const auto betas = sq::reverse_beta_schedule(c, range);
  ASSERT_EQ(betas.size(), 1000u);
  const double mid = sq::pause_beta(range, 0.5);
  EXPECT_NEAR(mid, 1.0, 1e-12);
  EXPECT_LT(betas[0], 10.0);
  EXPECT_GT(betas[0], mid);
  EXPECT_NEAR(betas[99], mid, 1e-12);
  for (std::size_t k = 100; k < 900; ++k) EXPECT_DOUBLE_EQ(betas[k], mid);
  EXPECT_NEAR(betas.back(), 10.0, 1e-12);
  for (std::size_t k = 1; k < 100; ++k) EXPECT_LT(betas[k], betas[k - 1]);
  for (std::size_t k = 901; k < 1000; ++k) EXPECT_GT(betas[k], betas[k - 1]);

  c.sweeps = 3;
  const auto tiny = sq::reverse_beta_schedule(c, range);
  ASSERT_EQ(tiny.size(), 3u);
  EXPECT_NEAR(tiny[0], mid, 1e-12);
  EXPECT_NEAR(tiny[1], mid, 1e-12);
  EXPECT_NEAR(tiny[2], 10.0, 1e-12);
}

TEST(ReverseSchedule, PauseBetaMovesTowardColdWithS) {
  const sq::BetaRange range{0.01, 100.0};
  EXPECT_LT(sq::pause_beta(range, 0.1), sq::pause_beta(range, 0.5));
  EXPECT_LT(sq::pause_beta(range, 0.5), sq::pause_beta(range, 0.9));
}

TEST(ReverseAnneal, RequiresInitialStateAndValidS) {
  const auto q = sq::testing::random_coding_qubo(1);
  EXPECT_THROW(reverse(0.5, 20).sample({q, 1, std::nullopt, 0}), sq::ConfigError);
  EXPECT_THROW(reverse(0.0, 20), sq::ConfigError);
  EXPECT_THROW(reverse(1.0, 20), sq::ConfigError);
  EXPECT_THROW(reverse(0.5, 2), sq::ConfigError);
}

TEST(ReverseAnneal, GreedyLimitNeverWorsensInitialState) {
  sq::ReverseScheduleConfig c;
  c.s = 0.99;
  c.sweeps = 10;
  c.beta_range = sq::BetaRange{1e12, 1e13};
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto q = sq::testing::random_qubo(70 + k, 16);
    const auto init = sq::testing::random_bits(k, 16);
    const auto set = sq::reverse_sa_sampler({q, 10, init, k}, c);
    EXPECT_LE(set.lowest().energy, sq::energy(q, init) + 1e-9);
    EXPECT_EQ(set.metadata().parameters.at("s"), 0.99);
  }
}

TEST(ReverseAnneal, SmallSFlipsMoreBitsThanLargeS) {
  double low = 0.0, high = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto q = sq::testing::random_qubo(90 + k, 24, 0.5);
    const auto init = sq::testing::random_bits(k + 50, 24);
    const auto a = reverse(0.1, 100).sample({q, 50, init, k});
    const auto b = reverse(0.9, 100).sample({q, 50, init, k});
    low += sq::detail::mean_overlap(a, init);
    high += sq::detail::mean_overlap(b, init);
  }
  EXPECT_LT(low, high);
}

TEST(WarmStart, SingleIterationEqualsPlainCall) {
  const auto q = sq::testing::random_coding_qubo(2);
  const auto sampler = short_sa(30);
  const auto trace = sq::iterated_warm_start(q, sampler, 17, {1, 8, 1});
  const auto plain = sampler.sample(
      {q, 8, sq::warm_start_initial_state(q.size(), 17), sq::iteration_seed(17, 0)});
  ASSERT_EQ(trace.records.size(), 1u);
  EXPECT_EQ(trace.records[0].incumbent, plain.lowest().state);
  EXPECT_EQ(trace.best_energy, plain.lowest().energy);
  EXPECT_EQ(trace.total_reads(), 8u);
  EXPECT_EQ(trace.iteration_seeds, std::vector<std::uint64_t>{sq::iteration_seed(17, 0)});
}

TEST(WarmStart, GlobalBestIsRunningMinimum) {
  const auto q = sq::testing::random_coding_qubo(3);
  sq::NebmConfig c;
  c.total_steps = 600;
  const auto trace = sq::iterated_warm_start(q, sq::NebmSampler(c), 5, {15, 1, 1});
  const auto global = trace.global_best_series();
  ASSERT_EQ(global.size(), 15u);
  double running = global.front();
  for (std::size_t k = 0; k < global.size(); ++k) {
    running = std::min(running, trace.records[k].batch_best_energy);
    EXPECT_EQ(global[k], running);
    if (k > 0) EXPECT_LE(global[k], global[k - 1]);
  }
  EXPECT_EQ(trace.best_energy, global.back());
  EXPECT_EQ(trace.total_reads(), 15u * 30u);
  EXPECT_NEAR(sq::energy(q, trace.best_state), trace.best_energy, 1e-9);
}

TEST(WarmStart, ZeroIterationsRejected) {
  const auto q = sq::testing::random_coding_qubo(3);
  EXPECT_THROW(sq::iterated_warm_start(q, short_sa(5), 0, {0, 1, 1}), sq::ConfigError);
}

TEST(Qemc, ConsumesColdStartPlusIterationBatches) {
  const auto q = sq::testing::random_coding_qubo(4);
  const auto trace = sq::qemc_chain(q, reverse(0.5, 20), short_sa(20), 3, {7, 11, false, 1});
  EXPECT_EQ(trace.records.size(), 8u);
  EXPECT_EQ(trace.total_reads(), 8u * 11u);
  EXPECT_FALSE(trace.records[0].mean_overlap.has_value());
  for (std::size_t k = 1; k < trace.records.size(); ++k) {
    ASSERT_TRUE(trace.records[k].mean_overlap.has_value());
    EXPECT_GE(*trace.records[k].mean_overlap, 0.0);
    EXPECT_LE(*trace.records[k].mean_overlap, 1.0);
  }
  ASSERT_TRUE(trace.s.has_value());
  EXPECT_DOUBLE_EQ(*trace.s, 0.5);
  EXPECT_EQ(trace.protocol, "qemc");
  EXPECT_EQ(trace.sampler, "reverse-sa");
}

TEST(Qemc, GreedySamplerNeverRaisesIncumbent) {
  for (std::uint64_t k = 0; k < 5; ++k) {
    const auto q = sq::testing::random_qubo(400 + k, 20);
    const auto trace = sq::qemc_chain(q, greedy_sa(), sq::RandomSampler(), k, {20, 5, false, 1});
    const auto inc = trace.incumbent_series();
    for (std::size_t t = 1; t < inc.size(); ++t) EXPECT_LE(inc[t], inc[t - 1] + 1e-9);
  }
}

TEST(Qemc, ElitistKeepsBestWhileNonElitistFollowsBatch) {
  const auto q = sq::testing::random_qubo(12, 16);
  const sq::RandomSampler random;
  const auto elitist = sq::qemc_chain(q, random, 8, {25, 4, true, 1});
  const auto inc = elitist.incumbent_series();
  for (std::size_t t = 1; t < inc.size(); ++t) EXPECT_LE(inc[t], inc[t - 1]);
  const auto plain = sq::qemc_chain(q, random, 8, {25, 4, false, 1});
  bool rose = false;
  for (const auto& r : plain.records) EXPECT_EQ(r.incumbent_energy, r.batch_best_energy);
  for (std::size_t t = 1; t < plain.records.size(); ++t) {
    rose = rose || plain.records[t].incumbent_energy > plain.records[t - 1].incumbent_energy;
  }
  EXPECT_TRUE(rose);
}

TEST(Qemc, IntermediateSMatchesColdStartAndFindsOptimum) {
  int optimal = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto q = sq::testing::random_coding_qubo(1000 + k);
    const double ground = sq::brute_force(q).energy;
    const auto trace = sq::qemc_chain(q, reverse(0.5, 50), short_sa(50), k, {100, 20, false, 1});
    EXPECT_LE(trace.best_energy, trace.records[0].batch_best_energy);
    EXPECT_GE(trace.best_energy, ground - 1e-9);
    if (trace.best_energy <= ground + 1e-9) ++optimal;
  }
  EXPECT_GE(optimal, 16);
}

TEST(Qemc, AbortKeepsCompletedIterations) {
  const auto q = sq::testing::random_qubo(5, 8);
  try {
    sq::qemc_chain(q, FailingSampler(3), 1, {10, 2, false, 1});
    FAIL() << "expected abort";
  } catch (const sq::ChainAborted& e) {
    EXPECT_EQ(e.trace().records.size(), 3u);
    EXPECT_NE(std::string(e.what()).find("device lost"), std::string::npos);
  }
}

TEST(ChainTraceOutput, CsvAndChecksum) {
  const auto q = sq::testing::random_coding_qubo(6);
  const auto a = sq::qemc_chain(q, reverse(0.9, 10), short_sa(10), 2, {3, 4, false, 1});
  const auto b = sq::qemc_chain(q, reverse(0.9, 10), short_sa(10), 2, {3, 4, false, 2});
  const auto wide = sq::testing::random_qubo(6, 24);
  const auto d = sq::qemc_chain(wide, sq::RandomSampler(), 2, {3, 4, false, 1});
  const auto e = sq::qemc_chain(wide, sq::RandomSampler(), 9, {3, 4, false, 1});
  const auto csv = a.to_csv();
  EXPECT_EQ(csv.rfind("iteration,batch_min_energy,incumbent_energy,global_best_energy\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(a.checksum(), b.checksum());
  EXPECT_NE(d.checksum(), e.checksum());
  EXPECT_EQ(a.to_json().at("records").size(), 4u);
}
