#include <cmath>
#include <map>
#include <memory>

#include <gtest/gtest.h>

#include "support.hpp"
#include "vto/hybrid.hpp"
#include "vto/strategies.hpp"

namespace vto {
namespace {

Observation with_candidates(std::size_t k) {
  Observation o;
  o.task = make_task(0, 0, 2e7, 700, 0, 5);
  for (std::size_t j = 0; j < k; ++j) {
    const double d = 40.0 + 60.0 * static_cast<double>(j);
    const RsuState r = testing::rsu_at(static_cast<std::int32_t>(10 + j), {d, 0});
    o.candidates.push_back(testing::link(r, d, transmission_rate(0.1, d, {})));
  }
  return o;
}

TEST(LocalOnly, AlwaysLocal) {
  EXPECT_EQ(decide_local_only(with_candidates(3)), Decision::local());
  EXPECT_EQ(decide_local_only(with_candidates(0)), Decision::local());
}

TEST(Nearest, FirstCandidate) {
  EXPECT_EQ(decide_nearest(with_candidates(2)), Decision::offload(10));
  EXPECT_EQ(decide_nearest(with_candidates(0)), Decision::local());
}

TEST(Random, NoCandidatesIsLocal) {
  Rng rng = make_rng(1, Stream::Strategy);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(decide_random(with_candidates(0), rng), Decision::local());
}

TEST(Random, UniformFrequencies) {
  Rng rng = make_rng(2, Stream::Strategy);
  const Observation o = with_candidates(3);
  std::map<std::int32_t, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[decide_random(o, rng).rsu_id()];
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [id, c] : counts) EXPECT_NEAR(static_cast<double>(c) / n, 0.25, 0.02) << id;
}

TEST(Random, SeededSequence) {
  Rng a = make_rng(5, Stream::Strategy), b = make_rng(5, Stream::Strategy);
  const Observation o = with_candidates(3);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(decide_random(o, a), decide_random(o, b));
}

TEST(Greedy, ArgminExample) {
  const std::vector<OptionCost> options{{Decision::local(), 5.0}, {Decision::offload(4), 2.1}};
  EXPECT_EQ(argmin_decision(options), Decision::offload(4));
}

TEST(Greedy, TieRules) {
  std::vector<OptionCost> options{{Decision::offload(2), 1.0}, {Decision::local(), 1.0}};
  EXPECT_EQ(argmin_decision(options), Decision::local());
  options = {{Decision::offload(7), 1.0}, {Decision::offload(3), 1.0}, {Decision::local(), 2.0}};
  EXPECT_EQ(argmin_decision(options), Decision::offload(3));
}

TEST(Greedy, NoCandidatesIsLocal) { EXPECT_EQ(decide_greedy_oracle(with_candidates(0), {}), Decision::local()); }

TEST(Greedy, SkipsZeroRate) {
  Observation o = with_candidates(1);
  o.candidates[0].rate_bps = 0.0;
  EXPECT_EQ(decide_greedy_oracle(o, {}), Decision::local());
}

// Brute-force oracle written directly from the cost formulas.
double brute_cost(const Observation& o, std::size_t slot, double lambda) {
  const double cycles = o.task.data_size_bits * o.task.intensity_cycles_per_bit;
  if (slot == 0) {
    const double f = o.vehicle.cpu_frequency;
    return cycles / f + lambda * o.vehicle.energy_coefficient * cycles * f * f;
  }
  const auto& c = o.candidates[slot - 1];
  const double t_tx = o.task.data_size_bits / c.rate_bps;
  return t_tx + (c.queued_cycles + cycles) / c.rsu.cpu_frequency + lambda * o.vehicle.tx_power * t_tx;
}

TEST(Greedy, MatchesBruteForce) {
  Rng rng = make_rng(17, 0);
  for (int i = 0; i < 1000; ++i) {
    const Observation o = testing::random_observation(rng);
    const double lambda = uniform(rng, 0.0, 2.0);
    std::size_t best = 0;
    for (std::size_t s = 1; s <= o.candidates.size(); ++s) {
      if (brute_cost(o, s, lambda) < brute_cost(o, best, lambda)) best = s;
    }
    const Decision expected = best == 0 ? Decision::local() : Decision::offload(o.candidates[best - 1].rsu.id);
    const Decision got = decide_greedy_oracle(o, {lambda});
    EXPECT_EQ(got, expected) << "instance " << i;
    // Never worse than Local.
    std::size_t got_slot = 0;
    for (std::size_t s = 1; s <= o.candidates.size(); ++s) {
      if (got.is_offload() && o.candidates[s - 1].rsu.id == got.rsu_id()) got_slot = s;
    }
    EXPECT_LE(brute_cost(o, got_slot, lambda), brute_cost(o, 0, lambda) * (1 + 1e-12));
  }
}

TEST(Greedy, ScaleInvariance) {
  Rng rng = make_rng(23, 0);
  for (int i = 0; i < 1000; ++i) {
    const Observation o = testing::random_observation(rng);
    auto options = option_costs(o, {uniform(rng, 0.0, 2.0)});
    const Decision before = argmin_decision(options);
    const double k = std::exp(uniform(rng, -10.0, 10.0));
    for (auto& opt : options) opt.cost *= k;
    EXPECT_EQ(argmin_decision(options), before);
  }
}

// ---------------------------------------------------------------------------
// Hybrid

std::shared_ptr<const LinearModel> constant_predictor(double p) {
  auto m = std::make_shared<LinearModel>();
  m->bias = std::log(p / (1.0 - p));
  return m;
}

std::shared_ptr<const OffloadQTable> table_preferring(std::size_t action) {
  auto q = std::make_shared<OffloadQTable>();
  Rng rng = make_rng(3, 0);
  // Every reachable state in the observations below.
  for (int i = 0; i < 5000; ++i) {
    const Observation o = testing::random_observation(rng);
    q->set(discretize(o, StateBinning{}), action, 1.0);
  }
  return q;
}

TEST(Hybrid, UntrainedFallsBackToGreedy) {
  Rng rng = make_rng(4, 0);
  for (int i = 0; i < 200; ++i) {
    const Observation o = testing::random_observation(rng);
    EXPECT_EQ(decide_hybrid(o, {}, StateBinning{}, {}), decide_greedy_oracle(o, {}));
  }
}

TEST(Hybrid, GateForcesLocal) {
  const HybridModels m{constant_predictor(0.1), table_preferring(1)};
  const Observation o = with_candidates(3);
  EXPECT_EQ(decide_hybrid(o, m, StateBinning{}, {}), Decision::local());
  HybridStrategy s(m, StateBinning{}, {}, HybridConfig{}, PsoConfig{});
  EXPECT_FALSE(s.hold(o));
  EXPECT_EQ(s.decide(o), Decision::local());
}

TEST(Hybrid, OpenGateUsesRlAction) {
  const HybridModels m{constant_predictor(0.9), table_preferring(2)};
  HybridConfig cfg;
  cfg.batching = false;
  const Observation o = with_candidates(3);
  EXPECT_EQ(decide_hybrid(o, m, StateBinning{}, {}, cfg), Decision::offload(11));
  HybridStrategy s(m, StateBinning{}, {}, cfg, PsoConfig{});
  EXPECT_FALSE(s.hold(o));
  EXPECT_EQ(s.batch_window(), 0.0);
  EXPECT_EQ(s.decide(o), Decision::offload(11));
}

TEST(Hybrid, ReducesToRlGreedy) {
  auto q = std::make_shared<OffloadQTable>();
  Rng rng = make_rng(8, 0);
  for (int i = 0; i < 3000; ++i) {
    const Observation o = testing::random_observation(rng);
    q->set(discretize(o, StateBinning{}), std::uniform_int_distribution<std::size_t>(0, 3)(rng), uniform01(rng));
  }
  const HybridModels m{constant_predictor(1.0 - 1e-12), q};
  HybridConfig cfg;
  cfg.batching = false;
  for (int i = 0; i < 1000; ++i) {
    const Observation o = testing::random_observation(rng);
    const StateKey s = discretize(o, StateBinning{});
    EXPECT_EQ(decide_hybrid(o, m, StateBinning{}, {}, cfg), action_to_decision(q->greedy(s, valid_actions(o)), o));
  }
}

TEST(Hybrid, SingleTaskWindowMatchesGreedy) {
  Rng rng = make_rng(12, 0);
  HybridStrategy s({}, StateBinning{}, {}, HybridConfig{}, PsoConfig{});
  s.begin_run(1);
  for (int i = 0; i < 100; ++i) {
    const Observation o = testing::random_observation(rng);
    const auto d = s.decide_batch(std::span<const Observation>(&o, 1));
    ASSERT_EQ(d.size(), 1u);
    EXPECT_EQ(d[0], decide_greedy_oracle(o, {})) << "instance " << i;
  }
  EXPECT_EQ(s.windows_optimized(), 100u);
  EXPECT_EQ(s.pso_history().size(), 100u);
}

TEST(Hybrid, HoldsWhenBatching) {
  HybridStrategy s({}, StateBinning{}, {}, HybridConfig{}, PsoConfig{});
  EXPECT_DOUBLE_EQ(s.batch_window(), 1.0);
  EXPECT_TRUE(s.hold(with_candidates(2)));
}

}  // namespace
}  // namespace vto
