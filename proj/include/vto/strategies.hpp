#pragma once

// Baseline decision rules and the myopic greedy oracle.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vto/decision.hpp"
#include "vto/domain.hpp"
#include "vto/rng.hpp"

namespace vto {

inline Decision decide_local_only(const Observation&) { return Decision::local(); }

inline Decision decide_nearest(const Observation& obs) {
  if (obs.candidates.empty()) return Decision::local();
  return Decision::offload(obs.candidates.front().rsu.id);
}

/// Uniform over {Local} and every candidate.
inline Decision decide_random(const Observation& obs, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, obs.candidates.size());
  const std::size_t i = pick(rng);
  return i == 0 ? Decision::local() : Decision::offload(obs.candidates[i - 1].rsu.id);
}

struct OptionCost {
  Decision decision = Decision::local();
  double cost = 0.0;
};

inline RsuState with_backlog(const CandidateLink& c) {
  RsuState r = c.rsu;
  r.queued_cycles = c.queued_cycles;
  return r;
}

/// Local first, then every candidate with a positive rate, queue-aware.
inline std::vector<OptionCost> option_costs(const Observation& obs, const CostWeights& w) {
  std::vector<OptionCost> out;
  out.reserve(obs.candidates.size() + 1);
  out.push_back({Decision::local(), evaluate_local(obs.task, obs.vehicle, w).cost});
  for (const auto& c : obs.candidates) {
    if (!(c.rate_bps > 0.0)) continue;
    const auto cost = evaluate_offload_at_rate(obs.task, obs.vehicle, with_backlog(c), c.rate_bps, w, true);
    out.push_back({Decision::offload(c.rsu.id), cost.cost});
  }
  return out;
}

/// Minimum cost; ties prefer Local, then the lower RSU id.
inline Decision argmin_decision(std::span<const OptionCost> options) {
  const OptionCost* best = nullptr;
  auto rank = [](const Decision& d) { return d.is_local() ? -1 : d.rsu_id(); };
  for (const auto& o : options) {
    if (!best || o.cost < best->cost || (o.cost == best->cost && rank(o.decision) < rank(best->decision))) {
      best = &o;
    }
  }
  return best ? best->decision : Decision::local();
}

inline Decision decide_greedy_oracle(const Observation& obs, const CostWeights& w) {
  const auto options = option_costs(obs, w);
  return argmin_decision(options);
}

class LocalOnlyStrategy final : public Strategy {
 public:
  std::string name() const override { return "local"; }
  Decision decide(const Observation& obs) override { return decide_local_only(obs); }
};

class NearestStrategy final : public Strategy {
 public:
  std::string name() const override { return "nearest"; }
  Decision decide(const Observation& obs) override { return decide_nearest(obs); }
};

class RandomStrategy final : public Strategy {
 public:
  std::string name() const override { return "random"; }
  void begin_run(std::uint64_t seed) override { rng_ = make_rng(seed, Stream::Strategy); }
  Decision decide(const Observation& obs) override { return decide_random(obs, rng_); }

 private:
  Rng rng_ = make_rng(0, Stream::Strategy);
};

class GreedyOracleStrategy final : public Strategy {
 public:
  explicit GreedyOracleStrategy(CostWeights w) : weights_(w) {}
  std::string name() const override { return "greedy"; }
  Decision decide(const Observation& obs) override { return decide_greedy_oracle(obs, weights_); }

 private:
  CostWeights weights_;
};

}  // namespace vto
