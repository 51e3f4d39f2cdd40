#pragma once

// Hybrid decision pipeline: the predictor gates (P(offload) < 0.5 -> Local),
// the Q-table picks an action, and PSO re-optimizes each batching window
// jointly, overriding the per-task action.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vto/decision.hpp"
#include "vto/predictor.hpp"
#include "vto/pso.hpp"
#include "vto/rl.hpp"
#include "vto/strategies.hpp"

namespace vto {

struct HybridConfig {
  bool use_predictor = true;
  bool use_rl = true;
  bool batching = true;
  double batch_window = 1.0;  // s

  bool operator==(const HybridConfig&) const = default;
};

struct HybridModels {
  std::shared_ptr<const LinearModel> predictor;
  std::shared_ptr<const OffloadQTable> qtable;

  bool trained() const { return predictor && qtable; }
};

/// Stages 1 and 2 for a single task. Without both models this is the greedy
/// oracle.
inline Decision decide_hybrid(const Observation& obs, const HybridModels& models, const StateBinning& bins,
                              const CostWeights& w, const HybridConfig& cfg = {}) {
  if (!models.trained()) return decide_greedy_oracle(obs, w);
  if (cfg.use_predictor && predict(*models.predictor, obs) < 0.5) return Decision::local();
  if (!cfg.use_rl) return decide_greedy_oracle(obs, w);
  return action_to_decision(models.qtable->greedy(discretize(obs, bins), valid_actions(obs)), obs);
}

class HybridStrategy final : public Strategy {
 public:
  HybridStrategy(HybridModels models, StateBinning bins, CostWeights weights, HybridConfig config,
                 PsoConfig pso)
      : models_(std::move(models)),
        bins_(std::move(bins)),
        weights_(weights),
        config_(config),
        pso_(std::move(pso)) {}

  std::string name() const override { return "hybrid"; }

  void begin_run(std::uint64_t seed) override {
    run_seed_ = seed;
    window_index_ = 0;
  }

  Decision decide(const Observation& obs) override { return decide_hybrid(obs, models_, bins_, weights_, config_); }

  double batch_window() const override { return config_.batching ? config_.batch_window : 0.0; }

  bool hold(const Observation& obs) override {
    if (!config_.batching) return false;
    if (models_.trained() && config_.use_predictor && predict(*models_.predictor, obs) < 0.5) return false;
    return true;
  }

  std::vector<Decision> decide_batch(std::span<const Observation> window) override {
    PsoConfig cfg = pso_;
    cfg.seed = pso_.seed ^ (run_seed_ * 0x9E3779B97F4A7C15ULL) ^ (window_index_++ * 0xBF58476D1CE4E5B9ULL);
    auto result = optimize_window(window, weights_, cfg);
    accumulate(result.search.history);
    return std::move(result.decisions);
  }

  /// Sum over windows of the global-best fitness at each iteration.
  const std::vector<double>& pso_history() const { return pso_history_; }
  std::size_t windows_optimized() const { return windows_; }

 private:
  void accumulate(const std::vector<double>& h) {
    if (pso_history_.size() < h.size()) pso_history_.resize(h.size(), 0.0);
    for (std::size_t i = 0; i < h.size(); ++i) pso_history_[i] += h[i];
    ++windows_;
  }

  HybridModels models_;
  StateBinning bins_;
  CostWeights weights_;
  HybridConfig config_;
  PsoConfig pso_;
  std::uint64_t run_seed_ = 0;
  std::uint64_t window_index_ = 0;
  std::vector<double> pso_history_;
  std::size_t windows_ = 0;
};

}  // namespace vto
