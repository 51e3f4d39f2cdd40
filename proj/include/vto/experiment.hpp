#pragma once

// Experiment orchestration: strategy construction, evaluation runs and
// sweeps, model training, and the CSV/JSON artifacts they emit.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "vto/config.hpp"
#include "vto/hybrid.hpp"
#include "vto/predictor.hpp"
#include "vto/rl.hpp"
#include "vto/simengine.hpp"
#include "vto/strategies.hpp"

namespace vto {

namespace fs = std::filesystem;

inline const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names{"local", "nearest", "random", "greedy", "rl", "hybrid"};
  return names;
}

inline bool needs_models(const std::string& strategy) { return strategy == "rl" || strategy == "hybrid"; }

/// Reads qtable.json and predictor.json from `dir`. Throws MissingModel.
inline HybridModels load_models(const fs::path& dir, bool need_predictor = true) {
  auto read = [&](const char* file) {
    const fs::path p = dir / file;
    std::ifstream in(p);
    if (!in) throw MissingModel("trained model not found: " + p.string());
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
  };
  HybridModels m;
  m.qtable = std::make_shared<const OffloadQTable>(qtable_from_json(read("qtable.json")));
  if (need_predictor) m.predictor = std::make_shared<const LinearModel>(model_from_json(read("predictor.json")));
  return m;
}

/// Q-table policy without learning; owns its copy of the table.
class GreedyQStrategy final : public Strategy {
 public:
  GreedyQStrategy(std::shared_ptr<const OffloadQTable> q, StateBinning bins) : q_(std::move(q)), bins_(bins) {}
  std::string name() const override { return "rl"; }
  Decision decide(const Observation& obs) override {
    return action_to_decision(q_->greedy(discretize(obs, bins_), valid_actions(obs)), obs);
  }

 private:
  std::shared_ptr<const OffloadQTable> q_;
  StateBinning bins_;
};

/// Throws InvalidConfig for an unknown name and MissingModel when a learned
/// strategy has no models.
inline std::unique_ptr<Strategy> make_strategy(const std::string& name, const ExperimentConfig& cfg,
                                               const HybridModels& models = {}) {
  const StateBinning bins = StateBinning::from(cfg.scenario, cfg.channel);
  if (name == "local") return std::make_unique<LocalOnlyStrategy>();
  if (name == "nearest") return std::make_unique<NearestStrategy>();
  if (name == "random") return std::make_unique<RandomStrategy>();
  if (name == "greedy") return std::make_unique<GreedyOracleStrategy>(cfg.weights);
  if (name == "rl") {
    if (!models.qtable) throw MissingModel("strategy 'rl' needs a trained Q-table");
    return std::make_unique<GreedyQStrategy>(models.qtable, bins);
  }
  if (name == "hybrid") {
    if (!models.trained()) throw MissingModel("strategy 'hybrid' needs a trained Q-table and predictor");
    return std::make_unique<HybridStrategy>(models, bins, cfg.weights, cfg.hybrid, cfg.pso);
  }
  throw InvalidConfig("strategy", "unknown strategy '" + name + "'");
}

// ---------------------------------------------------------------------------
// Artifacts

/// Shortest decimal form that reads back to the same double.
inline std::string num(double v) { return fmt::format("{}", v); }

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

inline fs::path metrics_path(const fs::path& dir, const std::string& strategy, std::uint64_t seed) {
  return dir / fmt::format("metrics_{}_{}.csv", strategy, seed);
}

inline void write_metrics_csv(const fs::path& p, const std::vector<TaskOutcome>& outcomes) {
  auto out = open_out(p);
  out << "task_id,decision,status,latency_s,energy_j,completed_at\n";
  for (const auto& o : outcomes) {
    out << o.task_id << ',' << o.decision.to_string() << ',' << to_string(o.status) << ',' << num(o.latency_s)
        << ',' << num(o.energy_j) << ',' << num(o.completed_at) << '\n';
  }
}

struct SummaryRecord {
  std::string strategy;
  std::uint64_t seed = 0;
  MetricsReport metrics;
  double wall_clock_s = 0.0;
  std::vector<double> pso_history;  // hybrid only, summed over windows
};

inline nlohmann::json to_json(const SummaryRecord& r) {
  const auto& m = r.metrics;
  return {{"strategy", r.strategy},
          {"seed", r.seed},
          {"mean_latency_s", m.mean_latency_s},
          {"mean_energy_j", m.mean_energy_j},
          {"offloading_ratio", m.offloading_ratio},
          {"throughput_bps", m.throughput_bps},
          {"failure_rate", m.failure_rate},
          {"channel_utilization", m.channel_utilization},
          {"mean_reward", m.reward_history.empty() ? 0.0 : m.reward_history.front()},
          {"generated", m.totals.generated},
          {"completed", m.totals.completed},
          {"failed_deadline", m.totals.failed_deadline},
          {"failed_out_of_range", m.totals.failed_out_of_range},
          {"failed_no_candidate", m.totals.failed_no_candidate},
          {"wall_clock_s", r.wall_clock_s}};
}

inline void write_summary(const fs::path& dir, const std::vector<SummaryRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back(to_json(r));
  auto out = open_out(dir / "summary.json");
  out << nlohmann::json{{"records", arr}}.dump(2) << '\n';
}

inline void write_series(const fs::path& p, const char* header, const std::vector<double>& ys) {
  auto out = open_out(p);
  out << header << '\n';
  for (std::size_t i = 0; i < ys.size(); ++i) out << i << ',' << num(ys[i]) << '\n';
}

inline void write_figures(const fs::path& dir, const std::vector<SummaryRecord>& records) {
  auto le = open_out(dir / "fig_latency_energy.csv");
  auto ot = open_out(dir / "fig_offload_throughput.csv");
  auto fc = open_out(dir / "fig_failure_channel.csv");
  le << "strategy,seed,mean_latency_s,mean_energy_j\n";
  ot << "strategy,seed,offloading_ratio,throughput_bps\n";
  fc << "strategy,seed,failure_rate,channel_utilization\n";
  for (const auto& r : records) {
    const auto& m = r.metrics;
    le << r.strategy << ',' << r.seed << ',' << num(m.mean_latency_s) << ',' << num(m.mean_energy_j) << '\n';
    ot << r.strategy << ',' << r.seed << ',' << num(m.offloading_ratio) << ',' << num(m.throughput_bps) << '\n';
    fc << r.strategy << ',' << r.seed << ',' << num(m.failure_rate) << ',' << num(m.channel_utilization) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Runs

inline SummaryRecord run_one(const ExperimentConfig& cfg, const std::string& strategy, std::uint64_t seed,
                             const HybridModels& models, const fs::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  auto s = make_strategy(strategy, cfg, models);
  ScenarioConfig scenario = cfg.scenario;
  scenario.seed = seed;
  RunResult res = simulate(scenario, *s, cfg.channel, cfg.weights);
  write_metrics_csv(metrics_path(out_dir, strategy, seed), res.outcomes);
  SummaryRecord r{strategy, seed, std::move(res.metrics), 0.0, {}};
  if (auto* h = dynamic_cast<HybridStrategy*>(s.get())) r.pso_history = h->pso_history();
  r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  spdlog::info("{} seed {}: latency {:.4f} s, energy {:.4f} J, failures {:.3f}", strategy, seed,
               r.metrics.mean_latency_s, r.metrics.mean_energy_j, r.metrics.failure_rate);
  return r;
}

/// Global-best trace of the window assignment PSO on one scenario run:
/// per-iteration best fitness summed over every window of the run. Uses the
/// hybrid batching pipeline with the greedy fallback, so no models are needed.
inline std::vector<double> pso_trace(const ExperimentConfig& cfg, std::uint64_t seed) {
  HybridConfig h = cfg.hybrid;
  h.batching = true;
  if (!(h.batch_window > 0.0)) h.batch_window = 1.0;
  HybridStrategy s(HybridModels{}, StateBinning::from(cfg.scenario, cfg.channel), cfg.weights, h, cfg.pso);
  ScenarioConfig scenario = cfg.scenario;
  scenario.seed = seed;
  run(scenario, s, cfg.channel, cfg.weights);
  return s.pso_history();
}

inline void write_pso_trace(const fs::path& dir, const std::vector<double>& history) {
  write_series(dir / "fig_pso_convergence.csv", "iteration,best_fitness", history);
}

struct RunManifest {
  enum class Mode { TrainRl, TrainPredictor, Evaluate, Sweep, PsoTrace };

  Mode mode = Mode::Evaluate;
  std::string config_path;
  std::vector<std::string> strategies{"greedy"};
  std::vector<std::uint64_t> seeds{1};
  fs::path out_dir = "out";
  fs::path models_dir;  // empty: out_dir
  int jobs = 0;         // 0: hardware concurrency

  fs::path models() const { return models_dir.empty() ? out_dir : models_dir; }
};

inline void validate(const RunManifest& m) {
  detail::require(!m.seeds.empty(), "seeds", "must not be empty");
  detail::require(!m.strategies.empty(), "strategy", "must not be empty");
  for (const auto& s : m.strategies) {
    bool known = false;
    for (const auto& n : strategy_names()) known = known || n == s;
    if (!known) throw InvalidConfig("strategy", "unknown strategy '" + s + "'");
  }
  detail::require(m.jobs >= 0, "jobs", "must be >= 0");
}

/// Every (strategy, seed) pair, in parallel. Per-run metrics CSVs, then
/// summary.json and the figure series once all runs have joined.
inline std::vector<SummaryRecord> run_evaluation(const ExperimentConfig& cfg, const RunManifest& manifest) {
  validate(manifest);
  ensure_dir(manifest.out_dir);
  HybridModels models;
  bool need_q = false, need_pred = false;
  for (const auto& s : manifest.strategies) {
    need_q = need_q || needs_models(s);
    need_pred = need_pred || s == "hybrid";
  }
  if (need_q) models = load_models(manifest.models(), need_pred);

  struct Job {
    std::string strategy;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& s : manifest.strategies) {
    for (auto seed : manifest.seeds) jobs.push_back({s, seed});
  }
  std::vector<SummaryRecord> records(jobs.size());
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers =
      std::min<std::size_t>(jobs.size(), manifest.jobs > 0 ? static_cast<std::size_t>(manifest.jobs) : hw);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
          try {
            records[i] = run_one(cfg, jobs[i].strategy, jobs[i].seed, models, manifest.out_dir);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);

  write_summary(manifest.out_dir, records);
  write_figures(manifest.out_dir, records);

  std::vector<double> rewards;
  for (const auto& r : records) rewards.push_back(r.metrics.reward_history.empty() ? 0.0 : r.metrics.reward_history[0]);
  write_series(manifest.out_dir / "fig_reward_convergence.csv", "episode,mean_reward", rewards);

  // Mean over hybrid runs of the per-run PSO trace; a standalone trace
  // when no run used the batch optimizer.
  std::vector<double> pso;
  std::size_t traced = 0;
  for (const auto& r : records) {
    if (r.pso_history.empty()) continue;
    if (pso.size() < r.pso_history.size()) pso.resize(r.pso_history.size(), 0.0);
    for (std::size_t i = 0; i < r.pso_history.size(); ++i) pso[i] += r.pso_history[i];
    ++traced;
  }
  if (traced == 0) {
    pso = pso_trace(cfg, manifest.seeds.front());
  } else {
    for (double& v : pso) v /= static_cast<double>(traced);
  }
  if (pso.empty()) pso.push_back(0.0);
  write_pso_trace(manifest.out_dir, pso);
  return records;
}

// ---------------------------------------------------------------------------
// Training

inline TrainResult run_training_rl(const ExperimentConfig& cfg, const fs::path& out_dir) {
  ensure_dir(out_dir);
  TrainResult r = train(cfg.scenario, cfg.rl, cfg.channel, cfg.weights);
  open_out(out_dir / "qtable.json") << to_json(r.table).dump(2) << '\n';
  write_series(out_dir / "fig_reward_convergence.csv", "episode,mean_reward", r.reward_history);
  spdlog::info("trained {} episodes, {} states visited, final reward {:.4f}", cfg.rl.episodes, r.table.size(),
               r.reward_history.back());
  return r;
}

/// Decision-time observations from greedy-oracle runs on consecutive seeds
/// starting at `cfg.scenario.seed`, until `count` are collected.
inline std::vector<Observation> sample_observations(const ExperimentConfig& cfg, std::size_t count) {
  std::vector<Observation> obs;
  obs.reserve(count);
  ScenarioConfig scenario = cfg.scenario;
  for (std::uint64_t k = 0; obs.size() < count; ++k) {
    scenario.seed = cfg.scenario.seed + k;
    GreedyOracleStrategy greedy(cfg.weights);
    RunOptions opt;
    opt.observer = [&](const Observation& o) {
      if (obs.size() < count) obs.push_back(o);
    };
    const auto before = obs.size();
    simulate(scenario, greedy, cfg.channel, cfg.weights, std::move(opt));
    if (obs.size() == before && k > 64) throw DegenerateDataset("scenario generates no tasks");
  }
  return obs;
}

struct PredictorTraining {
  FitResult fit;
  std::vector<LabeledRow> train_rows;
  std::vector<LabeledRow> holdout_rows;
  double train_accuracy = 0.0;
  double holdout_accuracy = 0.0;
};

/// Collects, labels and splits (holdout = the trailing fraction of a
/// seeded shuffle), then fits. Throws DegenerateDataset.
inline PredictorTraining train_predictor(const ExperimentConfig& cfg) {
  const auto observations = sample_observations(cfg, static_cast<std::size_t>(cfg.predictor.samples));
  auto rows = label_dataset(observations, cfg.weights);
  Rng rng = make_rng(cfg.scenario.seed, Stream::Training, 1);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto holdout = static_cast<std::size_t>(cfg.predictor.holdout_fraction * static_cast<double>(rows.size()));
  PredictorTraining t;
  t.holdout_rows.assign(rows.end() - static_cast<std::ptrdiff_t>(holdout), rows.end());
  t.train_rows.assign(rows.begin(), rows.end() - static_cast<std::ptrdiff_t>(holdout));
  t.fit = fit_logistic(t.train_rows, cfg.predictor.train_options());
  t.train_accuracy = accuracy(t.fit.model, t.train_rows);
  t.holdout_accuracy = t.holdout_rows.empty() ? t.train_accuracy : accuracy(t.fit.model, t.holdout_rows);
  return t;
}

inline PredictorTraining run_training_predictor(const ExperimentConfig& cfg, const fs::path& out_dir) {
  ensure_dir(out_dir);
  PredictorTraining t = train_predictor(cfg);
  open_out(out_dir / "predictor.json") << to_json(t.fit.model).dump(2) << '\n';
  auto data = open_out(out_dir / "predictor_dataset.csv");
  data << "split,log10_size_bits,intensity,log10_rate,backlog_s,speed,candidates,label\n";
  auto rows = [&](const char* split, const std::vector<LabeledRow>& rs) {
    for (const auto& r : rs) {
      data << split;
      for (double f : r.features) data << ',' << num(f);
      data << ',' << r.label << '\n';
    }
  };
  rows("train", t.train_rows);
  rows("holdout", t.holdout_rows);
  write_series(out_dir / "predictor_loss.csv", "epoch,loss", t.fit.loss_history);
  spdlog::info("predictor: train accuracy {:.4f}, holdout accuracy {:.4f}", t.train_accuracy, t.holdout_accuracy);
  return t;
}

}  // namespace vto
