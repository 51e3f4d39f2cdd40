// Acceptance harness: one PASS/FAIL line per criterion.
//
// Exits non-zero only when the harness itself breaks (an exception, or a
// run that loses tasks). A criterion that is not met prints FAIL with the
// measured numbers and leaves the exit code alone.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "../support.hpp"
#include "vto/config.hpp"
#include "vto/experiment.hpp"

namespace {

using namespace vto;

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  const Verdict v = body();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  failures += v.pass ? 0 : 1;
  std::cout << fmt::format("criterion {}: {}  {} ({:.1f} s)\n    {}\n", id, v.pass ? "PASS" : "FAIL", title, secs,
                           v.detail)
            << std::flush;
}

// Harness invariant: every generated task reaches exactly one terminal status.
void check_conservation(const MetricsReport& m, std::size_t outcomes) {
  const auto& t = m.totals;
  if (t.terminal() != t.generated || static_cast<std::size_t>(t.generated) != outcomes) {
    std::cerr << fmt::format("conservation violated: generated {}, terminal {}, outcomes {}\n", t.generated,
                             t.terminal(), outcomes);
    std::exit(3);
  }
}

std::size_t conserved_runs = 0;

RunResult checked_run(const ScenarioConfig& sc, Strategy& s, const ExperimentConfig& cfg) {
  RunResult r = simulate(sc, s, cfg.channel, cfg.weights);
  check_conservation(r.metrics, r.outcomes.size());
  ++conserved_runs;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

struct Interval {
  double lo = 0.0, hi = 0.0;
};

/// Percentile bootstrap of the mean.
Interval bootstrap_ci(const std::vector<double>& xs, std::uint64_t seed, int resamples = 10000) {
  Rng rng = make_rng(seed, 0);
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) s += xs[pick(rng)];
    means.push_back(s / static_cast<double>(xs.size()));
  }
  std::sort(means.begin(), means.end());
  auto at = [&](double q) { return means[static_cast<std::size_t>(q * (means.size() - 1))]; };
  return {at(0.025), at(0.975)};
}

ExperimentConfig desk() { return parse_config(std::string(VTO_SOURCE_DIR) + "/configs/desk.json"); }

// ---------------------------------------------------------------------------

Verdict formulas() {
  int bad = 0;
  std::vector<std::string> misses;
  auto expect = [&](const char* what, double got, double want) {
    if (!testing::rel_close(got, want, 1e-9)) {
      ++bad;
      misses.push_back(fmt::format("{}: {} vs {}", what, got, want));
    }
  };
  ChannelParams p;
  p.reference_gain = 1.0;
  p.path_loss_exponent = 2.0;
  p.min_distance = 1.0;
  expect("gain d=10", channel_gain(10, p), 0.01);
  expect("gain d=1", channel_gain(1, p), 1.0);
  expect("gain d=0", channel_gain(0, p), 1.0);
  ChannelParams b;
  b.bandwidth = 1e7;
  expect("rate snr=1", shannon_rate(1.0, b), 1e7);
  expect("rate snr=3", shannon_rate(3.0, b), 2e7);
  expect("rate snr=0", shannon_rate(0.0, b), 0.0);

  VehicleState v;
  v.cpu_frequency = 2e9;
  const TaskSpec t8 = make_task(0, 0, 8e6, 1000, 0, 10);
  expect("local time", evaluate_local(t8, v, {}).time_s, 4.0);
  v.cpu_frequency = 1e9;
  expect("local energy", evaluate_local(t8, v, {}).energy_j, 8.0);
  expect("weighted cost", weighted_cost(4.0, 2.0, {0.5}), 5.0);

  RsuState r;
  r.cpu_frequency = 8e9;
  const auto off = evaluate_offload_at_rate(t8, v, r, 8e6, {1.0}, true);
  expect("t_tx", off.t_tx, 1.0);
  expect("t_exec", off.t_exec, 1.0);
  expect("offload time", off.time_s, 2.0);
  expect("offload energy", off.energy_j, 0.1);
  r.queued_cycles = 8e9;
  expect("t_wait", evaluate_offload_at_rate(t8, v, r, 8e6, {1.0}, true).t_wait, 1.0);
  expect("reward 5", reward_from_cost(5.0), -5.0);
  expect("reward 0", reward_from_cost(0.0), 0.0);
  expect("reward composed", reward_from_cost(off.cost), -2.1);
  return {bad == 0, bad == 0 ? "17 formula examples within 1e-9 relative"
                             : fmt::format("{} mismatches: {}", bad, fmt::join(misses, "; "))};
}

Verdict determinism() {
  const ExperimentConfig cfg = desk();
  const fs::path base = fs::temp_directory_path() / "vto_acceptance_determinism";
  fs::remove_all(base);
  RunManifest m;
  m.strategies = {"nearest", "random", "greedy"};
  m.seeds = {1, 2, 3};
  std::vector<std::string> first;
  int identical = 0, total = 0;
  for (int pass = 0; pass < 2; ++pass) {
    m.out_dir = base / std::to_string(pass);
    m.jobs = pass == 0 ? 0 : 1;
    for (const auto& rec : run_evaluation(cfg, m)) {
      const auto& t = rec.metrics.totals;
      if (t.terminal() != t.generated) std::exit(3);
      ++conserved_runs;
    }
    for (const auto& s : m.strategies) {
      for (auto seed : m.seeds) {
        const std::string bytes = slurp(metrics_path(m.out_dir, s, seed));
        if (pass == 0) {
          first.push_back(bytes);
        } else {
          identical += bytes == first[static_cast<std::size_t>(total)] && !bytes.empty() ? 1 : 0;
          ++total;
        }
      }
    }
  }
  fs::remove_all(base);
  return {identical == total, fmt::format("{}/{} metrics CSVs byte-identical across reruns", identical, total)};
}

// Two states, two actions; action 1 switches state.
Verdict q_oracle() {
  const double reward[2][2] = {{1.0, 0.0}, {2.0, 0.5}};
  auto next = [](int s, std::size_t a) { return a == 0 ? s : 1 - s; };
  const double gamma = 0.9;
  std::array<double, 2> val{};
  for (int it = 0; it < 2000; ++it) {
    std::array<double, 2> nv{};
    for (int s = 0; s < 2; ++s) {
      nv[s] = std::max(reward[s][0] + gamma * val[next(s, 0)], reward[s][1] + gamma * val[next(s, 1)]);
    }
    val = nv;
  }
  std::array<std::size_t, 2> pi{};
  for (int s = 0; s < 2; ++s) {
    pi[s] = reward[s][1] + gamma * val[next(s, 1)] > reward[s][0] + gamma * val[next(s, 0)] ? 1 : 0;
  }
  int agree = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    QTable<int, 2> q;
    Rng rng = make_rng(seed, Stream::Training);
    int s = 0;
    for (int step = 0; step < 5000; ++step) {
      const std::size_t a = select_action(q, s, 2, 0.3, rng);
      const int n = next(s, a);
      q_update(q, s, a, reward[s][a], std::optional<int>(n), 2, 0.1, gamma);
      s = n;
    }
    agree += q.greedy(0, 2) == pi[0] && q.greedy(1, 2) == pi[1] ? 1 : 0;
  }
  return {agree >= 19, fmt::format("{}/20 seeds match the value-iteration policy (pi = [{}, {}])", agree, pi[0], pi[1])};
}

struct Trained {
  TrainResult rl;
  PredictorTraining predictor;
};

Verdict reward_convergence(const ExperimentConfig& cfg, Trained& out) {
  out.rl = train(cfg.scenario, cfg.rl, cfg.channel, cfg.weights);
  const auto& h = out.rl.reward_history;
  const std::size_t tenth = std::max<std::size_t>(1, h.size() / 10);
  const double first = std::accumulate(h.begin(), h.begin() + static_cast<std::ptrdiff_t>(tenth), 0.0) / tenth;
  const double last = std::accumulate(h.end() - static_cast<std::ptrdiff_t>(tenth), h.end(), 0.0) / tenth;

  // Greedy-oracle reward on the same episode seeds.
  std::vector<double> greedy;
  ScenarioConfig ep = cfg.scenario;
  ep.duration = cfg.rl.episode_duration;
  for (std::size_t e = 0; e < h.size(); e += 10) {
    ep.seed = cfg.scenario.seed + e;
    GreedyOracleStrategy g(cfg.weights);
    greedy.push_back(checked_run(ep, g, cfg).metrics.reward_history.front());
  }
  const double oracle = mean(greedy);
  const double gain = last - first, gap = oracle - first;
  const bool pass = h.size() == 300 && gap > 0 && gain >= 0.1 * gap;
  return {pass, fmt::format("{} episodes: first 10% {:.4f}, last 10% {:.4f}, greedy oracle {:.4f}; closed {:.1f}% of the gap",
                            h.size(), first, last, oracle, 100.0 * gain / gap)};
}

Verdict pso() {
  int monotone = 0, runs = 0;
  auto mono = [&](const std::vector<double>& h) {
    ++runs;
    monotone += std::is_sorted(h.rbegin(), h.rend()) ? 1 : 0;
  };
  auto sphere = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  };
  double worst_sphere = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    PsoConfig c;
    c.iterations = 200;
    c.bounds = {Bounds{-5.0, 5.0}};
    c.seed = seed;
    const auto r = optimize(sphere, 5, c);
    mono(r.history);
    worst_sphere = std::max(worst_sphere, r.best_fitness);
  }
  Rng rng = make_rng(2024, 0);
  int matched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Observation> tasks{testing::random_observation(rng)};
    if (trial % 2 == 1) tasks.push_back(testing::random_observation(rng));
    PsoConfig c;
    c.seed = static_cast<std::uint64_t>(trial + 1);
    const auto w = optimize_window(tasks, {}, c);
    mono(w.search.history);
    double best = std::numeric_limits<double>::infinity();
    const std::size_t a = tasks[0].candidates.size() + 1, b = tasks.size() > 1 ? tasks[1].candidates.size() + 1 : 1;
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        std::vector<double> x{static_cast<double>(i)};
        if (tasks.size() > 1) x.push_back(static_cast<double>(j));
        best = std::min(best, assignment_fitness(x, tasks, {}));
      }
    }
    const double found = assignment_fitness(w.search.best_position, tasks, {});
    matched += std::abs(found - best) <= 1e-9 * std::max(1.0, std::abs(best)) ? 1 : 0;
  }
  const bool pass = monotone == runs && worst_sphere <= 1e-3 && matched >= 95;
  return {pass, fmt::format("monotone {}/{} runs; sphere dim 5 worst best {:.2e} over 10 seeds; {}/100 windows match "
                            "enumeration",
                            monotone, runs, worst_sphere, matched)};
}

struct Stats {
  std::vector<double> latency, energy, failure, ratio, throughput;
  std::vector<double> task_latency;
};

Verdict directional(const ExperimentConfig& cfg, const Trained& models, int seeds) {
  HybridModels hm;
  hm.qtable = std::make_shared<const OffloadQTable>(models.rl.table);
  hm.predictor = std::make_shared<const LinearModel>(models.predictor.fit.model);
  std::map<std::string, Stats> stats;
  // Evaluation seeds disjoint from the training episodes.
  const std::uint64_t first_seed = 10001;
  for (const std::string name : {"local", "nearest", "hybrid"}) {
    Stats& s = stats[name];
    for (int k = 0; k < seeds; ++k) {
      ScenarioConfig sc = cfg.scenario;
      sc.seed = first_seed + static_cast<std::uint64_t>(k);
      auto strategy = make_strategy(name, cfg, hm);
      const RunResult r = checked_run(sc, *strategy, cfg);
      s.latency.push_back(r.metrics.mean_latency_s);
      s.energy.push_back(r.metrics.mean_energy_j);
      s.failure.push_back(r.metrics.failure_rate);
      s.ratio.push_back(r.metrics.offloading_ratio);
      s.throughput.push_back(r.metrics.throughput_bps);
      for (const auto& o : r.outcomes) s.task_latency.push_back(o.latency_s);
    }
  }
  const Stats& h = stats["hybrid"];
  std::vector<std::string> lines, misses;
  for (const auto& [name, s] : stats) {
    const Interval ci = bootstrap_ci(s.latency, 7);
    lines.push_back(fmt::format("{:<7} latency {:.4f} s [{:.4f}, {:.4f}]  energy {:.4f} J  failures {:.4f}  offload {:.4f}  "
                                "throughput {:.4g} bit/s",
                                name, mean(s.latency), ci.lo, ci.hi, mean(s.energy), mean(s.failure), mean(s.ratio),
                                mean(s.throughput)));
  }
  const Interval hci = bootstrap_ci(h.latency, 7);
  for (const char* base : {"local", "nearest"}) {
    const Stats& b = stats[base];
    const Interval bci = bootstrap_ci(b.latency, 7);
    if (!(mean(h.latency) < mean(b.latency))) misses.push_back(fmt::format("latency not below {}", base));
    if (!(hci.hi < bci.lo)) misses.push_back(fmt::format("latency CI overlaps {}", base));
    if (!(mean(h.energy) < mean(b.energy))) misses.push_back(fmt::format("energy not below {}", base));
    if (!(mean(h.failure) < mean(b.failure))) misses.push_back(fmt::format("failure rate not below {}", base));
  }
  const Stats& n = stats["nearest"];
  if (!(mean(h.ratio) >= mean(n.ratio))) misses.push_back("offloading ratio below nearest");
  if (!(mean(h.throughput) >= mean(n.throughput))) misses.push_back("throughput below nearest");
  std::string detail = fmt::format("{} seeds, 95% bootstrap CI over per-seed means\n    {}", seeds, fmt::join(lines, "\n    "));
  if (!misses.empty()) detail += fmt::format("\n    unmet: {}", fmt::join(misses, "; "));
  return {misses.empty(), detail};
}

Verdict predictor_fidelity(const ExperimentConfig& cfg, Trained& out) {
  out.predictor = train_predictor(cfg);
  const auto& loss = out.predictor.fit.loss_history;
  bool monotone = true;
  for (std::size_t i = 1; i < loss.size(); ++i) monotone = monotone && loss[i] <= loss[i - 1];
  const std::size_t rows = out.predictor.train_rows.size() + out.predictor.holdout_rows.size();
  const bool pass = rows == 10000 && out.predictor.holdout_accuracy >= 0.90 && monotone;
  return {pass, fmt::format("{} observations ({} held out): holdout accuracy {:.4f}, loss {:.4f} -> {:.4f}, {}", rows,
                            out.predictor.holdout_rows.size(), out.predictor.holdout_accuracy, loss.front(),
                            loss.back(), monotone ? "non-increasing" : "NOT monotone")};
}

Verdict invariances() {
  Rng rng = make_rng(99, 0);
  int greedy_ok = 0, q_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const Observation o = testing::random_observation(rng);
    auto options = option_costs(o, {uniform(rng, 0.0, 2.0)});
    const Decision before = argmin_decision(options);
    const double k = std::exp(uniform(rng, -10.0, 10.0));
    for (auto& opt : options) opt.cost *= k;
    greedy_ok += argmin_decision(options) == before ? 1 : 0;

    std::array<double, 4> row{}, moved{};
    for (double& v : row) v = uniform(rng, -5, 5);
    const std::size_t valid = 1 + rng() % 4;
    const double a = std::exp(uniform(rng, -5, 5)), b = uniform(rng, -100, 100);
    for (std::size_t j = 0; j < 4; ++j) moved[j] = a * row[j] + b;
    q_ok += greedy_action(row, valid) == greedy_action(moved, valid) ? 1 : 0;
  }
  return {greedy_ok == 1000 && q_ok == 1000,
          fmt::format("greedy oracle {}/1000 under cost scaling; Q greedy {}/1000 under affine maps", greedy_ok, q_ok)};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  int seeds = 10;
  if (argc > 1) seeds = std::max(10, std::atoi(argv[1]));
  try {
    const ExperimentConfig cfg = desk();
    Trained trained;
    report(1, "formula suite", formulas);
    report(2, "determinism", determinism);
    report(4, "Q-learning matches value iteration", q_oracle);
    report(5, "reward convergence direction", [&] { return reward_convergence(cfg, trained); });
    report(6, "PSO monotonicity and optimality", pso);
    report(8, "predictor fidelity", [&] { return predictor_fidelity(cfg, trained); });
    report(7, "directional figure reproduction", [&] { return directional(cfg, trained, seeds); });
    report(9, "argmax and scale invariances", invariances);
    report(3, "task conservation", [] {
      return Verdict{conserved_runs > 0, fmt::format("{} simulator runs, every status count summed to the generated count",
                                                     conserved_runs)};
    });
  } catch (const std::exception& e) {
    std::cerr << "acceptance harness error: " << e.what() << '\n';
    return 2;
  }
  std::cout << fmt::format("{} of 9 criteria failed\n", failures);
  return 0;
}
