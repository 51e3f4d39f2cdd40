// vto: command-line front end for the offloading simulator.
//
//   vto simulate        --config c.json --strategy hybrid --seeds 1-10 --out runs/ --models models/
//   vto sweep           --config c.json --strategy local,nearest,greedy --seeds 1-10 --out sweep/
//   vto train-rl        --config c.json --out models/
//   vto train-predictor --config c.json --out models/
//   vto pso-trace       --config c.json --seed 3 --out trace/
//
// Exit codes: 0 success, 1 usage or parse error, 2 runtime or validation error.
// VOL_LOG sets log verbosity (trace, debug, info, warn, error, off).

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "vto/config.hpp"
#include "vto/experiment.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoull(item));
        continue;
      }
      const auto lo = std::stoull(item.substr(0, dash));
      const auto hi = std::stoull(item.substr(dash + 1));
      if (hi < lo) throw vto::ParseError("bad seed range '" + item + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } catch (const std::logic_error&) {
      throw vto::ParseError("bad seed '" + item + "'");
    }
  }
  if (out.empty()) throw vto::ParseError("no seeds in '" + spec + "'");
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("vto");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("VOL_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"Vehicular task offloading simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seeds_spec;
  std::string strategy = "greedy";
  std::string out_dir = "out";
  std::string models_dir;
  std::uint64_t seed = 0;
  int jobs = 0;

  std::vector<CLI::Option*> seed_opts;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (defaults when omitted)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
  };

  auto* simulate = app.add_subcommand("simulate", "evaluate one strategy over seeds");
  common(simulate);
  simulate->add_option("--strategy", strategy, "local|nearest|random|greedy|rl|hybrid")->capture_default_str();
  simulate->add_option("--seeds", seeds_spec, "seed list, e.g. 1,2,5-9 (default: config seed)");
  seed_opts.push_back(simulate->add_option("--seed", seed, "single seed"));
  simulate->add_option("--models", models_dir, "directory with qtable.json/predictor.json (default: --out)");
  simulate->add_option("--jobs", jobs, "parallel runs (0: all cores)");

  auto* sweep = app.add_subcommand("sweep", "evaluate several strategies over seeds");
  common(sweep);
  sweep->add_option("--strategy", strategy, "comma-separated strategies")->capture_default_str();
  sweep->add_option("--seeds", seeds_spec, "seed list, e.g. 1-10");
  seed_opts.push_back(sweep->add_option("--seed", seed, "single seed"));
  sweep->add_option("--models", models_dir, "directory with trained models (default: --out)");
  sweep->add_option("--jobs", jobs, "parallel runs (0: all cores)");

  auto* train_rl = app.add_subcommand("train-rl", "train the Q-table");
  common(train_rl);
  seed_opts.push_back(train_rl->add_option("--seed", seed, "first episode seed (default: config seed)"));

  auto* train_pred = app.add_subcommand("train-predictor", "train the offload predictor");
  common(train_pred);
  seed_opts.push_back(train_pred->add_option("--seed", seed, "first sampling seed (default: config seed)"));

  auto* trace = app.add_subcommand("pso-trace", "PSO convergence over one scenario run");
  common(trace);
  seed_opts.push_back(trace->add_option("--seed", seed, "scenario seed (default: config seed)"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  vto::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = vto::parse_config(config_path);
  } catch (const vto::ParseError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const vto::InvalidConfig& e) {
    spdlog::error("invalid config: {}", e.what());
    return 2;
  }

  for (const auto* o : seed_opts) {
    if (o->count() > 0) cfg.scenario.seed = seed;
  }

  try {
    if (*simulate || *sweep) {
      vto::RunManifest m;
      m.mode = *sweep ? vto::RunManifest::Mode::Sweep : vto::RunManifest::Mode::Evaluate;
      m.config_path = config_path;
      m.strategies = *sweep ? split(strategy) : std::vector<std::string>{strategy};
      m.seeds = seeds_spec.empty() ? std::vector<std::uint64_t>{cfg.scenario.seed} : parse_seeds(seeds_spec);
      m.out_dir = out_dir;
      m.models_dir = models_dir;
      m.jobs = jobs;
      const auto records = vto::run_evaluation(cfg, m);
      for (const auto& r : records) {
        std::cout << fmt::format("{:<8} seed {:<6} latency {:.4f} s  energy {:.4f} J  offload {:.3f}  failures {:.3f}\n",
                                 r.strategy, r.seed, r.metrics.mean_latency_s, r.metrics.mean_energy_j,
                                 r.metrics.offloading_ratio, r.metrics.failure_rate);
      }
    } else if (*train_rl) {
      const auto r = vto::run_training_rl(cfg, out_dir);
      std::cout << fmt::format("episodes {}  states {}  reward first {:.4f} last {:.4f}\n", r.reward_history.size(),
                               r.table.size(), r.reward_history.front(), r.reward_history.back());
    } else if (*train_pred) {
      const auto t = vto::run_training_predictor(cfg, out_dir);
      std::cout << fmt::format("rows {}+{}  loss {:.4f} -> {:.4f}  holdout accuracy {:.4f}\n", t.train_rows.size(),
                               t.holdout_rows.size(), t.fit.loss_history.front(), t.fit.loss_history.back(),
                               t.holdout_accuracy);
    } else if (*trace) {
      vto::ensure_dir(out_dir);
      auto h = vto::pso_trace(cfg, cfg.scenario.seed);
      if (h.empty()) h.push_back(0.0);
      vto::write_pso_trace(out_dir, h);
      std::cout << fmt::format("iterations {}  best fitness first {:.6g} last {:.6g}\n", h.size(), h.front(),
                               h.back());
    }
  } catch (const vto::ParseError& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
