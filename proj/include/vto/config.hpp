#pragma once

// Experiment configuration: one JSON document with sections scenario,
// channel, weights, rl, pso, hybrid and predictor. Parsing is strict; every
// missing key takes its default.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vto/domain.hpp"
#include "vto/errors.hpp"
#include "vto/hybrid.hpp"
#include "vto/mobility.hpp"
#include "vto/predictor.hpp"
#include "vto/pso.hpp"
#include "vto/rl.hpp"

namespace vto {

struct PredictorConfig {
  int epochs = 500;
  double learning_rate = 0.1;
  int samples = 10000;           // observations collected for training
  double holdout_fraction = 0.2;

  TrainOptions train_options() const { return {epochs, learning_rate}; }
  bool operator==(const PredictorConfig&) const = default;
};

struct ExperimentConfig {
  ScenarioConfig scenario;
  ChannelParams channel;
  CostWeights weights;
  RlConfig rl;
  PsoConfig pso;
  HybridConfig hybrid;
  PredictorConfig predictor;

  bool operator==(const ExperimentConfig&) const = default;
};

inline void validate(const ChannelParams& c) {
  using detail::require;
  require(c.bandwidth > 0.0, "bandwidth", "must be > 0");
  require(c.noise_power > 0.0, "noise_power", "must be > 0");
  require(c.reference_gain > 0.0, "reference_gain", "must be > 0");
  require(c.path_loss_exponent >= 1.0, "path_loss_exponent", "must be >= 1");
  require(c.min_distance > 0.0, "min_distance", "must be > 0");
}

inline void validate(const CostWeights& w) {
  detail::require(w.lambda >= 0.0 && std::isfinite(w.lambda), "lambda", "must be finite and >= 0");
}

inline void validate(const HybridConfig& h) {
  detail::require(!h.batching || h.batch_window > 0.0, "batch_window", "must be > 0 when batching");
}

inline void validate(const PredictorConfig& p) {
  using detail::require;
  require(p.epochs >= 0, "epochs", "must be >= 0");
  require(p.learning_rate > 0.0, "learning_rate", "must be > 0");
  require(p.samples >= 2, "samples", "must be >= 2");
  require(p.holdout_fraction >= 0.0 && p.holdout_fraction < 1.0, "holdout_fraction", "must be in [0, 1)");
}

/// Throws InvalidConfig naming the first offending field.
inline void validate(const ExperimentConfig& c) {
  validate(c.scenario);
  validate(c.channel);
  validate(c.weights);
  validate(c.rl);
  PsoConfig pso = c.pso;
  if (pso.bounds.empty()) pso.bounds = {Bounds{}};
  validate(pso, pso.bounds.size());
  validate(c.hybrid);
  validate(c.predictor);
}

// ---------------------------------------------------------------------------
// JSON mapping

inline std::string to_string(MobilityKind k) {
  return k == MobilityKind::HighwayRing ? "highway_ring" : "manhattan_grid";
}

namespace detail {

class Section {
 public:
  Section(const nlohmann::json& j, std::string name, std::initializer_list<const char*> keys)
      : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ParseError(name_ + ": expected an object");
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, _] : j_.items()) {
      if (!known.count(key)) throw ParseError("unknown key '" + key + "' in section '" + name_ + "'");
    }
  }

  template <class T>
  void read(const char* key, T& out) const {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ParseError(name_ + "." + key + ": wrong type");
    }
  }

  void read(const char* key, Range& out) const {
    std::vector<double> v{out.lo, out.hi};
    read(key, v);
    if (v.size() != 2) throw ParseError(name_ + "." + key + ": expected [lo, hi]");
    out = {v[0], v[1]};
  }

  void read(const char* key, Vec2& out) const {
    std::vector<double> v{out.x, out.y};
    read(key, v);
    if (v.size() != 2) throw ParseError(name_ + "." + key + ": expected [x, y]");
    out = {v[0], v[1]};
  }

  void read(const char* key, MobilityKind& out) const {
    std::string s = to_string(out);
    read(key, s);
    if (s == "highway_ring") {
      out = MobilityKind::HighwayRing;
    } else if (s == "manhattan_grid") {
      out = MobilityKind::ManhattanGrid;
    } else {
      throw ParseError(name_ + "." + key + ": expected \"highway_ring\" or \"manhattan_grid\"");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string name_;
};

inline const nlohmann::json& section_of(const nlohmann::json& root, const char* name) {
  static const nlohmann::json empty = nlohmann::json::object();
  const auto it = root.find(name);
  return it == root.end() ? empty : *it;
}

inline int line_of(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

}  // namespace detail

/// Parses and validates. Throws ParseError (syntax, type or unknown key)
/// and InvalidConfig (constraint violation).
inline ExperimentConfig config_from_json(const nlohmann::json& root) {
  using detail::Section;
  ExperimentConfig c;
  if (root.is_null()) return c;
  Section top(root, "config", {"scenario", "channel", "weights", "rl", "pso", "hybrid", "predictor"});

  auto& s = c.scenario;
  Section sc(detail::section_of(root, "scenario"), "scenario",
             {"area", "vehicle_count", "rsu_count", "mobility", "speed_range", "arrival_rate_per_vehicle",
              "task_size_range", "intensity_range", "deadline_range", "duration", "dt", "seed",
              "vehicle_cpu_frequency", "vehicle_tx_power", "energy_coefficient", "rsu_cpu_frequency",
              "rsu_cpu_spread", "coverage_radius", "block_size", "candidate_limit"});
  sc.read("area", s.area);
  sc.read("vehicle_count", s.vehicle_count);
  sc.read("rsu_count", s.rsu_count);
  sc.read("mobility", s.mobility_kind);
  sc.read("speed_range", s.speed_range);
  sc.read("arrival_rate_per_vehicle", s.arrival_rate_per_vehicle);
  sc.read("task_size_range", s.task_size_range);
  sc.read("intensity_range", s.intensity_range);
  sc.read("deadline_range", s.deadline_range);
  sc.read("duration", s.duration);
  sc.read("dt", s.dt);
  sc.read("seed", s.seed);
  sc.read("vehicle_cpu_frequency", s.vehicle_cpu_frequency);
  sc.read("vehicle_tx_power", s.vehicle_tx_power);
  sc.read("energy_coefficient", s.energy_coefficient);
  sc.read("rsu_cpu_frequency", s.rsu_cpu_frequency);
  sc.read("rsu_cpu_spread", s.rsu_cpu_spread);
  sc.read("coverage_radius", s.coverage_radius);
  sc.read("block_size", s.block_size);
  sc.read("candidate_limit", s.candidate_limit);

  Section ch(detail::section_of(root, "channel"), "channel",
             {"bandwidth", "noise_power", "reference_gain", "path_loss_exponent", "min_distance"});
  ch.read("bandwidth", c.channel.bandwidth);
  ch.read("noise_power", c.channel.noise_power);
  ch.read("reference_gain", c.channel.reference_gain);
  ch.read("path_loss_exponent", c.channel.path_loss_exponent);
  ch.read("min_distance", c.channel.min_distance);

  Section wt(detail::section_of(root, "weights"), "weights", {"lambda"});
  wt.read("lambda", c.weights.lambda);

  Section rl(detail::section_of(root, "rl"), "rl",
             {"alpha", "gamma", "epsilon_start", "epsilon_end", "epsilon_decay_episodes", "episodes",
              "episode_duration"});
  rl.read("alpha", c.rl.alpha);
  rl.read("gamma", c.rl.gamma);
  rl.read("epsilon_start", c.rl.epsilon_start);
  rl.read("epsilon_end", c.rl.epsilon_end);
  rl.read("epsilon_decay_episodes", c.rl.epsilon_decay_episodes);
  rl.read("episodes", c.rl.episodes);
  rl.read("episode_duration", c.rl.episode_duration);

  Section ps(detail::section_of(root, "pso"), "pso",
             {"particles", "iterations", "inertia", "cognitive", "social", "seed", "threads"});
  ps.read("particles", c.pso.particles);
  ps.read("iterations", c.pso.iterations);
  ps.read("inertia", c.pso.inertia);
  ps.read("cognitive", c.pso.cognitive);
  ps.read("social", c.pso.social);
  ps.read("seed", c.pso.seed);
  ps.read("threads", c.pso.threads);

  Section hy(detail::section_of(root, "hybrid"), "hybrid", {"use_predictor", "use_rl", "batching", "batch_window"});
  hy.read("use_predictor", c.hybrid.use_predictor);
  hy.read("use_rl", c.hybrid.use_rl);
  hy.read("batching", c.hybrid.batching);
  hy.read("batch_window", c.hybrid.batch_window);

  Section pr(detail::section_of(root, "predictor"), "predictor",
             {"epochs", "learning_rate", "samples", "holdout_fraction"});
  pr.read("epochs", c.predictor.epochs);
  pr.read("learning_rate", c.predictor.learning_rate);
  pr.read("samples", c.predictor.samples);
  pr.read("holdout_fraction", c.predictor.holdout_fraction);

  validate(c);
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return {};
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text, nullptr, true, false);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("line " + std::to_string(detail::line_of(text, e.byte)) + ": " + e.what());
  }
  return config_from_json(root);
}

/// Throws ParseError when the file cannot be read.
inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& s = c.scenario;
  auto range = [](const Range& r) { return nlohmann::json::array({r.lo, r.hi}); };
  nlohmann::json j;
  j["scenario"] = {{"area", {s.area.x, s.area.y}},
                   {"vehicle_count", s.vehicle_count},
                   {"rsu_count", s.rsu_count},
                   {"mobility", to_string(s.mobility_kind)},
                   {"speed_range", range(s.speed_range)},
                   {"arrival_rate_per_vehicle", s.arrival_rate_per_vehicle},
                   {"task_size_range", range(s.task_size_range)},
                   {"intensity_range", range(s.intensity_range)},
                   {"deadline_range", range(s.deadline_range)},
                   {"duration", s.duration},
                   {"dt", s.dt},
                   {"seed", s.seed},
                   {"vehicle_cpu_frequency", s.vehicle_cpu_frequency},
                   {"vehicle_tx_power", s.vehicle_tx_power},
                   {"energy_coefficient", s.energy_coefficient},
                   {"rsu_cpu_frequency", s.rsu_cpu_frequency},
                   {"rsu_cpu_spread", s.rsu_cpu_spread},
                   {"coverage_radius", s.coverage_radius},
                   {"block_size", s.block_size},
                   {"candidate_limit", s.candidate_limit}};
  j["channel"] = {{"bandwidth", c.channel.bandwidth},
                  {"noise_power", c.channel.noise_power},
                  {"reference_gain", c.channel.reference_gain},
                  {"path_loss_exponent", c.channel.path_loss_exponent},
                  {"min_distance", c.channel.min_distance}};
  j["weights"] = {{"lambda", c.weights.lambda}};
  j["rl"] = {{"alpha", c.rl.alpha},
             {"gamma", c.rl.gamma},
             {"epsilon_start", c.rl.epsilon_start},
             {"epsilon_end", c.rl.epsilon_end},
             {"epsilon_decay_episodes", c.rl.epsilon_decay_episodes},
             {"episodes", c.rl.episodes},
             {"episode_duration", c.rl.episode_duration}};
  j["pso"] = {{"particles", c.pso.particles}, {"iterations", c.pso.iterations}, {"inertia", c.pso.inertia},
              {"cognitive", c.pso.cognitive}, {"social", c.pso.social},         {"seed", c.pso.seed},
              {"threads", c.pso.threads}};
  j["hybrid"] = {{"use_predictor", c.hybrid.use_predictor},
                 {"use_rl", c.hybrid.use_rl},
                 {"batching", c.hybrid.batching},
                 {"batch_window", c.hybrid.batch_window}};
  j["predictor"] = {{"epochs", c.predictor.epochs},
                    {"learning_rate", c.predictor.learning_rate},
                    {"samples", c.predictor.samples},
                    {"holdout_fraction", c.predictor.holdout_fraction}};
  return j;
}

inline std::string serialize_config(const ExperimentConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace vto
