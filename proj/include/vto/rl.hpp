#pragma once

// Tabular Q-learning offloading agent: state binning, epsilon-greedy action
// selection, the one-step Bellman update and episodic training on the
// simulator.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "vto/decision.hpp"
#include "vto/domain.hpp"
#include "vto/errors.hpp"
#include "vto/mobility.hpp"
#include "vto/rng.hpp"
#include "vto/simengine.hpp"

namespace vto {

/// Greedy index over the first `valid` entries; ties go to the lowest index.
inline std::size_t greedy_action(std::span<const double> q, std::size_t valid) {
  valid = std::clamp<std::size_t>(valid, 1, q.size());
  std::size_t best = 0;
  for (std::size_t a = 1; a < valid; ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

/// Sparse Q-function. Missing rows read as zero.
template <class State, std::size_t Actions>
class QTable {
 public:
  using Row = std::array<double, Actions>;
  static constexpr std::size_t action_count = Actions;

  struct Entry {
    Row q{};
    std::array<std::uint64_t, Actions> visits{};
    bool operator==(const Entry&) const = default;
  };

  const Row& row(const State& s) const {
    static const Row zeros{};
    const auto it = table_.find(s);
    return it == table_.end() ? zeros : it->second.q;
  }

  double value(const State& s, std::size_t a) const { return row(s)[a]; }

  std::uint64_t visits(const State& s, std::size_t a) const {
    const auto it = table_.find(s);
    return it == table_.end() ? 0 : it->second.visits[a];
  }

  void set(const State& s, std::size_t a, double v) { table_[s].q[a] = v; }
  void visit(const State& s, std::size_t a) { ++table_[s].visits[a]; }

  double max_value(const State& s, std::size_t valid) const {
    const Row& r = row(s);
    return r[greedy_action(r, valid)];
  }

  std::size_t greedy(const State& s, std::size_t valid) const { return greedy_action(row(s), valid); }

  const std::map<State, Entry>& entries() const { return table_; }
  std::map<State, Entry>& entries() { return table_; }
  std::size_t size() const { return table_.size(); }

  bool operator==(const QTable&) const = default;

 private:
  std::map<State, Entry> table_;
};

/// Epsilon-greedy over the first `valid` actions.
template <class State, std::size_t N>
std::size_t select_action(const QTable<State, N>& q, const State& s, std::size_t valid, double epsilon, Rng& rng) {
  valid = std::clamp<std::size_t>(valid, 1, N);
  if (epsilon > 0.0 && uniform01(rng) < epsilon) {
    return std::uniform_int_distribution<std::size_t>(0, valid - 1)(rng);
  }
  return q.greedy(s, valid);
}

/// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)). A terminal
/// transition passes no next state.
template <class State, std::size_t N>
void q_update(QTable<State, N>& q, const State& s, std::size_t a, double reward,
              const std::optional<State>& next, std::size_t next_valid, double alpha, double gamma) {
  const double future = next ? q.max_value(*next, next_valid) : 0.0;
  const double old = q.value(s, a);
  q.set(s, a, old + alpha * (reward + gamma * future - old));
  q.visit(s, a);
}

// ---------------------------------------------------------------------------
// Offloading state space

struct StateKey {
  std::uint8_t snr_bin = 0;    // 0..3
  std::uint8_t load_bin = 0;   // 0..3
  std::uint8_t size_bin = 0;   // 0..2
  std::uint8_t speed_bin = 0;  // 0..2
  std::uint8_t candidates = 0;  // 0..3

  auto operator<=>(const StateKey&) const = default;

  std::string to_string() const {
    return std::to_string(snr_bin) + "," + std::to_string(load_bin) + "," + std::to_string(size_bin) + "," +
           std::to_string(speed_bin) + "," + std::to_string(candidates);
  }
};

inline constexpr std::size_t kStateSpaceSize = 4 * 4 * 3 * 3 * 4;
inline constexpr std::size_t kOffloadActions = 4;  // Local, Candidate0..2

using OffloadQTable = QTable<StateKey, kOffloadActions>;

struct StateBinning {
  Range task_size_range{8e6, 8e7};
  Range speed_range{10.0, 25.0};
  ChannelParams channel;

  static StateBinning from(const ScenarioConfig& c, const ChannelParams& ch) {
    return {c.task_size_range, c.speed_range, ch};
  }
};

namespace detail {

// Number of edges strictly below v: boundary values fall in the lower bin.
template <std::size_t N>
std::uint8_t bin_of(double v, const std::array<double, N>& edges) {
  std::uint8_t b = 0;
  for (double e : edges) b += static_cast<std::uint8_t>(v > e);
  return b;
}

inline std::array<double, 2> tercile_edges(const Range& r) {
  const double w = (r.hi - r.lo) / 3.0;
  return {r.lo + w, r.lo + 2.0 * w};
}

}  // namespace detail

inline StateKey discretize(const Observation& obs, const StateBinning& bins) {
  StateKey k;
  k.size_bin = detail::bin_of(obs.task.data_size_bits, detail::tercile_edges(bins.task_size_range));
  k.speed_bin = detail::bin_of(obs.vehicle.speed, detail::tercile_edges(bins.speed_range));
  k.candidates = static_cast<std::uint8_t>(std::min<std::size_t>(obs.candidates.size(), 3));
  if (obs.candidates.empty()) return k;
  const CandidateLink& best = obs.candidates.front();
  const double snr_db = 10.0 * std::log10(snr(obs.vehicle.tx_power, best.distance, bins.channel));
  k.snr_bin = detail::bin_of(snr_db, std::array<double, 3>{0.0, 10.0, 20.0});
  const double backlog_s = best.queued_cycles / best.rsu.cpu_frequency;
  k.load_bin = detail::bin_of(backlog_s, std::array<double, 3>{0.1, 1.0, 5.0});
  return k;
}

inline std::size_t valid_actions(const Observation& obs) {
  return std::min<std::size_t>(obs.candidates.size(), kOffloadActions - 1) + 1;
}

inline Decision action_to_decision(std::size_t action, const Observation& obs) {
  if (action == 0 || action > obs.candidates.size()) return Decision::local();
  return Decision::offload(obs.candidates[action - 1].rsu.id);
}

struct RlConfig {
  double alpha = 0.1;
  double gamma = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_episodes = 240;
  int episodes = 300;
  double episode_duration = 200.0;

  bool operator==(const RlConfig&) const = default;
};

inline void validate(const RlConfig& c) {
  using detail::require;
  require(c.alpha > 0.0 && c.alpha <= 1.0, "alpha", "must be in (0, 1]");
  require(c.gamma >= 0.0 && c.gamma < 1.0, "gamma", "must be in [0, 1)");
  require(c.epsilon_start >= 0.0 && c.epsilon_start <= 1.0, "epsilon_start", "must be in [0, 1]");
  require(c.epsilon_end >= 0.0 && c.epsilon_end <= 1.0, "epsilon_end", "must be in [0, 1]");
  require(c.epsilon_end <= c.epsilon_start, "epsilon_end", "must be <= epsilon_start");
  require(c.epsilon_decay_episodes >= 0, "epsilon_decay_episodes", "must be >= 0");
  require(c.episodes >= 1, "episodes", "must be >= 1");
  require(c.episode_duration > 0.0, "episode_duration", "must be > 0");
}

/// Linear decay from start to end over the decay horizon, then flat.
inline double epsilon_at(const RlConfig& c, int episode) {
  if (c.epsilon_decay_episodes <= 0) return c.epsilon_end;
  const double t = std::min(1.0, static_cast<double>(episode) / c.epsilon_decay_episodes);
  return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * t;
}

/// Q-table policy as a simulator strategy. With learning enabled it performs
/// the Bellman update per task: reward is the negated realized cost, and the
/// successor state is the state at the same vehicle's next task.
class RlStrategy final : public Strategy {
 public:
  RlStrategy(OffloadQTable& table, StateBinning bins) : table_(&table), bins_(std::move(bins)) {}

  void set_learning(double alpha, double gamma, double epsilon) {
    learning_ = true;
    alpha_ = alpha;
    gamma_ = gamma;
    epsilon_ = epsilon;
  }

  std::string name() const override { return "rl"; }

  void begin_run(std::uint64_t seed) override {
    rng_ = make_rng(seed, Stream::Training);
    pending_.clear();
    last_task_.clear();
  }

  Decision decide(const Observation& obs) override {
    const StateKey s = discretize(obs, bins_);
    const std::size_t valid = valid_actions(obs);
    if (!learning_) return action_to_decision(table_->greedy(s, valid), obs);

    const std::size_t a = select_action(*table_, s, valid, epsilon_, rng_);
    if (auto it = last_task_.find(obs.task.vehicle_id); it != last_task_.end()) {
      auto p = pending_.find(it->second);
      if (p != pending_.end()) {
        p->second.next = s;
        p->second.next_valid = valid;
        if (p->second.reward) {
          apply(p->second);
          pending_.erase(p);
        }
      }
    }
    pending_[obs.task.id] = Transition{s, a, std::nullopt, std::nullopt, 1};
    last_task_[obs.task.vehicle_id] = obs.task.id;
    return action_to_decision(a, obs);
  }

  void on_outcome(const TaskOutcome& o, double realized_cost) override {
    if (!learning_) return;
    auto p = pending_.find(o.task_id);
    if (p == pending_.end()) return;
    p->second.reward = reward_from_cost(realized_cost);
    if (p->second.next) {
      apply(p->second);
      pending_.erase(p);
    }
  }

  void end_run() override {
    if (!learning_) return;
    for (auto& [id, t] : pending_) {
      if (t.reward) apply(t);
    }
    pending_.clear();
  }

 private:
  struct Transition {
    StateKey state;
    std::size_t action = 0;
    std::optional<double> reward;
    std::optional<StateKey> next;
    std::size_t next_valid = 1;
  };

  void apply(const Transition& t) {
    q_update(*table_, t.state, t.action, *t.reward, t.next, t.next_valid, alpha_, gamma_);
  }

  OffloadQTable* table_;
  StateBinning bins_;
  bool learning_ = false;
  double alpha_ = 0.1, gamma_ = 0.9, epsilon_ = 0.0;
  Rng rng_ = make_rng(0, Stream::Training);
  std::map<std::int64_t, Transition> pending_;
  std::unordered_map<std::int32_t, std::int64_t> last_task_;
};

struct TrainResult {
  OffloadQTable table;
  std::vector<double> reward_history;  // mean per-step reward per episode
};

/// One episode is one full simulator run on seed `scenario.seed + episode`.
inline TrainResult train(const ScenarioConfig& scenario, const RlConfig& rl, const ChannelParams& channel,
                         const CostWeights& weights) {
  validate(scenario);
  validate(rl);
  TrainResult out;
  RlStrategy agent(out.table, StateBinning::from(scenario, channel));
  ScenarioConfig episode = scenario;
  episode.duration = std::max(rl.episode_duration, scenario.dt);
  for (int e = 0; e < rl.episodes; ++e) {
    episode.seed = scenario.seed + static_cast<std::uint64_t>(e);
    agent.set_learning(rl.alpha, rl.gamma, epsilon_at(rl, e));
    const MetricsReport m = run(episode, agent, channel, weights);
    out.reward_history.push_back(m.reward_history.front());
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const OffloadQTable& q) {
  nlohmann::json states = nlohmann::json::object();
  for (const auto& [key, entry] : q.entries()) {
    states[key.to_string()] = {{"q", entry.q}, {"visits", entry.visits}};
  }
  return {{"actions", {"local", "candidate0", "candidate1", "candidate2"}}, {"states", states}};
}

inline OffloadQTable qtable_from_json(const nlohmann::json& j) {
  OffloadQTable q;
  try {
    for (const auto& [key, value] : j.at("states").items()) {
      std::array<int, 5> parts{};
      std::size_t pos = 0;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        const std::size_t comma = key.find(',', pos);
        parts[i] = std::stoi(key.substr(pos, comma - pos));
        pos = comma == std::string::npos ? key.size() : comma + 1;
      }
      const StateKey s{static_cast<std::uint8_t>(parts[0]), static_cast<std::uint8_t>(parts[1]),
                       static_cast<std::uint8_t>(parts[2]), static_cast<std::uint8_t>(parts[3]),
                       static_cast<std::uint8_t>(parts[4])};
      auto& entry = q.entries()[s];
      entry.q = value.at("q").get<OffloadQTable::Row>();
      entry.visits = value.at("visits").get<std::array<std::uint64_t, kOffloadActions>>();
      for (double v : entry.q) {
        if (!std::isfinite(v)) throw ParseError("qtable: non-finite value in state " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("qtable: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ParseError(std::string("qtable: bad state key: ") + e.what());
  }
  return q;
}

}  // namespace vto
