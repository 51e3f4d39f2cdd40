#pragma once

// Discrete-event simulation of task lifecycles:
// arrival -> decide -> (uplink FIFO -> transmit) -> compute FIFO -> complete,
// with deadline expiry cancelling unfinished work.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <queue>
#include <string_view>
#include <utility>
#include <vector>

#include "vto/decision.hpp"
#include "vto/domain.hpp"
#include "vto/mobility.hpp"
#include "vto/rng.hpp"

namespace vto {

enum class TaskStatus { Completed, FailedDeadline, FailedOutOfRange, FailedNoCandidate };

inline std::string_view to_string(TaskStatus s) {
  switch (s) {
    case TaskStatus::Completed: return "completed";
    case TaskStatus::FailedDeadline: return "failed_deadline";
    case TaskStatus::FailedOutOfRange: return "failed_out_of_range";
    case TaskStatus::FailedNoCandidate: return "failed_no_candidate";
  }
  return "unknown";
}

struct TaskOutcome {
  std::int64_t task_id = 0;
  std::int32_t vehicle_id = 0;
  Decision decision = Decision::local();
  double latency_s = 0.0;
  double energy_j = 0.0;
  TaskStatus status = TaskStatus::Completed;
  double completed_at = 0.0;  // time of the terminal event
};

struct StatusCounts {
  std::int64_t generated = 0;
  std::int64_t completed = 0;
  std::int64_t failed_deadline = 0;
  std::int64_t failed_out_of_range = 0;
  std::int64_t failed_no_candidate = 0;

  std::int64_t failed() const { return failed_deadline + failed_out_of_range + failed_no_candidate; }
  std::int64_t terminal() const { return completed + failed(); }
  bool operator==(const StatusCounts&) const = default;
};

struct MetricsReport {
  double mean_latency_s = 0.0;  // over all tasks; failures count time until failure
  double mean_energy_j = 0.0;
  double offloading_ratio = 0.0;
  double throughput_bps = 0.0;       // completed offloaded bits / duration
  double failure_rate = 0.0;
  double channel_utilization = 0.0;  // uplink airtime in [0, duration] / (duration * rsu_count)
  std::vector<double> reward_history;  // mean per-step reward, one entry per episode
  StatusCounts totals;

  bool operator==(const MetricsReport&) const = default;
};

struct RunResult {
  MetricsReport metrics;
  std::vector<TaskOutcome> outcomes;  // ordered by task id
};

/// Per-vehicle Poisson arrivals over [0, duration), ids assigned in time order.
inline std::vector<TaskSpec> generate_task_arrivals(const ScenarioConfig& config, Rng& rng) {
  std::vector<TaskSpec> tasks;
  std::exponential_distribution<double> gap(config.arrival_rate_per_vehicle);
  for (int v = 0; v < config.vehicle_count; ++v) {
    double t = 0.0;
    while (true) {
      t += gap(rng);
      if (t >= config.duration) break;
      const double bits = uniform(rng, config.task_size_range.lo, config.task_size_range.hi);
      const double intensity = uniform(rng, config.intensity_range.lo, config.intensity_range.hi);
      const double slack = uniform(rng, config.deadline_range.lo, config.deadline_range.hi);
      tasks.push_back(make_task(0, v, bits, intensity, t, t + slack));
    }
  }
  std::stable_sort(tasks.begin(), tasks.end(), [](const TaskSpec& a, const TaskSpec& b) {
    return a.created_at != b.created_at ? a.created_at < b.created_at : a.vehicle_id < b.vehicle_id;
  });
  for (std::size_t i = 0; i < tasks.size(); ++i) tasks[i].id = static_cast<std::int64_t>(i);
  return tasks;
}

enum class EventKind { TaskArrival, TxComplete, ExecComplete, DeadlineExpiry, MobilityTick, BatchFlush };

struct Event {
  double time = 0.0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::TaskArrival;
  std::int64_t task_id = -1;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    return a.time != b.time ? a.time > b.time : a.seq > b.seq;
  }
};

struct RunOptions {
  std::function<void(const Observation&)> observer;  // every decision-time observation
  std::function<void(const Event&)> trace;           // every processed event
};

class Simulator {
 public:
  Simulator(const ScenarioConfig& config, const ChannelParams& channel, const CostWeights& weights,
            RunOptions options = {})
      : config_(config), options_(std::move(options)) {
    world_ = generate_scenario(config_);
    world_.channel = channel;
    world_.weights = weights;
    Rng task_rng = make_rng(config_.seed, Stream::Tasks);
    const auto specs = generate_task_arrivals(config_, task_rng);
    tasks_.reserve(specs.size());
    for (const auto& s : specs) tasks_.push_back(Record{.spec = s});
    servers_.resize(world_.rsus.size());
  }

  /// Explicit world and tasks (ids must equal their index); `config`
  /// supplies duration, dt and candidate_limit.
  Simulator(World world, const std::vector<TaskSpec>& tasks, const ScenarioConfig& config, RunOptions options = {})
      : config_(config), options_(std::move(options)), world_(std::move(world)) {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].id != static_cast<std::int64_t>(i)) throw InvalidConfig("tasks", "ids must equal their index");
      const auto v = tasks[i].vehicle_id;
      if (v < 0 || static_cast<std::size_t>(v) >= world_.vehicles.size()) {
        throw InvalidConfig("tasks", "vehicle_id out of range");
      }
      tasks_.push_back(Record{.spec = tasks[i]});
    }
    servers_.resize(world_.rsus.size());
  }

  RunResult run(Strategy& strategy) {
    strategy_ = &strategy;
    strategy.begin_run(config_.seed);
    for (const auto& t : tasks_) push(t.spec.created_at, EventKind::TaskArrival, t.spec.id);
    push(config_.dt, EventKind::MobilityTick, -1);

    while (!events_.empty()) {
      const Event e = events_.top();
      events_.pop();
      last_time_ = e.time;
      now_ = e.time;
      world_.clock = now_;
      if (options_.trace) options_.trace(e);
      handle(e);
    }
    strategy.end_run();
    strategy_ = nullptr;
    return finish();
  }

  const World& world() const { return world_; }
  double last_event_time() const { return last_time_; }

 private:
  enum class Stage { Pending, Held, Local, UplinkQueue, Transmitting, ComputeQueue, Executing, Done };

  struct Record {
    TaskSpec spec;
    Stage stage = Stage::Pending;
    Decision decision = Decision::local();
    std::int32_t rsu = -1;
    double rate = 0.0;
    double stage_start = 0.0;
    double stage_end = 0.0;
    double energy = 0.0;
    std::optional<TaskOutcome> outcome{};
  };

  struct Server {
    std::deque<std::int64_t> uplink;
    std::int64_t transmitting = -1;
    std::deque<std::int64_t> compute;
    std::int64_t executing = -1;
  };

  void push(double time, EventKind kind, std::int64_t task) {
    events_.push(Event{time, seq_++, kind, task});
  }

  Record& rec(std::int64_t id) { return tasks_[static_cast<std::size_t>(id)]; }

  void handle(const Event& e) {
    switch (e.kind) {
      case EventKind::TaskArrival: on_arrival(rec(e.task_id)); break;
      case EventKind::TxComplete: on_tx_complete(rec(e.task_id)); break;
      case EventKind::ExecComplete: on_exec_complete(rec(e.task_id)); break;
      case EventKind::DeadlineExpiry: on_deadline(rec(e.task_id)); break;
      case EventKind::MobilityTick: on_tick(); break;
      case EventKind::BatchFlush: on_flush(); break;
    }
  }

  void on_tick() {
    world_ = step_mobility(std::move(world_), config_.dt);
    world_.clock = now_;
    const double next = now_ + config_.dt;
    if (next <= config_.duration + 1e-9) push(next, EventKind::MobilityTick, -1);
  }

  void refresh_backlogs() {
    for (std::size_t j = 0; j < servers_.size(); ++j) {
      const Server& s = servers_[j];
      const double f = world_.rsus[j].cpu_frequency;
      double cycles = 0.0;
      for (auto id : s.uplink) cycles += rec(id).spec.total_cycles;
      if (s.transmitting >= 0) cycles += rec(s.transmitting).spec.total_cycles;
      for (auto id : s.compute) cycles += rec(id).spec.total_cycles;
      if (s.executing >= 0) cycles += std::max(0.0, rec(s.executing).stage_end - now_) * f;
      world_.rsus[j].queued_cycles = cycles;
    }
  }

  Observation observe_task(const Record& r) {
    refresh_backlogs();
    Observation obs = observe(r.spec, world_, config_.candidate_limit);
    if (options_.observer) options_.observer(obs);
    return obs;
  }

  void on_arrival(Record& r) {
    push(r.spec.deadline, EventKind::DeadlineExpiry, r.spec.id);
    const Observation obs = observe_task(r);
    const double window = strategy_->batch_window();
    if (window > 0.0 && strategy_->hold(obs)) {
      r.stage = Stage::Held;
      held_.push_back(r.spec.id);
      if (!flush_pending_) {
        flush_pending_ = true;
        push((std::floor(now_ / window) + 1.0) * window, EventKind::BatchFlush, -1);
      }
      return;
    }
    dispatch(r, strategy_->decide(obs), obs);
  }

  void on_flush() {
    flush_pending_ = false;
    std::vector<std::int64_t> ids;
    ids.swap(held_);
    std::vector<Observation> window;
    window.reserve(ids.size());
    for (auto id : ids) window.push_back(observe_task(rec(id)));
    if (window.empty()) return;
    const auto decisions = strategy_->decide_batch(window);
    for (std::size_t i = 0; i < ids.size(); ++i) dispatch(rec(ids[i]), decisions.at(i), window[i]);
  }

  void dispatch(Record& r, Decision d, const Observation& obs) {
    r.decision = d;
    const VehicleState& v = world_.vehicles[static_cast<std::size_t>(r.spec.vehicle_id)];
    if (d.is_local()) {
      const double exec = r.spec.total_cycles / v.cpu_frequency;
      if (obs.candidates.empty() && now_ + exec > r.spec.deadline) {
        fail(r, TaskStatus::FailedNoCandidate);
        return;
      }
      r.stage = Stage::Local;
      r.stage_start = now_;
      r.stage_end = now_ + exec;
      push(r.stage_end, EventKind::ExecComplete, r.spec.id);
      return;
    }
    const auto j = static_cast<std::size_t>(d.rsu_id());
    if (j >= world_.rsus.size()) {
      fail(r, TaskStatus::FailedOutOfRange);
      return;
    }
    const RsuState& rsu = world_.rsus[j];
    const double dist = distance(v.position, rsu.position);
    const double rate = transmission_rate(v.tx_power, dist, world_.channel);
    if (dist > rsu.coverage_radius || !(rate > 0.0)) {
      fail(r, TaskStatus::FailedOutOfRange);
      return;
    }
    r.rsu = d.rsu_id();
    r.rate = rate;
    r.stage = Stage::UplinkQueue;
    servers_[j].uplink.push_back(r.spec.id);
    start_uplink(j);
  }

  void start_uplink(std::size_t j) {
    Server& s = servers_[j];
    if (s.transmitting >= 0 || s.uplink.empty()) return;
    Record& r = rec(s.uplink.front());
    s.uplink.pop_front();
    s.transmitting = r.spec.id;
    r.stage = Stage::Transmitting;
    r.stage_start = now_;
    r.stage_end = now_ + r.spec.data_size_bits / r.rate;
    push(r.stage_end, EventKind::TxComplete, r.spec.id);
  }

  void start_compute(std::size_t j) {
    Server& s = servers_[j];
    if (s.executing >= 0 || s.compute.empty()) return;
    Record& r = rec(s.compute.front());
    s.compute.pop_front();
    s.executing = r.spec.id;
    r.stage = Stage::Executing;
    r.stage_start = now_;
    r.stage_end = now_ + r.spec.total_cycles / world_.rsus[j].cpu_frequency;
    push(r.stage_end, EventKind::ExecComplete, r.spec.id);
  }

  const VehicleState& vehicle_of(const Record& r) const {
    return world_.vehicles[static_cast<std::size_t>(r.spec.vehicle_id)];
  }

  void add_airtime(double start, double end) {
    airtime_ += std::max(0.0, std::min(end, config_.duration) - std::max(start, 0.0));
  }

  void on_tx_complete(Record& r) {
    if (r.stage != Stage::Transmitting || r.stage_end != now_) return;
    const auto j = static_cast<std::size_t>(r.rsu);
    add_airtime(r.stage_start, now_);
    r.energy = vehicle_of(r).tx_power * (now_ - r.stage_start);
    servers_[j].transmitting = -1;
    r.stage = Stage::ComputeQueue;
    servers_[j].compute.push_back(r.spec.id);
    start_uplink(j);
    start_compute(j);
  }

  void on_exec_complete(Record& r) {
    if (r.stage_end != now_) return;
    if (r.stage == Stage::Local) {
      const VehicleState& v = vehicle_of(r);
      r.energy = v.energy_coefficient * r.spec.total_cycles * v.cpu_frequency * v.cpu_frequency;
      complete(r);
    } else if (r.stage == Stage::Executing) {
      const auto j = static_cast<std::size_t>(r.rsu);
      servers_[j].executing = -1;
      complete(r);
      start_compute(j);
    }
  }

  void on_deadline(Record& r) {
    if (r.stage == Stage::Done) return;
    const bool finishing_now = (r.stage == Stage::Local || r.stage == Stage::Executing) && r.stage_end <= now_;
    if (finishing_now) return;  // the completion event at this instant wins
    const VehicleState& v = vehicle_of(r);
    const auto j = static_cast<std::size_t>(std::max(r.rsu, 0));
    switch (r.stage) {
      case Stage::Held:
        std::erase(held_, r.spec.id);
        break;
      case Stage::Local: {
        const double done_cycles = (now_ - r.stage_start) * v.cpu_frequency;
        r.energy = v.energy_coefficient * done_cycles * v.cpu_frequency * v.cpu_frequency;
        break;
      }
      case Stage::UplinkQueue:
        std::erase(servers_[j].uplink, r.spec.id);
        break;
      case Stage::Transmitting:
        add_airtime(r.stage_start, now_);
        r.energy = v.tx_power * (now_ - r.stage_start);
        servers_[j].transmitting = -1;
        break;
      case Stage::ComputeQueue:
        std::erase(servers_[j].compute, r.spec.id);
        break;
      case Stage::Executing:
        servers_[j].executing = -1;
        break;
      case Stage::Pending:
      case Stage::Done:
        break;
    }
    const Stage was = r.stage;
    fail(r, TaskStatus::FailedDeadline);
    if (was == Stage::Transmitting) start_uplink(j);
    if (was == Stage::Executing) start_compute(j);
  }

  void complete(Record& r) { terminate(r, TaskStatus::Completed); }
  void fail(Record& r, TaskStatus status) { terminate(r, status); }

  void terminate(Record& r, TaskStatus status) {
    r.stage = Stage::Done;
    TaskOutcome o;
    o.task_id = r.spec.id;
    o.vehicle_id = r.spec.vehicle_id;
    o.decision = r.decision;
    o.latency_s = now_ - r.spec.created_at;
    o.energy_j = r.energy;
    o.status = status;
    o.completed_at = now_;
    r.outcome = o;
    strategy_->on_outcome(o, weighted_cost(o.latency_s, o.energy_j, world_.weights));
  }

  RunResult finish() {
    RunResult result;
    MetricsReport& m = result.metrics;
    double latency = 0.0, energy = 0.0, offloaded_bits = 0.0, reward = 0.0;
    std::int64_t offloaded = 0;
    result.outcomes.reserve(tasks_.size());
    for (const auto& r : tasks_) {
      const TaskOutcome& o = r.outcome.value();
      result.outcomes.push_back(o);
      ++m.totals.generated;
      switch (o.status) {
        case TaskStatus::Completed: ++m.totals.completed; break;
        case TaskStatus::FailedDeadline: ++m.totals.failed_deadline; break;
        case TaskStatus::FailedOutOfRange: ++m.totals.failed_out_of_range; break;
        case TaskStatus::FailedNoCandidate: ++m.totals.failed_no_candidate; break;
      }
      latency += o.latency_s;
      energy += o.energy_j;
      reward += reward_from_cost(weighted_cost(o.latency_s, o.energy_j, world_.weights));
      if (o.decision.is_offload()) {
        ++offloaded;
        if (o.status == TaskStatus::Completed) offloaded_bits += r.spec.data_size_bits;
      }
    }
    const double n = static_cast<double>(m.totals.generated);
    if (n > 0) {
      m.mean_latency_s = latency / n;
      m.mean_energy_j = energy / n;
      m.offloading_ratio = static_cast<double>(offloaded) / n;
      m.failure_rate = static_cast<double>(m.totals.failed()) / n;
      m.reward_history.push_back(reward / n);
    } else {
      m.reward_history.push_back(0.0);
    }
    m.throughput_bps = offloaded_bits / config_.duration;
    m.channel_utilization = airtime_ / (config_.duration * static_cast<double>(world_.rsus.size()));
    return result;
  }

  ScenarioConfig config_;
  RunOptions options_;
  World world_;
  std::vector<Record> tasks_;
  std::vector<Server> servers_;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::vector<std::int64_t> held_;
  bool flush_pending_ = false;
  Strategy* strategy_ = nullptr;
  std::uint64_t seq_ = 0;
  double now_ = 0.0;
  double last_time_ = 0.0;
  double airtime_ = 0.0;
};

inline RunResult simulate(const ScenarioConfig& config, Strategy& strategy, const ChannelParams& channel,
                          const CostWeights& weights, RunOptions options = {}) {
  Simulator sim(config, channel, weights, std::move(options));
  return sim.run(strategy);
}

inline MetricsReport run(const ScenarioConfig& config, Strategy& strategy, const ChannelParams& channel,
                         const CostWeights& weights) {
  return simulate(config, strategy, channel, weights).metrics;
}

}  // namespace vto
