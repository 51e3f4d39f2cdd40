#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vto/domain.hpp"
#include "vto/mobility.hpp"

namespace vto {

struct CandidateLink {
  RsuState rsu;  // rsu.queued_cycles is the backlog at observation time
  double distance = 0.0;
  double rate_bps = 0.0;
  double queued_cycles = 0.0;
};

/// What a strategy sees when a task needs a decision.
struct Observation {
  TaskSpec task;
  VehicleState vehicle;
  std::vector<CandidateLink> candidates;  // nearest first
  double clock = 0.0;
};

class Decision {
 public:
  static Decision local() { return Decision(-1); }
  static Decision offload(std::int32_t rsu_id) { return Decision(rsu_id); }

  bool is_local() const noexcept { return rsu_ < 0; }
  bool is_offload() const noexcept { return rsu_ >= 0; }
  std::int32_t rsu_id() const noexcept { return rsu_; }

  std::string to_string() const { return is_local() ? "local" : "rsu:" + std::to_string(rsu_); }

  bool operator==(const Decision&) const = default;

 private:
  explicit Decision(std::int32_t rsu) : rsu_(rsu) {}
  std::int32_t rsu_;
};

/// Builds the observation for `task` from the current world. Backlog per RSU
/// comes from world.rsus[j].queued_cycles.
inline Observation observe(const TaskSpec& task, const World& world, int candidate_limit) {
  Observation obs;
  obs.task = task;
  obs.vehicle = world.vehicles.at(static_cast<std::size_t>(task.vehicle_id));
  obs.clock = world.clock;
  for (const auto& c : candidate_rsus(obs.vehicle, world, candidate_limit)) {
    CandidateLink link;
    link.rsu = world.rsus[static_cast<std::size_t>(c.rsu_id)];
    link.distance = c.distance;
    link.rate_bps = transmission_rate(obs.vehicle.tx_power, c.distance, world.channel);
    link.queued_cycles = link.rsu.queued_cycles;
    obs.candidates.push_back(link);
  }
  return obs;
}

struct TaskOutcome;

/// Decision plug-in consumed by the simulator. A run is single-threaded, so
/// implementations may keep per-run mutable state.
class Strategy {
 public:
  virtual ~Strategy() = default;

  virtual std::string name() const = 0;
  virtual Decision decide(const Observation& obs) = 0;

  virtual void begin_run(std::uint64_t /*seed*/) {}
  virtual void end_run() {}

  /// Batching: when > 0, tasks for which hold() returns true are collected
  /// into windows of this length and decided together by decide_batch().
  virtual double batch_window() const { return 0.0; }
  virtual bool hold(const Observation& /*obs*/) { return false; }
  virtual std::vector<Decision> decide_batch(std::span<const Observation> window) {
    std::vector<Decision> out;
    out.reserve(window.size());
    for (const auto& o : window) out.push_back(decide(o));
    return out;
  }

  /// Called once per task when it reaches a terminal status.
  virtual void on_outcome(const TaskOutcome& /*outcome*/, double /*realized_cost*/) {}
};

}  // namespace vto
