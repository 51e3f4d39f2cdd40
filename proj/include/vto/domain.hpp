#pragma once

// Closed-form latency/energy cost model for local execution and RSU offload.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "vto/errors.hpp"

namespace vto {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

inline double distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct TaskSpec {
  std::int64_t id = 0;
  std::int32_t vehicle_id = 0;
  double data_size_bits = 0.0;
  double intensity_cycles_per_bit = 0.0;
  double total_cycles = 0.0;  // data_size_bits * intensity_cycles_per_bit
  double created_at = 0.0;
  double deadline = 0.0;  // absolute

  bool operator==(const TaskSpec&) const = default;
};

inline TaskSpec make_task(std::int64_t id, std::int32_t vehicle_id, double bits, double cycles_per_bit,
                          double created_at, double deadline) {
  return TaskSpec{id, vehicle_id, bits, cycles_per_bit, bits * cycles_per_bit, created_at, deadline};
}

struct VehicleState {
  std::int32_t id = 0;
  Vec2 position;
  double speed = 0.0;    // m/s
  double heading = 0.0;  // radians
  double cpu_frequency = 1e9;
  double tx_power = 0.1;
  double energy_coefficient = 1e-27;

  bool operator==(const VehicleState&) const = default;
};

struct RsuState {
  std::int32_t id = 0;
  Vec2 position;
  double cpu_frequency = 1e10;
  double coverage_radius = 300.0;
  double queued_cycles = 0.0;

  bool operator==(const RsuState&) const = default;
};

struct ChannelParams {
  double bandwidth = 1e7;        // Hz
  double noise_power = 1e-13;    // W
  double reference_gain = 1e-4;  // gain at 1 m
  double path_loss_exponent = 3.0;
  double min_distance = 1.0;  // m

  bool operator==(const ChannelParams&) const = default;
};

struct CostWeights {
  double lambda = 0.5;
  bool operator==(const CostWeights&) const = default;
};

struct CostBreakdown {
  double time_s = 0.0;
  double energy_j = 0.0;
  double cost = 0.0;
};

struct OffloadCost : CostBreakdown {
  double t_tx = 0.0;
  double t_exec = 0.0;
  double t_wait = 0.0;
};

inline double weighted_cost(double time_s, double energy_j, const CostWeights& w) {
  return time_s + w.lambda * energy_j;
}

/// Log-distance path loss, g0 * max(d, d_min)^-alpha.
inline double channel_gain(double distance_m, const ChannelParams& p) {
  return p.reference_gain * std::pow(std::max(distance_m, p.min_distance), -p.path_loss_exponent);
}

inline double snr(double tx_power, double distance_m, const ChannelParams& p) {
  return tx_power * channel_gain(distance_m, p) / p.noise_power;
}

/// Shannon capacity B log2(1 + P h / N0) in bits/s.
inline double shannon_rate(double snr_linear, const ChannelParams& p) {
  return p.bandwidth * std::log2(1.0 + snr_linear);
}

inline double transmission_rate(double tx_power, double distance_m, const ChannelParams& p) {
  return shannon_rate(snr(tx_power, distance_m, p), p);
}

inline double transmission_rate(const VehicleState& v, const RsuState& r, const ChannelParams& p) {
  return transmission_rate(v.tx_power, distance(v.position, r.position), p);
}

inline CostBreakdown evaluate_local(const TaskSpec& task, const VehicleState& v, const CostWeights& w) {
  CostBreakdown c;
  c.time_s = task.total_cycles / v.cpu_frequency;
  c.energy_j = v.energy_coefficient * task.total_cycles * v.cpu_frequency * v.cpu_frequency;
  c.cost = weighted_cost(c.time_s, c.energy_j, w);
  return c;
}

/// Offload cost for a link of known rate. Queue wait is queued_cycles / f_j
/// when `include_queue` is set.
inline OffloadCost evaluate_offload_at_rate(const TaskSpec& task, const VehicleState& v, const RsuState& r,
                                            double rate_bps, const CostWeights& w, bool include_queue) {
  if (!(rate_bps > 0.0)) throw ZeroRate();
  OffloadCost c;
  c.t_tx = task.data_size_bits / rate_bps;
  c.t_exec = task.total_cycles / r.cpu_frequency;
  c.t_wait = include_queue ? r.queued_cycles / r.cpu_frequency : 0.0;
  c.time_s = c.t_tx + c.t_wait + c.t_exec;
  c.energy_j = v.tx_power * c.t_tx;
  c.cost = weighted_cost(c.time_s, c.energy_j, w);
  return c;
}

inline OffloadCost evaluate_offload(const TaskSpec& task, const VehicleState& v, const RsuState& r,
                                    const ChannelParams& p, const CostWeights& w, bool include_queue) {
  return evaluate_offload_at_rate(task, v, r, transmission_rate(v, r, p), w, include_queue);
}

inline double reward_from_cost(double cost) { return -cost; }

}  // namespace vto
