#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vto/decision.hpp"
#include "vto/domain.hpp"
#include "vto/mobility.hpp"
#include "vto/rng.hpp"

namespace vto::testing {

inline bool rel_close(double a, double b, double tol = 1e-9) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline VehicleState vehicle_at(Vec2 p, double speed = 0.0) {
  VehicleState v;
  v.position = p;
  v.speed = speed;
  return v;
}

inline RsuState rsu_at(std::int32_t id, Vec2 p, double f = 1e10, double queued = 0.0) {
  RsuState r;
  r.id = id;
  r.position = p;
  r.cpu_frequency = f;
  r.queued_cycles = queued;
  return r;
}

inline CandidateLink link(const RsuState& r, double distance, double rate, double queued = 0.0) {
  return {r, distance, rate, queued};
}

/// An observation with random task, speed and up to `max_candidates`
/// candidates with random distance, rate, backlog and RSU speed.
inline Observation random_observation(Rng& rng, std::size_t max_candidates = 3) {
  Observation o;
  o.task = make_task(0, 0, uniform(rng, 8e6, 8e7), uniform(rng, 500, 1000), 0.0, uniform(rng, 2, 10));
  o.vehicle = vehicle_at({0, 0}, uniform(rng, 10, 25));
  const auto k = std::uniform_int_distribution<std::size_t>(0, max_candidates)(rng);
  std::vector<double> d;
  for (std::size_t j = 0; j < k; ++j) d.push_back(uniform(rng, 1, 300));
  std::sort(d.begin(), d.end());
  for (std::size_t j = 0; j < k; ++j) {
    RsuState r = rsu_at(static_cast<std::int32_t>(j), {d[j], 0}, uniform(rng, 2e9, 2e10));
    const double q = uniform01(rng) < 0.3 ? 0.0 : uniform(rng, 0, 1e11);
    o.candidates.push_back(link(r, d[j], transmission_rate(o.vehicle.tx_power, d[j], ChannelParams{}), q));
  }
  return o;
}

}  // namespace vto::testing
