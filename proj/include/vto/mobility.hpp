#pragma once

// Scenario generation and synthetic vehicle mobility (highway ring and
// Manhattan grid).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "vto/domain.hpp"
#include "vto/errors.hpp"
#include "vto/rng.hpp"

namespace vto {

enum class MobilityKind { HighwayRing, ManhattanGrid };

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

struct ScenarioConfig {
  Vec2 area{2500.0, 1500.0};
  int vehicle_count = 200;
  int rsu_count = 15;
  MobilityKind mobility_kind = MobilityKind::ManhattanGrid;
  Range speed_range{10.0, 25.0};
  double arrival_rate_per_vehicle = 0.02;   // tasks/s
  Range task_size_range{8e6, 8e7};          // bits, 1-10 MB
  Range intensity_range{500.0, 1000.0};     // cycles/bit
  Range deadline_range{2.0, 10.0};          // s after creation
  double duration = 200.0;
  double dt = 1.0;
  std::uint64_t seed = 1;

  double vehicle_cpu_frequency = 1e9;
  double vehicle_tx_power = 0.1;
  double energy_coefficient = 1e-27;
  double rsu_cpu_frequency = 1e10;
  double rsu_cpu_spread = 0.0;  // per-RSU f_j ~ U(f(1-s), f(1+s))
  double coverage_radius = 300.0;
  double block_size = 100.0;  // Manhattan block edge
  int candidate_limit = 3;

  bool operator==(const ScenarioConfig&) const = default;
};

namespace detail {

inline void require(bool ok, const char* field, const char* constraint) {
  if (!ok) throw InvalidConfig(field, constraint);
}

inline void require_range(const Range& r, const char* field) {
  require(std::isfinite(r.lo) && std::isfinite(r.hi), field, "must be finite");
  require(r.lo > 0.0, field, "lower bound must be > 0");
  require(r.lo <= r.hi, field, "lower bound must be <= upper bound");
}

}  // namespace detail

inline void validate(const ScenarioConfig& c) {
  using detail::require;
  require(c.area.x > 0.0 && c.area.y > 0.0, "area", "both extents must be > 0");
  require(c.vehicle_count > 0, "vehicle_count", "must be > 0");
  require(c.rsu_count > 0, "rsu_count", "must be > 0");
  detail::require_range(c.speed_range, "speed_range");
  require(c.arrival_rate_per_vehicle > 0.0, "arrival_rate_per_vehicle", "must be > 0");
  detail::require_range(c.task_size_range, "task_size_range");
  detail::require_range(c.intensity_range, "intensity_range");
  detail::require_range(c.deadline_range, "deadline_range");
  require(c.dt > 0.0, "dt", "must be > 0");
  require(c.duration >= c.dt, "duration", "must be >= dt");
  require(c.vehicle_cpu_frequency > 0.0, "vehicle_cpu_frequency", "must be > 0");
  require(c.vehicle_tx_power > 0.0, "vehicle_tx_power", "must be > 0");
  require(c.energy_coefficient > 0.0, "energy_coefficient", "must be > 0");
  require(c.rsu_cpu_frequency > 0.0, "rsu_cpu_frequency", "must be > 0");
  require(c.rsu_cpu_spread >= 0.0 && c.rsu_cpu_spread < 1.0, "rsu_cpu_spread", "must be in [0, 1)");
  require(c.coverage_radius > 0.0, "coverage_radius", "must be > 0");
  require(c.block_size > 0.0 && c.block_size <= std::min(c.area.x, c.area.y), "block_size",
          "must be > 0 and fit inside the area");
  require(c.candidate_limit >= 1, "candidate_limit", "must be >= 1");
}

struct World {
  double clock = 0.0;
  std::vector<VehicleState> vehicles;
  std::vector<RsuState> rsus;
  ChannelParams channel;
  CostWeights weights;

  Vec2 area;
  MobilityKind mobility_kind = MobilityKind::HighwayRing;
  double block_size = 100.0;
  Rng mobility_rng;

  bool operator==(const World&) const = default;
};

namespace detail {

inline int heading_index(double heading) {
  const long q = std::lround(heading / (std::numbers::pi / 2.0));
  return static_cast<int>(((q % 4) + 4) % 4);
}

inline double heading_of(int index) { return index * (std::numbers::pi / 2.0); }

inline Vec2 unit(int index) {
  static constexpr Vec2 dirs[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return dirs[index];
}

// RSU grid: roughly square cells; a partially filled last row is spread
// evenly across the width.
inline std::vector<Vec2> rsu_grid(const Vec2& area, int count) {
  const int cols = std::max(1, static_cast<int>(std::lround(std::sqrt(count * area.x / area.y))));
  const int full_cols = std::min(cols, count);
  const int rows = (count + full_cols - 1) / full_cols;
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int r = 0; r < rows; ++r) {
    const int in_row = std::min(full_cols, count - r * full_cols);
    const double y = (r + 0.5) * area.y / rows;
    for (int c = 0; c < in_row; ++c) out.push_back({(c + 0.5) * area.x / in_row, y});
  }
  return out;
}

inline double grid_max(double extent, double block) { return std::floor(extent / block) * block; }

inline double snap(double v, double block, double max) {
  return std::clamp(std::round(v / block) * block, 0.0, max);
}

}  // namespace detail

/// Deterministic in `config.seed`. Throws InvalidConfig.
inline World generate_scenario(const ScenarioConfig& config) {
  validate(config);
  World w;
  w.area = config.area;
  w.mobility_kind = config.mobility_kind;
  w.block_size = config.block_size;
  w.mobility_rng = make_rng(config.seed, Stream::Mobility);

  Rng rng = make_rng(config.seed, Stream::Placement);
  w.vehicles.reserve(static_cast<std::size_t>(config.vehicle_count));
  const double max_x = detail::grid_max(config.area.x, config.block_size);
  const double max_y = detail::grid_max(config.area.y, config.block_size);
  for (int i = 0; i < config.vehicle_count; ++i) {
    VehicleState v;
    v.id = i;
    // Upper bounds are exclusive so ring positions stay in [0, width).
    v.position = {uniform(rng, 0.0, config.area.x), uniform(rng, 0.0, config.area.y)};
    v.speed = uniform(rng, config.speed_range.lo, config.speed_range.hi);
    v.cpu_frequency = config.vehicle_cpu_frequency;
    v.tx_power = config.vehicle_tx_power;
    v.energy_coefficient = config.energy_coefficient;
    const bool flip = uniform01(rng) < 0.5;
    if (config.mobility_kind == MobilityKind::HighwayRing) {
      v.heading = flip ? std::numbers::pi : 0.0;
    } else {
      const bool horizontal_road = uniform01(rng) < 0.5;
      if (horizontal_road) {
        v.position.y = detail::snap(v.position.y, config.block_size, max_y);
        v.position.x = std::min(v.position.x, max_x);
        v.heading = detail::heading_of(flip ? 2 : 0);
      } else {
        v.position.x = detail::snap(v.position.x, config.block_size, max_x);
        v.position.y = std::min(v.position.y, max_y);
        v.heading = detail::heading_of(flip ? 3 : 1);
      }
    }
    w.vehicles.push_back(v);
  }

  const auto sites = detail::rsu_grid(config.area, config.rsu_count);
  w.rsus.reserve(sites.size());
  for (std::size_t j = 0; j < sites.size(); ++j) {
    RsuState r;
    r.id = static_cast<std::int32_t>(j);
    r.position = sites[j];
    r.cpu_frequency = config.rsu_cpu_frequency;
    if (config.rsu_cpu_spread > 0.0) {
      r.cpu_frequency *= uniform(rng, 1.0 - config.rsu_cpu_spread, 1.0 + config.rsu_cpu_spread);
    }
    r.coverage_radius = config.coverage_radius;
    w.rsus.push_back(r);
  }
  return w;
}

namespace detail {

inline void step_ring(VehicleState& v, const Vec2& area, double dt) {
  const double dir = std::cos(v.heading) >= 0.0 ? 1.0 : -1.0;
  double x = std::fmod(v.position.x + dir * v.speed * dt, area.x);
  if (x < 0.0) x += area.x;
  if (x >= area.x) x = 0.0;
  v.position.x = x;
}

inline bool can_leave(const Vec2& p, int dir, double block, double max_x, double max_y) {
  switch (dir) {
    case 0: return p.x + block <= max_x + 1e-9;
    case 1: return p.y + block <= max_y + 1e-9;
    case 2: return p.x - block >= -1e-9;
    default: return p.y - block >= -1e-9;
  }
}

// Distance to the next grid line crossing along `dir`.
inline double to_next_intersection(const Vec2& p, int dir, double block) {
  const double coord = (dir == 0 || dir == 2) ? p.x : p.y;
  const double cell = coord / block;
  if (dir == 0 || dir == 1) {
    double next = (std::floor(cell) + 1.0) * block;
    return next - coord;
  }
  double prev = std::ceil(cell) - 1.0;
  return coord - prev * block;
}

inline int choose_turn(int dir, Rng& rng, const Vec2& p, double block, double max_x, double max_y) {
  const double u = uniform01(rng);
  const int left = (dir + 1) % 4, right = (dir + 3) % 4, back = (dir + 2) % 4;
  const int pick = u < 0.25 ? left : (u < 0.5 ? right : dir);
  if (can_leave(p, pick, block, max_x, max_y)) return pick;
  for (int alt : {dir, left, right, back}) {
    if (can_leave(p, alt, block, max_x, max_y)) return alt;
  }
  return back;
}

inline void step_grid(VehicleState& v, const World& w, Rng& rng, double dt) {
  const double max_x = grid_max(w.area.x, w.block_size);
  const double max_y = grid_max(w.area.y, w.block_size);
  int dir = heading_index(v.heading);
  double remaining = v.speed * dt;
  // Sitting on an intersection facing off the grid.
  if (to_next_intersection(v.position, dir, w.block_size) == w.block_size &&
      !can_leave(v.position, dir, w.block_size, max_x, max_y)) {
    dir = choose_turn(dir, rng, v.position, w.block_size, max_x, max_y);
  }
  while (remaining > 0.0) {
    const double gap = to_next_intersection(v.position, dir, w.block_size);
    const Vec2 d = unit(dir);
    if (gap > remaining) {
      v.position.x += d.x * remaining;
      v.position.y += d.y * remaining;
      break;
    }
    remaining -= gap;
    v.position.x = snap(v.position.x + d.x * gap, w.block_size, max_x);
    v.position.y = snap(v.position.y + d.y * gap, w.block_size, max_y);
    dir = choose_turn(dir, rng, v.position, w.block_size, max_x, max_y);
  }
  v.heading = heading_of(dir);
}

}  // namespace detail

/// Advances every vehicle by dt and the clock by dt. Speeds are constant.
inline World step_mobility(World world, double dt) {
  for (auto& v : world.vehicles) {
    if (v.speed <= 0.0) continue;
    if (world.mobility_kind == MobilityKind::HighwayRing) {
      detail::step_ring(v, world.area, dt);
    } else {
      detail::step_grid(v, world, world.mobility_rng, dt);
    }
  }
  world.clock += dt;
  return world;
}

struct Candidate {
  std::int32_t rsu_id = 0;
  double distance = 0.0;
};

/// RSUs in coverage, nearest first (ties by lower id), at most k.
inline std::vector<Candidate> candidate_rsus(const VehicleState& v, const World& world, int k) {
  std::vector<Candidate> out;
  for (const auto& r : world.rsus) {
    const double d = distance(v.position, r.position);
    if (d <= r.coverage_radius) out.push_back({r.id, d});
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.rsu_id < b.rsu_id;
  });
  if (out.size() > static_cast<std::size_t>(std::max(k, 0))) out.resize(static_cast<std::size_t>(k));
  return out;
}

}  // namespace vto
