#pragma once

// Particle swarm optimization (inertia / cognitive / social velocity update,
// clamped positions and velocities) and the per-window task assignment
// objective it is used on.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <thread>
#include <vector>

#include "vto/decision.hpp"
#include "vto/domain.hpp"
#include "vto/errors.hpp"
#include "vto/mobility.hpp"
#include "vto/rng.hpp"

namespace vto {

struct Bounds {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const Bounds&) const = default;
};

struct PsoConfig {
  int particles = 30;
  int iterations = 100;
  double inertia = 0.7;
  double cognitive = 1.5;
  double social = 1.5;
  std::vector<Bounds> bounds;  // one per dimension, or a single entry broadcast to all
  std::vector<double> v_max;   // empty: half the bound width
  std::uint64_t seed = 1;
  int threads = 1;  // fitness evaluation fan-out

  bool operator==(const PsoConfig&) const = default;
};

inline void validate(const PsoConfig& c, std::size_t dim) {
  using detail::require;
  require(dim >= 1, "dim", "must be >= 1");
  require(c.particles >= 1, "particles", "must be >= 1");
  require(c.iterations >= 1, "iterations", "must be >= 1");
  require(c.inertia >= 0.0 && c.inertia <= 1.0, "inertia", "must be in [0, 1]");
  require(c.cognitive >= 0.0, "cognitive", "must be >= 0");
  require(c.social >= 0.0, "social", "must be >= 0");
  require(c.bounds.size() == 1 || c.bounds.size() == dim, "bounds", "need one entry or one per dimension");
  for (const auto& b : c.bounds) require(b.lo < b.hi, "bounds", "lo must be < hi");
  require(c.v_max.empty() || c.v_max.size() == 1 || c.v_max.size() == dim, "v_max",
          "need none, one entry, or one per dimension");
  for (double v : c.v_max) require(v > 0.0, "v_max", "must be > 0");
  require(c.threads >= 1, "threads", "must be >= 1");
}

struct Particle {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> best_position;
  double best_fitness = std::numeric_limits<double>::infinity();
  Rng rng;  // per-particle stream, independent of evaluation order
};

struct Swarm {
  std::vector<Particle> particles;
  std::vector<double> global_best_position;
  double global_best_fitness = std::numeric_limits<double>::infinity();
  std::vector<Bounds> bounds;  // expanded to dim
  std::vector<double> v_max;   // expanded to dim

  std::size_t dim() const { return bounds.size(); }
};

struct VelocityCoefficients {
  double inertia = 0.7;
  double cognitive = 1.5;
  double social = 1.5;
};

/// One coordinate of the canonical update, clamped to +-v_max.
inline double velocity_update(double v, double x, double personal_best, double global_best, double r1, double r2,
                              const VelocityCoefficients& k, double v_max) {
  const double next = k.inertia * v + k.cognitive * r1 * (personal_best - x) + k.social * r2 * (global_best - x);
  return std::clamp(next, -v_max, v_max);
}

namespace detail {

template <class Fitness>
std::vector<double> evaluate_all(const Swarm& s, Fitness& fitness, int threads) {
  const std::size_t n = s.particles.size();
  std::vector<double> out(n);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fitness(std::span<const double>(s.particles[i].position));
    return out;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        out[i] = fitness(std::span<const double>(s.particles[i].position));
      }
    });
  }
  pool.clear();  // join
  return out;
}

inline void check_finite(std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw NonFiniteFitness(i);
  }
}

// Strict improvement only; ties keep the incumbent.
inline void update_bests(Swarm& s, std::span<const double> fitness) {
  for (std::size_t i = 0; i < s.particles.size(); ++i) {
    Particle& p = s.particles[i];
    if (fitness[i] < p.best_fitness) {
      p.best_fitness = fitness[i];
      p.best_position = p.position;
    }
  }
  for (const auto& p : s.particles) {
    if (p.best_fitness < s.global_best_fitness) {
      s.global_best_fitness = p.best_fitness;
      s.global_best_position = p.best_position;
    }
  }
}

}  // namespace detail

template <class Fitness>
Swarm init_swarm(std::size_t dim, const PsoConfig& config, Fitness&& fitness) {
  validate(config, dim);
  Swarm s;
  s.bounds.resize(dim);
  s.v_max.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    s.bounds[d] = config.bounds.size() == 1 ? config.bounds[0] : config.bounds[d];
    if (config.v_max.empty()) {
      s.v_max[d] = 0.5 * (s.bounds[d].hi - s.bounds[d].lo);
    } else {
      s.v_max[d] = config.v_max.size() == 1 ? config.v_max[0] : config.v_max[d];
    }
  }
  s.particles.resize(static_cast<std::size_t>(config.particles));
  for (std::size_t i = 0; i < s.particles.size(); ++i) {
    Particle& p = s.particles[i];
    p.rng = make_rng(config.seed, Stream::Swarm, i);
    p.position.resize(dim);
    p.velocity.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      p.position[d] = uniform(p.rng, s.bounds[d].lo, s.bounds[d].hi);
      p.velocity[d] = uniform(p.rng, -s.v_max[d], s.v_max[d]);
    }
  }
  const auto values = detail::evaluate_all(s, fitness, config.threads);
  detail::check_finite(values);
  detail::update_bests(s, values);
  return s;
}

/// Velocity/position update for every particle, then evaluation and best
/// updates. Throws NonFiniteFitness.
template <class Fitness>
void step(Swarm& s, Fitness&& fitness, const PsoConfig& config) {
  const VelocityCoefficients k{config.inertia, config.cognitive, config.social};
  for (auto& p : s.particles) {
    for (std::size_t d = 0; d < s.dim(); ++d) {
      const double r1 = uniform01(p.rng);
      const double r2 = uniform01(p.rng);
      p.velocity[d] = velocity_update(p.velocity[d], p.position[d], p.best_position[d], s.global_best_position[d],
                                      r1, r2, k, s.v_max[d]);
      p.position[d] = std::clamp(p.position[d] + p.velocity[d], s.bounds[d].lo, s.bounds[d].hi);
    }
  }
  const auto values = detail::evaluate_all(s, fitness, config.threads);
  detail::check_finite(values);
  detail::update_bests(s, values);
}

struct PsoResult {
  std::vector<double> best_position;
  double best_fitness = 0.0;
  std::vector<double> history;  // global best after each iteration
};

template <class Fitness>
PsoResult optimize(Fitness&& fitness, std::size_t dim, const PsoConfig& config) {
  Swarm s = init_swarm(dim, config, fitness);
  PsoResult r;
  r.history.reserve(static_cast<std::size_t>(config.iterations));
  for (int it = 0; it < config.iterations; ++it) {
    step(s, fitness, config);
    r.history.push_back(s.global_best_fitness);
  }
  r.best_position = s.global_best_position;
  r.best_fitness = s.global_best_fitness;
  return r;
}

// ---------------------------------------------------------------------------
// Window task assignment: coordinate i selects Local (0) or the j-th
// candidate of task i.

inline std::size_t decode_coordinate(double x, std::size_t candidate_count) {
  const double r = std::round(x);
  if (r <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(r), candidate_count);
}

inline std::vector<Decision> decode_assignment(std::span<const double> position, std::span<const Observation> tasks) {
  std::vector<Decision> out;
  out.reserve(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::size_t slot = decode_coordinate(position[i], tasks[i].candidates.size());
    out.push_back(slot == 0 ? Decision::local() : Decision::offload(tasks[i].candidates[slot - 1].rsu.id));
  }
  return out;
}

/// Sum of per-task costs under the decoded assignment. Backlog accumulates in
/// window order, so a task sees the cycles of earlier tasks sent to the same
/// RSU as queue wait.
inline double assignment_fitness(std::span<const double> position, std::span<const Observation> tasks,
                                 const CostWeights& w) {
  std::map<std::int32_t, double> added;
  double total = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Observation& o = tasks[i];
    const std::size_t slot = decode_coordinate(position[i], o.candidates.size());
    if (slot == 0 || !(o.candidates[slot - 1].rate_bps > 0.0)) {
      total += evaluate_local(o.task, o.vehicle, w).cost;
      continue;
    }
    const CandidateLink& c = o.candidates[slot - 1];
    double& extra = added[c.rsu.id];
    RsuState rsu = c.rsu;
    rsu.queued_cycles = c.queued_cycles + extra;
    total += evaluate_offload_at_rate(o.task, o.vehicle, rsu, c.rate_bps, w, true).cost;
    extra += o.task.total_cycles;
  }
  return total;
}

inline std::size_t max_candidates(std::span<const Observation> tasks) {
  std::size_t m = 0;
  for (const auto& o : tasks) m = std::max(m, o.candidates.size());
  return m;
}

struct WindowAssignment {
  std::vector<Decision> decisions;
  PsoResult search;
};

/// Runs PSO over a window. `base` supplies swarm constants; bounds are set
/// to [-0.5, m + 0.5] per task.
inline WindowAssignment optimize_window(std::span<const Observation> tasks, const CostWeights& w,
                                        const PsoConfig& base) {
  PsoConfig cfg = base;
  const double m = static_cast<double>(max_candidates(tasks));
  cfg.bounds = {Bounds{-0.5, m + 0.5}};
  cfg.v_max.clear();
  auto fitness = [&](std::span<const double> x) { return assignment_fitness(x, tasks, w); };
  WindowAssignment out;
  out.search = optimize(fitness, tasks.size(), cfg);
  out.decisions = decode_assignment(out.search.best_position, tasks);
  return out;
}

}  // namespace vto
