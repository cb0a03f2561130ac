#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "covctl/control.hpp"
#include "covctl/domain.hpp"
#include "covctl/kernels.hpp"
#include "covctl/tessellation.hpp"

namespace covctl {

enum class Integrator { Heun, Euler };
enum class Containment { Project, Error };

struct ScenarioConfig {
  std::size_t n_agents = 0;
  /// Empty means seeded uniform placement inside S(t_start).
  std::vector<Point2> initial_positions;
  std::uint64_t rng_seed = 0;
  DomainScript domain_script = DomainScript::fixed(ConvexPolygon::rectangle(0, 0, 1, 1));
  ControlConfig control;
  double dt = 0.02;
  double duration = 0.0;
  std::size_t record_every = 1;
  Containment containment = Containment::Project;
  Integrator integrator = Integrator::Heun;

  /// Throws InvalidConfig.
  void validate() const;
  /// Script start time for keyframes, 0 otherwise.
  double start_time() const;
  std::size_t step_count() const;
};

struct MetricsRecord {
  double t = 0.0;
  double e_a = 0.0;
  std::vector<double> per_agent_error;
  std::map<std::size_t, std::size_t> neighbor_histogram;
  double locational_cost = 0.0;
  double domain_area = 0.0;
};

struct TrajectoryRecord {
  double t = 0.0;
  std::vector<Point2> positions;
  std::vector<Point2> domain;
  MetricsRecord metrics;
};

struct TrajectoryLog {
  std::vector<TrajectoryRecord> records;
};

/// Domain shape and edge speeds as a function of time.
using DomainProvider = std::function<DomainState(double t, TimeSide side)>;

DomainProvider script_provider(const DomainScript& script);

/// Everything computed from one configuration at one instant.
struct Evaluation {
  DomainState domain;
  Tessellation tess;
  CellMoments moments;
  ControlOutput control;
};

Evaluation evaluate(std::span<const Point2> positions, DomainState domain,
                    const ControlConfig& control);

MetricsRecord metrics_of(const Evaluation& ev, double t);

/// Advance one step of length dt from `stage1` (the evaluation at time t) to
/// the grid time t_next. Heun re-tessellates at the projected predictor using
/// the left-limit domain at t_next. Throws AgentOutsideDomain under
/// Containment::Error.
std::vector<Point2> advance(const Evaluation& stage1, const DomainProvider& domain,
                            const ControlConfig& control, double dt, double t_next,
                            Integrator integrator, Containment containment);

std::vector<Point2> step(std::span<const Point2> positions, const ScenarioConfig& config, double t);

/// Explicit positions, or seeded rejection sampling with minimum separation
/// 10 * kEpsGeom strictly inside the start domain.
std::vector<Point2> initial_positions(const ScenarioConfig& config);

TrajectoryLog run(const ScenarioConfig& config);

/// ||p - c|| over the stacked vectors.
double aggregated_error(std::span<const Point2> positions, const CellMoments& moments);

/// Mean e_a over records with t >= t_end - window. Throws WindowTooLong.
double steady_state_mean(const TrajectoryLog& log, double window);

/// Uniform doubles in [0, 1) from the top 53 bits of mt19937_64. Unlike
/// std::uniform_real_distribution the mapping is identical on every platform.
class SeededUniform {
 public:
  explicit SeededUniform(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace covctl
