#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "covctl/scenario_io.hpp"

namespace covctl {

/// Command-driven domain: every vertex moves with a velocity fixed when the
/// last steering command was applied, v + diag(s) (q - centroid), so edge
/// speeds are piecewise constant between commands.
class LiveDomain {
 public:
  explicit LiveDomain(ConvexPolygon initial);

  const ConvexPolygon& polygon() const { return polygon_; }
  Vec2 velocity() const { return velocity_; }
  Vec2 scale_rate() const { return scale_rate_; }

  /// Error text when rejected; the domain is unchanged then.
  std::optional<std::string> set_velocity(Vec2 v, double dt);
  std::optional<std::string> set_scale_rate(Vec2 s, double dt);

  /// Polygon one step ahead. When scaling would degenerate the polygon the
  /// scale rate is zeroed first and `halted` receives the reason.
  ConvexPolygon advance(double dt, std::string* halted);

 private:
  std::optional<std::string> retarget(Vec2 v, Vec2 s, double dt);
  std::optional<std::string> step_problem(const std::vector<Vec2>& u, double dt) const;
  std::vector<Vec2> vertex_velocities(Vec2 v, Vec2 s) const;

  ConvexPolygon polygon_;
  double min_area_;
  Vec2 velocity_;
  Vec2 scale_rate_;
  std::vector<Vec2> vertex_velocity_;
};

/// A steering command as applied at a step boundary.
struct TimedCommand {
  std::size_t step = 0;
  nlohmann::json command;
};

/// Rebuild the per-step keyframe script that a live session produced from
/// its domain commands.
DomainScript commands_to_script(const ConvexPolygon& initial, double t0, double dt,
                                std::size_t steps, const std::vector<TimedCommand>& log);

struct SessionOptions {
  /// Frames are emitted every `frame_decimation` ticks.
  std::size_t frame_decimation = 2;
};

/// One live simulation. submit() may be called from any thread; tick() from
/// the simulation thread only.
class Session {
 public:
  explicit Session(ScenarioFile scenario, SessionOptions options = {});

  /// Parses and queues a command. Returns an error message for malformed or
  /// invalid commands, which are not queued.
  std::optional<nlohmann::json> submit(std::string_view text);

  /// Applies queued commands, advances one step unless paused, and returns
  /// the outgoing messages (acks, errors, frame) in order.
  std::vector<nlohmann::json> tick();

  double time() const { return t_; }
  std::size_t steps() const { return step_; }
  bool paused() const { return paused_; }
  double kappa() const { return control_.kappa; }
  const std::vector<Point2>& positions() const { return positions_; }
  const ConvexPolygon& domain() const { return domain_.polygon(); }
  const std::vector<Point2>& initial_positions() const { return initial_; }
  const ConvexPolygon& initial_domain() const { return initial_domain_; }
  const ScenarioFile& scenario() const { return scenario_; }
  /// Domain commands since the last reset.
  const std::vector<TimedCommand>& command_log() const { return log_; }

  nlohmann::json frame();

 private:
  /// Without a seed the scenario's own placement is restored.
  void reset(std::optional<std::uint64_t> seed);
  void apply(const nlohmann::json& cmd, std::vector<nlohmann::json>& out);
  void advance();

  ScenarioFile scenario_;
  SessionOptions options_;
  ControlConfig control_;
  ConvexPolygon initial_domain_;
  LiveDomain domain_;
  std::vector<Point2> initial_;
  std::vector<Point2> positions_;
  std::vector<TimedCommand> log_;
  double t0_ = 0.0;
  double t_ = 0.0;
  std::size_t step_ = 0;
  std::size_t ticks_ = 0;
  std::uint64_t seq_ = 0;
  bool paused_ = false;

  std::mutex queue_mutex_;
  std::deque<nlohmann::json> queue_;
};

/// Batch configuration that replays the session's domain commands from its
/// last reset. Kappa changes are not part of the replay.
ScenarioConfig batch_equivalent(const Session& session);

}  // namespace covctl
