#include "gatesynth/guidance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "gatesynth/error.hpp"

namespace gatesynth {

PerceptionSample perceive(const CameraModel& camera, const GateInstance& gate, const PerceptionNoise& noise, Rng& rng) {
  PerceptionSample s;
  const Vec3 center = gate.world_center();
  const Projection p = project_point(camera, center);
  s.detected = p.in_front && visible_corner_count(camera, gate) >= 3;
  s.center_u = p.pixel.x;
  s.center_v = p.pixel.y;
  s.distance = (center - camera.optical_pose().r_w).norm();
  if (noise.pixel_sigma > 0.0) {
    std::normal_distribution<double> px(0.0, noise.pixel_sigma);
    s.center_u += px(rng);
    s.center_v += px(rng);
  }
  if (noise.distance_mae > 0.0) {
    std::normal_distribution<double> d(0.0, noise.distance_mae * std::sqrt(std::numbers::pi / 2.0));
    s.distance += d(rng);
  }
  return s;
}

double pid_step(PidController& pid, double error, double dt) {
  if (!(dt > 0.0)) throw ValidationError("pid_step needs dt > 0");
  const PidGains& g = pid.gains;
  pid.integral = std::clamp(pid.integral + error * dt, -g.integral_limit, g.integral_limit);
  const double derivative = pid.has_previous ? (error - pid.previous_error) / dt : 0.0;
  pid.previous_error = error;
  pid.has_previous = true;
  const double out = g.kp * error + g.ki * pid.integral + g.kd * derivative;
  return std::clamp(out, -g.output_limit, g.output_limit);
}

std::string_view mode_name(GuidanceMode mode) {
  switch (mode) {
    case GuidanceMode::kSearch:
      return "SEARCH";
    case GuidanceMode::kAlign:
      return "ALIGN";
    case GuidanceMode::kApproach:
      return "APPROACH";
    case GuidanceMode::kCross:
      return "CROSS";
    case GuidanceMode::kDone:
      return "DONE";
  }
  return "?";
}

namespace {

Vec3 heading(double yaw) { return {std::cos(yaw), std::sin(yaw), 0.0}; }

Vec3 limit_speed(Vec3 v, double bound) {
  const double n = v.norm();
  return n > bound ? v * (bound / n) : v;
}

double median(const std::deque<double>& values) {
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

constexpr double kGravity = 9.81;

// Body attitude of a multirotor holding `acceleration` at heading `yaw`:
// body z along the thrust, body x the heading projected onto the thrust plane.
Quat thrust_attitude(const Vec3& acceleration, double yaw) {
  const Vec3 z = (acceleration + Vec3(0.0, 0.0, kGravity)).normalized();
  const Vec3 h = heading(yaw);
  const Vec3 x = (h - h.dot(z) * z).normalized();
  Mat3 r;
  r.col(0) = x;
  r.col(1) = z.cross(x);
  r.col(2) = z;
  const Eigen::Quaterniond q(r);
  return Quat{q.w(), q.x(), q.y(), q.z()}.normalized();
}

GuidanceState enter(GuidanceMode mode, double now) {
  GuidanceState s;
  s.mode = mode;
  s.entered_at = now;
  return s;
}

}  // namespace

GuidanceOutput guidance_step(const GuidanceState& state, GuidanceControllers& controllers, const VehicleState& vehicle,
                             const PerceptionSample& sample, bool gate_passed, double now, double dt,
                             const GuidanceConfig& cfg) {
  GuidanceOutput out;
  out.next = state;
  if (gate_passed && state.mode != GuidanceMode::kDone) {
    out.next = enter(GuidanceMode::kDone, now);
    return out;
  }

  const double half_w = cfg.viewport.w / 2.0;
  const double half_h = cfg.viewport.h / 2.0;
  const double err_x = (sample.center_u - cfg.intrinsics.cx) / half_w;
  const double err_y = (sample.center_v - cfg.intrinsics.cy) / half_h;
  const double hold_climb = cfg.altitude_gain * (cfg.hold_altitude - vehicle.position.z());
  Vec3 velocity = Vec3::Zero();
  double yaw_rate = 0.0;

  switch (state.mode) {
    case GuidanceMode::kSearch:
      if (sample.detected) {
        controllers.yaw.reset();
        controllers.vertical.reset();
        out.next = enter(GuidanceMode::kAlign, now);
      } else {
        yaw_rate = cfg.search_yaw_rate;
      }
      velocity.z() = hold_climb;
      break;

    case GuidanceMode::kAlign:
      if (!sample.detected) {
        out.next = enter(GuidanceMode::kSearch, now);
        velocity.z() = hold_climb;
        break;
      }
      // Gate right of centre (positive error) needs a clockwise turn.
      yaw_rate = -pid_step(controllers.yaw, err_x, dt);
      velocity.z() = hold_climb;
      if (std::abs(sample.center_u - cfg.intrinsics.cx) < cfg.align_tolerance_px) {
        controllers.yaw.reset();
        controllers.vertical.reset();
        controllers.recent_distances.clear();
        out.next = enter(GuidanceMode::kApproach, now);
      }
      break;

    case GuidanceMode::kApproach:
      velocity = heading(vehicle.yaw) * cfg.cruise;
      if (sample.detected) {
        yaw_rate = -pid_step(controllers.yaw, err_x, dt);
        // Rows grow downward: a gate below centre needs a descent.
        velocity.z() = -cfg.cruise * pid_step(controllers.vertical, err_y, dt);
        auto& history = controllers.recent_distances;
        history.push_back(sample.distance);
        const auto window =
            static_cast<std::size_t>(std::max(1L, std::lround(cfg.distance_window_m / (cfg.cruise * dt))));
        while (history.size() > window) history.pop_front();
        if (history.size() == window && median(history) < cfg.cross_distance) {
          out.next = enter(GuidanceMode::kCross, now);
          out.next.dash_until = now + (cfg.cross_distance + cfg.dash_margin) / cfg.cruise;
          out.next.dash_yaw = vehicle.yaw;
          velocity = heading(vehicle.yaw) * cfg.cruise;
          yaw_rate = 0.0;
        }
      }
      break;

    case GuidanceMode::kCross:
      if (now >= state.dash_until) {
        out.next = enter(GuidanceMode::kDone, now);
        break;
      }
      velocity = heading(state.dash_yaw) * cfg.cruise;
      break;

    case GuidanceMode::kDone:
      break;
  }
  out.command.velocity = limit_speed(velocity, cfg.cruise);
  out.command.yaw_rate = yaw_rate;
  return out;
}

std::string_view start_name(StartLabel s) {
  switch (s) {
    case StartLabel::kLeft:
      return "left";
    case StartLabel::kCentre:
      return "centre";
    case StartLabel::kRight:
      return "right";
  }
  return "?";
}

StartLabel start_from_name(std::string_view name) {
  if (name == "left") return StartLabel::kLeft;
  if (name == "centre" || name == "center") return StartLabel::kCentre;
  if (name == "right") return StartLabel::kRight;
  throw ValidationError("unknown start location '" + std::string(name) + "'");
}

double CrossingOffset::euclidean() const { return std::hypot(lateral, vertical); }

Vec3 protocol_start(const GateInstance& gate, StartLabel label, const SimConfig& cfg) {
  const Vec3 normal = gate.world_normal();
  const Vec3 facing = -normal;
  const Vec3 left = Vec3::UnitZ().cross(facing).normalized();
  double lateral = 0.0;
  if (label == StartLabel::kLeft) lateral = cfg.start_lateral;
  if (label == StartLabel::kRight) lateral = -cfg.start_lateral;
  Vec3 p = gate.world_center() + normal * cfg.start_distance + left * lateral;
  p.z() = cfg.start_altitude;
  return p;
}

SimRun simulate_run(const GateInstance& gate, const Vec3& start, double cruise, std::uint64_t seed,
                    const SimConfig& cfg, StartLabel label) {
  if (!(cruise > 0.0)) throw ValidationError("cruise speed must be positive");
  if (!(cfg.physics_dt > 0.0) || !(cfg.perception_rate > 0.0) || !(cfg.velocity_tau > 0.0)) {
    throw ValidationError("simulation rates and time constant must be positive");
  }
  SimRun run;
  run.cruise = cruise;
  run.start = label;
  run.seed = seed;

  GuidanceConfig gcfg = cfg.guidance;
  gcfg.cruise = cruise;
  CameraModel camera;
  camera.intrinsics = gcfg.intrinsics;
  camera.viewport = gcfg.viewport;

  const Vec3 center = gate.world_center();
  const Vec3 normal = gate.world_normal();
  const Vec3 width_axis = Vec3::UnitZ().cross(normal).normalized();
  const double half_w = gate.spec->width / 2.0;
  const double half_h = gate.spec->height / 2.0;

  VehicleState vehicle;
  vehicle.position = start;
  const Vec3 facing = -normal;
  vehicle.yaw = std::atan2(facing.y(), facing.x());

  Rng rng(seed);
  GuidanceState state;
  GuidanceControllers controllers{{gcfg.yaw_gains}, {gcfg.vertical_gains}, {}};
  VelocityCommand command;
  const auto steps_per_update = std::max<long>(1, std::lround(1.0 / (cfg.perception_rate * cfg.physics_dt)));
  const double guidance_dt = steps_per_update * cfg.physics_dt;
  const double alpha = 1.0 - std::exp(-cfg.physics_dt / cfg.velocity_tau);
  const auto total_steps = static_cast<long>(std::floor(cfg.timeout / cfg.physics_dt + 1e-9));

  Vec3 acceleration = Vec3::Zero();
  run.trajectory.push_back({0.0, vehicle, state.mode});
  for (long step = 0; step < total_steps; ++step) {
    const double t = step * cfg.physics_dt;
    if (step % steps_per_update == 0) {
      const Quat attitude =
          cfg.attitude_coupling ? thrust_attitude(acceleration, vehicle.yaw) : Quat::from_yaw(vehicle.yaw);
      camera.pose = {vehicle.position, attitude};
      const PerceptionSample sample = perceive(camera, gate, cfg.noise, rng);
      const GuidanceOutput out = guidance_step(state, controllers, vehicle, sample, false, t, guidance_dt, gcfg);
      command = out.command;
      state = out.next;
      if (state.mode == GuidanceMode::kDone) break;
    }

    const Vec3 before = vehicle.position;
    const Vec3 dv = alpha * (command.velocity - vehicle.velocity);
    acceleration = dv / cfg.physics_dt;
    vehicle.velocity += dv;
    vehicle.yaw += command.yaw_rate * cfg.physics_dt;
    vehicle.position += vehicle.velocity * cfg.physics_dt;

    const double s0 = (before - center).dot(normal);
    const double s1 = (vehicle.position - center).dot(normal);
    if (s0 > 0.0 && s1 <= 0.0) {
      const Vec3 hit = before + (vehicle.position - before) * (s0 / (s0 - s1));
      run.crossing = CrossingOffset{(hit - center).dot(width_axis), hit.z() - center.z()};
      state = guidance_step(state, controllers, vehicle, {}, true, t + cfg.physics_dt, guidance_dt, gcfg).next;
    }
    run.trajectory.push_back({t + cfg.physics_dt, vehicle, state.mode});
    if (state.mode == GuidanceMode::kDone) break;
  }
  run.success = run.crossing && std::abs(run.crossing->lateral) <= half_w && std::abs(run.crossing->vertical) <= half_h;
  return run;
}

std::vector<CrossingGroup> crossing_stats(std::span<const SimRun> runs) {
  if (runs.empty()) throw ValidationError("crossing_stats needs at least one run");
  std::vector<CrossingGroup> groups;
  for (const SimRun& r : runs) {
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const CrossingGroup& g) { return g.cruise == r.cruise && g.start == r.start; });
    if (it == groups.end()) {
      groups.push_back({r.cruise, r.start, {}, 0, 0, 0.0, 0.0});
      it = groups.end() - 1;
    }
    ++it->runs;
    if (r.success) ++it->successes;
    if (r.crossing) it->offsets.push_back(r.crossing->euclidean());
  }
  for (auto& g : groups) {
    if (g.offsets.empty()) continue;
    double sum = 0.0;
    for (double o : g.offsets) {
      sum += o;
      g.max = std::max(g.max, o);
    }
    g.mean = sum / static_cast<double>(g.offsets.size());
  }
  return groups;
}

GateSpec protocol_gate_spec() { return make_frame_gate(1.5, 1.5, 0.1, 1.5); }

GateInstance protocol_gate(const GateSpec& spec) {
  GateInstance gate;
  gate.spec = &spec;
  gate.position = Vec3::Zero();
  gate.yaw = std::numbers::pi;
  return gate;
}

std::vector<SimRun> run_protocol(const GateInstance& gate, const SimConfig& cfg, const ProtocolOptions& options) {
  struct Job {
    double speed;
    StartLabel start;
  };
  std::vector<Job> jobs;
  for (double speed : options.speeds) {
    for (StartLabel start : options.starts) {
      for (int r = 0; r < options.runs_per_cell; ++r) jobs.push_back({speed, start});
    }
  }
  std::vector<SimRun> runs(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < jobs.size(); k = next.fetch_add(1)) {
      runs[k] = simulate_run(gate, protocol_start(gate, jobs[k].start, cfg), jobs[k].speed,
                             derive_seed(options.seed, k), cfg, jobs[k].start);
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < std::max(1u, options.threads); ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return runs;
}

std::string format_crossing_table(std::span<const CrossingGroup> groups) {
  std::ostringstream out;
  out << "Speed (m/s) | Start  | Runs | Success | Mean offset (m) | Max offset (m)\n";
  out << "------------+--------+------+---------+-----------------+---------------\n";
  char buf[128];
  for (const auto& g : groups) {
    std::snprintf(buf, sizeof buf, "%11.2f | %-6s | %4zu | %7zu | %15.3f | %14.3f\n", g.cruise,
                  std::string(start_name(g.start)).c_str(), g.runs, g.successes, g.mean, g.max);
    out << buf;
  }
  return out.str();
}

void write_trajectories_csv(std::ostream& out, std::span<const SimRun> runs) {
  out << "run,speed,start,seed,success,t,x,y,z,vx,vy,vz,yaw,mode\n";
  char buf[256];
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const SimRun& r = runs[i];
    for (const auto& p : r.trajectory) {
      const auto& s = p.state;
      std::snprintf(buf, sizeof buf, "%zu,%.2f,%s,%llu,%d,%.3f,%.5f,%.5f,%.5f,%.5f,%.5f,%.5f,%.5f,%s\n", i, r.cruise,
                    std::string(start_name(r.start)).c_str(), static_cast<unsigned long long>(r.seed),
                    r.success ? 1 : 0, p.t, s.position.x(), s.position.y(), s.position.z(), s.velocity.x(),
                    s.velocity.y(), s.velocity.z(), s.yaw, std::string(mode_name(p.mode)).c_str());
      out << buf;
    }
  }
}

}  // namespace gatesynth
