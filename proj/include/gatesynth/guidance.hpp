#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gatesynth/camera.hpp"
#include "gatesynth/scene.hpp"

namespace gatesynth {

struct VehicleState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double yaw = 0.0;
};

struct PerceptionSample {
  double center_u = 0.0;  // pixels
  double center_v = 0.0;
  double distance = 0.0;  // meters
  bool detected = false;
};

struct PerceptionNoise {
  double pixel_sigma = 0.0;
  // Mean absolute distance error; drawn as Gaussian with sigma = mae * sqrt(pi / 2).
  double distance_mae = 0.0;
};

// Ground-truth projection of the gate centre plus zero-mean noise. Not
// detected unless the centre is in front and at least three panel corners are
// inside the frame.
PerceptionSample perceive(const CameraModel& camera, const GateInstance& gate, const PerceptionNoise& noise, Rng& rng);

struct PidGains {
  double kp = 1.0;
  double ki = 0.05;
  double kd = 0.1;
  double output_limit = 1.0;
  double integral_limit = 2.0;
};

struct PidController {
  PidGains gains;
  double integral = 0.0;
  double previous_error = 0.0;
  bool has_previous = false;

  void reset() {
    integral = 0.0;
    previous_error = 0.0;
    has_previous = false;
  }
};

// kp e + ki ∫e + kd de/dt with the integral clamped to ±integral_limit and
// the output to ±output_limit. The derivative is zero on the first step.
double pid_step(PidController& pid, double error, double dt);

enum class GuidanceMode : std::uint8_t { kSearch, kAlign, kApproach, kCross, kDone };

std::string_view mode_name(GuidanceMode mode);

struct GuidanceState {
  GuidanceMode mode = GuidanceMode::kSearch;
  double entered_at = 0.0;
  double dash_until = 0.0;  // CROSS only
  double dash_yaw = 0.0;    // CROSS only
};

struct GuidanceConfig {
  double cruise = 1.0;
  double cross_distance = 1.5;
  double dash_margin = 0.5;
  double align_tolerance_px = 20.0;
  // The crossing test uses the median of the distance estimates taken over
  // the last `distance_window_m` meters of flight at cruise speed (at least
  // one sample); 0 uses the raw estimate.
  double distance_window_m = 0.8;
  double search_yaw_rate = 0.5;
  double hold_altitude = 1.3;
  double altitude_gain = 1.0;
  PidGains yaw_gains{1.0, 0.05, 0.1, 1.0, 2.0};
  PidGains vertical_gains{1.0, 0.05, 0.1, 1.0, 2.0};
  // Image size and principal point used to normalize pixel errors.
  Intrinsics intrinsics;
  Viewport viewport;
};

struct VelocityCommand {
  Vec3 velocity = Vec3::Zero();  // world frame, m/s
  double yaw_rate = 0.0;         // rad/s, counter-clockwise about world z
};

struct GuidanceOutput {
  VelocityCommand command;
  GuidanceState next;
};

// Controllers carried across steps alongside the state.
struct GuidanceControllers {
  PidController yaw;
  PidController vertical;
  std::deque<double> recent_distances;
};

// SEARCH: yaw sweep at altitude until a detection. ALIGN: yaw onto the gate
// centre, no forward motion; APPROACH once the horizontal error is under
// align_tolerance_px. APPROACH: cruise forward while steering yaw and climb
// rate on the pixel error; CROSS once the median distance estimate over the
// last distance_window_m of flight drops below cross_distance. CROSS:
// open-loop dash along the entry heading for (cross_distance + dash_margin) / cruise seconds. DONE when `gate_passed`
// (range-finder trigger) or the dash runs out. Horizontal-plus-vertical
// commanded speed never exceeds cruise.
GuidanceOutput guidance_step(const GuidanceState& state, GuidanceControllers& controllers, const VehicleState& vehicle,
                             const PerceptionSample& sample, bool gate_passed, double now, double dt,
                             const GuidanceConfig& cfg);

enum class StartLabel : std::uint8_t { kLeft, kCentre, kRight };

std::string_view start_name(StartLabel s);
StartLabel start_from_name(std::string_view name);

struct SimConfig {
  GuidanceConfig guidance;
  PerceptionNoise noise;
  double physics_dt = 0.01;
  double perception_rate = 20.0;
  double velocity_tau = 0.3;
  // Tilt the body (and camera) so its z axis follows the thrust direction
  // a + g z; forward acceleration pitches the camera down.
  bool attitude_coupling = true;
  double timeout = 60.0;
  // Starting geometry relative to the gate centre, in the gate's front half-space.
  double start_distance = 6.0;
  double start_lateral = 3.0;
  double start_altitude = 1.3;
};

struct TrajectoryPoint {
  double t = 0.0;
  VehicleState state;
  GuidanceMode mode = GuidanceMode::kSearch;
};

struct CrossingOffset {
  double lateral = 0.0;   // along the gate width axis, meters
  double vertical = 0.0;  // along world z, meters
  double euclidean() const;
};

struct SimRun {
  std::vector<TrajectoryPoint> trajectory;
  std::optional<CrossingOffset> crossing;
  bool success = false;
  double cruise = 0.0;
  StartLabel start = StartLabel::kCentre;
  std::uint64_t seed = 0;
};

// Start position for a protocol label: start_distance in front of the gate,
// shifted start_lateral to the vehicle's left/right, at start_altitude.
Vec3 protocol_start(const GateInstance& gate, StartLabel label, const SimConfig& cfg);

// First-order velocity tracking (time constant velocity_tau) at physics_dt,
// perception and guidance at perception_rate with zero-order hold. Ends on
// DONE or timeout; success requires passing the gate plane inside the panel.
SimRun simulate_run(const GateInstance& gate, const Vec3& start, double cruise, std::uint64_t seed,
                    const SimConfig& cfg, StartLabel label = StartLabel::kCentre);

struct CrossingGroup {
  double cruise = 0.0;
  StartLabel start = StartLabel::kCentre;
  std::vector<double> offsets;  // Euclidean, runs that crossed
  std::size_t runs = 0;
  std::size_t successes = 0;
  double mean = 0.0;
  double max = 0.0;
};

// Groups by (cruise, start) in first-seen order.
std::vector<CrossingGroup> crossing_stats(std::span<const SimRun> runs);

struct ProtocolOptions {
  std::vector<double> speeds{0.5, 1.0, 2.0};
  std::vector<StartLabel> starts{StartLabel::kLeft, StartLabel::kCentre, StartLabel::kRight};
  int runs_per_cell = 5;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

// Default protocol gate: a 1.5 m x 1.5 m frame centred 1.5 m up at the
// origin, facing -x.
GateSpec protocol_gate_spec();
GateInstance protocol_gate(const GateSpec& spec);

std::vector<SimRun> run_protocol(const GateInstance& gate, const SimConfig& cfg, const ProtocolOptions& options);

std::string format_crossing_table(std::span<const CrossingGroup> groups);
void write_trajectories_csv(std::ostream& out, std::span<const SimRun> runs);

}  // namespace gatesynth
