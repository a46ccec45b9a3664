#ifndef GRASPFORCE_LIFT_SIM_HPP
#define GRASPFORCE_LIFT_SIM_HPP

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "graspforce/grasp_solver.hpp"
#include "graspforce/wrench.hpp"

namespace graspforce {

/// Object being lifted. The center of mass is expressed in the gripper frame
/// with the grasp axis along x and gravity along -z.
struct SimObject {
  double mass = 0.2;                 // kg
  Vec3 com = Vec3(0.005, 0, -0.005); // m, offset from the grasp center
  double mu = 0.5;
  double max_safe_force = 15.0;      // N, crush limit
  double support0 = 1.0;             // initial ground-support fraction
  double clearance = 0.005;          // m of lift until support vanishes
};

enum class ControlMode { PRESET, FEEDBACK, PREDICTION };

struct PidGains {
  double kp = 2.0;
  double ki = 0.5;
  double kd = 0.05;
};

struct ControllerConfig {
  ControlMode mode = ControlMode::FEEDBACK;
  double threshold = 0.10;        // safety margin over the required force
  PidGains pid;
  double latency = 0.1;           // s, sensor delay (zero-order hold)
  double noise_force = 0.1;       // N, uniform bound per force component
  double noise_moment = 1e-3;     // N*m, uniform bound per moment component
  double initial_force = 2.0;     // N, reach-phase grip target
  double lift_speed = 0.001;      // m/s
  double jaw_rate_limit = 0.02;   // m/s, actuator saturation
  double contact_stiffness = 2000.0;  // N/m, grip force per jaw travel
  double reach_duration = 0.5;    // s before lifting starts
  double hold_duration = 0.5;     // s of stable hold counted as success
  unsigned seed = 0;
  // Hold-phase force used by PREDICTION mode; computed from the true object
  // when unset (regrasping passes the estimate obtained from feedback).
  std::optional<double> predicted_force;
};

struct TraceStep {
  double t;
  double required;  // true minimum per-finger grasp force
  double target;    // controller setpoint
  double actual;    // applied per-finger grasp force
  double support;   // ground-support fraction
  bool lifted;
  bool slip;
  bool crush;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  bool success = false;
  std::string failure;  // empty on success

  void write_csv(std::ostream& os) const;
};

/// Reach / lift / hold episode with ground unloading, sensor latency and
/// bounded uniform sensor noise. All randomness flows from ctl.seed.
EpisodeTrace simulate_lift(const SimObject& obj, const ControllerConfig& ctl,
                           double duration, double dt = 1e-3);

/// Wrench the fingers must supply at a given ground-support fraction.
RequiredWrench required_wrench_at(const SimObject& obj, double support);

/// Grasp force needed once the object hangs free; the PREDICTION target.
double predict_hold_force(const SimObject& obj);

/// Latency-driven upper bound on the lift speed the FEEDBACK controller can
/// track: margin * clearance / ((1 + margin) * latency).
double feedback_speed_bound(const SimObject& obj, const ControllerConfig& ctl);

struct SpeedScanResult {
  double v_max = 0;  // largest successful grid speed, 0 when all fail
  std::vector<std::pair<double, bool>> outcomes;
  bool monotone = true;  // no success above a failure
};

/// Runs one episode per grid speed (ascending) and reports the largest
/// success. Episode duration is derived from each speed.
SpeedScanResult find_max_speed(const SimObject& obj, const ControllerConfig& ctl,
                               const std::vector<double>& speeds);

struct RegraspResult {
  Vec3 gravity;            // estimated gravity vector, world frame
  Vec3 com;                // estimated center of mass, gripper frame
  double com_residual;     // skew-line RMS distance at the estimate
  double predicted_force;  // hold-phase force predicted for the new grasp
  EpisodeTrace trace;      // PREDICTION-mode regrasp episode
};

/// Hold-phase measurement at two wrist poses, center-of-mass identification,
/// then a PREDICTION-mode regrasp at a grasp point shifted by
/// `regrasp_offset` (gripper frame).
RegraspResult measure_and_regrasp(const SimObject& obj, const ControllerConfig& ctl,
                                  const std::array<Mat3, 2>& poses,
                                  const Vec3& regrasp_offset);

}  // namespace graspforce

#endif  // GRASPFORCE_LIFT_SIM_HPP
