#include "graspforce/lift_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <numbers>
#include <random>

#include "graspforce/errors.hpp"
#include "graspforce/force_map.hpp"

namespace graspforce {

namespace {

constexpr double kJawHalfSpan = 0.03;  // m, grasp center to contact
constexpr double kNormalTiltDeg = 2.0; // in-plane tilt keeping bases nondegenerate

GraspConfig sim_grasp_config(const SimObject& obj) {
  const double a = kNormalTiltDeg * std::numbers::pi / 180.0;
  const Vec3 n_A(std::cos(a), std::sin(a), 0);
  const Vec3 n_B(-std::cos(a), std::sin(a), 0);
  return GraspConfig::coaxial(n_A, n_B, obj.mu, obj.mu, kJawHalfSpan, kJawHalfSpan,
                              SoftMaterial<double>::silicone_pad());
}

double per_finger_force(const GraspSolution& sol) { return std::max(sol.F_A, sol.F_B); }

struct ExternalState {
  Vec3 F_ext;  // net external force on the object, gripper frame
  Vec3 M_ext;  // net external moment about the gripper origin
};

ExternalState external_at(const SimObject& obj, double support) {
  const Vec3 g_eff(0, 0, -(1.0 - support) * obj.mass * kGravity);
  return {g_eff, obj.com.cross(g_eff)};
}

// Per-finger measured wrenches consistent with the current external load plus
// an internal squeeze pair; only the sums matter to the estimator.
WrenchFeedback synthesize_feedback(const ExternalState& ext, double squeeze) {
  WrenchFeedback fb;
  fb.r_A = Vec3(-kJawHalfSpan, 0, 0);
  fb.r_B = Vec3(kJawHalfSpan, 0, 0);
  const Vec3 internal = squeeze * Vec3::UnitX();
  fb.F_A = -0.5 * ext.F_ext + internal;
  fb.F_B = -0.5 * ext.F_ext - internal;
  const Vec3 m_rest = -ext.M_ext - fb.r_A.cross(fb.F_A) - fb.r_B.cross(fb.F_B);
  fb.M_A = 0.5 * m_rest;
  fb.M_B = 0.5 * m_rest;
  return fb;
}

class WrenchNoise {
public:
  WrenchNoise(unsigned seed, double f_bound, double m_bound)
      : rng_(seed), uni_(-1.0, 1.0), f_(f_bound), m_(m_bound) {}

  void corrupt(WrenchFeedback& fb) {
    for (Vec3* v : {&fb.F_A, &fb.F_B})
      for (int i = 0; i < 3; ++i) (*v)(i) += f_ * uni_(rng_);
    for (Vec3* v : {&fb.M_A, &fb.M_B})
      for (int i = 0; i < 3; ++i) (*v)(i) += m_ * uni_(rng_);
  }

private:
  std::mt19937 rng_;
  std::uniform_real_distribution<double> uni_;
  double f_, m_;
};

// solve_grasp_force with memoization of the previous wrench; reach and hold
// phases repeat the same wrench every step.
class CachedSolver {
public:
  explicit CachedSolver(const GraspConfig& cfg) : cfg_(cfg) {}

  double per_finger(const RequiredWrench& w) {
    const Vec6 key = w.vec();
    if (has_ && key == key_) return value_;
    value_ = per_finger_force(solve_grasp_force(cfg_, w));
    key_ = key;
    has_ = true;
    return value_;
  }

private:
  GraspConfig cfg_;
  Vec6 key_;
  double value_ = 0;
  bool has_ = false;
};

}  // namespace

RequiredWrench required_wrench_at(const SimObject& obj, double support) {
  const ExternalState ext = external_at(obj, support);
  return {-ext.F_ext, -ext.M_ext};
}

double predict_hold_force(const SimObject& obj) {
  return per_finger_force(solve_grasp_force(sim_grasp_config(obj), required_wrench_at(obj, 0.0)));
}

double feedback_speed_bound(const SimObject& obj, const ControllerConfig& ctl) {
  if (ctl.latency <= 0) return std::numeric_limits<double>::infinity();
  return ctl.threshold * obj.clearance / ((1.0 + ctl.threshold) * ctl.latency);
}

EpisodeTrace simulate_lift(const SimObject& obj, const ControllerConfig& ctl,
                           double duration, double dt) {
  if (!(dt > 0)) throw DomainError("simulate_lift: dt must be > 0");
  if (!(obj.mass >= 0)) throw DomainError("simulate_lift: mass must be >= 0");
  if (!(duration > 0)) throw DomainError("simulate_lift: duration must be > 0");
  if (ctl.threshold < 0 || ctl.latency < 0)
    throw DomainError("simulate_lift: threshold and latency must be >= 0");

  const GraspConfig cfg = sim_grasp_config(obj);
  CachedSolver true_solver(cfg);
  CachedSolver measured_solver(cfg);
  WrenchNoise noise(ctl.seed, ctl.noise_force, ctl.noise_moment);

  const double predicted =
      (ctl.mode == ControlMode::PREDICTION)
          ? (ctl.predicted_force ? *ctl.predicted_force : predict_hold_force(obj))
          : 0.0;

  const int latency_steps = static_cast<int>(std::ceil(ctl.latency / dt));
  std::deque<double> support_history;  // delayed sensor view of the episode

  EpisodeTrace trace;
  trace.steps.reserve(static_cast<std::size_t>(duration / dt) + 1);

  double actual = 0;
  double integral = 0;
  double prev_error = 0;
  double measured_required = 0;
  double hold_elapsed = 0;

  const int n_steps = static_cast<int>(std::round(duration / dt));
  for (int i = 0; i <= n_steps; ++i) {
    const double t = i * dt;
    const double height = std::max(0.0, (t - ctl.reach_duration) * ctl.lift_speed);
    const double support =
        obj.support0 * std::max(0.0, 1.0 - height / obj.clearance);
    const bool lifted = support == 0.0;

    support_history.push_back(support);
    if (static_cast<int>(support_history.size()) > latency_steps + 1)
      support_history.pop_front();
    const double support_delayed = support_history.front();

    const double required = true_solver.per_finger(required_wrench_at(obj, support));

    if (ctl.mode != ControlMode::PRESET) {
      WrenchFeedback fb =
          synthesize_feedback(external_at(obj, support_delayed), actual);
      noise.corrupt(fb);
      try {
        measured_required =
            measured_solver.per_finger(required_wrench_from_feedback(fb));
      } catch (const Error&) {
        // keep the previous estimate through a transiently infeasible reading
      }
    }

    double target = 0;
    switch (ctl.mode) {
      case ControlMode::PRESET:
        target = ctl.initial_force;
        break;
      case ControlMode::FEEDBACK:
        target = std::max(ctl.initial_force, (1.0 + ctl.threshold) * measured_required);
        break;
      case ControlMode::PREDICTION:
        target = (1.0 + ctl.threshold) * std::max(measured_required, predicted);
        break;
    }

    const bool slip = actual < required - 1e-12;
    const bool crush = actual > obj.max_safe_force;
    trace.steps.push_back({t, required, target, actual, support, lifted, slip, crush});

    if (slip || crush) {
      trace.failure = slip ? "slip" : "crush";
      return trace;
    }
    if (lifted) {
      hold_elapsed += dt;
      if (hold_elapsed >= ctl.hold_duration) {
        trace.success = true;
        return trace;
      }
    }

    // PID on the force error; output is a rate-limited jaw speed acting
    // through the contact stiffness.
    const double error = target - actual;
    const double deriv = (i == 0) ? 0.0 : (error - prev_error) / dt;
    double u = ctl.pid.kp * error + ctl.pid.ki * integral + ctl.pid.kd * deriv;
    if (std::abs(u) < ctl.jaw_rate_limit) integral += error * dt;  // anti-windup
    u = std::clamp(u, -ctl.jaw_rate_limit, ctl.jaw_rate_limit);
    actual = std::max(0.0, actual + ctl.contact_stiffness * u * dt);
    prev_error = error;
  }

  trace.failure = "timeout";
  return trace;
}

SpeedScanResult find_max_speed(const SimObject& obj, const ControllerConfig& ctl,
                               const std::vector<double>& speeds) {
  if (speeds.empty()) throw DomainError("find_max_speed: empty speed grid");
  if (!std::is_sorted(speeds.begin(), speeds.end()))
    throw DomainError("find_max_speed: speed grid must be ascending");

  SpeedScanResult scan;
  bool failed_below = false;
  for (double v : speeds) {
    ControllerConfig c = ctl;
    c.lift_speed = v;
    const double duration =
        c.reach_duration + obj.clearance / v + c.hold_duration + 0.5;
    const bool ok = simulate_lift(obj, c, duration).success;
    scan.outcomes.emplace_back(v, ok);
    if (ok) {
      scan.v_max = v;
      if (failed_below) scan.monotone = false;
    } else {
      failed_below = true;
    }
  }
  return scan;
}

RegraspResult measure_and_regrasp(const SimObject& obj, const ControllerConfig& ctl,
                                  const std::array<Mat3, 2>& poses,
                                  const Vec3& regrasp_offset) {
  const double weight = obj.mass * kGravity;
  const double squeeze = (1.0 + ctl.threshold) * predict_hold_force(obj);
  WrenchNoise noise(ctl.seed, ctl.noise_force, ctl.noise_moment);

  std::vector<GravityEstimate> lines;
  for (const Mat3& pose : poses) {
    const Vec3 g_local = pose.transpose() * Vec3(0, 0, -weight);
    ExternalState ext{g_local, obj.com.cross(g_local)};
    WrenchFeedback fb = synthesize_feedback(ext, squeeze);
    noise.corrupt(fb);
    lines.push_back(gravity_line(fb));
  }

  RegraspResult out;
  const CenterOfMass com = estimate_com(lines);
  out.com = com.point;
  out.com_residual = com.residual;
  out.gravity = poses[0] * lines[0].G;

  // Predict the hold-phase force at the shifted grasp point from the
  // estimated gravity and center of mass.
  const GraspConfig cfg = sim_grasp_config(obj);
  const RequiredWrench w = required_wrench_from_gravity(
      out.gravity, out.com - regrasp_offset, Mat3::Identity());
  out.predicted_force = per_finger_force(solve_grasp_force(cfg, w));

  SimObject shifted = obj;
  shifted.com = obj.com - regrasp_offset;
  ControllerConfig c = ctl;
  c.mode = ControlMode::PREDICTION;
  c.predicted_force = out.predicted_force;
  const double duration =
      c.reach_duration + obj.clearance / c.lift_speed + c.hold_duration + 0.5;
  out.trace = simulate_lift(shifted, c, duration);
  return out;
}

void EpisodeTrace::write_csv(std::ostream& os) const {
  os << "t,required,target,actual,support,lifted,slip,crush\n";
  char buf[160];
  for (const auto& s : steps) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g,%d,%d,%d\n", s.t,
                  s.required, s.target, s.actual, s.support, s.lifted ? 1 : 0,
                  s.slip ? 1 : 0, s.crush ? 1 : 0);
    os << buf;
  }
}

}  // namespace graspforce
