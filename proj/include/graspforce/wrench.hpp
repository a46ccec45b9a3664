#ifndef GRASPFORCE_WRENCH_HPP
#define GRASPFORCE_WRENCH_HPP

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "graspforce/errors.hpp"

namespace graspforce {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

/// Measured force/moment pair per finger, taken about each contact-surface
/// center, with the contact frames axis-aligned to the gripper frame.
struct WrenchFeedback {
  Vec3 F_A = Vec3::Zero(), M_A = Vec3::Zero();  // finger A force and moment
  Vec3 F_B = Vec3::Zero(), M_B = Vec3::Zero();  // finger B force and moment
  Vec3 r_A = Vec3::Zero(), r_B = Vec3::Zero();  // arms, origin to contact centers
};

/// Force and moment the fingers must jointly exert, gripper frame.
struct RequiredWrench {
  Vec3 F = Vec3::Zero();
  Vec3 M = Vec3::Zero();

  Vec6 vec() const {
    Vec6 w;
    w << F, M;
    return w;
  }
  static RequiredWrench from_vec(const Vec6& w) { return {w.head<3>(), w.tail<3>()}; }
};

/// Gravity vector plus the line of possible center-of-mass locations.
struct GravityEstimate {
  Vec3 G;           // gravity in the gripper frame
  Vec3 line_point;  // minimal-norm point on the gravity line
  Vec3 line_dir;    // unit direction, parallel to G
};

struct CenterOfMass {
  Vec3 point;       // gripper frame
  double residual;  // RMS distance from the point to the constraint lines
};

/// Required wrench from per-finger feedback: the force and moment balance
/// collapses to plain sums of the measured quantities.
inline RequiredWrench required_wrench_from_feedback(const WrenchFeedback& fb) {
  RequiredWrench w;
  w.F = fb.F_A + fb.F_B;
  w.M = fb.M_A + fb.M_B + fb.r_A.cross(fb.F_A) + fb.r_B.cross(fb.F_B);
  return w;
}

/// Required wrench predicted from known gravity and center of mass.
/// `gripper_pose` rotates gripper coordinates into the world frame; `G` is
/// given in world coordinates and `com` in gripper coordinates.
inline RequiredWrench required_wrench_from_gravity(const Vec3& G, const Vec3& com,
                                                   const Mat3& gripper_pose) {
  if ((gripper_pose * gripper_pose.transpose() - Mat3::Identity()).norm() > 1e-9 ||
      gripper_pose.determinant() < 0)
    throw DomainError("required_wrench_from_gravity: pose is not a proper rotation");
  const Vec3 g_local = gripper_pose.transpose() * G;
  RequiredWrench w;
  w.F = -g_local;
  w.M = -com.cross(g_local);
  return w;
}

/// Gravity measured during the hold phase: G = -(F_A + F_B).
inline Vec3 measure_gravity(const WrenchFeedback& fb) { return -(fb.F_A + fb.F_B); }

/// Line of center-of-mass candidates from one hold-phase feedback snapshot.
/// The minimal-norm point l0 satisfies l0 x G = M_r with l0 orthogonal to G.
inline GravityEstimate gravity_line(const WrenchFeedback& fb) {
  const Vec3 G = measure_gravity(fb);
  const double g_norm = G.norm();
  if (g_norm <= 0)
    throw DomainError("gravity_line: zero measured gravity defines no line");

  const Vec3 M_r =
      -(fb.M_A + fb.M_B + fb.r_A.cross(fb.F_A) + fb.r_B.cross(fb.F_B));
  const double m_norm = M_r.norm();

  GravityEstimate est;
  est.G = G;
  est.line_dir = G / g_norm;
  if (m_norm == 0) {
    est.line_point = Vec3::Zero();
    return est;
  }
  const Vec3 cross = G.cross(M_r);
  if (cross.norm() <= 1e-12 * g_norm * m_norm)
    throw InconsistentFeedbackError(
        "gravity_line: residual moment parallel to gravity cannot arise from "
        "gravity alone");
  est.line_point = (m_norm / g_norm) * cross.normalized();
  return est;
}

/// Least-squares closest point to two or more gravity lines. Exact
/// intersections are recovered exactly; skew lines yield the minimizer of the
/// summed squared point-to-line distances, with the RMS distance reported.
inline CenterOfMass estimate_com(const std::vector<GravityEstimate>& lines,
                                 double angle_min_deg = 5.0) {
  if (lines.size() < 2)
    throw DomainError("estimate_com: need at least 2 gravity lines");

  const double cos_min = std::cos(angle_min_deg * std::numbers::pi / 180.0);
  bool separated = false;
  for (std::size_t i = 0; i < lines.size() && !separated; ++i)
    for (std::size_t j = i + 1; j < lines.size() && !separated; ++j)
      separated = std::abs(lines[i].line_dir.dot(lines[j].line_dir)) < cos_min;

  // Sum of projectors I - d d^T; each line constrains the two directions
  // orthogonal to it.
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (const auto& line : lines) {
    const Mat3 P = Mat3::Identity() - line.line_dir * line.line_dir.transpose();
    A += P;
    b += P * line.line_point;
  }

  Eigen::SelfAdjointEigenSolver<Mat3> eig(A);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  const double condition = lmin > 0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!separated || lmin <= 1e-12 * lmax)
    throw IllConditionedError("estimate_com: gravity lines are near-parallel",
                              condition);

  const Vec3 p = A.ldlt().solve(b);
  double sq = 0;
  for (const auto& line : lines) {
    const Vec3 d = p - line.line_point;
    sq += (d - line.line_dir * line.line_dir.dot(d)).squaredNorm();
  }
  return {p, std::sqrt(sq / static_cast<double>(lines.size()))};
}

}  // namespace graspforce

#endif  // GRASPFORCE_WRENCH_HPP
