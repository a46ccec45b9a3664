#ifndef GRASPFORCE_GRASP_SOLVER_HPP
#define GRASPFORCE_GRASP_SOLVER_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "graspforce/contact_model.hpp"
#include "graspforce/errors.hpp"
#include "graspforce/levenberg_marquardt.hpp"
#include "graspforce/wrench.hpp"

namespace graspforce {

enum class Finger { A, B };
enum class SlipState { A_SLIP, B_SLIP, TWO_FINGER };

inline const char* to_string(SlipState s) {
  switch (s) {
    case SlipState::A_SLIP: return "A_slip";
    case SlipState::B_SLIP: return "B_slip";
    case SlipState::TWO_FINGER: return "two_finger";
  }
  return "?";
}

/// Orthonormal tangential basis at a contact with normal n:
///   e_t1 = (n x e_x) / |n x e_x|,  e_t2 = e_t1 x n.
inline std::pair<Vec3, Vec3> tangential_basis(const Vec3& n, const Vec3& e_x,
                                              double eps_parallel = 1e-8) {
  const Vec3 c = n.cross(e_x);
  const double c_norm = c.norm();
  if (c_norm <= eps_parallel)
    throw DegenerateBasisError(
        "tangential_basis: contact normal is parallel to the grasp axis");
  const Vec3 e_t1 = c / c_norm;
  return {e_t1, e_t1.cross(n)};
}

/// Two-finger grasp geometry. Finger A pushes along +e_x (its inward normal
/// has a positive e_x component), finger B along -e_x. Arms run from the
/// gripper origin to the contact-surface centers.
struct GraspConfig {
  Vec3 n_A, n_B;        // inward contact normals, unit
  double mu_A, mu_B;    // friction coefficients
  Vec3 arm_A, arm_B;    // moment arms (A on the -x side, B on the +x side)
  SoftMaterial<double> material;
  Vec3 e_x = Vec3::UnitX();  // grasp-force direction

  /// Contacts on the grasp axis at scalar distances r_A, r_B from the origin.
  static GraspConfig coaxial(const Vec3& n_A, const Vec3& n_B, double mu_A, double mu_B,
                             double r_A, double r_B, const SoftMaterial<double>& mat) {
    if (!(r_A > 0) || !(r_B > 0))
      throw DomainError("GraspConfig: moment arms must be positive");
    return {n_A, n_B, mu_A, mu_B, Vec3(-r_A, 0, 0), Vec3(r_B, 0, 0), mat};
  }

  void validate() const {
    if (std::abs(n_A.norm() - 1.0) > 1e-9 || std::abs(n_B.norm() - 1.0) > 1e-9)
      throw DomainError("GraspConfig: contact normals must be unit vectors");
    if (!(mu_A > 0) || !(mu_B > 0))
      throw DomainError("GraspConfig: friction coefficients must be > 0");
    if (std::abs(e_x.norm() - 1.0) > 1e-9)
      throw DomainError("GraspConfig: grasp axis must be a unit vector");
  }
};

/// Per-contact force/moment decomposition in the local tangential basis.
struct ContactDecomposition {
  double F_n = 0;   // normal-force magnitude
  double F_t1 = 0;  // tangential component along e_t1
  double F_t2 = 0;  // tangential component along e_t2
  Vec3 e_t1 = Vec3::Zero();
  Vec3 e_t2 = Vec3::Zero();
  double M = 0;  // normal-moment magnitude (signed)

  double F_t() const { return std::hypot(F_t1, F_t2); }
};

struct GraspSolution {
  double F_A = 0;  // grasp-force magnitude of finger A along +e_x
  double F_B = 0;  // grasp-force magnitude of finger B along -e_x
  SlipState state = SlipState::A_SLIP;
  ContactDecomposition decomp_A, decomp_B;
  bool converged = false;
  int iterations = 0;
  double residual = 0;  // worst active-constraint residual at the solution

  double total() const { return F_A + F_B; }
};

/// Contact load carried by the stick surface in a one-finger slip state; fed
/// to the transition test.
struct StickQuantities {
  double F_n = 0;
  double F_t = 0;
  double M_n = 0;
};

struct OneFingerSolution {
  GraspSolution solution;
  StickQuantities stick;
};

/// Balance system G X = W_req with minimal-norm particular solution p and an
/// orthonormal nullspace basis Z.
struct GraspSystem {
  Eigen::MatrixXd G;
  Eigen::VectorXd p;
  Eigen::MatrixXd Z;
  std::array<Vec3, 2> e_t1, e_t2;  // per-finger tangential bases (A, B)
};

namespace detail {

/// Shared force/moment columns for one finger: the force rows hold the
/// direction itself, the moment rows its cross product with the arm.
inline void fill_contact_columns(Eigen::MatrixXd& G, int col0, const Vec3& n,
                                 const Vec3& e_t1, const Vec3& e_t2, const Vec3& arm) {
  const std::array<const Vec3*, 3> dirs = {&n, &e_t1, &e_t2};
  for (int j = 0; j < 3; ++j) {
    G.block<3, 1>(0, col0 + j) = *dirs[j];
    G.block<3, 1>(3, col0 + j) = arm.cross(*dirs[j]);
  }
}

inline GraspSystem build_balance_system(const GraspConfig& cfg, const RequiredWrench& w,
                                        int moment_cols, Finger pinned_moment) {
  cfg.validate();
  auto [et1_A, et2_A] = tangential_basis(cfg.n_A, cfg.e_x);
  auto [et1_B, et2_B] = tangential_basis(cfg.n_B, cfg.e_x);

  const int cols = 6 + moment_cols;
  GraspSystem sys;
  sys.G = Eigen::MatrixXd::Zero(6, cols);
  sys.e_t1 = {et1_A, et1_B};
  sys.e_t2 = {et2_A, et2_B};

  fill_contact_columns(sys.G, 0, cfg.n_A, et1_A, et2_A, cfg.arm_A);
  fill_contact_columns(sys.G, 3, cfg.n_B, et1_B, et2_B, cfg.arm_B);
  if (moment_cols == 2) {
    sys.G.block<3, 1>(3, 6) = cfg.n_A;
    sys.G.block<3, 1>(3, 7) = cfg.n_B;
  } else {
    // One-finger slip: the slipping surface transmits no normal moment, so
    // only the stick finger's moment column remains.
    sys.G.block<3, 1>(3, 6) = (pinned_moment == Finger::A) ? cfg.n_B : cfg.n_A;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      sys.G, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv(5) <= 1e-12 * sv(0))
    throw SingularConfigError("grasp matrix is rank-deficient (singular contact geometry)");

  // Minimal-norm particular solution G^T (G G^T)^{-1} W via the SVD, plus the
  // orthonormal nullspace basis from the trailing right singular vectors.
  sys.p = svd.solve(w.vec());
  sys.Z = svd.matrixV().rightCols(cols - 6);
  return sys;
}

struct EllipseParams {
  double mu;
  double m_coef;  // M_max = m_coef * mu * |F_n|^(1+gamma), with c folded in
  double gamma;
};

/// Elliptical limit-surface residual and its partial derivatives with respect
/// to (F_n, F_t1, F_t2, M). M_max follows the power-law radius of the current
/// normal force.
inline double ellipse_residual(double F_n, double F_t1, double F_t2, double M,
                               const EllipseParams& ep, Eigen::Vector4d* grad) {
  if (F_n == 0) {
    if (grad) grad->setZero();
    return 1e30;
  }
  const double f_max_sq = ep.mu * ep.mu * F_n * F_n;
  const double m_max = ep.m_coef * ep.mu * std::pow(std::abs(F_n), 1.0 + ep.gamma);
  const double m_max_sq = m_max * m_max;
  const double t_sq = F_t1 * F_t1 + F_t2 * F_t2;
  const double value = t_sq / f_max_sq + M * M / m_max_sq - 1.0;
  if (grad) {
    (*grad)(0) = -2.0 * t_sq / (f_max_sq * F_n) -
                 (2.0 + 2.0 * ep.gamma) * M * M / (m_max_sq * F_n);
    (*grad)(1) = 2.0 * F_t1 / f_max_sq;
    (*grad)(2) = 2.0 * F_t2 / f_max_sq;
    (*grad)(3) = 2.0 * M / m_max_sq;
  }
  return value;
}

inline double grasp_force_of(const Eigen::VectorXd& X, int col0, const GraspConfig& cfg,
                             const GraspSystem& sys, Finger f) {
  const int i = (f == Finger::A) ? 0 : 1;
  const Vec3& n = (f == Finger::A) ? cfg.n_A : cfg.n_B;
  const Vec3 force = X(col0) * n + X(col0 + 1) * sys.e_t1[i] + X(col0 + 2) * sys.e_t2[i];
  const double sign = (f == Finger::A) ? 1.0 : -1.0;
  return sign * cfg.e_x.dot(force);
}

inline ContactDecomposition make_decomposition(const Eigen::VectorXd& X, int col0,
                                               const GraspSystem& sys, int finger_idx,
                                               double M) {
  ContactDecomposition d;
  d.F_n = X(col0);
  d.F_t1 = X(col0 + 1);
  d.F_t2 = X(col0 + 2);
  d.e_t1 = sys.e_t1[finger_idx];
  d.e_t2 = sys.e_t2[finger_idx];
  d.M = M;
  return d;
}

// Candidate ordering: smallest total grasp force, ties broken by smallest F_A.
inline bool better_candidate(double fa1, double fb1, double fa2, double fb2) {
  const double s1 = fa1 + fb1, s2 = fa2 + fb2;
  if (s1 != s2) return s1 < s2;
  return fa1 < fa2;
}

/// Deterministic fallback root search for the two-residual system. The roots
/// lie on the first finger's zero curve, so that curve is traced globally:
/// along each direction from the origin the radial zeros of f_A are bisected
/// (log-spaced radii cover the scale spread of the power-law moment terms),
/// and a sign change of f_B between curve points of adjacent directions
/// brackets a root, polished by damped Newton steps. Rescues wrenches whose
/// root basins the four Levenberg-Marquardt starts miss.
template <typename Residuals>
std::vector<Eigen::Vector2d> two_finger_root_census(Residuals&& residuals, double scale,
                                                    const Eigen::Vector2d& thin_dir_in) {
  std::vector<Eigen::Vector2d> roots;
  Eigen::VectorXd r;
  Eigen::MatrixXd J;

  auto eval = [&](const Eigen::Vector2d& q, int which) {
    residuals(q, r, nullptr);
    return r(which);
  };

  auto polish = [&](Eigen::Vector2d q) {
    residuals(q, r, nullptr);
    if (!r.allFinite()) return;
    double cost = r.squaredNorm();
    for (int it = 0; it < 100; ++it) {
      residuals(q, r, &J);
      if (r.template lpNorm<Eigen::Infinity>() < 1e-12) break;
      Eigen::Vector2d step = J.fullPivLu().solve(-r);
      if (!step.allFinite()) return;
      bool moved = false;
      for (int half = 0; half < 30; ++half) {
        Eigen::VectorXd rt;
        residuals(q + step, rt, nullptr);
        if (rt.allFinite() && rt.squaredNorm() < cost) {
          q += step;
          cost = rt.squaredNorm();
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }
    residuals(q, r, nullptr);
    if (r.template lpNorm<Eigen::Infinity>() >= 1e-9) return;
    for (const auto& known : roots)
      if ((known - q).norm() < 1e-6 * (1.0 + q.norm())) return;
    roots.push_back(q);
  };

  // The zero sets are slivers: razor thin along the direction that changes
  // the contact moments (M_max tolerances), elongated along the squeeze.
  // Slice the plane at log-spaced squeeze levels; each slice cuts a zero
  // curve at most twice, bracketed from the slice's interior minimum.
  constexpr int n_sigma = 128;
  const double sigma_min = 0.05 * scale;
  const double sigma_max = 2e4 * scale;
  const double sigma_step = std::pow(sigma_max / sigma_min, 1.0 / (n_sigma - 1));

  const Eigen::Vector2d thin_dir = thin_dir_in.normalized();
  const Eigen::Vector2d long_dir(-thin_dir.y(), thin_dir.x());

  for (int which = 0; which < 2; ++which) {
    const int other = 1 - which;
    // previous slice's curve points and the other residual there
    std::array<double, 2> prev_fb = {std::numeric_limits<double>::quiet_NaN(),
                                     std::numeric_limits<double>::quiet_NaN()};
    std::array<Eigen::Vector2d, 2> prev_q;
    for (int ks = -n_sigma; ks <= n_sigma; ++ks) {
      if (ks == 0) continue;
      const double sigma =
          (ks > 0 ? 1.0 : -1.0) * sigma_min * std::pow(sigma_step, std::abs(ks) - 1);
      const Eigen::Vector2d base = sigma * long_dir;

      // interior minimum of f_which along the thin direction by golden
      // section seeded from a coarse sweep
      double best_tau = 0, best_f = eval(base, which);
      const double tau_span = 4.0 * std::abs(sigma) + 4.0 * scale;
      for (int i = -32; i <= 32; ++i) {
        const double tau = tau_span * i / 32.0;
        const double f = eval(base + tau * thin_dir, which);
        if (std::isfinite(f) && f < best_f) {
          best_f = f;
          best_tau = tau;
        }
      }
      double a = best_tau - tau_span / 32.0, b = best_tau + tau_span / 32.0;
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      double f1 = eval(base + x1 * thin_dir, which);
      double f2 = eval(base + x2 * thin_dir, which);
      for (int it = 0; it < 90; ++it) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - gr * (b - a);
          f1 = eval(base + x1 * thin_dir, which);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (b - a);
          f2 = eval(base + x2 * thin_dir, which);
        }
      }
      const double tau_min = 0.5 * (a + b);
      const double f_min = eval(base + tau_min * thin_dir, which);

      std::array<double, 2> fb_here = {std::numeric_limits<double>::quiet_NaN(),
                                       std::numeric_limits<double>::quiet_NaN()};
      std::array<Eigen::Vector2d, 2> q_here;
      if (std::isfinite(f_min) && f_min <= 0) {
        // bracket both zero crossings outward from the interior minimum
        for (int side = 0; side < 2; ++side) {
          const double dir_sign = side == 0 ? -1.0 : 1.0;
          double inside = tau_min, outside = tau_min;
          double step = std::max(1e-9 * scale, 1e-6 * std::abs(tau_min));
          bool bracketed = false;
          for (int it = 0; it < 200; ++it) {
            outside = inside + dir_sign * step;
            const double f = eval(base + outside * thin_dir, which);
            if (!std::isfinite(f) || f > 0) {
              bracketed = std::isfinite(f);
              break;
            }
            inside = outside;
            step *= 2.0;
          }
          if (!bracketed) continue;
          for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (inside + outside);
            if (eval(base + mid * thin_dir, which) <= 0)
              inside = mid;
            else
              outside = mid;
          }
          const Eigen::Vector2d q = base + 0.5 * (inside + outside) * thin_dir;
          q_here[side] = q;
          fb_here[side] = eval(q, other);
          if (std::abs(fb_here[side]) < 1e-7) polish(q);
        }
      }
      for (int side = 0; side < 2; ++side) {
        if (std::isfinite(prev_fb[side]) && std::isfinite(fb_here[side]) &&
            (prev_fb[side] < 0) != (fb_here[side] < 0))
          polish(0.5 * (prev_q[side] + q_here[side]));
        prev_fb[side] = fb_here[side];
        prev_q[side] = q_here[side];
      }
    }
  }
  return roots;
}

}  // namespace detail

/// Builds the 6x8 two-finger-slip system (3 force rows, 3 moment rows) over
/// the unknowns X2 = [F_A^n, F_A^t1, F_A^t2, F_B^n, F_B^t1, F_B^t2, M_A, M_B].
inline GraspSystem build_two_finger_system(const GraspConfig& cfg, const RequiredWrench& w) {
  return detail::build_balance_system(cfg, w, 2, Finger::A);
}

/// Builds the 6x7 one-finger-slip system; the slipping finger's normal moment
/// is pinned to zero and the remaining moment unknown M_stick comes last.
inline GraspSystem build_one_finger_system(const GraspConfig& cfg, const RequiredWrench& w,
                                           Finger slipping) {
  return detail::build_balance_system(cfg, w, 1, slipping);
}

/// Two-finger slip state: both contacts ride their limit surfaces. Runs
/// Levenberg-Marquardt on the two ellipse residuals over the nullspace
/// coordinates from the four fixed starts and keeps the smallest solution
/// with nonnegative normal forces.
inline GraspSolution solve_two_finger(const GraspConfig& cfg, const RequiredWrench& w) {
  GraspSystem sys = build_two_finger_system(cfg, w);

  const double w_norm = w.vec().template lpNorm<Eigen::Infinity>();
  if (w_norm == 0) {
    GraspSolution sol;
    sol.state = SlipState::TWO_FINGER;
    sol.converged = true;
    sol.decomp_A = detail::make_decomposition(Eigen::VectorXd::Zero(8), 0, sys, 0, 0);
    sol.decomp_B = detail::make_decomposition(Eigen::VectorXd::Zero(8), 3, sys, 1, 0);
    return sol;
  }

  const double m_coef = detail::max_moment_coefficient(cfg.material.k) * cfg.material.c;
  const detail::EllipseParams ep_A{cfg.mu_A, m_coef, cfg.material.gamma};
  const detail::EllipseParams ep_B{cfg.mu_B, m_coef, cfg.material.gamma};

  auto residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    const Eigen::VectorXd X = sys.p + sys.Z * q;
    r.resize(2);
    Eigen::Vector4d gA, gB;
    r(0) = detail::ellipse_residual(X(0), X(1), X(2), X(6), ep_A, J ? &gA : nullptr);
    r(1) = detail::ellipse_residual(X(3), X(4), X(5), X(7), ep_B, J ? &gB : nullptr);
    if (J) {
      Eigen::Matrix<double, 2, 8> dfdX = Eigen::Matrix<double, 2, 8>::Zero();
      dfdX.block<1, 3>(0, 0) = gA.head<3>().transpose();
      dfdX(0, 6) = gA(3);
      dfdX.block<1, 3>(1, 3) = gB.head<3>().transpose();
      dfdX(1, 7) = gB(3);
      *J = dfdX * sys.Z;
    }
  };

  const std::array<Eigen::Vector2d, 4> starts = {
      Eigen::Vector2d(1, 1), Eigen::Vector2d(1, -1), Eigen::Vector2d(-1, 1),
      Eigen::Vector2d(-1, -1)};

  // Scale of the root basins for the fallback search: the minimal-norm
  // solution sets the force scale, the per-finger moment demand the squeeze
  // scale (M_max grows as F_n^(1+gamma)).
  const double squeeze_A =
      std::pow(std::abs(sys.p(6)) / (m_coef * cfg.mu_A), 1.0 / (1.0 + cfg.material.gamma));
  const double squeeze_B =
      std::pow(std::abs(sys.p(7)) / (m_coef * cfg.mu_B), 1.0 / (1.0 + cfg.material.gamma));
  const double start_scale = std::max({1.0, sys.p.norm(), squeeze_A, squeeze_B});

  bool any_root = false;
  bool best_valid = false;
  double best_FA = 0, best_FB = 0, best_residual = 0;
  double lowest_residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_X;
  int iterations = 0;

  const double tol_neg = 1e-8 * (1.0 + w_norm);
  auto consider = [&](const Eigen::Vector2d& q, double residual_inf) {
    any_root = true;
    const Eigen::VectorXd X = sys.p + sys.Z * q;
    if (X(0) < -tol_neg || X(3) < -tol_neg) return;
    // asymptotic pseudo-roots of the residual ratios live at absurd forces
    if (X.template lpNorm<Eigen::Infinity>() > 1e6 * (1.0 + w_norm)) return;
    const double F_A = detail::grasp_force_of(X, 0, cfg, sys, Finger::A);
    const double F_B = detail::grasp_force_of(X, 3, cfg, sys, Finger::B);
    if (F_A < -tol_neg || F_B < -tol_neg) return;
    if (!best_valid || detail::better_candidate(F_A, F_B, best_FA, best_FB)) {
      best_valid = true;
      best_FA = F_A;
      best_FB = F_B;
      best_X = X;
      best_residual = residual_inf;
    }
  };

  for (const auto& q0 : starts) {
    LMResult lm = levenberg_marquardt(residuals, q0);
    iterations += lm.iterations;
    lowest_residual = std::min(lowest_residual, lm.residual_inf);
    if (lm.root_found) consider(lm.x, lm.residual_inf);
  }

  if (!best_valid) {
    // The optimizer basins depend delicately on the wrench; fall back to a
    // deterministic sign-change scan of the nullspace plane before declaring
    // the state unreachable.
    // the nullspace direction that moves the contact moments fastest
    Eigen::Matrix2d moment_rows;
    moment_rows << sys.Z(6, 0), sys.Z(6, 1), sys.Z(7, 0), sys.Z(7, 1);
    const Eigen::JacobiSVD<Eigen::Matrix2d> msvd(moment_rows, Eigen::ComputeFullV);
    for (const Eigen::Vector2d& q : detail::two_finger_root_census(
             residuals, start_scale, msvd.matrixV().col(0))) {
      Eigen::VectorXd r;
      residuals(q, r, nullptr);
      consider(q, r.template lpNorm<Eigen::Infinity>());
    }
  }

  if (!any_root)
    throw NonConvergenceError("solve_two_finger: no start reached the residual tolerance",
                              lowest_residual);
  if (!best_valid)
    throw InfeasibleGraspError(
        "solve_two_finger: every converged solution has a negative normal force");

  GraspSolution sol;
  sol.F_A = std::max(0.0, best_FA);
  sol.F_B = std::max(0.0, best_FB);
  sol.state = SlipState::TWO_FINGER;
  sol.decomp_A = detail::make_decomposition(best_X, 0, sys, 0, best_X(6));
  sol.decomp_B = detail::make_decomposition(best_X, 3, sys, 1, best_X(7));
  sol.converged = true;
  sol.iterations = iterations;
  sol.residual = best_residual;
  return sol;
}

/// One-finger slip state: the slipping surface transmits no normal moment and
/// its tangential force sits on the Coulomb limit |F_t| = mu F_n. Substituting
/// X1 = p1 + Z1 q into that condition gives a quadratic in the scalar q,
/// solved directly.
inline OneFingerSolution solve_one_finger(const GraspConfig& cfg, const RequiredWrench& w,
                                          Finger slipping) {
  GraspSystem sys = build_one_finger_system(cfg, w, slipping);

  const int o_slip = (slipping == Finger::A) ? 0 : 3;
  const int o_stick = 3 - o_slip;
  const double mu_slip = (slipping == Finger::A) ? cfg.mu_A : cfg.mu_B;

  const double p_n = sys.p(o_slip), z_n = sys.Z(o_slip, 0);
  const Eigen::Vector2d p_t(sys.p(o_slip + 1), sys.p(o_slip + 2));
  const Eigen::Vector2d z_t(sys.Z(o_slip + 1, 0), sys.Z(o_slip + 2, 0));

  const double a = z_t.squaredNorm() - mu_slip * mu_slip * z_n * z_n;
  const double b = 2.0 * (p_t.dot(z_t) - mu_slip * mu_slip * p_n * z_n);
  const double c = p_t.squaredNorm() - mu_slip * mu_slip * p_n * p_n;

  const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), 1e-300});
  double roots[2];
  int n_roots = 0;
  if (std::abs(a) <= 1e-14 * scale) {
    if (std::abs(b) <= 1e-14 * scale) {
      if (std::abs(c) <= 1e-14 * scale) {
        roots[n_roots++] = 0.0;  // identically satisfied; minimal-norm choice
      }
    } else {
      roots[n_roots++] = -c / b;
    }
  } else {
    double disc = b * b - 4.0 * a * c;
    const double disc_scale = std::max(b * b, std::abs(4.0 * a * c));
    if (disc < 0 && disc >= -1e-12 * disc_scale) disc = 0;
    if (disc >= 0) {
      const double sq = std::sqrt(disc);
      const double q1 = (b >= 0) ? (-b - sq) / (2 * a) : (-b + sq) / (2 * a);
      roots[n_roots++] = q1;
      if (sq > 0) roots[n_roots++] = c / (a * q1);
    }
  }
  if (n_roots == 0)
    throw InfeasibleGraspError(
        "solve_one_finger: no real solution on the Coulomb slip condition");

  const double w_norm = w.vec().template lpNorm<Eigen::Infinity>();
  const double tol_neg = 1e-8 * (1.0 + w_norm);
  bool best_valid = false;
  double best_FA = 0, best_FB = 0;
  Eigen::VectorXd best_X;
  for (int i = 0; i < n_roots; ++i) {
    const Eigen::VectorXd X = sys.p + sys.Z.col(0) * roots[i];
    if (X(0) < -tol_neg || X(3) < -tol_neg) continue;
    const double F_A = detail::grasp_force_of(X, 0, cfg, sys, Finger::A);
    const double F_B = detail::grasp_force_of(X, 3, cfg, sys, Finger::B);
    if (F_A < -tol_neg || F_B < -tol_neg) continue;
    if (!best_valid || detail::better_candidate(F_A, F_B, best_FA, best_FB)) {
      best_valid = true;
      best_FA = F_A;
      best_FB = F_B;
      best_X = X;
    }
  }
  if (!best_valid)
    throw InfeasibleGraspError(
        "solve_one_finger: no root yields nonnegative normal forces");

  OneFingerSolution out;
  GraspSolution& sol = out.solution;
  sol.F_A = std::max(0.0, best_FA);
  sol.F_B = std::max(0.0, best_FB);
  sol.state = (slipping == Finger::A) ? SlipState::A_SLIP : SlipState::B_SLIP;
  const double M_stick = best_X(6);
  sol.decomp_A = detail::make_decomposition(best_X, 0, sys, 0,
                                            (slipping == Finger::A) ? 0.0 : M_stick);
  sol.decomp_B = detail::make_decomposition(best_X, 3, sys, 1,
                                            (slipping == Finger::B) ? 0.0 : M_stick);
  sol.converged = true;

  const double slip_n = best_X(o_slip);
  const double slip_t = std::hypot(best_X(o_slip + 1), best_X(o_slip + 2));
  sol.residual = (slip_n > 0)
                     ? std::abs(slip_t * slip_t / (mu_slip * mu_slip * slip_n * slip_n) - 1.0)
                     : 0.0;

  out.stick.F_n = best_X(o_stick);
  out.stick.F_t = std::hypot(best_X(o_stick + 1), best_X(o_stick + 2));
  out.stick.M_n = M_stick;
  return out;
}

/// Limit-surface load ratio of the stick surface,
///   (F_t / mu F_n)^2 + (M_n / M_max)^2,
/// with M_max evaluated at the stick finger's normal force.
inline double stick_surface_residual(const StickQuantities& stick, double mu,
                                     const SoftMaterial<double>& mat) {
  if (stick.F_n <= 0) return std::numeric_limits<double>::infinity();
  const double f_max = mu * stick.F_n;
  const double m_max =
      detail::max_moment_coefficient(mat.k) * mu * mat.c * std::pow(stick.F_n, 1.0 + mat.gamma);
  return (stick.F_t * stick.F_t) / (f_max * f_max) +
         (stick.M_n * stick.M_n) / (m_max * m_max);
}

/// True when the stick surface cannot carry its load, i.e. the one-finger
/// hypothesis must give way to the two-finger slip state. The boundary itself
/// (ratio exactly 1) stays one-finger.
inline bool stick_transition_check(const StickQuantities& stick, double mu,
                                   const SoftMaterial<double>& mat) {
  if (stick.F_n <= 0) return true;
  return stick_surface_residual(stick, mu, mat) > 1.0;
}

/// Full slip-state decision: solve both one-finger hypotheses, keep the one
/// demanding the larger total force (that finger slips first as the grasp
/// force decreases), and fall back to the two-finger state when the stick
/// surface would be overloaded.
inline GraspSolution solve_grasp_force(const GraspConfig& cfg, const RequiredWrench& w) {
  cfg.validate();
  if (w.vec().template lpNorm<Eigen::Infinity>() == 0) {
    GraspSystem sys = build_one_finger_system(cfg, w, Finger::A);
    GraspSolution sol;
    sol.state = SlipState::A_SLIP;
    sol.converged = true;
    sol.decomp_A = detail::make_decomposition(Eigen::VectorXd::Zero(7), 0, sys, 0, 0);
    sol.decomp_B = detail::make_decomposition(Eigen::VectorXd::Zero(7), 3, sys, 1, 0);
    return sol;
  }

  bool has_A = false, has_B = false;
  OneFingerSolution hyp_A, hyp_B;
  try {
    hyp_A = solve_one_finger(cfg, w, Finger::A);
    has_A = true;
  } catch (const InfeasibleGraspError&) {
  }
  try {
    hyp_B = solve_one_finger(cfg, w, Finger::B);
    has_B = true;
  } catch (const InfeasibleGraspError&) {
  }

  auto two_finger_or_ungraspable = [&]() -> GraspSolution {
    try {
      return solve_two_finger(cfg, w);
    } catch (const NonConvergenceError& e) {
      throw UngraspableError("solve_grasp_force: no slip state admits an equilibrium",
                             e.best_residual);
    } catch (const InfeasibleGraspError&) {
      throw UngraspableError("solve_grasp_force: no slip state admits an equilibrium",
                             std::numeric_limits<double>::infinity());
    }
  };

  if (!has_A && !has_B) return two_finger_or_ungraspable();

  const OneFingerSolution* chosen;
  if (has_A && has_B)
    chosen = (hyp_A.solution.total() >= hyp_B.solution.total()) ? &hyp_A : &hyp_B;
  else
    chosen = has_A ? &hyp_A : &hyp_B;

  const double mu_stick =
      (chosen->solution.state == SlipState::A_SLIP) ? cfg.mu_B : cfg.mu_A;
  if (stick_transition_check(chosen->stick, mu_stick, cfg.material))
    return two_finger_or_ungraspable();
  return chosen->solution;
}

}  // namespace graspforce

#endif  // GRASPFORCE_GRASP_SOLVER_HPP
