#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <numbers>
#include <random>

#include "graspforce/grasp_solver.hpp"
#include "oracles.hpp"

using namespace graspforce;

namespace {

const SoftMaterial<double> kPad = SoftMaterial<double>::silicone_pad();

Vec3 tilted_normal(double sign, double tilt_deg, const Vec3& toward) {
  const double a = tilt_deg * std::numbers::pi / 180.0;
  return (std::cos(a) * sign * Vec3::UnitX() + std::sin(a) * toward).normalized();
}

// Symmetric grasp with normals tilted in-plane toward +y; vertical load G.
GraspConfig symmetric_config(double mu, double tilt_deg = 2.0) {
  return GraspConfig::coaxial(tilted_normal(+1, tilt_deg, Vec3::UnitY()),
                              tilted_normal(-1, tilt_deg, Vec3::UnitY()), mu, mu, 0.03,
                              0.03, kPad);
}

RequiredWrench vertical_load(double weight) { return {Vec3(0, 0, weight), Vec3::Zero()}; }

Eigen::VectorXd state_vector(const GraspSolution& sol) {
  Eigen::VectorXd X(8);
  X << sol.decomp_A.F_n, sol.decomp_A.F_t1, sol.decomp_A.F_t2, sol.decomp_B.F_n,
      sol.decomp_B.F_t1, sol.decomp_B.F_t2, sol.decomp_A.M, sol.decomp_B.M;
  return X;
}

double balance_residual(const GraspConfig& cfg, const RequiredWrench& w,
                        const GraspSolution& sol) {
  const GraspSystem sys = build_two_finger_system(cfg, w);
  return (sys.G * state_vector(sol) - w.vec()).norm();
}

struct RandomProblem {
  GraspConfig cfg;
  RequiredWrench w;
};

RandomProblem random_problem(std::mt19937& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto tilt = [&] { return 30.0 * uni(rng); };
  auto dir = [&] {
    Vec3 v(uni(rng), uni(rng), uni(rng));
    while (v.norm() < 0.1) v = Vec3(uni(rng), uni(rng), uni(rng));
    return v.normalized();
  };
  const Vec3 n_A = tilted_normal(+1, tilt(), dir().cross(Vec3::UnitX()).normalized());
  const Vec3 n_B = tilted_normal(-1, tilt(), dir().cross(Vec3::UnitX()).normalized());
  const double mu_A = 0.75 + 0.45 * uni(rng);  // [0.3, 1.2]
  const double mu_B = 0.75 + 0.45 * uni(rng);
  const double r_A = 0.035 + 0.015 * uni(rng);  // [0.02, 0.05] m
  const double r_B = 0.035 + 0.015 * uni(rng);

  RandomProblem p{GraspConfig::coaxial(n_A, n_B, mu_A, mu_B, r_A, r_B, kPad),
                  RequiredWrench{}};
  p.w.F = Vec3(0.5 * uni(rng), 0.5 * uni(rng), 1.75 + 1.25 * uni(rng));
  p.w.M = 0.05 * Vec3(uni(rng), uni(rng), uni(rng));
  return p;
}

}  // namespace

TEST_CASE("tangential basis: degeneracy, frozen case, orthogonality") {
  CHECK_THROWS_AS(tangential_basis(Vec3::UnitX(), Vec3::UnitX()), DegenerateBasisError);

  const Vec3 n = Vec3(0.9806, 0, 0.1961).normalized();  // 10-degree x-z tilt
  const auto [e_t1, e_t2] = tangential_basis(n, Vec3::UnitX());
  CHECK((e_t1 - Vec3(0, 1, 0)).norm() < 1e-12);
  CHECK(e_t2.x() == doctest::Approx(0.1961).epsilon(1e-3));
  CHECK(e_t2.z() == doctest::Approx(-0.9806).epsilon(1e-3));

  std::mt19937 rng(3);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 100; ++i) {
    Vec3 v(gauss(rng), gauss(rng), gauss(rng));
    if (v.norm() < 1e-3 || v.cross(Vec3::UnitX()).norm() < 1e-6) continue;
    v.normalize();
    const auto [t1, t2] = tangential_basis(v, Vec3::UnitX());
    CHECK(std::abs(t1.dot(v)) < 1e-12);
    CHECK(std::abs(t2.dot(v)) < 1e-12);
    CHECK(std::abs(t1.dot(t2)) < 1e-12);
    CHECK(t1.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t2.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("two-finger system: minimal-norm and nullspace contracts") {
  const GraspConfig cfg = symmetric_config(0.5, 5.0);

  const GraspSystem zero_sys = build_two_finger_system(cfg, RequiredWrench{});
  CHECK(zero_sys.p.norm() == 0.0);

  const RequiredWrench w = vertical_load(1.0);
  const GraspSystem sys = build_two_finger_system(cfg, w);
  CHECK(sys.G.rows() == 6);
  CHECK(sys.G.cols() == 8);
  CHECK((sys.G * sys.p - w.vec()).norm() < 1e-10);
  CHECK((sys.G * sys.Z).norm() < 1e-10);
  CHECK((sys.Z.transpose() * sys.Z - Eigen::Matrix2d::Identity()).norm() < 1e-12);

  // the particular solution matches the normal-equations form
  const Eigen::MatrixXd GGt = sys.G * sys.G.transpose();
  const Eigen::VectorXd p_ref = sys.G.transpose() * GGt.ldlt().solve(w.vec());
  CHECK((sys.p - p_ref).norm() < 1e-10);
}

TEST_CASE("moment rows match the expanded scalar balance equations") {
  // Arms on the grasp axis; the scalar rows below are the expanded
  // cross-product terms for arm_A = (-r_A,0,0), arm_B = (+r_B,0,0).
  const double r_A = 0.04, r_B = 0.025;
  const GraspConfig cfg = GraspConfig::coaxial(
      tilted_normal(+1, 12.0, Vec3(0, 0.6, 0.8).normalized()),
      tilted_normal(-1, 7.0, Vec3(0, -0.3, 1).normalized()), 0.6, 0.9, r_A, r_B, kPad);
  const GraspSystem sys = build_two_finger_system(cfg, vertical_load(1.0));

  const auto [e1A, e2A] = tangential_basis(cfg.n_A, Vec3::UnitX());
  const auto [e1B, e2B] = tangential_basis(cfg.n_B, Vec3::UnitX());

  Eigen::Matrix<double, 3, 8> moment_rows = Eigen::Matrix<double, 3, 8>::Zero();
  const Vec3 colsA[3] = {cfg.n_A, e1A, e2A};
  const Vec3 colsB[3] = {cfg.n_B, e1B, e2B};
  for (int j = 0; j < 3; ++j) {
    // x-row: no force contribution when the arms lie on the x-axis
    moment_rows(1, j) = +r_A * colsA[j].z();
    moment_rows(2, j) = -r_A * colsA[j].y();
    moment_rows(1, 3 + j) = -r_B * colsB[j].z();
    moment_rows(2, 3 + j) = +r_B * colsB[j].y();
  }
  moment_rows(0, 6) = cfg.n_A.x();
  moment_rows(1, 6) = cfg.n_A.y();
  moment_rows(2, 6) = cfg.n_A.z();
  moment_rows(0, 7) = cfg.n_B.x();
  moment_rows(1, 7) = cfg.n_B.y();
  moment_rows(2, 7) = cfg.n_B.z();

  CHECK((sys.G.bottomRows<3>() - moment_rows).norm() < 1e-14);
}

TEST_CASE("rank-deficient contact geometry is rejected") {
  const Vec3 n = tilted_normal(+1, 5.0, Vec3::UnitY());
  GraspConfig cfg{n, n, 0.5, 0.5, Vec3(-0.03, 0, 0), Vec3(-0.03, 0, 0), kPad};
  CHECK_THROWS_AS(build_two_finger_system(cfg, vertical_load(1.0)), SingularConfigError);
}

TEST_CASE("one-finger system: contracts, label swap, linear scaling") {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const RandomProblem p = random_problem(rng);
    const GraspSystem sysA = build_one_finger_system(p.cfg, p.w, Finger::A);
    CHECK(sysA.G.rows() == 6);
    CHECK(sysA.G.cols() == 7);
    CHECK((sysA.G * sysA.p - p.w.vec()).norm() < 1e-10);
    CHECK((sysA.G * sysA.Z).norm() < 1e-10);

    // swapping the slipping label swaps which normal owns the moment column
    const GraspSystem sysB = build_one_finger_system(p.cfg, p.w, Finger::B);
    CHECK((sysA.G.block<3, 1>(3, 6) - p.cfg.n_B).norm() == 0.0);
    CHECK((sysB.G.block<3, 1>(3, 6) - p.cfg.n_A).norm() == 0.0);

    // minimal-norm map is linear in the wrench
    RequiredWrench scaled{3.0 * p.w.F, 3.0 * p.w.M};
    const GraspSystem sys3 = build_one_finger_system(p.cfg, scaled, Finger::A);
    CHECK((sys3.p - 3.0 * sysA.p).norm() < 1e-9 * (1.0 + sysA.p.norm()));
  }
}

TEST_CASE("zero wrench solves to zero force") {
  const GraspConfig cfg = symmetric_config(0.5);
  const GraspSolution sol = solve_grasp_force(cfg, RequiredWrench{});
  CHECK(sol.F_A == 0.0);
  CHECK(sol.F_B == 0.0);
  CHECK(sol.state == SlipState::A_SLIP);
  CHECK(sol.converged);

  const GraspSolution two = solve_two_finger(cfg, RequiredWrench{});
  CHECK(two.F_A == 0.0);
  CHECK(two.F_B == 0.0);
}

TEST_CASE("symmetric vertical load: per-finger force approaches G/(2 mu)") {
  for (auto [weight, mu] : {std::pair{1.0, 0.5}, {2.0, 0.3}, {5.0, 1.0}}) {
    const GraspConfig cfg = symmetric_config(mu);
    const RequiredWrench w = vertical_load(weight);
    const GraspSolution sol = solve_grasp_force(cfg, w);
    const double expected = weight / (2.0 * mu);
    CAPTURE(weight);
    CAPTURE(mu);
    CHECK(sol.F_A == doctest::Approx(expected).epsilon(0.02));
    CHECK(sol.F_B == doctest::Approx(expected).epsilon(0.02));
    CHECK(sol.F_A == doctest::Approx(sol.F_B).epsilon(1e-9));  // x-force balance
    CHECK(balance_residual(cfg, w, sol) <= 1e-8 * (1.0 + w.vec().norm()));
  }
}

TEST_CASE("two-finger solve rides both limit surfaces") {
  // substantial axis moment forces the two-finger slip state
  const GraspConfig cfg = symmetric_config(0.5);
  RequiredWrench w = vertical_load(1.0);
  w.M = Vec3(0.004, 0, 0);
  const GraspSolution sol = solve_two_finger(cfg, w);
  CHECK(sol.converged);
  CHECK(sol.state == SlipState::TWO_FINGER);
  CHECK(balance_residual(cfg, w, sol) <= 1e-8 * (1.0 + w.vec().norm()));

  const double m_coef = detail::max_moment_coefficient(kPad.k) * kPad.c;
  for (const auto* d : {&sol.decomp_A, &sol.decomp_B}) {
    const double f_max = 0.5 * d->F_n;
    const double m_max = m_coef * 0.5 * std::pow(d->F_n, 1.0 + kPad.gamma);
    const double res =
        d->F_t() * d->F_t() / (f_max * f_max) + d->M * d->M / (m_max * m_max) - 1.0;
    CHECK(std::abs(res) < 1e-6);  // active constraint at the solution
    CHECK(d->F_n > 0.0);
  }
}

TEST_CASE("one-finger state: slip surface exactly on the Coulomb limit") {
  // different friction on the two fingers; the low-friction finger slips
  const GraspConfig cfg = GraspConfig::coaxial(tilted_normal(+1, 2.0, Vec3::UnitY()),
                                               tilted_normal(-1, 2.0, Vec3::UnitY()), 0.4,
                                               0.8, 0.03, 0.03, kPad);
  const RequiredWrench w = vertical_load(2.0);
  const GraspSolution sol = solve_grasp_force(cfg, w);
  CHECK(sol.state == SlipState::A_SLIP);  // weaker surface gives way first

  const ContactDecomposition& slip = sol.decomp_A;
  CHECK(slip.F_t() == doctest::Approx(0.4 * slip.F_n).epsilon(1e-8));
  CHECK(slip.M == 0.0);

  // the stick surface stays strictly inside its limit surface
  const ContactDecomposition& stick = sol.decomp_B;
  StickQuantities sq{stick.F_n, stick.F_t(), stick.M};
  CHECK(stick_surface_residual(sq, 0.8, kPad) < 1.0);
  CHECK(balance_residual(cfg, w, sol) <= 1e-8 * (1.0 + w.vec().norm()));
}

TEST_CASE("upper/lower finger geometry under tilted gravity") {
  // gravity leaning toward the grasp axis loads the fingers unevenly
  const GraspConfig cfg = symmetric_config(0.5);
  const double theta = 75.0 * std::numbers::pi / 180.0;
  RequiredWrench w;
  w.F = 2.0 * Vec3(std::sin(theta), 0, std::cos(theta));
  const GraspSolution sol = solve_grasp_force(cfg, w);
  CHECK(sol.converged);
  CHECK(std::abs(sol.F_A - sol.F_B) > 1e-6);  // asymmetric load, unequal forces

  // hypotheses may be individually infeasible; the feasible ones must differ
  double totalA = -1.0, totalB = -1.0;
  try {
    totalA = solve_one_finger(cfg, w, Finger::A).solution.total();
  } catch (const InfeasibleGraspError&) {
  }
  try {
    totalB = solve_one_finger(cfg, w, Finger::B).solution.total();
  } catch (const InfeasibleGraspError&) {
  }
  CHECK((totalA >= 0.0 || totalB >= 0.0));
  if (totalA >= 0.0 && totalB >= 0.0)
    CHECK(totalA != doctest::Approx(totalB).epsilon(1e-6));
}

TEST_CASE("stick transition: strict inequality at the boundary") {
  const double F_n = 2.0;
  const double mu = 0.5;
  const double m_max =
      detail::max_moment_coefficient(kPad.k) * mu * kPad.c * std::pow(F_n, 1.0 + kPad.gamma);

  CHECK_FALSE(stick_transition_check({F_n, 0.5 * mu * F_n, 0.5 * m_max}, mu, kPad));
  CHECK(stick_transition_check({F_n, mu * F_n, 1e-6 * m_max}, mu, kPad));
  CHECK_FALSE(stick_transition_check({F_n, mu * F_n, 0.0}, mu, kPad));  // exactly 1
  CHECK(stick_transition_check({0.0, 0.1, 0.0}, mu, kPad));  // no normal force
  CHECK(stick_transition_check({-1.0, 0.0, 0.0}, mu, kPad));
}

TEST_CASE("axis-moment sweep: transition fires exactly where the stick fails") {
  const GraspConfig cfg = GraspConfig::coaxial(tilted_normal(+1, 2.0, Vec3::UnitY()),
                                               tilted_normal(-1, 2.0, Vec3::UnitY()), 0.4,
                                               0.8, 0.03, 0.03, kPad);
  bool flipped = false;
  double prev_total = -1.0;
  for (int i = 0; i <= 40; ++i) {
    RequiredWrench w = vertical_load(1.5);
    w.M = Vec3(2.0e-3 * i / 40.0, 0, 0);
    const GraspSolution sol = solve_grasp_force(cfg, w);

    // replay the hypothesis selection to get the stick residual
    const OneFingerSolution hypA = solve_one_finger(cfg, w, Finger::A);
    const OneFingerSolution hypB = solve_one_finger(cfg, w, Finger::B);
    const bool a_first = hypA.solution.total() >= hypB.solution.total();
    const OneFingerSolution& chosen = a_first ? hypA : hypB;
    const double mu_stick = a_first ? cfg.mu_B : cfg.mu_A;
    const bool violated = stick_transition_check(chosen.stick, mu_stick, cfg.material);

    CHECK((sol.state == SlipState::TWO_FINGER) == violated);
    if (!flipped && sol.state == SlipState::TWO_FINGER) {
      flipped = true;
      // continuity of the total force across the state flip
      CHECK(sol.total() == doctest::Approx(prev_total).epsilon(0.05));
    }
    prev_total = sol.total();
  }
  CHECK(flipped);
}

TEST_CASE("mirrored configuration swaps the fingers exactly") {
  const GraspConfig cfg = GraspConfig::coaxial(
      tilted_normal(+1, 14.0, Vec3(0, 0.8, 0.6).normalized()),
      tilted_normal(-1, 6.0, Vec3(0, 0.2, 1).normalized()), 0.45, 0.9, 0.04, 0.025, kPad);
  RequiredWrench w;
  w.F = Vec3(0.3, -0.2, 2.0);
  w.M = Vec3(0, 0.01, -0.008);

  const Mat3 S = Vec3(-1, 1, 1).asDiagonal();  // mirror across the y-z plane
  GraspConfig mirrored{S * cfg.n_B, S * cfg.n_A, cfg.mu_B,        cfg.mu_A,
                       S * cfg.arm_B, S * cfg.arm_A, cfg.material};
  RequiredWrench w_m;
  w_m.F = S * w.F;
  w_m.M = Vec3(w.M.x(), -w.M.y(), -w.M.z());  // pseudo-vector under reflection

  const GraspSolution sol = solve_grasp_force(cfg, w);
  const GraspSolution mir = solve_grasp_force(mirrored, w_m);
  CHECK(mir.F_A == doctest::Approx(sol.F_B).epsilon(1e-9));
  CHECK(mir.F_B == doctest::Approx(sol.F_A).epsilon(1e-9));
  if (sol.state == SlipState::A_SLIP) CHECK(mir.state == SlipState::B_SLIP);
  if (sol.state == SlipState::B_SLIP) CHECK(mir.state == SlipState::A_SLIP);
}

TEST_CASE("one-finger solutions scale linearly with the wrench") {
  const GraspConfig cfg = GraspConfig::coaxial(tilted_normal(+1, 4.0, Vec3::UnitY()),
                                               tilted_normal(-1, 2.0, Vec3::UnitY()), 0.4,
                                               0.7, 0.03, 0.03, kPad);
  RequiredWrench w;
  w.F = Vec3(0.1, 0.2, 1.0);
  const GraspSolution base = solve_grasp_force(cfg, w);
  REQUIRE(base.state != SlipState::TWO_FINGER);
  for (double lambda : {0.5, 2.0, 7.5}) {
    RequiredWrench ws{lambda * w.F, lambda * w.M};
    const GraspSolution scaled = solve_grasp_force(cfg, ws);
    CHECK(scaled.state == base.state);
    CHECK(scaled.F_A == doctest::Approx(lambda * base.F_A).epsilon(1e-6));
    CHECK(scaled.F_B == doctest::Approx(lambda * base.F_B).epsilon(1e-6));
  }
}

TEST_CASE("identical inputs give bit-identical solutions") {
  std::mt19937 rng(29);
  for (int trial = 0; trial < 5; ++trial) {
    const RandomProblem p = random_problem(rng);
    GraspSolution a, b;
    try {
      a = solve_grasp_force(p.cfg, p.w);
      b = solve_grasp_force(p.cfg, p.w);
    } catch (const Error&) {
      continue;
    }
    CHECK(std::memcmp(&a.F_A, &b.F_A, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.F_B, &b.F_B, sizeof(double)) == 0);
    CHECK(a.state == b.state);
    CHECK(a.iterations == b.iterations);
    const Eigen::VectorXd xa = state_vector(a), xb = state_vector(b);
    CHECK(std::memcmp(xa.data(), xb.data(), 8 * sizeof(double)) == 0);
  }
}

TEST_CASE("minimum force certified by the brute-force oracles") {
  // Moments kept within the contacts' torque capacity: beyond it the printed
  // slip-state procedure departs from the feasibility optimum (the zero-slip-
  // moment approximation), which the acceptance suite measures separately.
  static const oracles::QuadratureLocus locus = oracles::QuadratureLocus::build(2.0, 120);
  static const oracles::EllipseBound ellipse;
  std::mt19937 rng(101);
  int checked = 0;
  while (checked < 6) {
    RandomProblem p = random_problem(rng);
    p.w.M *= 0.005;  // fraction of a N*mm: inside the soft-pad moment capacity
    GraspSolution sol;
    try {
      sol = solve_grasp_force(p.cfg, p.w);
    } catch (const Error&) {
      continue;
    }
    const double f_hi = 3.0 * sol.total() + 2.0;

    // same model as the solver: certifies the algorithm found the minimum
    const auto brute_e = oracles::brute_force_min_force(p.cfg, p.w, ellipse, f_hi, 400);
    REQUIRE(brute_e.found);
    CAPTURE(checked);
    CHECK(brute_e.total >= 0.98 * sol.total());  // no cheaper feasible pair
    CHECK(sol.total() == doctest::Approx(brute_e.total).epsilon(0.02));

    // integrated limit surface: the independent physical check
    const auto brute_q = oracles::brute_force_min_force(p.cfg, p.w, locus, f_hi, 400);
    REQUIRE(brute_q.found);
    CHECK(sol.total() == doctest::Approx(brute_q.total).epsilon(0.03));
    ++checked;
  }
}
