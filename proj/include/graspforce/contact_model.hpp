#ifndef GRASPFORCE_CONTACT_MODEL_HPP
#define GRASPFORCE_CONTACT_MODEL_HPP

#include <cmath>
#include <cstdio>
#include <numbers>
#include <limits>
#include <ostream>
#include <vector>

#include "graspforce/errors.hpp"
#include "graspforce/quadrature.hpp"

namespace graspforce {

/// Soft-fingertip material law: contact radius R = c * F_n^gamma and a
/// power-family pressure profile of shape coefficient k.
template <typename Scalar = double>
struct SoftMaterial {
  Scalar c;      // contact coefficient, radius units per force^gamma
  Scalar gamma;  // power-law exponent, gamma = n/(2n+1) with n in [0,1]
  Scalar k;      // pressure-distribution shape coefficient

  SoftMaterial(Scalar c, Scalar gamma, Scalar k) : c(c), gamma(gamma), k(k) {
    if (!(c > 0)) throw DomainError("SoftMaterial: c must be > 0");
    if (!(gamma >= 0 && gamma <= Scalar(1) / Scalar(3) + Scalar(1e-12)))
      throw DomainError("SoftMaterial: gamma must lie in [0, 1/3]");
    if (!(k >= 1)) throw DomainError("SoftMaterial: k must be >= 1");
  }

  /// Silicone fingertip pad, SI units (R in meters, F_n in newtons).
  static SoftMaterial silicone_pad() { return {Scalar(2.07e-3), Scalar(0.259), Scalar(2)}; }
};

/// Circular contact patch under normal load.
template <typename Scalar = double>
struct ContactPatch {
  Scalar R;    // patch radius
  Scalar F_n;  // normal force
  Scalar mu;   // friction coefficient

  ContactPatch(Scalar R, Scalar F_n, Scalar mu) : R(R), F_n(F_n), mu(mu) {
    if (!(mu > 0)) throw DomainError("ContactPatch: mu must be > 0");
    if (F_n < 0) throw DomainError("ContactPatch: F_n must be >= 0");
    if (F_n > 0 && !(R > 0)) throw DomainError("ContactPatch: R must be > 0 when loaded");
    if (R < 0) throw DomainError("ContactPatch: R must be >= 0");
  }
};

/// One point of the friction limit surface, parameterized by the distance d_c
/// between the patch center and the center of rotation.
template <typename Scalar = double>
struct LimitSurfacePoint {
  Scalar F_t;  // resultant tangential force
  Scalar M_n;  // resultant moment about the contact normal
  Scalar d_c;  // COR distance from the patch center
};

/// Radius of the contact patch under normal force F_n.
template <typename Scalar>
Scalar contact_radius(Scalar F_n, const SoftMaterial<Scalar>& mat) {
  if (F_n < 0) throw DomainError("contact_radius: F_n must be >= 0");
  if (F_n == 0) return 0;
  return mat.c * std::pow(F_n, mat.gamma);
}

/// Patch under F_n with the radius given by the material power law.
template <typename Scalar>
ContactPatch<Scalar> make_patch(Scalar F_n, Scalar mu, const SoftMaterial<Scalar>& mat) {
  return ContactPatch<Scalar>(contact_radius(F_n, mat), F_n, mu);
}

/// C_k = (3/2) k Gamma(3/k) / (Gamma(1/k) Gamma(2/k)); normalizes the pressure
/// profile so its integral over the patch equals F_n.
template <typename Scalar>
Scalar pressure_normalizer(Scalar k) {
  if (!(k > 0)) throw DomainError("pressure_normalizer: k must be > 0");
  return Scalar(1.5) * k * std::tgamma(Scalar(3) / k) /
         (std::tgamma(Scalar(1) / k) * std::tgamma(Scalar(2) / k));
}

/// Pressure at radius r: C_k (F_n / pi R^2) [1 - (r/R)^k]^(1/k).
template <typename Scalar>
Scalar pressure_at(Scalar r, const ContactPatch<Scalar>& patch,
                   const SoftMaterial<Scalar>& mat) {
  if (r < 0) throw DomainError("pressure_at: r must be >= 0");
  if (r > patch.R) throw DomainError("pressure_at: r exceeds the patch radius");
  if (patch.F_n == 0 || patch.R == 0) return 0;
  const Scalar u = r / patch.R;
  const Scalar shape = std::pow(Scalar(1) - std::pow(u, mat.k), Scalar(1) / mat.k);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  return pressure_normalizer(mat.k) * patch.F_n / (pi * patch.R * patch.R) * shape;
}

namespace detail {

// Relative radius of the disk excised around the COR. The direction of the
// distributed friction force is undefined exactly at the COR; the excised
// measure contributes less than the quadrature tolerance.
inline constexpr double kCorExcisionRadius = 1e-6;

/// Dimensionless COR kernels over the unit disk:
///   first  = F_t / (mu F_n)       (tangential-force ratio)
///   second = M_n / (mu F_n R)     (normal-moment ratio)
/// delta = d_c / R. Evaluated by nested adaptive quadrature in polar
/// coordinates (outer radial, inner angular).
template <typename Scalar>
std::pair<Scalar, Scalar> cor_kernels(Scalar delta, Scalar k,
                                      const QuadratureOptions& opt = {}) {
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar Ck = pressure_normalizer(k);
  const Scalar eps = Scalar(kCorExcisionRadius);

  QuadratureOptions inner_opt = opt;
  inner_opt.abs_tol = 0.1 * opt.abs_tol;
  inner_opt.rel_tol = 0.1 * opt.rel_tol;

  long evals = 0;
  bool inner_ok = true;

  // want == 0 integrates the tangential kernel, want == 1 the moment kernel.
  auto outer = [&](int want) {
    auto radial = [&](Scalar u) {
      // Lower angular bound excludes the excised disk when the circle of
      // radius u passes within eps of the COR at (delta, 0).
      Scalar theta_min = 0;
      if (delta > 0 && u > 0 && std::abs(u - delta) < eps) {
        const Scalar cos_min = (u * u + delta * delta - eps * eps) / (2 * u * delta);
        theta_min = std::acos(std::clamp(cos_min, Scalar(-1), Scalar(1)));
      }
      const Scalar shape = std::pow(Scalar(1) - std::pow(u, k), Scalar(1) / k);
      auto angular = [&](Scalar theta) {
        const Scalar ct = std::cos(theta);
        const Scalar st = std::sin(theta);
        // |point - COR| via a cancellation-free form.
        const Scalar dist = std::hypot(delta - u * ct, u * st);
        if (dist == 0) return Scalar(0);
        const Scalar numer = (want == 0) ? (delta - u * ct) : u * (u - delta * ct);
        return numer / dist * shape * u;
      };
      auto r = integrate_adaptive<Scalar>(angular, theta_min, pi, inner_opt);
      evals += r.evaluations;
      if (!r.converged) inner_ok = false;
      return r.value;
    };
    return integrate_adaptive<Scalar>(radial, Scalar(0), Scalar(1), opt);
  };

  auto ft = outer(0);
  auto mn = outer(1);
  evals += ft.evaluations + mn.evaluations;
  if (!ft.converged || !mn.converged || !inner_ok) {
    throw QuadratureError("cor_kernels: disk quadrature did not converge",
                          static_cast<double>(std::max(ft.error, mn.error)), evals);
  }
  const Scalar scale = 2 * Ck / pi;  // angular symmetry: integrate [0, pi] twice
  return {scale * ft.value, scale * mn.value};
}

/// M_max / (mu F_n R) = 2 C_k * integral_0^1 u^2 (1 - u^k)^(1/k) du.
/// Closed-form reduction of the moment kernel at d_c = 0; equals 3 pi / 16
/// for k = 2.
template <typename Scalar>
Scalar max_moment_coefficient(Scalar k) {
  thread_local Scalar cached_k = Scalar(-1);
  thread_local Scalar cached_value = Scalar(0);
  if (k == cached_k) return cached_value;
  const Scalar Ck = pressure_normalizer(k);
  auto f = [&](Scalar u) {
    return u * u * std::pow(Scalar(1) - std::pow(u, k), Scalar(1) / k);
  };
  QuadratureOptions opt;
  opt.abs_tol = 1e-12;
  opt.rel_tol = 1e-10;
  auto r = integrate_adaptive<Scalar>(f, Scalar(0), Scalar(1), opt);
  if (!r.converged)
    throw QuadratureError("max_moment_coefficient: quadrature did not converge",
                          static_cast<double>(r.error), r.evaluations);
  cached_k = k;
  cached_value = 2 * Ck * r.value;
  return cached_value;
}

}  // namespace detail

/// Resultant tangential force and normal moment transmitted by a patch whose
/// COR sits at distance d_c from the patch center, by adaptive quadrature of
/// the distributed-friction integrals.
template <typename Scalar>
LimitSurfacePoint<Scalar> friction_integrals(Scalar d_c, const ContactPatch<Scalar>& patch,
                                             const SoftMaterial<Scalar>& mat,
                                             const QuadratureOptions& opt = {}) {
  if (d_c < 0) throw DomainError("friction_integrals: d_c must be >= 0");
  if (patch.F_n == 0 || patch.R == 0) return {0, 0, d_c};
  auto [ft, mn] = detail::cor_kernels<Scalar>(d_c / patch.R, mat.k, opt);
  return {patch.mu * patch.F_n * ft, patch.mu * patch.F_n * patch.R * mn, d_c};
}

/// Peak transmissible normal moment, M_n at a centered COR.
template <typename Scalar>
Scalar max_moment(const ContactPatch<Scalar>& patch, const SoftMaterial<Scalar>& mat) {
  return friction_integrals(Scalar(0), patch, mat).M_n;
}

/// Elliptical limit-surface residual
///   F_t^2 / (mu F_n)^2 + M_n^2 / M_max^2 - 1.
/// Negative inside (stick feasible), zero on the surface, positive beyond.
/// An unloaded patch carrying any load is reported as +infinity.
template <typename Scalar>
Scalar limit_surface_residual(Scalar F_t, Scalar M_n, const ContactPatch<Scalar>& patch,
                              const SoftMaterial<Scalar>& mat) {
  if (patch.F_n == 0 || patch.R == 0) {
    if (F_t != 0 || M_n != 0) return std::numeric_limits<Scalar>::infinity();
    return Scalar(-1);
  }
  const Scalar f_max = patch.mu * patch.F_n;
  const Scalar m_max =
      detail::max_moment_coefficient(mat.k) * patch.mu * patch.F_n * patch.R;
  return (F_t * F_t) / (f_max * f_max) + (M_n * M_n) / (m_max * m_max) - Scalar(1);
}

/// One normalized limit-surface sample: COR distance ratio against the force
/// and moment ratios. The curve depends only on the shape coefficient k.
template <typename Scalar = double>
struct LimitSurfaceSample {
  Scalar d_c_over_R;
  Scalar F_t_over_Fmax;
  Scalar M_n_over_Mmax;
};

/// Normalized torque-vs-COR curve: M_n/M_max (and F_t/F_max) sampled uniformly
/// over d_c/R in [0, rho_max]. Starts at exactly 1 and decreases.
template <typename Scalar>
std::vector<LimitSurfaceSample<Scalar>> torque_curve(const SoftMaterial<Scalar>& mat,
                                                     int samples,
                                                     Scalar rho_max = Scalar(5)) {
  if (samples < 2) throw DomainError("torque_curve: need at least 2 samples");
  if (!(rho_max > 0)) throw DomainError("torque_curve: rho_max must be > 0");
  const Scalar mn0 = detail::max_moment_coefficient(mat.k);
  std::vector<LimitSurfaceSample<Scalar>> out;
  out.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    const Scalar rho = rho_max * Scalar(i) / Scalar(samples - 1);
    auto [ft, mn] = detail::cor_kernels<Scalar>(rho, mat.k);
    out.push_back({rho, ft, mn / mn0});
  }
  out.front().F_t_over_Fmax = 0;
  out.front().M_n_over_Mmax = 1;  // exact by definition of M_max
  return out;
}

/// CSV export of a normalized limit-surface locus (12 significant digits).
template <typename Scalar>
void write_locus_csv(std::ostream& os, const std::vector<LimitSurfaceSample<Scalar>>& locus) {
  os << "d_c_over_R,F_t_over_Fmax,M_n_over_Mmax\n";
  char buf[128];
  for (const auto& s : locus) {
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g\n",
                  static_cast<double>(s.d_c_over_R), static_cast<double>(s.F_t_over_Fmax),
                  static_cast<double>(s.M_n_over_Mmax));
    os << buf;
  }
}

}  // namespace graspforce

#endif  // GRASPFORCE_CONTACT_MODEL_HPP
