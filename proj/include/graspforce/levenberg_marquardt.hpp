#ifndef GRASPFORCE_LEVENBERG_MARQUARDT_HPP
#define GRASPFORCE_LEVENBERG_MARQUARDT_HPP

#include <Eigen/Dense>
#include <cmath>

namespace graspforce {

struct LMOptions {
  double initial_damping = 1e-3;
  double damping_factor = 10.0;
  int max_iterations = 200;
  double gradient_tol = 1e-10;
  double residual_tol = 1e-8;
  double max_damping = 1e12;
  // Step-norm cap relative to the current iterate. Steep residuals (powers
  // of the unknowns) otherwise launch the first accepted step far past every
  // root onto flat plateaus of the cost.
  double step_growth = 2.0;
};

struct LMResult {
  Eigen::VectorXd x;
  double residual_inf = 0;  // max-norm of the residual vector at x
  int iterations = 0;
  bool root_found = false;  // residual_inf < residual_tol
};

/// Damped least squares for small dense residual systems. `f` must fill the
/// residual vector and, when the Jacobian pointer is non-null, the m x n
/// Jacobian. Non-finite trial residuals are treated as rejected steps.
template <typename F>
LMResult levenberg_marquardt(F&& f, Eigen::VectorXd x0, const LMOptions& opt = {}) {
  Eigen::VectorXd x = std::move(x0);
  const int n = static_cast<int>(x.size());

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  f(x, r, &J);
  double cost = r.squaredNorm();

  LMResult res;
  double lambda = opt.initial_damping;
  Eigen::VectorXd r_try;
  for (; res.iterations < opt.max_iterations; ++res.iterations) {
    if (r.template lpNorm<Eigen::Infinity>() < opt.residual_tol) break;

    const Eigen::VectorXd g = J.transpose() * r;
    if (g.template lpNorm<Eigen::Infinity>() < opt.gradient_tol) break;

    const Eigen::MatrixXd JtJ = J.transpose() * J;
    bool stepped = false;
    while (lambda <= opt.max_damping) {
      // Marquardt scaling: damp along diag(JtJ) so badly scaled directions
      // still take useful steps.
      Eigen::MatrixXd H = JtJ;
      for (int i = 0; i < n; ++i) H(i, i) += lambda * std::max(JtJ(i, i), 1e-12);
      Eigen::VectorXd step = H.ldlt().solve(-g);
      const double step_max = opt.step_growth * (1.0 + x.norm());
      if (step.norm() > step_max) step *= step_max / step.norm();
      const Eigen::VectorXd x_try = x + step;
      f(x_try, r_try, nullptr);
      const double cost_try = r_try.squaredNorm();
      if (std::isfinite(cost_try) && cost_try < cost) {
        x = x_try;
        cost = cost_try;
        lambda = std::max(lambda / opt.damping_factor, 1e-15);
        stepped = true;
        break;
      }
      lambda *= opt.damping_factor;
    }
    if (!stepped) break;  // damping exhausted; stuck at a local minimum
    f(x, r, &J);
  }

  res.x = std::move(x);
  res.residual_inf = r.template lpNorm<Eigen::Infinity>();
  res.root_found = res.residual_inf < opt.residual_tol;
  return res;
}

}  // namespace graspforce

#endif  // GRASPFORCE_LEVENBERG_MARQUARDT_HPP
