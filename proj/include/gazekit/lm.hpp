#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace gazekit {

struct LMSettings {
  double delta_stop = 1e-10;     // stop once a step norm falls below this
  double search_radius = 10.0;   // hard clamp on the parameter update norm
  int max_iters = 500;
  double initial_damping = 1e-3;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct LMResult {
  Eigen::VectorXd params;
  double final_cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;   // false when max_iters ran out
  std::vector<double> accepted_costs;
  std::vector<double> accepted_step_norms;
};

/// Damped Gauss-Newton with forward-difference Jacobians. Damping scales the
/// diagonal of J^T J (x0.1 after an accepted step, x10 after a rejection).
/// Throws NonFiniteResidual if the residual is not finite at the start.
LMResult lm_fit(const ResidualFn& residual_fn, const Eigen::VectorXd& initial_params, const LMSettings& settings = {});

/// Forward differences with h = 1e-6 * max(1, |p_i|).
Eigen::MatrixXd forward_difference_jacobian(const ResidualFn& residual_fn, const Eigen::VectorXd& params,
                                            const Eigen::VectorXd& residual_at_params);

}  // namespace gazekit
