#include "gazekit/lm.hpp"

#include "gazekit/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace gazekit {

namespace {

constexpr double kMaxDamping = 1e20;

}  // namespace

Eigen::MatrixXd forward_difference_jacobian(const ResidualFn& residual_fn, const Eigen::VectorXd& params,
                                            const Eigen::VectorXd& residual_at_params) {
  const Eigen::Index m = residual_at_params.size();
  const Eigen::Index n = params.size();
  Eigen::MatrixXd jac(m, n);
  Eigen::VectorXd probe = params;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(params[j]));
    probe[j] = params[j] + h;
    const Eigen::VectorXd shifted = residual_fn(probe);
    probe[j] = params[j];
    if (shifted.size() != m) throw Error(ErrorCode::DimMismatch, "residual size changed between evaluations");
    if (!shifted.allFinite()) throw Error(ErrorCode::NonFiniteResidual, "non-finite residual in Jacobian probe");
    jac.col(j) = (shifted - residual_at_params) / h;
  }
  return jac;
}

LMResult lm_fit(const ResidualFn& residual_fn, const Eigen::VectorXd& initial_params, const LMSettings& settings) {
  LMResult result;
  result.params = initial_params;
  Eigen::VectorXd residual = residual_fn(result.params);
  if (!residual.allFinite() || !result.params.allFinite()) {
    throw Error(ErrorCode::NonFiniteResidual, "residual is not finite at the initial parameters");
  }
  double cost = residual.squaredNorm();
  result.final_cost = cost;
  const Eigen::Index n = result.params.size();
  if (n == 0 || residual.size() == 0) {
    result.converged = true;
    return result;
  }

  double damping = settings.initial_damping;
  Eigen::MatrixXd jac = forward_difference_jacobian(residual_fn, result.params, residual);
  Eigen::MatrixXd normal = jac.transpose() * jac;
  Eigen::VectorXd gradient = jac.transpose() * residual;

  while (result.iterations < settings.max_iters) {
    ++result.iterations;

    Eigen::VectorXd scale = normal.diagonal();
    const double floor = std::max(scale.maxCoeff(), 1.0) * 1e-12;
    for (Eigen::Index i = 0; i < n; ++i) scale[i] = std::max(scale[i], floor);
    Eigen::MatrixXd damped = normal;
    damped.diagonal() += damping * scale;
    Eigen::VectorXd step = damped.ldlt().solve(-gradient);
    if (!step.allFinite()) step = damped.colPivHouseholderQr().solve(-gradient);

    double step_norm = step.norm();
    if (step_norm > settings.search_radius) {
      step *= settings.search_radius / step_norm;
      step_norm = settings.search_radius;
    }
    if (!(step_norm >= settings.delta_stop)) {
      result.converged = true;
      break;
    }

    const Eigen::VectorXd trial = result.params + step;
    const Eigen::VectorXd trial_residual = residual_fn(trial);
    const double trial_cost = trial_residual.allFinite() ? trial_residual.squaredNorm() : HUGE_VAL;

    if (trial_cost < cost) {
      result.params = trial;
      residual = trial_residual;
      cost = trial_cost;
      result.accepted_costs.push_back(cost);
      result.accepted_step_norms.push_back(step_norm);
      damping = std::max(damping * 0.1, 1e-15);
      jac = forward_difference_jacobian(residual_fn, result.params, residual);
      normal.noalias() = jac.transpose() * jac;
      gradient.noalias() = jac.transpose() * residual;
    } else {
      damping *= 10.0;
      if (damping > kMaxDamping) {
        result.converged = true;
        break;
      }
    }
  }
  result.final_cost = cost;
  return result;
}

}  // namespace gazekit
