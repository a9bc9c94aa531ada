#pragma once

#include "gazekit/lm.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace gazekit {

/// Number of monomials of total degree <= `degree` in `input_dim` variables.
std::size_t monomial_count(std::size_t input_dim, int degree);

/// Monomials in graded lexicographic order, constant first:
/// (x, y), degree 2 -> (1, x, y, x^2, xy, y^2).
Eigen::VectorXd poly_features(const Eigen::VectorXd& x, int degree);

struct PolynomialModel {
  int input_dim = 0;
  int degree = 2;
  int output_dim = 0;
  Eigen::MatrixXd coefficients;  // output_dim x monomial_count

  PolynomialModel() = default;
  PolynomialModel(int input_dim, int degree, int output_dim);

  std::size_t coefficient_count() const { return static_cast<std::size_t>(coefficients.size()); }
};

/// Throws DimMismatch when x does not match the model input dimension.
Eigen::VectorXd poly_eval(const PolynomialModel& model, const Eigen::VectorXd& x);

struct PolynomialFit {
  PolynomialModel model;
  LMResult lm;
};

/// Least-squares fit of every output through lm_fit, starting from zero
/// coefficients. Rows of `inputs`/`targets` are samples.
PolynomialFit fit_polynomial(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, int degree,
                             const LMSettings& settings = {});

}  // namespace gazekit
