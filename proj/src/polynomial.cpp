#include "gazekit/polynomial.hpp"

#include "gazekit/error.hpp"

namespace gazekit {

namespace {

// Invokes fn(index tuple) for every non-decreasing tuple of length `degree`,
// in lexicographic order.
template <typename Fn>
void for_each_monomial_of_degree(int input_dim, int degree, Fn&& fn) {
  std::vector<int> idx(static_cast<std::size_t>(degree), 0);
  if (degree == 0) {
    fn(idx);
    return;
  }
  while (true) {
    fn(idx);
    int pos = degree - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == input_dim - 1) --pos;
    if (pos < 0) return;
    const int next = idx[static_cast<std::size_t>(pos)] + 1;
    for (int p = pos; p < degree; ++p) idx[static_cast<std::size_t>(p)] = next;
  }
}

}  // namespace

std::size_t monomial_count(std::size_t input_dim, int degree) {
  // C(n + d, d)
  std::size_t result = 1;
  for (int i = 1; i <= degree; ++i) {
    result = result * (input_dim + static_cast<std::size_t>(i)) / static_cast<std::size_t>(i);
  }
  return result;
}

Eigen::VectorXd poly_features(const Eigen::VectorXd& x, int degree) {
  const int n = static_cast<int>(x.size());
  if (degree < 0) throw Error(ErrorCode::DimMismatch, "negative polynomial degree");
  Eigen::VectorXd out(static_cast<Eigen::Index>(monomial_count(static_cast<std::size_t>(n), degree)));
  Eigen::Index k = 0;
  for (int d = 0; d <= degree; ++d) {
    if (n == 0 && d > 0) break;
    for_each_monomial_of_degree(n, d, [&](const std::vector<int>& idx) {
      double v = 1.0;
      for (int i : idx) v *= x[i];
      out[k++] = v;
    });
  }
  return out;
}

PolynomialModel::PolynomialModel(int input_dim_, int degree_, int output_dim_)
    : input_dim(input_dim_),
      degree(degree_),
      output_dim(output_dim_),
      coefficients(Eigen::MatrixXd::Zero(output_dim_,
                                         static_cast<Eigen::Index>(monomial_count(
                                             static_cast<std::size_t>(input_dim_), degree_)))) {}

Eigen::VectorXd poly_eval(const PolynomialModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.input_dim) {
    throw Error(ErrorCode::DimMismatch, "polynomial expects " + std::to_string(model.input_dim) + " inputs, got " +
                                            std::to_string(x.size()));
  }
  return model.coefficients * poly_features(x, model.degree);
}

PolynomialFit fit_polynomial(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, int degree,
                             const LMSettings& settings) {
  if (inputs.rows() != targets.rows()) throw Error(ErrorCode::DimMismatch, "inputs/targets row count differ");
  if (inputs.rows() == 0) throw Error(ErrorCode::EmptyDataset, "no samples to fit");
  const auto input_dim = static_cast<int>(inputs.cols());
  const auto output_dim = static_cast<int>(targets.cols());
  PolynomialFit fit{PolynomialModel(input_dim, degree, output_dim), {}};
  const Eigen::Index terms = fit.model.coefficients.cols();

  Eigen::MatrixXd design(inputs.rows(), terms);
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    design.row(i) = poly_features(inputs.row(i).transpose(), degree).transpose();
  }

  // params hold one contiguous block of `terms` coefficients per output.
  const ResidualFn residual = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
    const Eigen::Map<const Eigen::MatrixXd> coeffs(p.data(), terms, output_dim);
    const Eigen::MatrixXd diff = design * coeffs - targets;
    return Eigen::Map<const Eigen::VectorXd>(diff.data(), diff.size());
  };
  fit.lm = lm_fit(residual, Eigen::VectorXd::Zero(terms * output_dim), settings);
  fit.model.coefficients =
      Eigen::Map<const Eigen::MatrixXd>(fit.lm.params.data(), terms, output_dim).transpose();
  return fit;
}

}  // namespace gazekit
