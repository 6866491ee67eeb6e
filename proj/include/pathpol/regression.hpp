#ifndef PATHPOL_REGRESSION_HPP
#define PATHPOL_REGRESSION_HPP

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace pathpol {

/// Ridge least squares; the first column (intercept) is not penalized.
inline Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda = 1e-6) {
  if (x.rows() != y.size()) throw std::invalid_argument("ridge: design and response sizes differ");
  Eigen::MatrixXd a = x.transpose() * x;
  for (Eigen::Index j = 1; j < a.cols(); ++j) a(j, j) += lambda * static_cast<double>(x.rows());
  return a.ldlt().solve(x.transpose() * y);
}

inline double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

/// Ridge-penalized logistic regression by Newton's method (IRLS).
inline Eigen::VectorXd logistic_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda = 1e-6,
                                    int iterations = 50) {
  if (x.rows() != y.size()) throw std::invalid_argument("logistic: design and response sizes differ");
  const double n = static_cast<double>(x.rows());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd p = (x * beta).unaryExpr([](double z) { return sigmoid(z); });
    Eigen::VectorXd w = p.array() * (1.0 - p.array());
    Eigen::VectorXd grad = x.transpose() * (p - y);
    Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
    for (Eigen::Index j = 1; j < beta.size(); ++j) {
      grad[j] += lambda * n * beta[j];
      h(j, j) += lambda * n;
    }
    Eigen::VectorXd step = h.ldlt().solve(grad);
    beta -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  return beta;
}

}  // namespace pathpol

#endif  // PATHPOL_REGRESSION_HPP
