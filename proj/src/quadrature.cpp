#include "bvc/quadrature.hpp"

#include <Eigen/Eigenvalues>

namespace bvc {

const Rule& gauss_legendre16() {
  static const Rule rule = gauss_legendre<double>(16);
  return rule;
}

Rule gauss_laguerre(int n, double alpha) {
  if (n < 1) throw std::invalid_argument("gauss_laguerre: n must be positive");
  if (!(alpha > -1.0)) throw std::invalid_argument("gauss_laguerre: alpha must exceed -1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    jacobi(k, k) = 2.0 * k + alpha + 1.0;
    if (k + 1 < n) {
      const double off = std::sqrt((k + 1.0) * (k + 1.0 + alpha));
      jacobi(k, k + 1) = off;
      jacobi(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  if (solver.info() != Eigen::Success) throw QuadratureError("Golub-Welsch eigensolver failed", 0.0);
  const double mu0 = std::tgamma(alpha + 1.0);
  Rule rule;
  rule.nodes = solver.eigenvalues();
  rule.weights = mu0 * solver.eigenvectors().row(0).transpose().array().square();
  return rule;
}

}  // namespace bvc
