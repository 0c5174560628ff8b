#include "ppmm/linalg.hpp"

#include <stdexcept>

namespace ppmm {

bool is_symmetric(const Eigen::MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

MatrixRoot symmetric_sqrt(const Eigen::MatrixXd& m, double clamp_rel) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("symmetric_sqrt: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("symmetric_sqrt: eigendecomposition failed");
  Eigen::VectorXd lambda = es.eigenvalues();
  const double floor = clamp_rel * lambda.cwiseAbs().maxCoeff();
  MatrixRoot out;
  out.input = m;
  Eigen::VectorXd sq(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < floor) {
      sq[i] = 0.0;
      out.floor_applied = true;
    } else {
      sq[i] = std::sqrt(lambda[i]);
    }
  }
  const auto& q = es.eigenvectors();
  out.root = q * sq.asDiagonal() * q.transpose();
  out.root = 0.5 * (out.root + out.root.transpose());
  return out;
}

Eigen::MatrixXd symmetric_inverse_sqrt(const Eigen::MatrixXd& m, double ridge) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("symmetric_inverse_sqrt: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success)
    throw std::runtime_error("symmetric_inverse_sqrt: eigendecomposition failed");
  Eigen::VectorXd lambda = es.eigenvalues();
  const double lmax = lambda.maxCoeff();
  if (!(lmax > 0.0))
    throw std::runtime_error("symmetric_inverse_sqrt: matrix is numerically zero");
  const double floor = ridge * lmax;
  Eigen::VectorXd inv_sq(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    inv_sq[i] = 1.0 / std::sqrt(std::max(lambda[i], floor));
  const auto& q = es.eigenvectors();
  Eigen::MatrixXd w = q * inv_sq.asDiagonal() * q.transpose();
  return 0.5 * (w + w.transpose());
}

Eigen::VectorXd symmetric_eigenvalues_desc(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed");
  return es.eigenvalues().reverse();
}

}  // namespace ppmm
