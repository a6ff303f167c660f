// Generalized eigenvalues of the cotangent pair (-W, diag(A)).
//
// Both routes work on the symmetric similarity transform
// K = A^{-1/2} (-W) A^{-1/2}, which has the same spectrum.

#include "msino/errors.hpp"
#include "msino/mesh.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <random>

namespace msino {

namespace {

constexpr double kTolerance = 1e-9;

Eigen::SparseMatrix<double> symmetric_operator(const LaplaceOperator& op) {
  const Eigen::VectorXd s = op.areas.cwiseSqrt().cwiseInverse();
  Eigen::SparseMatrix<double> K = -(s.asDiagonal() * op.W * s.asDiagonal());
  K.makeCompressed();
  return K;
}

Eigen::VectorXd dense_spectrum(const Eigen::SparseMatrix<double>& K, int k) {
  const Eigen::MatrixXd dense = Eigen::MatrixXd(K);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (dense + dense.transpose()),
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed");
  return es.eigenvalues().head(k);
}

double inf_norm(const Eigen::SparseMatrix<double>& K) {
  Eigen::VectorXd row_abs = Eigen::VectorXd::Zero(K.rows());
  for (int c = 0; c < K.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, c); it; ++it) {
      row_abs[it.row()] += std::abs(it.value());
    }
  }
  return row_abs.maxCoeff();
}

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& X) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  return qr.householderQ() * Eigen::MatrixXd::Identity(X.rows(), X.cols());
}

// Subspace iteration on (K + shift I)^{-1} with Rayleigh-Ritz on K.
Eigen::VectorXd shift_invert_spectrum(const Eigen::SparseMatrix<double>& K, int k) {
  const int n = static_cast<int>(K.rows());
  const int block = std::min(n, std::max(2 * k, k + 8));
  const double shift = 1e-3 * std::max(K.diagonal().mean(), 1e-12);

  Eigen::SparseMatrix<double> shifted = K;
  for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) += shift;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success) throw ConvergenceError("shifted factorization failed");

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(n, block);
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < n; ++i) X(i, j) = gauss(rng);
  X = orthonormal_basis(X);

  const double scale = std::max(1.0, inf_norm(K));
  const long max_iter = 10L * n;
  for (long it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd Q = orthonormal_basis(solver.solve(X));
    const Eigen::MatrixXd KQ = K * Q;
    Eigen::MatrixXd H = Q.transpose() * KQ;
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    X = Q * es.eigenvectors();
    const Eigen::MatrixXd KX = KQ * es.eigenvectors();
    bool converged = true;
    for (int j = 0; j < k && converged; ++j) {
      const double res = (KX.col(j) - es.eigenvalues()[j] * X.col(j)).norm();
      converged = res <= kTolerance * scale;
    }
    if (converged) return es.eigenvalues().head(k);
  }
  throw ConvergenceError("shift-invert iteration did not reach tolerance 1e-9");
}

}  // namespace

Eigen::VectorXd laplacian_spectrum(const LaplaceOperator& op, int k, EigenMethod method) {
  const int n = op.size();
  if (k < 1 || k > n) throw ShapeError("laplacian_spectrum: k must lie in [1, n]");
  const Eigen::SparseMatrix<double> K = symmetric_operator(op);
  const bool dense = method == EigenMethod::Dense || (method == EigenMethod::Auto && n <= 2000) ||
                     k + 8 > n;
  return dense ? dense_spectrum(K, k) : shift_invert_spectrum(K, k);
}

}  // namespace msino
