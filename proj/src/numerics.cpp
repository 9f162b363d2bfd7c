#include "sparsegeo/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>

#include "sparsegeo/error.hpp"

namespace sparsegeo {

EigenDecomposition sym_eig(const Eigen::MatrixXd& M) {
  require(M.rows() == M.cols(), ErrorCode::invalid_argument,
          "sym_eig needs a square matrix");
  require(M.allFinite(), ErrorCode::numeric, "sym_eig on non-finite matrix");
  const Eigen::MatrixXd S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  require(es.info() == Eigen::Success, ErrorCode::numeric,
          "symmetric eigendecomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

double operator_norm(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  const EigenDecomposition ed = sym_eig(M);
  return ed.eigenvalues.cwiseAbs().maxCoeff();
}

double operator_norm_rect(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  const Eigen::MatrixXd G = M.cols() <= M.rows() ? (M.transpose() * M).eval()
                                                 : (M * M.transpose()).eval();
  return std::sqrt(std::max(0.0, operator_norm(G)));
}

Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& M) {
  const EigenDecomposition ed = sym_eig(M);
  const double lambda_max = ed.eigenvalues.cwiseAbs().maxCoeff();
  const double tol = 1e-10 * lambda_max;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(ed.eigenvalues.size());
  for (Eigen::Index i = 0; i < ed.eigenvalues.size(); ++i) {
    if (ed.eigenvalues(i) > tol) inv(i) = 1.0 / ed.eigenvalues(i);
  }
  return ed.eigenvectors * inv.asDiagonal() * ed.eigenvectors.transpose();
}

namespace {

// Orthonormal basis of the complement of the all-ones direction, via the
// Householder reflector that maps 1/sqrt(n) onto e_1. Deterministic.
Eigen::MatrixXd ones_complement_basis(Eigen::Index n) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Eigen::VectorXd u = v;
  u(0) -= 1.0;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
  const double norm2 = u.squaredNorm();
  if (norm2 > 0.0) Q -= (2.0 / norm2) * u * u.transpose();
  return Q.rightCols(n - 1);
}

}  // namespace

std::pair<double, double> generalized_extremal_eigs(const Eigen::MatrixXd& A,
                                                    const Eigen::MatrixXd& B,
                                                    bool deflate_ones) {
  require(A.rows() == A.cols() && B.rows() == B.cols() && A.rows() == B.rows(),
          ErrorCode::invalid_argument, "pencil matrices must be square and equal-sized");
  Eigen::MatrixXd Ar, Br;
  if (deflate_ones) {
    require(A.rows() >= 2, ErrorCode::invalid_argument,
            "deflated pencil needs at least 2 nodes");
    const Eigen::MatrixXd V = ones_complement_basis(A.rows());
    Ar = V.transpose() * A * V;
    Br = V.transpose() * B * V;
  } else {
    Ar = A;
    Br = B;
  }
  Ar = 0.5 * (Ar + Ar.transpose()).eval();
  Br = 0.5 * (Br + Br.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(Br);
  require(llt.info() == Eigen::Success, ErrorCode::numeric,
          "pencil denominator is not positive definite (disconnected dense graph?)");

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Ar, Br,
                                                                Eigen::EigenvaluesOnly);
  require(ges.info() == Eigen::Success, ErrorCode::numeric,
          "generalized eigensolver failed");
  const Eigen::VectorXd& ev = ges.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

Eigen::MatrixXd matrix_polynomial(const std::vector<double>& coeffs,
                                  const Eigen::MatrixXd& M) {
  require(!coeffs.empty(), ErrorCode::invalid_argument,
          "polynomial needs at least one coefficient");
  require(M.rows() == M.cols(), ErrorCode::invalid_argument,
          "matrix polynomial needs a square matrix");
  const Eigen::Index n = M.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd P = coeffs.back() * I;
  for (std::size_t r = coeffs.size() - 1; r-- > 0;) {
    P = (M * P + coeffs[r] * I).eval();
  }
  return P;
}

PcaBasis pca_fit(const Eigen::MatrixXd& Z, int k) {
  require(k >= 1 && k <= std::min(Z.rows(), Z.cols()), ErrorCode::invalid_argument,
          "pca rank must satisfy 1 <= k <= min(n, d)");
  PcaBasis basis;
  basis.mean = Z.colwise().mean();
  const Eigen::MatrixXd centered = Z.rowwise() - basis.mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(Z.rows());
  const EigenDecomposition ed = sym_eig(cov);
  const Eigen::Index d = cov.rows();
  basis.components.resize(d, k);
  basis.explained_variance.resize(k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd comp = ed.eigenvectors.col(d - 1 - j);
    // Sign convention: largest-magnitude entry positive (first on ties).
    Eigen::Index arg = 0;
    comp.cwiseAbs().maxCoeff(&arg);
    if (comp(arg) < 0.0) comp = -comp;
    basis.components.col(j) = comp;
    basis.explained_variance(j) = ed.eigenvalues(d - 1 - j);
  }
  return basis;
}

Eigen::MatrixXd pca_project(const PcaBasis& basis, const Eigen::MatrixXd& Z) {
  require(Z.cols() == basis.components.rows(), ErrorCode::invalid_argument,
          "pca projection dimension mismatch");
  return (Z.rowwise() - basis.mean) * basis.components;
}

std::pair<Eigen::MatrixXd, double> orthogonal_procrustes(const Eigen::MatrixXd& A,
                                                         const Eigen::MatrixXd& B) {
  require(A.rows() == B.rows() && A.cols() == B.cols(), ErrorCode::invalid_argument,
          "procrustes inputs must have equal shapes");
  const Eigen::MatrixXd M = B.transpose() * A;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd Q = svd.matrixU() * svd.matrixV().transpose();
  const double residual = (B * Q - A).norm();
  return {Q, residual};
}

}  // namespace sparsegeo
