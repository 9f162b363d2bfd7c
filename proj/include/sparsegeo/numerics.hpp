#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace sparsegeo {

struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, aligned with values
};

struct PcaBasis {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd components;        // d x k, orthonormal columns
  Eigen::VectorXd explained_variance;  // nonincreasing
};

// Full spectrum of a symmetric matrix; the input is symmetrized by averaging
// with its transpose before factorization.
EigenDecomposition sym_eig(const Eigen::MatrixXd& M);

// Largest absolute eigenvalue.
double operator_norm(const Eigen::MatrixXd& M);

// Largest singular value; works for rectangular matrices.
double operator_norm_rect(const Eigen::MatrixXd& M);

// Moore-Penrose pseudoinverse of a symmetric PSD matrix, zeroing eigenvalues
// below 1e-10 * lambda_max.
Eigen::MatrixXd pseudoinverse(const Eigen::MatrixXd& M);

// Extremal eigenvalues of the pencil (A, B). With deflate_ones, both are
// restricted to the orthogonal complement of the all-ones vector (Laplacian
// pencils); B must be positive definite on the solved subspace.
std::pair<double, double> generalized_extremal_eigs(const Eigen::MatrixXd& A,
                                                    const Eigen::MatrixXd& B,
                                                    bool deflate_ones);

// sum_r coeffs[r] * M^r by Horner evaluation.
Eigen::MatrixXd matrix_polynomial(const std::vector<double>& coeffs,
                                  const Eigen::MatrixXd& M);

PcaBasis pca_fit(const Eigen::MatrixXd& Z, int k);

// Subtracts the fitted mean, so a basis fit on one embedding can project
// another one into the same coordinates.
Eigen::MatrixXd pca_project(const PcaBasis& basis, const Eigen::MatrixXd& Z);

// Orthogonal Q minimizing ||B*Q - A||_F, plus the attained residual.
std::pair<Eigen::MatrixXd, double> orthogonal_procrustes(const Eigen::MatrixXd& A,
                                                         const Eigen::MatrixXd& B);

}  // namespace sparsegeo
