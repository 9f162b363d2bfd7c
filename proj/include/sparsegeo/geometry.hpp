#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "sparsegeo/numerics.hpp"

namespace sparsegeo {

// D_Gram = ||ZZ' - Z~Z~'||_F / ||ZZ'||_F.
double gram_distortion(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Z_tilde);

struct GramGaps {
  double spectral = 0.0;
  double frobenius = 0.0;
  // ||Z Delta' + Delta Z~' - (ZZ' - Z~Z~')||_F; identically zero in exact
  // arithmetic, reported as a numerical self-check.
  double factorization_residual = 0.0;
};
GramGaps gram_norm_gaps(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Z_tilde);

struct PairwiseGapResult {
  double max_gap = 0.0;
  bool pass = true;  // true when no bound was supplied
};
// max over pairs of | ||z_i - z_j||^2 - ||z~_i - z~_j||^2 |.
PairwiseGapResult max_pairwise_sq_distance_gap(const Eigen::MatrixXd& Z,
                                               const Eigen::MatrixXd& Z_tilde,
                                               std::optional<double> bound);

struct ClassStats {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;  // population form, divisor n_c
  std::vector<int> sizes;
};
ClassStats class_stats(const Eigen::MatrixXd& Z, const std::vector<int>& labels);

struct ClassGap {
  double mean_gap = 0.0;
  double cov_spectral_gap = 0.0;
  double mean_bound = 0.0;  // ||Delta||_F / sqrt(n_c)
  double cov_bound = 0.0;   // 8 B_Z ||Delta||_F / sqrt(n_c)
  bool mean_pass = false;
  bool cov_pass = false;
};
struct ClassStatGaps {
  std::vector<ClassGap> per_class;
  double b_z = 0.0;  // max row norm over both embeddings
};
ClassStatGaps class_stat_gaps(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Z_tilde,
                              const std::vector<int>& labels);

// Mean fraction of shared cosine-similarity k-nearest neighbors over the
// evaluation subset; candidates are all rows except self, exact similarity
// ties broken by ascending node index. Subsets larger than `cap` are
// subsampled deterministically from `seed`.
double knn_overlap(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Z_tilde, int k,
                   const std::vector<int>& eval_subset, std::uint64_t seed,
                   int cap = 500);

struct CentroidProjection {
  Eigen::MatrixXd dense_coords;   // C x 2, in the dense PCA basis
  Eigen::MatrixXd sparse_coords;  // C x 2, same basis and mean
  std::vector<double> displacement;
};
// PCA basis fit on the dense embedding; both centroid sets projected with the
// dense mean subtracted.
CentroidProjection centroid_projection(const Eigen::MatrixXd& Z,
                                       const Eigen::MatrixXd& Z_tilde,
                                       const std::vector<int>& labels);

struct ProcrustesReport {
  Eigen::MatrixXd dense_coords;           // n x 2
  Eigen::MatrixXd sparse_coords_aligned;  // n x 2 after orthogonal alignment
  double residual = 0.0;
  double relative_residual = 0.0;
};
// Projects both embeddings to the dense 2D PCA basis and aligns the sparse
// coordinates to the dense ones by orthogonal Procrustes.
ProcrustesReport procrustes_report(const Eigen::MatrixXd& Z,
                                   const Eigen::MatrixXd& Z_tilde);

}  // namespace sparsegeo
