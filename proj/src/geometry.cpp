#include "sparsegeo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparsegeo/error.hpp"
#include "sparsegeo/rng.hpp"

namespace sparsegeo {

namespace {

void check_shapes(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Z_tilde) {
  require(Z.rows() == Z_tilde.rows() && Z.cols() == Z_tilde.cols(),
          ErrorCode::invalid_argument, "embedding shapes differ");
}

std::vector<std::vector<int>> split_by_label(const std::vector<int>& labels) {
  int num_classes = 0;
  for (int c : labels) {
    require(c >= 0, ErrorCode::invalid_argument, "negative label");
    num_classes = std::max(num_classes, c + 1);
  }
  std::vector<std::vector<int>> classes(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    classes[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
  }
  for (const auto& cls : classes) {
    require(!cls.empty(), ErrorCode::invalid_argument, "empty class");
  }
  return classes;
}

}  // namespace

double gram_distortion(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Z_tilde) {
  check_shapes(Z, Z_tilde);
  const Eigen::MatrixXd G = Z * Z.transpose();
  const double denom = G.norm();
  require(denom > 0.0, ErrorCode::invalid_argument,
          "Gram distortion undefined for a zero embedding");
  return (G - Z_tilde * Z_tilde.transpose()).norm() / denom;
}

GramGaps gram_norm_gaps(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Z_tilde) {
  check_shapes(Z, Z_tilde);
  const Eigen::MatrixXd diff = Z * Z.transpose() - Z_tilde * Z_tilde.transpose();
  const Eigen::MatrixXd delta = Z - Z_tilde;
  GramGaps gaps;
  gaps.spectral = operator_norm(0.5 * (diff + diff.transpose()));
  gaps.frobenius = diff.norm();
  gaps.factorization_residual =
      (Z * delta.transpose() + delta * Z_tilde.transpose() - diff).norm();
  return gaps;
}

PairwiseGapResult max_pairwise_sq_distance_gap(const Eigen::MatrixXd& Z,
                                               const Eigen::MatrixXd& Z_tilde,
                                               std::optional<double> bound) {
  check_shapes(Z, Z_tilde);
  const Eigen::Index n = Z.rows();
  PairwiseGapResult res;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (Z.row(i) - Z.row(j)).squaredNorm();
      const double ds = (Z_tilde.row(i) - Z_tilde.row(j)).squaredNorm();
      res.max_gap = std::max(res.max_gap, std::abs(d - ds));
    }
  }
  if (bound.has_value()) res.pass = res.max_gap <= *bound + 1e-8;
  return res;
}

ClassStats class_stats(const Eigen::MatrixXd& Z, const std::vector<int>& labels) {
  require(static_cast<std::size_t>(Z.rows()) == labels.size(),
          ErrorCode::invalid_argument, "one label per row required");
  const auto classes = split_by_label(labels);
  ClassStats stats;
  for (const auto& cls : classes) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(Z.cols());
    for (int i : cls) mu += Z.row(i).transpose();
    mu /= static_cast<double>(cls.size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(Z.cols(), Z.cols());
    for (int i : cls) {
      const Eigen::VectorXd d = Z.row(i).transpose() - mu;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(cls.size());
    stats.means.push_back(std::move(mu));
    stats.covariances.push_back(std::move(cov));
    stats.sizes.push_back(static_cast<int>(cls.size()));
  }
  return stats;
}

ClassStatGaps class_stat_gaps(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Z_tilde,
                              const std::vector<int>& labels) {
  check_shapes(Z, Z_tilde);
  const ClassStats dense = class_stats(Z, labels);
  const ClassStats sparse = class_stats(Z_tilde, labels);
  const double delta_f = (Z - Z_tilde).norm();

  ClassStatGaps out;
  for (Eigen::Index i = 0; i < Z.rows(); ++i) {
    out.b_z = std::max(out.b_z, std::max(Z.row(i).norm(), Z_tilde.row(i).norm()));
  }
  for (std::size_t c = 0; c < dense.means.size(); ++c) {
    ClassGap gap;
    const double sqrt_nc = std::sqrt(static_cast<double>(dense.sizes[c]));
    gap.mean_gap = (dense.means[c] - sparse.means[c]).norm();
    gap.cov_spectral_gap = operator_norm(dense.covariances[c] - sparse.covariances[c]);
    gap.mean_bound = delta_f / sqrt_nc;
    gap.cov_bound = 8.0 * out.b_z * delta_f / sqrt_nc;
    gap.mean_pass = gap.mean_gap <= gap.mean_bound + 1e-8;
    gap.cov_pass = gap.cov_spectral_gap <= gap.cov_bound + 1e-8;
    out.per_class.push_back(gap);
  }
  return out;
}

namespace {

// k largest-cosine neighbors of row i, self excluded, ties by ascending index.
std::vector<int> cosine_knn(const Eigen::MatrixXd& Z, const Eigen::VectorXd& row_norms,
                            int i, int k) {
  const Eigen::Index n = Z.rows();
  std::vector<std::pair<double, int>> sims;
  sims.reserve(static_cast<std::size_t>(n) - 1);
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const double cos = Z.row(i).dot(Z.row(j)) / (row_norms(i) * row_norms(j));
    sims.push_back({cos, j});
  }
  std::partial_sort(sims.begin(), sims.begin() + k, sims.end(),
                    [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first
                                                : a.second < b.second;
                    });
  std::vector<int> out(static_cast<std::size_t>(k));
  for (int t = 0; t < k; ++t) out[static_cast<std::size_t>(t)] = sims[static_cast<std::size_t>(t)].second;
  return out;
}

}  // namespace

double knn_overlap(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Z_tilde, int k,
                   const std::vector<int>& eval_subset, std::uint64_t seed, int cap) {
  check_shapes(Z, Z_tilde);
  const Eigen::Index n = Z.rows();
  require(k >= 1 && k < n, ErrorCode::invalid_argument, "need 1 <= k < n");
  require(!eval_subset.empty(), ErrorCode::invalid_argument,
          "evaluation subset is empty");
  require(cap >= 1, ErrorCode::invalid_argument, "subset cap must be >= 1");

  Eigen::VectorXd norms_dense(n), norms_sparse(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    norms_dense(i) = Z.row(i).norm();
    norms_sparse(i) = Z_tilde.row(i).norm();
    require(norms_dense(i) > 0.0 && norms_sparse(i) > 0.0, ErrorCode::invalid_argument,
            "zero-norm embedding row at index " + std::to_string(i));
  }

  std::vector<int> subset = eval_subset;
  for (int i : subset) {
    require(i >= 0 && i < n, ErrorCode::invalid_argument, "subset index out of range");
  }
  if (static_cast<int>(subset.size()) > cap) {
    // Seeded partial Fisher-Yates; keeps the first `cap` slots.
    Rng rng(seed);
    for (int t = 0; t < cap; ++t) {
      const std::size_t j = static_cast<std::size_t>(t) +
                            rng.below(subset.size() - static_cast<std::size_t>(t));
      std::swap(subset[static_cast<std::size_t>(t)], subset[j]);
    }
    subset.resize(static_cast<std::size_t>(cap));
  }

  double total = 0.0;
  for (int i : subset) {
    const std::vector<int> nd = cosine_knn(Z, norms_dense, i, k);
    const std::vector<int> ns = cosine_knn(Z_tilde, norms_sparse, i, k);
    std::vector<char> in_dense(static_cast<std::size_t>(n), 0);
    for (int j : nd) in_dense[static_cast<std::size_t>(j)] = 1;
    int shared = 0;
    for (int j : ns) shared += in_dense[static_cast<std::size_t>(j)];
    total += static_cast<double>(shared) / static_cast<double>(k);
  }
  return total / static_cast<double>(subset.size());
}

CentroidProjection centroid_projection(const Eigen::MatrixXd& Z,
                                       const Eigen::MatrixXd& Z_tilde,
                                       const std::vector<int>& labels) {
  check_shapes(Z, Z_tilde);
  const PcaBasis basis = pca_fit(Z, 2);
  const ClassStats dense = class_stats(Z, labels);
  const ClassStats sparse = class_stats(Z_tilde, labels);
  const std::size_t C = dense.means.size();

  CentroidProjection proj;
  proj.dense_coords.resize(static_cast<Eigen::Index>(C), 2);
  proj.sparse_coords.resize(static_cast<Eigen::Index>(C), 2);
  for (std::size_t c = 0; c < C; ++c) {
    proj.dense_coords.row(static_cast<Eigen::Index>(c)) =
        pca_project(basis, dense.means[c].transpose());
    proj.sparse_coords.row(static_cast<Eigen::Index>(c)) =
        pca_project(basis, sparse.means[c].transpose());
    proj.displacement.push_back(
        (proj.dense_coords.row(static_cast<Eigen::Index>(c)) -
         proj.sparse_coords.row(static_cast<Eigen::Index>(c)))
            .norm());
  }
  return proj;
}

ProcrustesReport procrustes_report(const Eigen::MatrixXd& Z,
                                   const Eigen::MatrixXd& Z_tilde) {
  check_shapes(Z, Z_tilde);
  const PcaBasis basis = pca_fit(Z, 2);
  ProcrustesReport report;
  report.dense_coords = pca_project(basis, Z);
  const Eigen::MatrixXd sparse_coords = pca_project(basis, Z_tilde);
  const auto [Q, residual] = orthogonal_procrustes(report.dense_coords, sparse_coords);
  report.sparse_coords_aligned = sparse_coords * Q;
  report.residual = residual;
  const double denom = report.dense_coords.norm();
  report.relative_residual = denom > 0.0 ? residual / denom : 0.0;
  return report;
}

}  // namespace sparsegeo
