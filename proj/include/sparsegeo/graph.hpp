#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sparsegeo {

struct Edge {
  int u = 0;  // u < v always
  int v = 0;
  double w = 0.0;  // strictly positive
};

// Undirected weighted graph on nodes 0..n-1. Edges are kept sorted by
// (u, v) with u < v, no duplicates, no self-loops, weights > 0.
struct WeightedGraph {
  int n = 0;
  std::vector<Edge> edges;

  double total_weight() const;
  bool connected() const;
  // Throws on any structural invariant violation.
  void validate() const;
};

enum class OperatorKind { combinatorial, normalized, scaled };

// Symmetric PSD matrix derived from a graph. `scale` records the divisor
// applied when kind == scaled (1 otherwise), so a sparsified Laplacian can be
// rescaled by the dense graph's norm.
struct GraphOperator {
  Eigen::MatrixXd matrix;
  OperatorKind kind = OperatorKind::combinatorial;
  double scale = 1.0;
};

// Row-per-node features with one class label per node.
struct LabeledFeatures {
  Eigen::MatrixXd X;
  std::vector<int> labels;
  int num_classes = 0;

  std::vector<std::vector<int>> class_indices() const;
  void validate() const;
};

// Weighted stochastic block model. Intra-block pairs become edges with
// probability p_in, inter-block with p_out; weights uniform in
// [weight_low, weight_high]. Retries with derived seeds until connected
// (up to 20 retries), then fails with the seed in the message.
WeightedGraph generate_sbm(const std::vector<int>& block_sizes, double p_in,
                           double p_out, double weight_low, double weight_high,
                           std::uint64_t seed);

// Gaussian feature clusters plus a symmetrized k-NN graph with heat-kernel
// weights exp(-d^2 / (2 sigma^2)), sigma = median retained k-NN distance.
// Cluster means are i.i.d. standard Gaussian scaled by 4, noise std 1.
struct GeometricGraph {
  WeightedGraph graph;
  LabeledFeatures features;
};
GeometricGraph generate_geometric_knn(int n_per_class, int num_classes,
                                      int feat_dim, int k, std::uint64_t seed);

// Class-structured features: per-class mean drawn once (scaled by
// center_scale), rows = class mean + Gaussian noise.
LabeledFeatures class_features(const std::vector<int>& labels, int dim,
                               double center_scale, double noise_std,
                               std::uint64_t seed);

enum class LaplacianKind { combinatorial, normalized };

// Combinatorial D - W or normalized I - D^{-1/2} W D^{-1/2}; isolated nodes
// get a zero diagonal entry in the normalized form.
GraphOperator laplacian(const WeightedGraph& g, LaplacianKind kind);

// Divides by the operator norm (or by the supplied external scale, so the
// dense graph's divisor can be reused on a sparsified Laplacian).
GraphOperator scale_operator(const GraphOperator& op,
                             std::optional<double> external_scale = std::nullopt);

// Plain-text edge list: first line "n=<count>", then "<u> <v> <w>" with
// weights at 17 significant digits; '#' starts a comment line.
void write_graph(const WeightedGraph& g, const std::string& path);
WeightedGraph read_graph(const std::string& path);

std::string format_graph(const WeightedGraph& g);
WeightedGraph parse_graph(const std::string& text);

}  // namespace sparsegeo
