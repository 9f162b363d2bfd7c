#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "sparsegeo/graph.hpp"
#include "sparsegeo/model.hpp"

namespace sparsegeo {

struct TrainConfig {
  int epochs = 100;
  double learning_rate = 0.01;
  double weight_decay = 0.0;
  std::optional<double> grad_clip_norm;  // disabled when unset
  std::uint64_t seed = 0;
};

struct TrajectoryRecord {
  // Entry t holds the state after t gradient steps; entry 0 is the shared
  // initialization, so rel_param_gap[0] is exactly 0.
  std::vector<double> loss_dense;
  std::vector<double> loss_sparse;
  std::vector<double> rel_param_gap;
  std::vector<std::vector<double>> per_layer_gap;  // [epoch][layer]
};

struct TargetMatrix {
  Eigen::MatrixXd Y;
};

// One-hot rows by class index.
TargetMatrix targets_from_labels(const std::vector<int>& labels, int num_classes);

// J = 0.5 ||H^(K) - Y||_F^2. Weight decay is an update-rule term, not part of J.
double loss(const GnnModel& model, const GraphOperator& S, const Eigen::MatrixXd& X,
            const Eigen::MatrixXd& Y);

// Analytic per-layer gradients via the backpropagation recursion, reusing
// cached preactivations from a single forward pass. Rejects activations
// without a Lipschitz derivative (relu).
std::vector<Eigen::MatrixXd> gradient(const GnnModel& model, const GraphOperator& S,
                                      const Eigen::MatrixXd& X,
                                      const Eigen::MatrixXd& Y);

// Optional global-norm clipping of the concatenated gradient, then
// W <- W - eta (grad + weight_decay * W).
void gd_step(GnnModel& model, const std::vector<Eigen::MatrixXd>& grads,
             const TrainConfig& cfg);

// Runs cfg.epochs full-batch steps on each operator from the shared
// initialization and records losses and the relative parameter gap
// ||Theta - Theta~||_F / ||Theta||_F per epoch.
TrajectoryRecord train_pair(const GnnModel& model_init, const GraphOperator& S_dense,
                            const GraphOperator& S_sparse, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& Y, const TrainConfig& cfg);

// Plain full-batch training on a single operator.
GnnModel train_single(const GnnModel& model_init, const GraphOperator& S,
                      const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                      const TrainConfig& cfg);

}  // namespace sparsegeo
