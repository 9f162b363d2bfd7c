#include "sparsegeo/train.hpp"

#include <cmath>

#include "sparsegeo/error.hpp"
#include "sparsegeo/numerics.hpp"

namespace sparsegeo {

TargetMatrix targets_from_labels(const std::vector<int>& labels, int num_classes) {
  require(num_classes >= 1, ErrorCode::invalid_argument, "need at least one class");
  TargetMatrix t;
  t.Y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes, ErrorCode::invalid_argument,
            "label out of range");
    t.Y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return t;
}

double loss(const GnnModel& model, const GraphOperator& S, const Eigen::MatrixXd& X,
            const Eigen::MatrixXd& Y) {
  const std::vector<Eigen::MatrixXd> states = forward(model, S, X);
  require(states.back().rows() == Y.rows() && states.back().cols() == Y.cols(),
          ErrorCode::invalid_argument, "target shape does not match model output");
  return 0.5 * (states.back() - Y).squaredNorm();
}

namespace {

// p_k(S) per layer; constant across epochs for a fixed operator.
std::vector<Eigen::MatrixXd> layer_filters(const GnnModel& model,
                                           const GraphOperator& S) {
  std::vector<Eigen::MatrixXd> filters;
  filters.reserve(model.layers.size());
  for (const GnnLayer& layer : model.layers) {
    require(layer.activation.derivative_lipschitz.has_value(), ErrorCode::invalid_argument,
            std::string("activation '") + layer.activation.name() +
                "' has no Lipschitz derivative and cannot be trained");
    filters.push_back(matrix_polynomial(layer.filter.coeffs, S.matrix));
  }
  return filters;
}

struct ForwardCache {
  std::vector<Eigen::MatrixXd> states;          // H^(0) .. H^(K)
  std::vector<Eigen::MatrixXd> preactivations;  // U_k = S_k H^(k) W_k
  const std::vector<Eigen::MatrixXd>* filters = nullptr;  // S_k = p_k(S)
};

ForwardCache forward_cached(const GnnModel& model,
                            const std::vector<Eigen::MatrixXd>& filters,
                            const Eigen::MatrixXd& X) {
  model.validate(static_cast<int>(X.cols()));
  ForwardCache cache;
  cache.filters = &filters;
  cache.states.push_back(X);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const GnnLayer& layer = model.layers[k];
    Eigen::MatrixXd U = filters[k] * cache.states.back() * layer.weight;
    Eigen::MatrixXd H =
        U.unaryExpr([&](double x) { return layer.activation.apply(x); });
    cache.preactivations.push_back(std::move(U));
    cache.states.push_back(std::move(H));
  }
  return cache;
}

std::vector<Eigen::MatrixXd> gradient_from_cache(const GnnModel& model,
                                                 const ForwardCache& cache,
                                                 const Eigen::MatrixXd& Y) {
  const int K = model.depth();
  const std::vector<Eigen::MatrixXd>& filters = *cache.filters;
  std::vector<Eigen::MatrixXd> grads(static_cast<std::size_t>(K));
  // Backpropagated state gradient, initialized at the output.
  Eigen::MatrixXd delta = cache.states.back() - Y;
  for (int k = K - 1; k >= 0; --k) {
    const GnnLayer& layer = model.layers[static_cast<std::size_t>(k)];
    const Eigen::MatrixXd sigma_prime =
        cache.preactivations[static_cast<std::size_t>(k)].unaryExpr(
            [&](double x) { return layer.activation.derivative(x); });
    const Eigen::MatrixXd gated = delta.cwiseProduct(sigma_prime);
    grads[static_cast<std::size_t>(k)] =
        cache.states[static_cast<std::size_t>(k)].transpose() *
        filters[static_cast<std::size_t>(k)].transpose() * gated;
    if (k > 0) {
      delta = filters[static_cast<std::size_t>(k)].transpose() *
              (gated * layer.weight.transpose());
    }
  }
  return grads;
}

double loss_from_cache(const ForwardCache& cache, const Eigen::MatrixXd& Y) {
  return 0.5 * (cache.states.back() - Y).squaredNorm();
}

}  // namespace

std::vector<Eigen::MatrixXd> gradient(const GnnModel& model, const GraphOperator& S,
                                      const Eigen::MatrixXd& X,
                                      const Eigen::MatrixXd& Y) {
  const ForwardCache cache = forward_cached(model, layer_filters(model, S), X);
  require(cache.states.back().rows() == Y.rows() &&
              cache.states.back().cols() == Y.cols(),
          ErrorCode::invalid_argument, "target shape does not match model output");
  return gradient_from_cache(model, cache, Y);
}

void gd_step(GnnModel& model, const std::vector<Eigen::MatrixXd>& grads,
             const TrainConfig& cfg) {
  require(grads.size() == model.layers.size(), ErrorCode::invalid_argument,
          "one gradient per layer required");
  require(cfg.learning_rate > 0.0, ErrorCode::invalid_argument,
          "learning rate must be > 0");

  double clip_factor = 1.0;
  if (cfg.grad_clip_norm.has_value()) {
    double sq = 0.0;
    for (const Eigen::MatrixXd& g : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > *cfg.grad_clip_norm) clip_factor = *cfg.grad_clip_norm / norm;
  }
  for (std::size_t k = 0; k < grads.size(); ++k) {
    model.layers[k].weight -=
        cfg.learning_rate *
        (clip_factor * grads[k] + cfg.weight_decay * model.layers[k].weight);
  }
}

namespace {

double param_norm(const GnnModel& model) {
  double sq = 0.0;
  for (const GnnLayer& layer : model.layers) sq += layer.weight.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

TrajectoryRecord train_pair(const GnnModel& model_init, const GraphOperator& S_dense,
                            const GraphOperator& S_sparse, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& Y, const TrainConfig& cfg) {
  require(cfg.epochs >= 1, ErrorCode::invalid_argument, "need at least one epoch");
  require(Y.rows() == X.rows() &&
              Y.cols() == model_init.layers.back().weight.cols(),
          ErrorCode::invalid_argument, "target shape does not match model output");
  GnnModel dense = model_init;
  GnnModel sparse = model_init;
  const std::vector<Eigen::MatrixXd> filters_dense = layer_filters(dense, S_dense);
  const std::vector<Eigen::MatrixXd> filters_sparse = layer_filters(sparse, S_sparse);

  TrajectoryRecord rec;
  auto record = [&](int epoch, const ForwardCache& cd, const ForwardCache& cs) {
    const double ld = loss_from_cache(cd, Y);
    const double ls = loss_from_cache(cs, Y);
    if (!std::isfinite(ld) || !std::isfinite(ls)) {
      fail(ErrorCode::divergence,
           "non-finite loss at epoch " + std::to_string(epoch));
    }
    rec.loss_dense.push_back(ld);
    rec.loss_sparse.push_back(ls);
    double gap_sq = 0.0;
    std::vector<double> per_layer;
    for (std::size_t k = 0; k < dense.layers.size(); ++k) {
      const double g = (dense.layers[k].weight - sparse.layers[k].weight).norm();
      per_layer.push_back(g);
      gap_sq += g * g;
    }
    rec.rel_param_gap.push_back(std::sqrt(gap_sq) / param_norm(dense));
    rec.per_layer_gap.push_back(std::move(per_layer));
  };

  for (int t = 0; t <= cfg.epochs; ++t) {
    const ForwardCache cd = forward_cached(dense, filters_dense, X);
    const ForwardCache cs = forward_cached(sparse, filters_sparse, X);
    record(t, cd, cs);
    if (t == cfg.epochs) break;
    gd_step(dense, gradient_from_cache(dense, cd, Y), cfg);
    gd_step(sparse, gradient_from_cache(sparse, cs, Y), cfg);
  }
  return rec;
}

GnnModel train_single(const GnnModel& model_init, const GraphOperator& S,
                      const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                      const TrainConfig& cfg) {
  require(cfg.epochs >= 1, ErrorCode::invalid_argument, "need at least one epoch");
  GnnModel model = model_init;
  const std::vector<Eigen::MatrixXd> filters = layer_filters(model, S);
  for (int t = 0; t < cfg.epochs; ++t) {
    const ForwardCache cache = forward_cached(model, filters, X);
    const double l = loss_from_cache(cache, Y);
    if (!std::isfinite(l)) {
      fail(ErrorCode::divergence, "non-finite loss at epoch " + std::to_string(t));
    }
    gd_step(model, gradient_from_cache(model, cache, Y), cfg);
  }
  return model;
}

}  // namespace sparsegeo
