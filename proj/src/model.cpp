#include "sparsegeo/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sparsegeo/error.hpp"
#include "sparsegeo/numerics.hpp"
#include "sparsegeo/rng.hpp"

namespace sparsegeo {

Activation Activation::make(ActivationTag tag) {
  Activation a;
  a.tag = tag;
  switch (tag) {
    case ActivationTag::identity:
      a.lipschitz = 1.0;
      a.value_at_zero = 0.0;
      a.derivative_lipschitz = 0.0;
      break;
    case ActivationTag::tanh:
      a.lipschitz = 1.0;
      a.value_at_zero = 0.0;
      // sup |tanh''| = 4 / (3 sqrt(3))
      a.derivative_lipschitz = 4.0 / (3.0 * std::sqrt(3.0));
      break;
    case ActivationTag::relu:
      a.lipschitz = 1.0;
      a.value_at_zero = 0.0;
      a.derivative_lipschitz = std::nullopt;
      break;
  }
  return a;
}

double Activation::apply(double x) const {
  switch (tag) {
    case ActivationTag::identity: return x;
    case ActivationTag::tanh: return std::tanh(x);
    case ActivationTag::relu: return x > 0.0 ? x : 0.0;
  }
  return x;
}

double Activation::derivative(double x) const {
  switch (tag) {
    case ActivationTag::identity: return 1.0;
    case ActivationTag::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationTag::relu: return x > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

const char* Activation::name() const {
  switch (tag) {
    case ActivationTag::identity: return "identity";
    case ActivationTag::tanh: return "tanh";
    case ActivationTag::relu: return "relu";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::make(ActivationTag::identity);
  if (name == "tanh") return Activation::make(ActivationTag::tanh);
  if (name == "relu") return Activation::make(ActivationTag::relu);
  fail(ErrorCode::config, "unknown activation '" + name + "'");
}

void GnnModel::validate(int input_dim) const {
  require(!layers.empty(), ErrorCode::invalid_argument, "model has no layers");
  int dim = input_dim;
  for (const GnnLayer& layer : layers) {
    require(!layer.filter.coeffs.empty(), ErrorCode::invalid_argument,
            "filter coefficient list is empty");
    require(layer.weight.rows() == dim, ErrorCode::invalid_argument,
            "layer dimensions do not chain");
    require(layer.weight.allFinite(), ErrorCode::invalid_argument,
            "nonfinite layer weights");
    dim = static_cast<int>(layer.weight.cols());
  }
}

std::vector<Eigen::MatrixXd> forward(const GnnModel& model, const GraphOperator& S,
                                     const Eigen::MatrixXd& X) {
  model.validate(static_cast<int>(X.cols()));
  require(S.matrix.rows() == X.rows(), ErrorCode::invalid_argument,
          "operator size does not match feature rows");
  std::vector<Eigen::MatrixXd> states;
  states.reserve(model.layers.size() + 1);
  states.push_back(X);
  for (const GnnLayer& layer : model.layers) {
    const Eigen::MatrixXd P = matrix_polynomial(layer.filter.coeffs, S.matrix);
    Eigen::MatrixXd H = P * states.back() * layer.weight;
    if (layer.activation.tag != ActivationTag::identity) {
      H = H.unaryExpr([&](double x) { return layer.activation.apply(x); });
    }
    states.push_back(std::move(H));
  }
  return states;
}

FilterError filter_error(const PolynomialFilter& filter, const GraphOperator& S_dense,
                         const GraphOperator& S_sparse) {
  const Eigen::MatrixXd Pd = matrix_polynomial(filter.coeffs, S_dense.matrix);
  const Eigen::MatrixXd Ps = matrix_polynomial(filter.coeffs, S_sparse.matrix);
  FilterError err;
  err.absolute = operator_norm(Pd - Ps);
  const double denom = operator_norm(Pd);
  require(denom > 0.0, ErrorCode::invalid_argument,
          "relative filter error undefined for a vanishing dense filter");
  err.relative = err.absolute / denom;
  return err;
}

double bound_Cp(const PolynomialFilter& filter, double B_L) {
  double c = 0.0;
  for (std::size_t r = 1; r < filter.coeffs.size(); ++r) {
    c += std::abs(filter.coeffs[r]) * static_cast<double>(r) *
         std::pow(B_L, static_cast<double>(r));
  }
  return c;
}

namespace {

// max |p| over [0, B_L]: dense grid plus endpoints; exact to ~1e-8 for the
// low-degree filters used here.
double filter_sup(const PolynomialFilter& filter, double B_L) {
  constexpr int kGrid = 10000;
  double sup = 0.0;
  for (int i = 0; i <= kGrid; ++i) {
    const double x = B_L * static_cast<double>(i) / static_cast<double>(kGrid);
    double p = 0.0;
    for (std::size_t r = filter.coeffs.size(); r-- > 0;) {
      p = p * x + filter.coeffs[r];
    }
    sup = std::max(sup, std::abs(p));
  }
  return sup;
}

}  // namespace

StabilityConstants bound_Crep(const GnnModel& model, double B_X, double B_L, int n) {
  StabilityConstants c;
  c.b_l = B_L;
  c.b_x = B_X;
  for (const GnnLayer& layer : model.layers) {
    c.b_w = std::max(c.b_w, operator_norm_rect(layer.weight));
  }

  c.b_forward.push_back(B_X);
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const GnnLayer& layer = model.layers[k];
    c.c_p.push_back(bound_Cp(layer.filter, B_L));
    c.m.push_back(filter_sup(layer.filter, B_L));
    const double l_sigma = layer.activation.lipschitz;
    const double sigma0 = std::abs(layer.activation.value_at_zero);
    const double d_next = static_cast<double>(layer.weight.cols());
    c.alpha.push_back(l_sigma * c.b_w * c.c_p[k] * c.b_forward[k]);
    c.beta.push_back(l_sigma * c.b_w * c.m[k]);
    c.b_forward.push_back(l_sigma * c.m[k] * c.b_w * c.b_forward[k] +
                          sigma0 * std::sqrt(static_cast<double>(n) * d_next));
  }

  // Delta_{k+1} <= alpha_k eps + beta_k Delta_k, Delta_0 = 0, unrolled.
  double crep = 0.0;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    crep = c.beta[k] * crep + c.alpha[k];
  }
  c.c_rep = crep;

  // ||Z||_2 <= ||Z||_F <= B'_K for both embeddings.
  const double state_bound = c.b_forward.back();
  c.c_gram_2 = 2.0 * state_bound * crep;
  c.c_gram_f = c.c_gram_2;
  return c;
}

RepresentationError representation_error(const Eigen::MatrixXd& Z_dense,
                                         const Eigen::MatrixXd& Z_sparse) {
  require(Z_dense.rows() == Z_sparse.rows() && Z_dense.cols() == Z_sparse.cols(),
          ErrorCode::invalid_argument, "embedding shapes differ");
  RepresentationError err;
  err.absolute = (Z_dense - Z_sparse).norm();
  const double denom = Z_dense.norm();
  require(denom > 0.0, ErrorCode::invalid_argument,
          "relative representation error undefined for a zero embedding");
  err.relative = err.absolute / denom;
  return err;
}

std::vector<Eigen::MatrixXd> init_weights(const std::vector<int>& dims, double scale,
                                          std::uint64_t seed) {
  require(dims.size() >= 2, ErrorCode::invalid_argument,
          "weight chain needs at least input and output dims");
  Rng rng(seed);
  std::vector<Eigen::MatrixXd> weights;
  weights.reserve(dims.size() - 1);
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    require(dims[k] >= 1 && dims[k + 1] >= 1, ErrorCode::invalid_argument,
            "dimensions must be >= 1");
    const double std_dev = scale / std::sqrt(static_cast<double>(dims[k]));
    Eigen::MatrixXd W(dims[k], dims[k + 1]);
    for (int i = 0; i < dims[k]; ++i) {
      for (int j = 0; j < dims[k + 1]; ++j) W(i, j) = std_dev * rng.normal();
    }
    weights.push_back(std::move(W));
  }
  return weights;
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string format_model(const GnnModel& model) {
  std::string out = "layers=" + std::to_string(model.layers.size()) + "\n";
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const GnnLayer& layer = model.layers[k];
    out += "layer=" + std::to_string(k) + "\n";
    out += "filter=";
    for (std::size_t r = 0; r < layer.filter.coeffs.size(); ++r) {
      if (r > 0) out += ",";
      out += fmt17(layer.filter.coeffs[r]);
    }
    out += "\nactivation=" + std::string(layer.activation.name()) + "\n";
    out += "rows=" + std::to_string(layer.weight.rows()) +
           " cols=" + std::to_string(layer.weight.cols()) + "\n";
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        if (j > 0) out += " ";
        out += fmt17(layer.weight(i, j));
      }
      out += "\n";
    }
  }
  return out;
}

GnnModel parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&](const char* what) {
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::io,
            std::string("model parse error: missing ") + what);
    return line;
  };
  next_line("layers=<count>");
  require(line.rfind("layers=", 0) == 0, ErrorCode::io,
          "model parse error: expected layers=<count>");
  const int num_layers = std::stoi(line.substr(7));
  require(num_layers >= 1, ErrorCode::io, "model parse error: no layers");

  GnnModel model;
  for (int k = 0; k < num_layers; ++k) {
    next_line("layer header");
    GnnLayer layer;
    next_line("filter line");
    require(line.rfind("filter=", 0) == 0, ErrorCode::io,
            "model parse error: expected filter=");
    std::istringstream cs(line.substr(7));
    std::string tok;
    while (std::getline(cs, tok, ',')) layer.filter.coeffs.push_back(std::stod(tok));
    next_line("activation line");
    require(line.rfind("activation=", 0) == 0, ErrorCode::io,
            "model parse error: expected activation=");
    layer.activation = activation_from_name(line.substr(11));
    next_line("shape line");
    int rows = 0, cols = 0;
    require(std::sscanf(line.c_str(), "rows=%d cols=%d", &rows, &cols) == 2 &&
                rows >= 1 && cols >= 1,
            ErrorCode::io, "model parse error: expected rows=<r> cols=<c>");
    layer.weight.resize(rows, cols);
    for (int i = 0; i < rows; ++i) {
      next_line("weight row");
      std::istringstream ws(line);
      for (int j = 0; j < cols; ++j) {
        require(static_cast<bool>(ws >> layer.weight(i, j)), ErrorCode::io,
                "model parse error: short weight row");
      }
    }
    model.layers.push_back(std::move(layer));
  }
  return model;
}

void write_model(const GnnModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io, "cannot open " + path + " for writing");
  out << format_model(model);
  require(out.good(), ErrorCode::io, "write failed for " + path);
}

GnnModel read_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace sparsegeo
