#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsegeo/graph.hpp"

namespace sparsegeo {

struct PolynomialFilter {
  std::vector<double> coeffs;  // a_0 .. a_d

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
};

enum class ActivationTag { identity, tanh, relu };

// Entrywise nonlinearity with the constants used by the stability bounds.
// derivative_lipschitz is unset for relu, which gates it out of training.
struct Activation {
  ActivationTag tag = ActivationTag::identity;
  double lipschitz = 1.0;
  double value_at_zero = 0.0;
  std::optional<double> derivative_lipschitz;

  static Activation make(ActivationTag tag);
  double apply(double x) const;
  double derivative(double x) const;
  const char* name() const;
};

Activation activation_from_name(const std::string& name);

struct GnnLayer {
  PolynomialFilter filter;
  Eigen::MatrixXd weight;
  Activation activation;
};

struct GnnModel {
  std::vector<GnnLayer> layers;

  int depth() const { return static_cast<int>(layers.size()); }
  void validate(int input_dim) const;
};

// Constructive constants from the layer recursion: per-layer filter constants
// C_p, the unrolled representation constant C_rep, and the Gram constants.
struct StabilityConstants {
  std::vector<double> c_p;       // per layer
  std::vector<double> m;         // M_k = max |p_k| on [0, B_L]
  std::vector<double> b_forward; // B'_0 .. B'_K forward state bounds
  std::vector<double> alpha;
  std::vector<double> beta;
  double c_rep = 0.0;
  double c_gram_2 = 0.0;
  double c_gram_f = 0.0;
  double b_l = 0.0;
  double b_x = 0.0;
  double b_w = 0.0;
};

// All hidden states H^(0) .. H^(K); H^(k+1) = sigma(p_k(S) H^(k) W_k).
std::vector<Eigen::MatrixXd> forward(const GnnModel& model, const GraphOperator& S,
                                     const Eigen::MatrixXd& X);

struct FilterError {
  double absolute = 0.0;  // ||p(S_dense) - p(S_sparse)||_2
  double relative = 0.0;  // divided by ||p(S_dense)||_2
};
FilterError filter_error(const PolynomialFilter& filter, const GraphOperator& S_dense,
                         const GraphOperator& S_sparse);

// C_p = sum_{r>=1} |a_r| r B_L^r.
double bound_Cp(const PolynomialFilter& filter, double B_L);

StabilityConstants bound_Crep(const GnnModel& model, double B_X, double B_L, int n);

struct RepresentationError {
  double absolute = 0.0;  // ||Z - Z~||_F
  double relative = 0.0;  // divided by ||Z||_F
};
RepresentationError representation_error(const Eigen::MatrixXd& Z_dense,
                                         const Eigen::MatrixXd& Z_sparse);

// Gaussian entries with std scale/sqrt(fan_in); bit-identical per seed.
std::vector<Eigen::MatrixXd> init_weights(const std::vector<int>& dims, double scale,
                                          std::uint64_t seed);

// Flat-text serialization at 17 significant digits; round-trip exact.
std::string format_model(const GnnModel& model);
GnnModel parse_model(const std::string& text);
void write_model(const GnnModel& model, const std::string& path);
GnnModel read_model(const std::string& path);

}  // namespace sparsegeo
