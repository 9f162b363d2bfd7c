#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sparsegeo {

enum class DatasetKind { sbm, geometric };

// Flat key-value experiment configuration ("section.key = value" lines).
// Every field has a documented default; unset c_grid / targets resolve to
// per-family defaults when the dataset kind is known.
struct ExperimentConfig {
  // run.*
  std::string out_dir = "out";
  int threads = 0;  // 0 = hardware concurrency
  std::uint64_t master_seed = 1;

  // dataset.*
  DatasetKind kind = DatasetKind::sbm;
  std::vector<int> block_sizes = {80, 80, 80, 80};
  double p_in = 0.20;
  double p_out = 0.05;
  double weight_low = 0.5;
  double weight_high = 1.5;
  int n_per_class = 80;
  int num_classes = 4;
  int feat_dim = 20;
  int knn_k = 30;
  double center_scale = 4.0;
  double noise_std = 1.0;

  // sparsifier.*
  std::string resistance_mode = "exact";  // exact | truncated
  int resistance_rank = 16;
  std::vector<double> c_grid;   // empty = per-family default
  std::vector<double> targets;  // empty = per-family default
  int draws_per_level = 5;
  int probes = 500;

  // model.* (deterministic forward map for the stability pipeline)
  std::vector<double> filter = {1.0, -0.6, 0.15};
  std::vector<int> widths = {32, 16};
  std::vector<std::string> activations = {"identity", "identity"};
  double weight_scale = 1.0;

  // train.*
  int epochs = 100;
  double lr_one_layer = 0.01;
  double lr_two_layer = 0.003;
  double weight_decay = 1e-3;
  std::optional<double> grad_clip = 5.0;
  int train_hidden_dim = 16;
  std::string train_activation = "tanh";

  // geometry.*
  int knn_overlap_k = 20;
  int subset_cap = 500;
  double test_fraction = 0.4;
  int geometry_train_epochs = 300;
  double geometry_train_lr = 0.05;
  int geometry_hidden_dim = 16;
  std::string geometry_model_path;  // empty = train on the dense graph

  std::vector<double> resolved_c_grid() const;
  std::vector<double> resolved_targets() const;

  void validate() const;
  std::string serialize() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace sparsegeo
