#pragma once

#include <string>
#include <vector>

#include "sparsegeo/config.hpp"
#include "sparsegeo/graph.hpp"
#include "sparsegeo/model.hpp"
#include "sparsegeo/sparsify.hpp"

namespace sparsegeo {

struct Dataset {
  std::string name;  // "sbm" | "geometric"
  WeightedGraph graph;
  LabeledFeatures features;
  std::vector<int> train_nodes;
  std::vector<int> test_nodes;  // class-balanced held-out set
};

Dataset make_dataset(const ExperimentConfig& cfg);

// Dense operators plus the selected sparsifier levels shared by all
// experiment commands.
struct Sweep {
  GraphOperator L_dense;     // combinatorial Laplacian
  GraphOperator Lbar_dense;  // L / ||L||_2
  double dense_scale = 0.0;
  std::vector<TargetLevel> levels;
};

Sweep make_sweep(const Dataset& data, const ExperimentConfig& cfg);

// One geometry CSV row per (level, draw).
struct GeometryRow {
  std::string dataset;
  int level_index = 0;
  int draw_index = 0;
  double eps_emp = 0.0;
  double retained_fraction = 0.0;
  double rel_filter_err = 0.0;
  double rel_repr_err = 0.0;
  double rel_gram_err = 0.0;
  double knn_overlap = 0.0;
  double max_sq_dist_gap = 0.0;
  double mean_gap_max = 0.0;
  double cov_gap_max = 0.0;
  bool cp_bound_pass = false;
  bool crep_bound_pass = false;
  bool gram_bound_pass = false;
};

struct LevelSummary {
  int level_index = 0;
  double target = 0.0;
  double selected_c = 0.0;
  int q = 0;
  double mean_eps_emp = 0.0;
  double std_eps_emp = 0.0;
  double mean_retained_fraction = 0.0;
  double std_retained_fraction = 0.0;
  double mean_rel_filter_err = 0.0;
  double mean_rel_repr_err = 0.0;
  double mean_rel_gram_err = 0.0;
};

struct StabilityResult {
  std::vector<GeometryRow> rows;
  std::vector<LevelSummary> summary;
  bool all_certificates_pass = true;
};

struct TrajectoryRow {
  int epoch = 0;
  double loss_dense = 0.0;
  double loss_sparse = 0.0;
  double rel_param_gap = 0.0;
  double eps_emp = 0.0;
  int draw_index = 0;
  int level_index = 0;  // -1 marks the eps = 0 control pair
  int depth = 0;
};

struct TrainingLevelSummary {
  int depth = 0;
  int level_index = 0;
  double mean_eps_emp = 0.0;
  double mean_final_gap = 0.0;
  double std_final_gap = 0.0;
};

struct TrainingResult {
  std::vector<TrajectoryRow> rows;
  std::vector<TrainingLevelSummary> summary;
};

struct GeometryResult {
  std::vector<GeometryRow> rows;
  double spearman_gram_knn = 0.0;
  bool all_certificates_pass = true;
};

// Experiment commands. Each writes its artifacts (CSV, JSON, manifest) under
// out_dir and also returns the computed tables for in-process consumers.
void run_generate(const ExperimentConfig& cfg, const std::string& out_dir);
StabilityResult run_stability(const ExperimentConfig& cfg, const std::string& out_dir);
TrainingResult run_training(const ExperimentConfig& cfg, const std::string& out_dir);
GeometryResult run_geometry(const ExperimentConfig& cfg, const std::string& out_dir);

// Reproduces the sparsifier draw of one (level, draw) pair from its recorded
// budget, without re-running the whole selection sweep.
SparsifierDraw reexecute_draw(const ExperimentConfig& cfg, int level_index,
                              int draw_index, int q, double c);

}  // namespace sparsegeo
