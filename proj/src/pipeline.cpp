#include "sparsegeo/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sparsegeo/error.hpp"
#include "sparsegeo/geometry.hpp"
#include "sparsegeo/numerics.hpp"
#include "sparsegeo/rng.hpp"
#include "sparsegeo/stats.hpp"
#include "sparsegeo/train.hpp"
#include "sparsegeo/version.hpp"

namespace sparsegeo {

namespace {

namespace fs = std::filesystem;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io, "cannot open " + path + " for writing");
  out << text;
  require(out.good(), ErrorCode::io, "write failed for " + path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::io, "cannot create output directory " + dir);
}

// Runs fn(0..count) across threads; each job must write only its own slot.
void parallel_for(int threads, std::size_t count,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  int num = threads > 0 ? threads
                        : static_cast<int>(std::thread::hardware_concurrency());
  if (num < 1) num = 1;
  num = std::min<int>(num, static_cast<int>(count));
  if (num == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(num));
  for (int t = 0; t < num; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

class StageTimer {
 public:
  void start(const std::string& name) {
    name_ = name;
    begin_ = std::chrono::steady_clock::now();
  }
  void stop() {
    const auto end = std::chrono::steady_clock::now();
    entries_.push_back(
        {name_, std::chrono::duration_cast<std::chrono::milliseconds>(end - begin_)
                    .count()});
  }
  const std::vector<std::pair<std::string, long long>>& entries() const {
    return entries_;
  }

 private:
  std::string name_;
  std::chrono::steady_clock::time_point begin_;
  std::vector<std::pair<std::string, long long>> entries_;
};

void write_manifest(const std::string& out_dir, const std::string& command,
                    const ExperimentConfig& cfg, const Sweep* sweep,
                    const std::vector<std::string>& artifacts,
                    const StageTimer& timer) {
  std::string text;
  text += "tool_version=" + std::string(kVersionString) + "\n";
  text += "command=" + command + "\n";
  {
    std::istringstream cfg_lines(cfg.serialize());
    std::string line;
    while (std::getline(cfg_lines, line)) text += "config." + line + "\n";
  }
  if (sweep != nullptr) {
    for (std::size_t j = 0; j < sweep->levels.size(); ++j) {
      const TargetLevel& level = sweep->levels[j];
      const std::string prefix = "level." + std::to_string(j);
      text += prefix + ".target=" + fmt17(level.target) + "\n";
      text += prefix + ".selected_c=" + fmt17(level.selected_c) + "\n";
      text += prefix + ".q=" + std::to_string(level.q) + "\n";
      for (std::size_t i = 0; i < level.draws.size(); ++i) {
        text += prefix + ".draw." + std::to_string(i) +
                ".seed=" + std::to_string(level.draws[i].seed) + "\n";
      }
    }
  }
  for (const std::string& artifact : artifacts) text += "artifact=" + artifact + "\n";
  for (const auto& [stage_name, ms] : timer.entries()) {
    text += "wall_clock_ms." + stage_name + "=" + std::to_string(ms) + "\n";
  }
  write_text(out_dir + "/manifest.txt", text);
}

std::vector<int> sbm_labels(const std::vector<int>& block_sizes) {
  std::vector<int> labels;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    for (int i = 0; i < block_sizes[b]; ++i) labels.push_back(static_cast<int>(b));
  }
  return labels;
}

// Deterministic GNN for the stability pipeline: one shared polynomial filter
// followed by constant-filter feature-mixing layers.
GnnModel stability_model(const ExperimentConfig& cfg, int input_dim) {
  std::vector<int> dims = {input_dim};
  dims.insert(dims.end(), cfg.widths.begin(), cfg.widths.end());
  const std::vector<Eigen::MatrixXd> weights = init_weights(
      dims, cfg.weight_scale, derive_seed(cfg.master_seed, 0, 0, stage::weights));
  GnnModel model;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    GnnLayer layer;
    layer.filter.coeffs = k == 0 ? cfg.filter : std::vector<double>{1.0};
    layer.weight = weights[k];
    layer.activation = activation_from_name(cfg.activations[k]);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

struct DrawEvaluation {
  GeometryRow row;
  GraphOperator Lbar_sparse;
};

// Shared per-draw evaluation: errors, certificates, and geometry metrics for
// the embedding states[embed_state].
DrawEvaluation evaluate_draw(const Dataset& data, const ExperimentConfig& cfg,
                             const Sweep& sweep, int level_index,
                             const SparsifierDraw& draw, const GnnModel& model,
                             int embed_state,
                             const std::vector<Eigen::MatrixXd>& states_dense) {
  DrawEvaluation ev;
  const GraphOperator L_sparse = laplacian(draw.sparse, LaplacianKind::combinatorial);
  ev.Lbar_sparse = scale_operator(L_sparse, sweep.dense_scale);
  const double eps = draw.eps_emp.value();

  GeometryRow& row = ev.row;
  row.dataset = data.name;
  row.level_index = level_index;
  row.draw_index = draw.draw_index;
  row.eps_emp = eps;
  row.retained_fraction = draw.retained_fraction;

  const PolynomialFilter& shared_filter = model.layers.front().filter;
  const FilterError ferr = filter_error(shared_filter, sweep.Lbar_dense, ev.Lbar_sparse);
  row.rel_filter_err = ferr.relative;

  const std::vector<Eigen::MatrixXd> states_sparse =
      forward(model, ev.Lbar_sparse, data.features.X);
  const Eigen::MatrixXd& Z = states_dense[static_cast<std::size_t>(embed_state)];
  const Eigen::MatrixXd& Zs = states_sparse[static_cast<std::size_t>(embed_state)];

  const RepresentationError rerr = representation_error(Z, Zs);
  row.rel_repr_err = rerr.relative;
  row.rel_gram_err = gram_distortion(Z, Zs);

  // Certificates with the per-draw operator bound B_L = max of both norms.
  const double B_L = std::max(operator_norm(sweep.Lbar_dense.matrix),
                              operator_norm(ev.Lbar_sparse.matrix));
  GnnModel submodel;
  submodel.layers.assign(model.layers.begin(),
                         model.layers.begin() + embed_state);
  const StabilityConstants constants =
      bound_Crep(submodel, data.features.X.norm(), B_L, data.graph.n);
  row.cp_bound_pass =
      ferr.absolute <= bound_Cp(shared_filter, B_L) * eps + 1e-8;
  row.crep_bound_pass = rerr.absolute <= constants.c_rep * eps + 1e-8;
  const GramGaps gaps = gram_norm_gaps(Z, Zs);
  row.gram_bound_pass = gaps.spectral <= constants.c_gram_2 * eps + 1e-8 &&
                        gaps.frobenius <= constants.c_gram_f * eps + 1e-8;

  row.knn_overlap = knn_overlap(
      Z, Zs, cfg.knn_overlap_k, data.test_nodes,
      derive_seed(cfg.master_seed, static_cast<std::uint64_t>(level_index),
                  static_cast<std::uint64_t>(draw.draw_index), stage::probes),
      cfg.subset_cap);
  row.max_sq_dist_gap = max_pairwise_sq_distance_gap(Z, Zs, std::nullopt).max_gap;

  const ClassStatGaps class_gaps = class_stat_gaps(Z, Zs, data.features.labels);
  for (const ClassGap& gap : class_gaps.per_class) {
    row.mean_gap_max = std::max(row.mean_gap_max, gap.mean_gap);
    row.cov_gap_max = std::max(row.cov_gap_max, gap.cov_spectral_gap);
  }
  return ev;
}

std::string geometry_csv_header() {
  return "dataset,level_index,draw_index,eps_emp,retained_fraction,rel_filter_err,"
         "rel_repr_err,rel_gram_err,knn_overlap,max_sq_dist_gap,mean_gap_max,"
         "cov_gap_max,cp_bound_pass,crep_bound_pass,gram_bound_pass\n";
}

std::string geometry_csv_line(const GeometryRow& r) {
  std::string line = r.dataset;
  line += "," + std::to_string(r.level_index);
  line += "," + std::to_string(r.draw_index);
  line += "," + fmt17(r.eps_emp);
  line += "," + fmt17(r.retained_fraction);
  line += "," + fmt17(r.rel_filter_err);
  line += "," + fmt17(r.rel_repr_err);
  line += "," + fmt17(r.rel_gram_err);
  line += "," + fmt17(r.knn_overlap);
  line += "," + fmt17(r.max_sq_dist_gap);
  line += "," + fmt17(r.mean_gap_max);
  line += "," + fmt17(r.cov_gap_max);
  line += std::string(",") + (r.cp_bound_pass ? "1" : "0");
  line += std::string(",") + (r.crep_bound_pass ? "1" : "0");
  line += std::string(",") + (r.gram_bound_pass ? "1" : "0");
  line += "\n";
  return line;
}

}  // namespace

Dataset make_dataset(const ExperimentConfig& cfg) {
  Dataset data;
  if (cfg.kind == DatasetKind::sbm) {
    data.name = "sbm";
    data.graph = generate_sbm(cfg.block_sizes, cfg.p_in, cfg.p_out, cfg.weight_low,
                              cfg.weight_high,
                              derive_seed(cfg.master_seed, 0, 0, stage::graph));
    data.features = class_features(sbm_labels(cfg.block_sizes), cfg.feat_dim,
                                   cfg.center_scale, cfg.noise_std,
                                   derive_seed(cfg.master_seed, 0, 0, stage::features));
  } else {
    data.name = "geometric";
    GeometricGraph gg = generate_geometric_knn(
        cfg.n_per_class, cfg.num_classes, cfg.feat_dim, cfg.knn_k,
        derive_seed(cfg.master_seed, 0, 0, stage::graph));
    data.graph = std::move(gg.graph);
    data.features = std::move(gg.features);
  }

  // Class-balanced held-out split: test_fraction of each class, seeded.
  Rng rng(derive_seed(cfg.master_seed, 0, 0, stage::masks));
  for (const std::vector<int>& cls : data.features.class_indices()) {
    std::vector<int> shuffled = cls;
    for (std::size_t t = 0; t + 1 < shuffled.size(); ++t) {
      const std::size_t j = t + rng.below(shuffled.size() - t);
      std::swap(shuffled[t], shuffled[j]);
    }
    const std::size_t num_test = static_cast<std::size_t>(
        std::llround(cfg.test_fraction * static_cast<double>(cls.size())));
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
      (i < num_test ? data.test_nodes : data.train_nodes).push_back(shuffled[i]);
    }
  }
  std::sort(data.test_nodes.begin(), data.test_nodes.end());
  std::sort(data.train_nodes.begin(), data.train_nodes.end());
  return data;
}

Sweep make_sweep(const Dataset& data, const ExperimentConfig& cfg) {
  Sweep sweep;
  sweep.L_dense = laplacian(data.graph, LaplacianKind::combinatorial);
  sweep.Lbar_dense = scale_operator(sweep.L_dense);
  sweep.dense_scale = sweep.Lbar_dense.scale;
  sweep.levels = select_by_target_distortion(
      data.graph, cfg.resolved_targets(), cfg.resolved_c_grid(), cfg.draws_per_level,
      cfg.resistance_mode == "exact" ? ResistanceMode::exact
                                     : ResistanceMode::truncated,
      cfg.resistance_rank, cfg.master_seed);
  return sweep;
}

SparsifierDraw reexecute_draw(const ExperimentConfig& cfg, int level_index,
                              int draw_index, int q, double c) {
  const Dataset data = make_dataset(cfg);
  const ResistanceTable table =
      cfg.resistance_mode == "exact"
          ? effective_resistances_exact(data.graph)
          : effective_resistances_approx(data.graph, cfg.resistance_rank);
  SparsifierDraw draw = er_sparsify(
      data.graph, table, q,
      derive_seed(cfg.master_seed, static_cast<std::uint64_t>(level_index),
                  static_cast<std::uint64_t>(draw_index), stage::draw));
  draw.c = c;
  draw.draw_index = draw_index;
  const GraphOperator L_dense = laplacian(data.graph, LaplacianKind::combinatorial);
  draw.eps_emp = empirical_distortion_exact(
      L_dense, laplacian(draw.sparse, LaplacianKind::combinatorial));
  return draw;
}

void run_generate(const ExperimentConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  StageTimer timer;
  timer.start("dataset");
  const Dataset data = make_dataset(cfg);
  timer.stop();

  timer.start("write");
  write_graph(data.graph, out_dir + "/graph.txt");

  std::string features_csv;
  for (int j = 0; j < data.features.X.cols(); ++j) {
    if (j > 0) features_csv += ",";
    features_csv += "f" + std::to_string(j);
  }
  features_csv += "\n";
  for (Eigen::Index i = 0; i < data.features.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.features.X.cols(); ++j) {
      if (j > 0) features_csv += ",";
      features_csv += fmt17(data.features.X(i, j));
    }
    features_csv += "\n";
  }
  write_text(out_dir + "/features.csv", features_csv);

  std::string labels_csv = "node,label\n";
  for (std::size_t i = 0; i < data.features.labels.size(); ++i) {
    labels_csv += std::to_string(i) + "," + std::to_string(data.features.labels[i]) + "\n";
  }
  write_text(out_dir + "/labels.csv", labels_csv);

  std::vector<char> is_test(static_cast<std::size_t>(data.graph.n), 0);
  for (int i : data.test_nodes) is_test[static_cast<std::size_t>(i)] = 1;
  std::string masks_csv = "node,role\n";
  for (int i = 0; i < data.graph.n; ++i) {
    masks_csv += std::to_string(i) + "," +
                 (is_test[static_cast<std::size_t>(i)] ? "test" : "train") + "\n";
  }
  write_text(out_dir + "/masks.csv", masks_csv);
  timer.stop();

  write_manifest(out_dir, "generate", cfg, nullptr,
                 {"graph.txt", "features.csv", "labels.csv", "masks.csv"}, timer);
}

StabilityResult run_stability(const ExperimentConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  ensure_dir(out_dir + "/draws");
  StageTimer timer;

  timer.start("dataset");
  const Dataset data = make_dataset(cfg);
  timer.stop();

  timer.start("sweep");
  const Sweep sweep = make_sweep(data, cfg);
  timer.stop();

  timer.start("evaluate");
  const GnnModel model = stability_model(cfg, cfg.feat_dim);
  const int embed_state = model.depth();
  const std::vector<Eigen::MatrixXd> states_dense =
      forward(model, sweep.Lbar_dense, data.features.X);

  std::vector<std::pair<int, int>> jobs;  // (level, draw)
  for (std::size_t j = 0; j < sweep.levels.size(); ++j) {
    for (std::size_t i = 0; i < sweep.levels[j].draws.size(); ++i) {
      jobs.push_back({static_cast<int>(j), static_cast<int>(i)});
    }
  }
  std::vector<GeometryRow> rows(jobs.size());
  parallel_for(cfg.threads, jobs.size(), [&](std::size_t idx) {
    const auto [j, i] = jobs[idx];
    rows[idx] = evaluate_draw(data, cfg, sweep, j,
                              sweep.levels[static_cast<std::size_t>(j)]
                                  .draws[static_cast<std::size_t>(i)],
                              model, embed_state, states_dense)
                    .row;
  });
  timer.stop();

  timer.start("write");
  StabilityResult result;
  result.rows = rows;
  std::string csv = geometry_csv_header();
  for (const GeometryRow& row : rows) {
    csv += geometry_csv_line(row);
    result.all_certificates_pass = result.all_certificates_pass &&
                                   row.cp_bound_pass && row.crep_bound_pass &&
                                   row.gram_bound_pass;
  }
  write_text(out_dir + "/geometry.csv", csv);

  std::string table1 =
      "dataset,level_index,target_eps,selected_c,q,mean_eps_emp,std_eps_emp,"
      "mean_retained_fraction,std_retained_fraction,mean_rel_filter_err,"
      "mean_rel_repr_err,mean_rel_gram_err\n";
  for (std::size_t j = 0; j < sweep.levels.size(); ++j) {
    const TargetLevel& level = sweep.levels[j];
    std::vector<double> eps, frac, ferr, rerr, gerr;
    for (const GeometryRow& row : rows) {
      if (row.level_index != static_cast<int>(j)) continue;
      eps.push_back(row.eps_emp);
      frac.push_back(row.retained_fraction);
      ferr.push_back(row.rel_filter_err);
      rerr.push_back(row.rel_repr_err);
      gerr.push_back(row.rel_gram_err);
    }
    LevelSummary s;
    s.level_index = static_cast<int>(j);
    s.target = level.target;
    s.selected_c = level.selected_c;
    s.q = level.q;
    s.mean_eps_emp = mean(eps);
    s.std_eps_emp = sample_stddev(eps);
    s.mean_retained_fraction = mean(frac);
    s.std_retained_fraction = sample_stddev(frac);
    s.mean_rel_filter_err = mean(ferr);
    s.mean_rel_repr_err = mean(rerr);
    s.mean_rel_gram_err = mean(gerr);
    result.summary.push_back(s);
    table1 += data.name + "," + std::to_string(j) + "," + fmt17(s.target) + "," +
              fmt17(s.selected_c) + "," + std::to_string(s.q) + "," +
              fmt17(s.mean_eps_emp) + "," + fmt17(s.std_eps_emp) + "," +
              fmt17(s.mean_retained_fraction) + "," + fmt17(s.std_retained_fraction) +
              "," + fmt17(s.mean_rel_filter_err) + "," + fmt17(s.mean_rel_repr_err) +
              "," + fmt17(s.mean_rel_gram_err) + "\n";
  }
  write_text(out_dir + "/table1.csv", table1);

  std::vector<std::string> artifacts = {"geometry.csv", "table1.csv"};
  const ResistanceMode mode = cfg.resistance_mode == "exact"
                                  ? ResistanceMode::exact
                                  : ResistanceMode::truncated;
  for (std::size_t j = 0; j < sweep.levels.size(); ++j) {
    for (std::size_t i = 0; i < sweep.levels[j].draws.size(); ++i) {
      const std::string rel = "draws/level" + std::to_string(j) + "_draw" +
                              std::to_string(i) + ".txt";
      write_draw(sweep.levels[j].draws[i], mode,
                 mode == ResistanceMode::truncated ? cfg.resistance_rank : 0,
                 out_dir + "/" + rel);
      artifacts.push_back(rel);
    }
  }
  timer.stop();
  write_manifest(out_dir, "stability", cfg, &sweep, artifacts, timer);
  return result;
}

TrainingResult run_training(const ExperimentConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  StageTimer timer;

  timer.start("dataset");
  const Dataset data = make_dataset(cfg);
  timer.stop();

  timer.start("sweep");
  const Sweep sweep = make_sweep(data, cfg);
  timer.stop();

  timer.start("train");
  const int num_classes = data.features.num_classes;
  const Eigen::MatrixXd Y = targets_from_labels(data.features.labels, num_classes).Y;

  struct Job {
    int depth;
    int level_index;  // -1 = control (sparse == dense)
    int draw_index;
  };
  std::vector<Job> jobs;
  std::vector<GnnModel> models_by_depth(3);
  for (int depth = 1; depth <= 2; ++depth) {
    std::vector<int> dims = {cfg.feat_dim};
    if (depth == 2) dims.push_back(cfg.train_hidden_dim);
    dims.push_back(num_classes);
    const std::vector<Eigen::MatrixXd> weights =
        init_weights(dims, cfg.weight_scale,
                     derive_seed(cfg.master_seed, 0,
                                 static_cast<std::uint64_t>(depth), stage::weights));
    GnnModel model;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      GnnLayer layer;
      layer.filter.coeffs = cfg.filter;
      layer.weight = weights[k];
      // Hidden layers use the configured smooth activation; output is linear.
      layer.activation = (static_cast<int>(k) + 1 == depth)
                             ? Activation::make(ActivationTag::identity)
                             : activation_from_name(cfg.train_activation);
      model.layers.push_back(std::move(layer));
    }
    if (depth == 1) {
      model.layers[0].activation = activation_from_name(cfg.train_activation);
    }
    models_by_depth[static_cast<std::size_t>(depth)] = std::move(model);

    jobs.push_back({depth, -1, 0});
    for (std::size_t j = 0; j < sweep.levels.size(); ++j) {
      for (std::size_t i = 0; i < sweep.levels[j].draws.size(); ++i) {
        jobs.push_back({depth, static_cast<int>(j), static_cast<int>(i)});
      }
    }
  }

  struct JobResult {
    TrajectoryRecord record;
    double eps_emp = 0.0;
  };
  std::vector<JobResult> results(jobs.size());
  parallel_for(cfg.threads, jobs.size(), [&](std::size_t idx) {
    const Job& job = jobs[idx];
    TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.learning_rate = job.depth == 1 ? cfg.lr_one_layer : cfg.lr_two_layer;
    tc.weight_decay = cfg.weight_decay;
    tc.grad_clip_norm = cfg.grad_clip;
    const GnnModel& model_init = models_by_depth[static_cast<std::size_t>(job.depth)];
    if (job.level_index < 0) {
      results[idx].record = train_pair(model_init, sweep.Lbar_dense,
                                       sweep.Lbar_dense, data.features.X, Y, tc);
      results[idx].eps_emp = 0.0;
    } else {
      const SparsifierDraw& draw =
          sweep.levels[static_cast<std::size_t>(job.level_index)]
              .draws[static_cast<std::size_t>(job.draw_index)];
      const GraphOperator Lbar_sparse = scale_operator(
          laplacian(draw.sparse, LaplacianKind::combinatorial), sweep.dense_scale);
      results[idx].record = train_pair(model_init, sweep.Lbar_dense, Lbar_sparse,
                                       data.features.X, Y, tc);
      results[idx].eps_emp = draw.eps_emp.value();
    }
  });
  timer.stop();

  timer.start("write");
  TrainingResult result;
  std::string csv =
      "epoch,loss_dense,loss_sparse,rel_param_gap,eps_emp,draw_index,level_index,"
      "depth\n";
  for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
    const Job& job = jobs[idx];
    const JobResult& jr = results[idx];
    for (std::size_t t = 0; t < jr.record.rel_param_gap.size(); ++t) {
      TrajectoryRow row;
      row.epoch = static_cast<int>(t);
      row.loss_dense = jr.record.loss_dense[t];
      row.loss_sparse = jr.record.loss_sparse[t];
      row.rel_param_gap = jr.record.rel_param_gap[t];
      row.eps_emp = jr.eps_emp;
      row.draw_index = job.draw_index;
      row.level_index = job.level_index;
      row.depth = job.depth;
      result.rows.push_back(row);
      csv += std::to_string(row.epoch) + "," + fmt17(row.loss_dense) + "," +
             fmt17(row.loss_sparse) + "," + fmt17(row.rel_param_gap) + "," +
             fmt17(row.eps_emp) + "," + std::to_string(row.draw_index) + "," +
             std::to_string(row.level_index) + "," + std::to_string(row.depth) + "\n";
    }
  }
  write_text(out_dir + "/trajectories.csv", csv);

  std::string summary_csv =
      "dataset,depth,level_index,mean_eps_emp,mean_final_gap,std_final_gap\n";
  for (int depth = 1; depth <= 2; ++depth) {
    for (int level = -1; level < static_cast<int>(sweep.levels.size()); ++level) {
      std::vector<double> eps, gaps;
      for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
        if (jobs[idx].depth != depth || jobs[idx].level_index != level) continue;
        eps.push_back(results[idx].eps_emp);
        gaps.push_back(results[idx].record.rel_param_gap.back());
      }
      if (eps.empty()) continue;
      TrainingLevelSummary s;
      s.depth = depth;
      s.level_index = level;
      s.mean_eps_emp = mean(eps);
      s.mean_final_gap = mean(gaps);
      s.std_final_gap = sample_stddev(gaps);
      result.summary.push_back(s);
      summary_csv += data.name + "," + std::to_string(depth) + "," +
                     std::to_string(level) + "," + fmt17(s.mean_eps_emp) + "," +
                     fmt17(s.mean_final_gap) + "," + fmt17(s.std_final_gap) + "\n";
    }
  }
  write_text(out_dir + "/training_summary.csv", summary_csv);
  timer.stop();
  write_manifest(out_dir, "training", cfg, &sweep,
                 {"trajectories.csv", "training_summary.csv"}, timer);
  return result;
}

GeometryResult run_geometry(const ExperimentConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  StageTimer timer;

  timer.start("dataset");
  const Dataset data = make_dataset(cfg);
  timer.stop();

  timer.start("sweep");
  const Sweep sweep = make_sweep(data, cfg);
  timer.stop();

  timer.start("train");
  const int num_classes = data.features.num_classes;
  GnnModel model;
  if (!cfg.geometry_model_path.empty()) {
    model = read_model(cfg.geometry_model_path);
    model.validate(cfg.feat_dim);
  } else {
    const std::vector<int> dims = {cfg.feat_dim, cfg.geometry_hidden_dim, num_classes};
    const std::vector<Eigen::MatrixXd> weights = init_weights(
        dims, cfg.weight_scale, derive_seed(cfg.master_seed, 1, 0, stage::weights));
    for (std::size_t k = 0; k < weights.size(); ++k) {
      GnnLayer layer;
      layer.filter.coeffs = cfg.filter;
      layer.weight = weights[k];
      layer.activation = k == 0 ? activation_from_name(cfg.train_activation)
                                : Activation::make(ActivationTag::identity);
      model.layers.push_back(std::move(layer));
    }
    TrainConfig tc;
    tc.epochs = cfg.geometry_train_epochs;
    tc.learning_rate = cfg.geometry_train_lr;
    tc.weight_decay = 0.0;
    tc.grad_clip_norm = std::nullopt;
    const Eigen::MatrixXd Y = targets_from_labels(data.features.labels, num_classes).Y;
    model = train_single(model, sweep.Lbar_dense, data.features.X, Y, tc);
  }
  write_model(model, out_dir + "/model.txt");
  timer.stop();

  timer.start("evaluate");
  // Geometry works on the hidden representation (the state before the
  // linear classification layer).
  const int embed_state = 1;
  const std::vector<Eigen::MatrixXd> states_dense =
      forward(model, sweep.Lbar_dense, data.features.X);
  const Eigen::MatrixXd& Z = states_dense[static_cast<std::size_t>(embed_state)];

  std::vector<int> test_labels;
  for (int i : data.test_nodes) test_labels.push_back(data.features.labels[static_cast<std::size_t>(i)]);
  Eigen::MatrixXd Z_test(static_cast<Eigen::Index>(data.test_nodes.size()), Z.cols());
  for (std::size_t t = 0; t < data.test_nodes.size(); ++t) {
    Z_test.row(static_cast<Eigen::Index>(t)) = Z.row(data.test_nodes[t]);
  }

  std::vector<std::pair<int, int>> jobs;
  for (std::size_t j = 0; j < sweep.levels.size(); ++j) {
    for (std::size_t i = 0; i < sweep.levels[j].draws.size(); ++i) {
      jobs.push_back({static_cast<int>(j), static_cast<int>(i)});
    }
  }
  std::vector<GeometryRow> rows(jobs.size());
  std::vector<CentroidProjection> centroids(jobs.size());
  std::vector<ProcrustesReport> procrustes(jobs.size());
  parallel_for(cfg.threads, jobs.size(), [&](std::size_t idx) {
    const auto [j, i] = jobs[idx];
    const SparsifierDraw& draw = sweep.levels[static_cast<std::size_t>(j)]
                                     .draws[static_cast<std::size_t>(i)];
    DrawEvaluation ev =
        evaluate_draw(data, cfg, sweep, j, draw, model, embed_state, states_dense);
    rows[idx] = ev.row;

    const std::vector<Eigen::MatrixXd> states_sparse =
        forward(model, ev.Lbar_sparse, data.features.X);
    const Eigen::MatrixXd& Zs = states_sparse[static_cast<std::size_t>(embed_state)];
    Eigen::MatrixXd Zs_test(static_cast<Eigen::Index>(data.test_nodes.size()), Zs.cols());
    for (std::size_t t = 0; t < data.test_nodes.size(); ++t) {
      Zs_test.row(static_cast<Eigen::Index>(t)) = Zs.row(data.test_nodes[t]);
    }
    centroids[idx] = centroid_projection(Z_test, Zs_test, test_labels);
    procrustes[idx] = procrustes_report(Z_test, Zs_test);
  });
  timer.stop();

  timer.start("write");
  GeometryResult result;
  result.rows = rows;
  std::string csv = geometry_csv_header();
  std::vector<double> gram_errs, overlaps;
  for (const GeometryRow& row : rows) {
    csv += geometry_csv_line(row);
    gram_errs.push_back(row.rel_gram_err);
    overlaps.push_back(row.knn_overlap);
    result.all_certificates_pass = result.all_certificates_pass &&
                                   row.cp_bound_pass && row.crep_bound_pass &&
                                   row.gram_bound_pass;
  }
  write_text(out_dir + "/geometry.csv", csv);
  result.spearman_gram_knn = spearman(gram_errs, overlaps);

  std::string summary_csv = "dataset,spearman_gram_knn,n_points\n";
  summary_csv += data.name + "," + fmt17(result.spearman_gram_knn) + "," +
                 std::to_string(rows.size()) + "\n";
  write_text(out_dir + "/geometry_summary.csv", summary_csv);

  using nlohmann::json;
  auto coords_to_json = [](const Eigen::MatrixXd& M) {
    json arr = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      arr.push_back({M(r, 0), M(r, 1)});
    }
    return arr;
  };

  json centroid_doc;
  centroid_doc["dataset"] = data.name;
  centroid_doc["records"] = json::array();
  json procrustes_doc;
  procrustes_doc["dataset"] = data.name;
  procrustes_doc["records"] = json::array();
  for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
    const auto [j, i] = jobs[idx];
    json c;
    c["level_index"] = j;
    c["draw_index"] = i;
    c["eps_emp"] = rows[idx].eps_emp;
    c["dense"] = coords_to_json(centroids[idx].dense_coords);
    c["sparse"] = coords_to_json(centroids[idx].sparse_coords);
    c["displacement"] = centroids[idx].displacement;
    centroid_doc["records"].push_back(c);

    json p;
    p["level_index"] = j;
    p["draw_index"] = i;
    p["eps_emp"] = rows[idx].eps_emp;
    p["residual"] = procrustes[idx].residual;
    p["relative_residual"] = procrustes[idx].relative_residual;
    p["dense_coords"] = coords_to_json(procrustes[idx].dense_coords);
    p["sparse_coords_aligned"] = coords_to_json(procrustes[idx].sparse_coords_aligned);
    procrustes_doc["records"].push_back(p);
  }
  write_text(out_dir + "/centroids.json", centroid_doc.dump(2) + "\n");
  write_text(out_dir + "/procrustes.json", procrustes_doc.dump(2) + "\n");
  timer.stop();

  write_manifest(out_dir, "geometry", cfg, &sweep,
                 {"geometry.csv", "geometry_summary.csv", "centroids.json",
                  "procrustes.json", "model.txt"},
                 timer);
  return result;
}

}  // namespace sparsegeo
