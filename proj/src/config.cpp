#include "sparsegeo/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sparsegeo/error.hpp"

namespace sparsegeo {

std::vector<double> ExperimentConfig::resolved_c_grid() const {
  if (!c_grid.empty()) return c_grid;
  // Spans the realized-distortion range of the synthetic sparsification
  // sweeps; overridable per config.
  return {2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0, 14.0};
}

std::vector<double> ExperimentConfig::resolved_targets() const {
  if (!targets.empty()) return targets;
  if (kind == DatasetKind::sbm) return {0.41, 0.42, 0.43, 0.43, 0.56, 0.71};
  return {0.37, 0.38, 0.41, 0.54, 0.66, 0.75};
}

void ExperimentConfig::validate() const {
  require(threads >= 0, ErrorCode::config, "run.threads must be >= 0");
  require(!block_sizes.empty(), ErrorCode::config, "dataset.block_sizes is empty");
  for (int b : block_sizes) require(b >= 1, ErrorCode::config, "block sizes must be >= 1");
  require(p_in > 0.0 && p_in <= 1.0, ErrorCode::config, "dataset.p_in must lie in (0,1]");
  require(p_out >= 0.0 && p_out <= 1.0, ErrorCode::config,
          "dataset.p_out must lie in [0,1]");
  require(weight_low > 0.0 && weight_low <= weight_high, ErrorCode::config,
          "need 0 < dataset.weight_low <= dataset.weight_high");
  require(n_per_class >= 1 && num_classes >= 1 && feat_dim >= 1, ErrorCode::config,
          "dataset sizes must be >= 1");
  require(knn_k >= 1 && knn_k < n_per_class * num_classes, ErrorCode::config,
          "dataset.knn_k must satisfy 1 <= k < node count");
  require(resistance_mode == "exact" || resistance_mode == "truncated",
          ErrorCode::config, "sparsifier.mode must be exact or truncated");
  require(resistance_rank >= 1, ErrorCode::config, "sparsifier.rank must be >= 1");
  for (double c : resolved_c_grid()) {
    require(c > 0.0, ErrorCode::config, "sparsifier.c_grid entries must be > 0");
  }
  for (double t : resolved_targets()) {
    require(t > 0.0 && t < 1.0, ErrorCode::config,
            "sparsifier.targets entries must lie in (0,1)");
  }
  require(draws_per_level >= 1, ErrorCode::config,
          "sparsifier.draws_per_level must be >= 1");
  require(probes >= 1, ErrorCode::config, "sparsifier.probes must be >= 1");
  require(!filter.empty(), ErrorCode::config, "model.filter is empty");
  require(!widths.empty(), ErrorCode::config, "model.widths is empty");
  require(widths.size() == activations.size(), ErrorCode::config,
          "model.widths and model.activations must have equal lengths");
  for (int w : widths) require(w >= 1, ErrorCode::config, "model.widths must be >= 1");
  require(epochs >= 1, ErrorCode::config, "train.epochs must be >= 1");
  require(lr_one_layer > 0.0 && lr_two_layer > 0.0, ErrorCode::config,
          "learning rates must be > 0");
  require(weight_decay >= 0.0, ErrorCode::config, "train.weight_decay must be >= 0");
  if (grad_clip) {
    require(*grad_clip > 0.0, ErrorCode::config, "train.grad_clip must be > 0 or none");
  }
  require(train_hidden_dim >= 1, ErrorCode::config, "train.hidden_dim must be >= 1");
  require(knn_overlap_k >= 1, ErrorCode::config, "geometry.k must be >= 1");
  require(subset_cap >= 1, ErrorCode::config, "geometry.subset_cap must be >= 1");
  require(test_fraction > 0.0 && test_fraction < 1.0, ErrorCode::config,
          "geometry.test_fraction must lie in (0,1)");
  require(geometry_train_epochs >= 1 && geometry_train_lr > 0.0 &&
              geometry_hidden_dim >= 1,
          ErrorCode::config, "geometry training parameters must be positive");
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += fmt17(v[i]);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_strings(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += v[i];
  }
  return out;
}

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(value, &pos);
    require(pos == value.size(), ErrorCode::config, "trailing junk");
    return x;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::config, "config error: malformed number for " + key);
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int x = std::stoi(value, &pos);
    require(pos == value.size(), ErrorCode::config, "trailing junk");
    return x;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorCode::config, "config error: malformed integer for " + key);
  }
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  for (const std::string& tok : split_list(value)) out.push_back(parse_double(key, tok));
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (const std::string& tok : split_list(value)) out.push_back(parse_int(key, tok));
  return out;
}

}  // namespace

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  out << "dataset.block_sizes = " << join_ints(block_sizes) << "\n";
  out << "dataset.center_scale = " << fmt17(center_scale) << "\n";
  out << "dataset.feat_dim = " << feat_dim << "\n";
  out << "dataset.kind = " << (kind == DatasetKind::sbm ? "sbm" : "geometric") << "\n";
  out << "dataset.knn_k = " << knn_k << "\n";
  out << "dataset.n_per_class = " << n_per_class << "\n";
  out << "dataset.noise_std = " << fmt17(noise_std) << "\n";
  out << "dataset.num_classes = " << num_classes << "\n";
  out << "dataset.p_in = " << fmt17(p_in) << "\n";
  out << "dataset.p_out = " << fmt17(p_out) << "\n";
  out << "dataset.weight_high = " << fmt17(weight_high) << "\n";
  out << "dataset.weight_low = " << fmt17(weight_low) << "\n";
  out << "geometry.hidden_dim = " << geometry_hidden_dim << "\n";
  out << "geometry.k = " << knn_overlap_k << "\n";
  out << "geometry.model_path = " << geometry_model_path << "\n";
  out << "geometry.subset_cap = " << subset_cap << "\n";
  out << "geometry.test_fraction = " << fmt17(test_fraction) << "\n";
  out << "geometry.train_epochs = " << geometry_train_epochs << "\n";
  out << "geometry.train_lr = " << fmt17(geometry_train_lr) << "\n";
  out << "model.activations = " << join_strings(activations) << "\n";
  out << "model.filter = " << join_doubles(filter) << "\n";
  out << "model.weight_scale = " << fmt17(weight_scale) << "\n";
  out << "model.widths = " << join_ints(widths) << "\n";
  out << "run.master_seed = " << master_seed << "\n";
  out << "run.out_dir = " << out_dir << "\n";
  out << "run.threads = " << threads << "\n";
  out << "sparsifier.c_grid = " << join_doubles(resolved_c_grid()) << "\n";
  out << "sparsifier.draws_per_level = " << draws_per_level << "\n";
  out << "sparsifier.mode = " << resistance_mode << "\n";
  out << "sparsifier.probes = " << probes << "\n";
  out << "sparsifier.rank = " << resistance_rank << "\n";
  out << "sparsifier.targets = " << join_doubles(resolved_targets()) << "\n";
  out << "train.activation = " << train_activation << "\n";
  out << "train.epochs = " << epochs << "\n";
  out << "train.grad_clip = " << (grad_clip ? fmt17(*grad_clip) : "none") << "\n";
  out << "train.hidden_dim = " << train_hidden_dim << "\n";
  out << "train.lr_one_layer = " << fmt17(lr_one_layer) << "\n";
  out << "train.lr_two_layer = " << fmt17(lr_two_layer) << "\n";
  out << "train.weight_decay = " << fmt17(weight_decay) << "\n";
  return out.str();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    require(eq != std::string::npos, ErrorCode::config,
            "config error at line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "run.out_dir") cfg.out_dir = value;
    else if (key == "run.threads") cfg.threads = parse_int(key, value);
    else if (key == "run.master_seed") {
      try {
        cfg.master_seed = std::stoull(value);
      } catch (const std::exception&) {
        fail(ErrorCode::config, "config error: malformed seed");
      }
    }
    else if (key == "dataset.kind") {
      if (value == "sbm") cfg.kind = DatasetKind::sbm;
      else if (value == "geometric") cfg.kind = DatasetKind::geometric;
      else fail(ErrorCode::config, "config error: dataset.kind must be sbm or geometric");
    }
    else if (key == "dataset.block_sizes") cfg.block_sizes = parse_int_list(key, value);
    else if (key == "dataset.p_in") cfg.p_in = parse_double(key, value);
    else if (key == "dataset.p_out") cfg.p_out = parse_double(key, value);
    else if (key == "dataset.weight_low") cfg.weight_low = parse_double(key, value);
    else if (key == "dataset.weight_high") cfg.weight_high = parse_double(key, value);
    else if (key == "dataset.n_per_class") cfg.n_per_class = parse_int(key, value);
    else if (key == "dataset.num_classes") cfg.num_classes = parse_int(key, value);
    else if (key == "dataset.feat_dim") cfg.feat_dim = parse_int(key, value);
    else if (key == "dataset.knn_k") cfg.knn_k = parse_int(key, value);
    else if (key == "dataset.center_scale") cfg.center_scale = parse_double(key, value);
    else if (key == "dataset.noise_std") cfg.noise_std = parse_double(key, value);
    else if (key == "sparsifier.mode") cfg.resistance_mode = value;
    else if (key == "sparsifier.rank") cfg.resistance_rank = parse_int(key, value);
    else if (key == "sparsifier.c_grid") cfg.c_grid = parse_double_list(key, value);
    else if (key == "sparsifier.targets") cfg.targets = parse_double_list(key, value);
    else if (key == "sparsifier.draws_per_level") cfg.draws_per_level = parse_int(key, value);
    else if (key == "sparsifier.probes") cfg.probes = parse_int(key, value);
    else if (key == "model.filter") cfg.filter = parse_double_list(key, value);
    else if (key == "model.widths") cfg.widths = parse_int_list(key, value);
    else if (key == "model.activations") cfg.activations = split_list(value);
    else if (key == "model.weight_scale") cfg.weight_scale = parse_double(key, value);
    else if (key == "train.epochs") cfg.epochs = parse_int(key, value);
    else if (key == "train.lr_one_layer") cfg.lr_one_layer = parse_double(key, value);
    else if (key == "train.lr_two_layer") cfg.lr_two_layer = parse_double(key, value);
    else if (key == "train.weight_decay") cfg.weight_decay = parse_double(key, value);
    else if (key == "train.grad_clip") {
      if (value == "none") cfg.grad_clip = std::nullopt;
      else cfg.grad_clip = parse_double(key, value);
    }
    else if (key == "train.hidden_dim") cfg.train_hidden_dim = parse_int(key, value);
    else if (key == "train.activation") cfg.train_activation = value;
    else if (key == "geometry.k") cfg.knn_overlap_k = parse_int(key, value);
    else if (key == "geometry.subset_cap") cfg.subset_cap = parse_int(key, value);
    else if (key == "geometry.test_fraction") cfg.test_fraction = parse_double(key, value);
    else if (key == "geometry.train_epochs") cfg.geometry_train_epochs = parse_int(key, value);
    else if (key == "geometry.train_lr") cfg.geometry_train_lr = parse_double(key, value);
    else if (key == "geometry.hidden_dim") cfg.geometry_hidden_dim = parse_int(key, value);
    else if (key == "geometry.model_path") cfg.geometry_model_path = value;
    else fail(ErrorCode::config, "config error at line " + std::to_string(lineno) +
                                     ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::config, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace sparsegeo
