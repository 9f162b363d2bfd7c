#include "sparsegeo/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "sparsegeo/error.hpp"
#include "sparsegeo/rng.hpp"

namespace sparsegeo {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void sort_edges(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
}

}  // namespace

double WeightedGraph::total_weight() const {
  double s = 0.0;
  for (const Edge& e : edges) s += e.w;
  return s;
}

bool WeightedGraph::connected() const {
  if (n <= 1) return true;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const Edge& e : edges) {
    adj[static_cast<std::size_t>(e.u)].push_back(e.v);
    adj[static_cast<std::size_t>(e.v)].push_back(e.u);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++reached;
        q.push(v);
      }
    }
  }
  return reached == n;
}

void WeightedGraph::validate() const {
  require(n >= 0, ErrorCode::invalid_argument, "negative node count");
  const Edge* prev = nullptr;
  for (const Edge& e : edges) {
    require(e.u >= 0 && e.v < n && e.u < e.v, ErrorCode::invalid_argument,
            "edge endpoints must satisfy 0 <= u < v < n");
    require(e.w > 0.0 && std::isfinite(e.w), ErrorCode::invalid_argument,
            "edge weights must be finite and strictly positive");
    if (prev != nullptr) {
      require(prev->u < e.u || (prev->u == e.u && prev->v < e.v),
              ErrorCode::invalid_argument, "duplicate or unsorted edge list");
    }
    prev = &e;
  }
}

std::vector<std::vector<int>> LabeledFeatures::class_indices() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes, ErrorCode::invalid_argument,
            "label out of range");
    out[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));
  }
  return out;
}

void LabeledFeatures::validate() const {
  require(static_cast<std::size_t>(X.rows()) == labels.size(),
          ErrorCode::invalid_argument, "one label per feature row required");
  for (const auto& cls : class_indices()) {
    require(!cls.empty(), ErrorCode::invalid_argument, "empty class");
  }
}

namespace {

WeightedGraph sbm_once(const std::vector<int>& block_sizes, double p_in,
                       double p_out, double weight_low, double weight_high,
                       std::uint64_t seed) {
  WeightedGraph g;
  std::vector<int> block_of;
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    for (int i = 0; i < block_sizes[b]; ++i) block_of.push_back(static_cast<int>(b));
  }
  g.n = static_cast<int>(block_of.size());
  Rng rng(seed);
  for (int u = 0; u < g.n; ++u) {
    for (int v = u + 1; v < g.n; ++v) {
      const double p = block_of[static_cast<std::size_t>(u)] ==
                               block_of[static_cast<std::size_t>(v)]
                           ? p_in
                           : p_out;
      if (rng.uniform() < p) {
        g.edges.push_back({u, v, rng.uniform(weight_low, weight_high)});
      }
    }
  }
  return g;
}

}  // namespace

WeightedGraph generate_sbm(const std::vector<int>& block_sizes, double p_in,
                           double p_out, double weight_low, double weight_high,
                           std::uint64_t seed) {
  require(!block_sizes.empty(), ErrorCode::invalid_argument, "no blocks given");
  for (int b : block_sizes) {
    require(b >= 1, ErrorCode::invalid_argument, "block sizes must be >= 1");
  }
  require(p_in > 0.0 && p_in <= 1.0 && p_out >= 0.0 && p_out <= 1.0,
          ErrorCode::invalid_argument, "probabilities must lie in (0,1]");
  require(weight_low > 0.0 && weight_low <= weight_high,
          ErrorCode::invalid_argument, "need 0 < weight_low <= weight_high");

  for (int attempt = 0; attempt <= 20; ++attempt) {
    const std::uint64_t s =
        attempt == 0 ? seed : derive_seed(seed, 0, static_cast<std::uint64_t>(attempt), stage::retry);
    WeightedGraph g = sbm_once(block_sizes, p_in, p_out, weight_low, weight_high, s);
    if (g.connected()) {
      g.validate();
      return g;
    }
  }
  fail(ErrorCode::generation,
       "SBM generation produced no connected graph after 20 retries (seed " +
           std::to_string(seed) + ")");
}

LabeledFeatures class_features(const std::vector<int>& labels, int dim,
                               double center_scale, double noise_std,
                               std::uint64_t seed) {
  require(dim >= 1, ErrorCode::invalid_argument, "feature dim must be >= 1");
  int num_classes = 0;
  for (int c : labels) {
    require(c >= 0, ErrorCode::invalid_argument, "negative label");
    num_classes = std::max(num_classes, c + 1);
  }
  require(num_classes >= 1, ErrorCode::invalid_argument, "no labels given");

  Rng rng(seed);
  Eigen::MatrixXd centers(num_classes, dim);
  for (int c = 0; c < num_classes; ++c) {
    for (int j = 0; j < dim; ++j) centers(c, j) = center_scale * rng.normal();
  }
  LabeledFeatures f;
  f.num_classes = num_classes;
  f.labels = labels;
  f.X.resize(static_cast<Eigen::Index>(labels.size()), dim);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (int j = 0; j < dim; ++j) {
      f.X(static_cast<Eigen::Index>(i), j) =
          centers(labels[i], j) + noise_std * rng.normal();
    }
  }
  f.validate();
  return f;
}

namespace {

GeometricGraph geometric_once(int n_per_class, int num_classes, int feat_dim,
                              int k, std::uint64_t seed) {
  const int n = n_per_class * num_classes;
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i / n_per_class;

  GeometricGraph out;
  out.features = class_features(labels, feat_dim, 4.0, 1.0, seed);
  const Eigen::MatrixXd& X = out.features.X;

  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) {
      const double d = (X.row(i) - X.row(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  // Union-symmetrized k-NN pairs; ties broken by ascending index.
  std::set<std::pair<int, int>> pairs;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return dist(i, a) != dist(i, b) ? dist(i, a) < dist(i, b) : a < b;
    });
    for (int t = 0; t < k; ++t) {
      const int j = order[static_cast<std::size_t>(t)];
      pairs.insert({std::min(i, j), std::max(i, j)});
    }
  }

  std::vector<double> retained_dists;
  retained_dists.reserve(pairs.size());
  for (const auto& [u, v] : pairs) retained_dists.push_back(dist(u, v));
  std::sort(retained_dists.begin(), retained_dists.end());
  const std::size_t m = retained_dists.size();
  const double sigma = m % 2 == 1
                           ? retained_dists[m / 2]
                           : 0.5 * (retained_dists[m / 2 - 1] + retained_dists[m / 2]);
  require(sigma > 0.0, ErrorCode::generation, "degenerate k-NN bandwidth");

  out.graph.n = n;
  for (const auto& [u, v] : pairs) {
    const double w = std::exp(-dist(u, v) * dist(u, v) / (2.0 * sigma * sigma));
    if (w > 0.0) out.graph.edges.push_back({u, v, w});
  }
  return out;
}

}  // namespace

GeometricGraph generate_geometric_knn(int n_per_class, int num_classes,
                                      int feat_dim, int k, std::uint64_t seed) {
  require(n_per_class >= 1 && num_classes >= 1 && feat_dim >= 1,
          ErrorCode::invalid_argument, "generator sizes must be >= 1");
  require(k >= 1 && k < n_per_class * num_classes, ErrorCode::invalid_argument,
          "need 1 <= k < total node count");

  for (int attempt = 0; attempt <= 20; ++attempt) {
    const std::uint64_t s =
        attempt == 0 ? seed : derive_seed(seed, 0, static_cast<std::uint64_t>(attempt), stage::retry);
    GeometricGraph g = geometric_once(n_per_class, num_classes, feat_dim, k, s);
    if (g.graph.connected()) {
      g.graph.validate();
      return g;
    }
  }
  fail(ErrorCode::generation,
       "geometric k-NN generation produced no connected graph after 20 retries (seed " +
           std::to_string(seed) + ")");
}

GraphOperator laplacian(const WeightedGraph& g, LaplacianKind kind) {
  g.validate();
  const int n = g.n;
  Eigen::VectorXd deg = Eigen::VectorXd::Zero(n);
  for (const Edge& e : g.edges) {
    deg(e.u) += e.w;
    deg(e.v) += e.w;
  }
  GraphOperator op;
  op.matrix = Eigen::MatrixXd::Zero(n, n);
  if (kind == LaplacianKind::combinatorial) {
    op.kind = OperatorKind::combinatorial;
    for (int i = 0; i < n; ++i) op.matrix(i, i) = deg(i);
    for (const Edge& e : g.edges) {
      op.matrix(e.u, e.v) = -e.w;
      op.matrix(e.v, e.u) = -e.w;
    }
  } else {
    op.kind = OperatorKind::normalized;
    for (int i = 0; i < n; ++i) op.matrix(i, i) = deg(i) > 0.0 ? 1.0 : 0.0;
    for (const Edge& e : g.edges) {
      const double v = -e.w / std::sqrt(deg(e.u) * deg(e.v));
      op.matrix(e.u, e.v) = v;
      op.matrix(e.v, e.u) = v;
    }
  }
  return op;
}

GraphOperator scale_operator(const GraphOperator& op,
                             std::optional<double> external_scale) {
  double s;
  if (external_scale.has_value()) {
    s = *external_scale;
    require(s > 0.0 && std::isfinite(s), ErrorCode::invalid_argument,
            "external scale must be positive and finite");
  } else {
    // Operator norm of a symmetric matrix = largest absolute eigenvalue.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (op.matrix + op.matrix.transpose()), Eigen::EigenvaluesOnly);
    s = es.eigenvalues().cwiseAbs().maxCoeff();
    require(s > 0.0, ErrorCode::invalid_argument, "cannot scale the zero operator");
  }
  GraphOperator out;
  out.matrix = op.matrix / s;
  out.kind = OperatorKind::scaled;
  out.scale = s;
  return out;
}

std::string format_graph(const WeightedGraph& g) {
  g.validate();
  std::string out = "n=" + std::to_string(g.n) + "\n";
  for (const Edge& e : g.edges) {
    out += std::to_string(e.u) + " " + std::to_string(e.v) + " " + fmt17(e.w) + "\n";
  }
  return out;
}

WeightedGraph parse_graph(const std::string& text) {
  WeightedGraph g;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_n = false;
  std::set<std::pair<int, int>> seen;
  auto parse_error = [&](const std::string& what) {
    fail(ErrorCode::io, "graph parse error at line " + std::to_string(lineno) +
                            ": " + what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    if (!have_n) {
      if (line.compare(pos, 2, "n=") != 0) parse_error("expected header n=<count>");
      try {
        g.n = std::stoi(line.substr(pos + 2));
      } catch (const std::exception&) {
        parse_error("malformed node count");
      }
      if (g.n < 0) parse_error("negative node count");
      have_n = true;
      continue;
    }
    std::istringstream ls(line);
    Edge e;
    std::string trailing;
    if (!(ls >> e.u >> e.v >> e.w) || (ls >> trailing)) {
      parse_error("malformed edge line, expected '<u> <v> <w>'");
    }
    if (e.u == e.v) parse_error("self-loop");
    if (e.u < 0 || e.v < 0 || e.u >= g.n || e.v >= g.n) {
      parse_error("endpoint out of range");
    }
    if (e.u > e.v) parse_error("edges must be written with u < v");
    if (!(e.w > 0.0) || !std::isfinite(e.w)) parse_error("weight must be > 0");
    if (!seen.insert({e.u, e.v}).second) parse_error("duplicate edge");
    g.edges.push_back(e);
  }
  if (!have_n) fail(ErrorCode::io, "graph parse error: missing n=<count> header");
  sort_edges(g.edges);
  g.validate();
  return g;
}

void write_graph(const WeightedGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io, "cannot open " + path + " for writing");
  out << format_graph(g);
  require(out.good(), ErrorCode::io, "write failed for " + path);
}

WeightedGraph read_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_graph(ss.str());
}

}  // namespace sparsegeo
