#include "sparsegeo/sparsify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "sparsegeo/error.hpp"
#include "sparsegeo/numerics.hpp"
#include "sparsegeo/rng.hpp"

namespace sparsegeo {

ResistanceTable effective_resistances_exact(const WeightedGraph& g) {
  g.validate();
  require(g.connected(), ErrorCode::invalid_argument,
          "effective resistances need a connected graph");
  const Eigen::MatrixXd Lpinv = pseudoinverse(laplacian(g, LaplacianKind::combinatorial).matrix);
  ResistanceTable table;
  table.mode = ResistanceMode::exact;
  table.values.reserve(g.edges.size());
  for (const Edge& e : g.edges) {
    table.values.push_back(Lpinv(e.u, e.u) + Lpinv(e.v, e.v) - 2.0 * Lpinv(e.u, e.v));
  }
  return table;
}

ResistanceTable effective_resistances_approx(const WeightedGraph& g, int rank) {
  g.validate();
  require(rank >= 1 && rank <= g.n - 1, ErrorCode::invalid_argument,
          "truncation rank must satisfy 1 <= rank <= n-1");
  const EigenDecomposition ed = sym_eig(laplacian(g, LaplacianKind::combinatorial).matrix);
  // Eigenvalues ascend; index 0 is the constant-vector kernel.
  require(ed.eigenvalues(rank) > 1e-10, ErrorCode::numeric,
          "truncated eigenspace touches a numerically zero eigenvalue "
          "(graph disconnected?)");
  ResistanceTable table;
  table.mode = ResistanceMode::truncated;
  table.rank = rank;
  table.values.reserve(g.edges.size());
  for (const Edge& e : g.edges) {
    double r = 0.0;
    for (int i = 1; i <= rank; ++i) {
      const double diff = ed.eigenvectors(e.u, i) - ed.eigenvectors(e.v, i);
      r += diff * diff / ed.eigenvalues(i);
    }
    table.values.push_back(r);
  }
  return table;
}

int budget_from_multiplier(double c, int n) {
  require(c > 0.0, ErrorCode::invalid_argument, "budget multiplier must be > 0");
  require(n >= 2, ErrorCode::invalid_argument, "budget needs n >= 2");
  return static_cast<int>(std::floor(c * static_cast<double>(n) *
                                     std::log(static_cast<double>(n))));
}

SparsifierDraw er_sparsify(const WeightedGraph& g, const ResistanceTable& r,
                           int q, std::uint64_t seed) {
  g.validate();
  require(q >= 1, ErrorCode::invalid_argument, "budget must be >= 1");
  require(r.values.size() == g.edges.size(), ErrorCode::invalid_argument,
          "resistance table must cover every edge");

  const std::size_t m = g.edges.size();
  std::vector<double> cdf(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lev = g.edges[i].w * r.values[i];
    require(lev >= 0.0 && std::isfinite(lev), ErrorCode::numeric,
            "nonfinite leverage score");
    total += lev;
    cdf[i] = total;
  }
  require(total > 0.0, ErrorCode::invalid_argument, "all leverage scores are zero");

  Rng rng(seed);
  std::map<std::pair<int, int>, double> accum;
  for (int s = 0; s < q; ++s) {
    const double x = rng.uniform() * total;
    const std::size_t idx = static_cast<std::size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), x) - cdf.begin());
    const std::size_t e = std::min(idx, m - 1);
    const double p = g.edges[e].w * r.values[e] / total;
    accum[{g.edges[e].u, g.edges[e].v}] += g.edges[e].w / (static_cast<double>(q) * p);
  }

  SparsifierDraw draw;
  draw.sparse.n = g.n;
  for (const auto& [uv, w] : accum) {
    draw.sparse.edges.push_back({uv.first, uv.second, w});
  }
  draw.sparse.validate();
  draw.q = q;
  draw.seed = seed;
  draw.retained_fraction =
      static_cast<double>(accum.size()) / static_cast<double>(m);
  return draw;
}

double empirical_distortion_exact(const GraphOperator& L_dense,
                                  const GraphOperator& L_sparse) {
  const auto [lmin, lmax] =
      generalized_extremal_eigs(L_sparse.matrix, L_dense.matrix, /*deflate_ones=*/true);
  return std::max(1.0 - lmin, lmax - 1.0);
}

double empirical_distortion_probe(const GraphOperator& L_dense,
                                  const GraphOperator& L_sparse, int num_probes,
                                  std::uint64_t seed) {
  require(num_probes >= 1, ErrorCode::invalid_argument, "need at least one probe");
  const Eigen::Index n = L_dense.matrix.rows();
  Rng rng(seed);
  double worst = 0.0;
  for (int p = 0; p < num_probes; ++p) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = rng.normal();
    x.array() -= x.mean();
    const double norm = x.norm();
    require(norm > 0.0, ErrorCode::numeric, "degenerate probe vector");
    x /= norm;
    const double denom = x.dot(L_dense.matrix * x);
    require(denom > 1e-12, ErrorCode::numeric,
            "probe quadratic form vanishes on the dense operator");
    const double ratio = x.dot(L_sparse.matrix * x) / denom;
    worst = std::max(worst, std::abs(ratio - 1.0));
  }
  return worst;
}

std::vector<TargetLevel> select_by_target_distortion(
    const WeightedGraph& g, const std::vector<double>& targets,
    const std::vector<double>& c_grid, int draws_per_target,
    ResistanceMode resistance_mode, int resistance_rank, std::uint64_t seed) {
  require(!targets.empty() && !c_grid.empty(), ErrorCode::invalid_argument,
          "targets and c grid must be nonempty");
  require(draws_per_target >= 1, ErrorCode::invalid_argument,
          "need at least one draw per target");

  const ResistanceTable table = resistance_mode == ResistanceMode::exact
                                    ? effective_resistances_exact(g)
                                    : effective_resistances_approx(g, resistance_rank);
  const GraphOperator L = laplacian(g, LaplacianKind::combinatorial);

  // One probe draw per grid point to learn the realized distortion per c.
  std::vector<double> realized(c_grid.size());
  for (std::size_t m = 0; m < c_grid.size(); ++m) {
    const int q = budget_from_multiplier(c_grid[m], g.n);
    SparsifierDraw probe = er_sparsify(
        g, table, q, derive_seed(seed, static_cast<std::uint64_t>(m), 0, stage::scan));
    realized[m] = empirical_distortion_exact(
        L, laplacian(probe.sparse, LaplacianKind::combinatorial));
  }

  std::vector<TargetLevel> levels;
  levels.reserve(targets.size());
  for (std::size_t j = 0; j < targets.size(); ++j) {
    std::size_t best = 0;
    for (std::size_t m = 1; m < c_grid.size(); ++m) {
      if (std::abs(realized[m] - targets[j]) < std::abs(realized[best] - targets[j])) {
        best = m;
      }
    }
    TargetLevel level;
    level.target = targets[j];
    level.selected_c = c_grid[best];
    level.q = budget_from_multiplier(c_grid[best], g.n);
    for (int i = 0; i < draws_per_target; ++i) {
      SparsifierDraw draw = er_sparsify(
          g, table, level.q,
          derive_seed(seed, static_cast<std::uint64_t>(j),
                      static_cast<std::uint64_t>(i), stage::draw));
      draw.c = level.selected_c;
      draw.draw_index = i;
      draw.eps_emp = empirical_distortion_exact(
          L, laplacian(draw.sparse, LaplacianKind::combinatorial));
      level.draws.push_back(std::move(draw));
    }
    levels.push_back(std::move(level));
  }
  return levels;
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_draw(const SparsifierDraw& draw, ResistanceMode mode, int rank,
                const std::string& path) {
  write_graph(draw.sparse, path);
  std::ofstream meta(path + ".meta", std::ios::binary);
  require(meta.good(), ErrorCode::io, "cannot open " + path + ".meta");
  meta << "q=" << draw.q << "\n";
  meta << "c=" << fmt17(draw.c) << "\n";
  meta << "seed=" << draw.seed << "\n";
  meta << "eps_emp=" << (draw.eps_emp ? fmt17(*draw.eps_emp) : "unset") << "\n";
  meta << "retained_fraction=" << fmt17(draw.retained_fraction) << "\n";
  meta << "mode=" << (mode == ResistanceMode::exact ? "exact" : "truncated") << "\n";
  meta << "rank=" << rank << "\n";
  require(meta.good(), ErrorCode::io, "write failed for " + path + ".meta");
}

SparsifierDraw read_draw(const std::string& path) {
  SparsifierDraw draw;
  draw.sparse = read_graph(path);
  std::ifstream meta(path + ".meta", std::ios::binary);
  require(meta.good(), ErrorCode::io, "cannot open " + path + ".meta");
  std::string line;
  while (std::getline(meta, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "q") draw.q = std::stoi(value);
      else if (key == "c") draw.c = std::stod(value);
      else if (key == "seed") draw.seed = std::stoull(value);
      else if (key == "eps_emp" && value != "unset") draw.eps_emp = std::stod(value);
      else if (key == "retained_fraction") draw.retained_fraction = std::stod(value);
    } catch (const std::exception&) {
      fail(ErrorCode::io, "malformed draw metadata field '" + key + "' in " + path + ".meta");
    }
  }
  return draw;
}

}  // namespace sparsegeo
