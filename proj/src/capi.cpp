#include "sparsegeo.h"

#include <string>

#include "sparsegeo/config.hpp"
#include "sparsegeo/error.hpp"
#include "sparsegeo/graph.hpp"
#include "sparsegeo/pipeline.hpp"
#include "sparsegeo/sparsify.hpp"
#include "sparsegeo/version.hpp"

namespace {

thread_local std::string g_last_error;

int code_of(const sparsegeo::Error& e) { return static_cast<int>(e.code()); }

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const sparsegeo::Error& e) {
    g_last_error = e.what();
    return code_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SG_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown error";
    return SG_ERR_UNKNOWN;
  }
}

int invalid(const char* what) {
  g_last_error = what;
  return SG_ERR_INVALID;
}

sparsegeo::ExperimentConfig load_or_default(const char* config_path,
                                            const uint64_t* seed) {
  sparsegeo::ExperimentConfig cfg;
  if (config_path != nullptr && config_path[0] != '\0') {
    cfg = sparsegeo::load_config(config_path);
  }
  if (seed != nullptr) cfg.master_seed = *seed;
  return cfg;
}

}  // namespace

struct sg_graph {
  sparsegeo::WeightedGraph g;
};

struct sg_resistances {
  sparsegeo::ResistanceTable table;
};

extern "C" {

const char* sg_version(void) { return sparsegeo::kVersionString; }

const char* sg_last_error(void) { return g_last_error.c_str(); }

int sg_graph_generate_sbm(const int* block_sizes, int num_blocks, double p_in,
                          double p_out, double weight_low, double weight_high,
                          uint64_t seed, sg_graph** out) {
  if (block_sizes == nullptr || num_blocks < 1 || out == nullptr) {
    return invalid("sg_graph_generate_sbm: bad arguments");
  }
  return guarded([&]() {
    std::vector<int> sizes(block_sizes, block_sizes + num_blocks);
    auto* handle = new sg_graph{sparsegeo::generate_sbm(sizes, p_in, p_out,
                                                        weight_low, weight_high, seed)};
    *out = handle;
    return SG_OK;
  });
}

int sg_graph_generate_geometric(int n_per_class, int num_classes, int feat_dim,
                                int k, uint64_t seed, sg_graph** out) {
  if (out == nullptr) return invalid("sg_graph_generate_geometric: bad arguments");
  return guarded([&]() {
    sparsegeo::GeometricGraph gg =
        sparsegeo::generate_geometric_knn(n_per_class, num_classes, feat_dim, k, seed);
    *out = new sg_graph{std::move(gg.graph)};
    return SG_OK;
  });
}

int sg_graph_read(const char* path, sg_graph** out) {
  if (path == nullptr || out == nullptr) return invalid("sg_graph_read: bad arguments");
  return guarded([&]() {
    *out = new sg_graph{sparsegeo::read_graph(path)};
    return SG_OK;
  });
}

int sg_graph_write(const sg_graph* g, const char* path) {
  if (g == nullptr || path == nullptr) return invalid("sg_graph_write: bad arguments");
  return guarded([&]() {
    sparsegeo::write_graph(g->g, path);
    return SG_OK;
  });
}

void sg_graph_free(sg_graph* g) { delete g; }

int sg_graph_node_count(const sg_graph* g) { return g == nullptr ? -1 : g->g.n; }

int sg_graph_edge_count(const sg_graph* g) {
  return g == nullptr ? -1 : static_cast<int>(g->g.edges.size());
}

int sg_graph_edge(const sg_graph* g, int index, int* u, int* v, double* w) {
  if (g == nullptr || index < 0 || index >= static_cast<int>(g->g.edges.size())) {
    return invalid("sg_graph_edge: index out of range");
  }
  const sparsegeo::Edge& e = g->g.edges[static_cast<std::size_t>(index)];
  if (u != nullptr) *u = e.u;
  if (v != nullptr) *v = e.v;
  if (w != nullptr) *w = e.w;
  return SG_OK;
}

int sg_resistances_compute(const sg_graph* g, int mode, int rank,
                           sg_resistances** out) {
  if (g == nullptr || out == nullptr || (mode != 0 && mode != 1)) {
    return invalid("sg_resistances_compute: bad arguments");
  }
  return guarded([&]() {
    *out = new sg_resistances{
        mode == 0 ? sparsegeo::effective_resistances_exact(g->g)
                  : sparsegeo::effective_resistances_approx(g->g, rank)};
    return SG_OK;
  });
}

int sg_resistances_get(const sg_resistances* r, int index, double* value) {
  if (r == nullptr || value == nullptr || index < 0 ||
      index >= static_cast<int>(r->table.values.size())) {
    return invalid("sg_resistances_get: index out of range");
  }
  *value = r->table.values[static_cast<std::size_t>(index)];
  return SG_OK;
}

void sg_resistances_free(sg_resistances* r) { delete r; }

int sg_budget_from_multiplier(double c, int n, int* out_q) {
  if (out_q == nullptr) return invalid("sg_budget_from_multiplier: bad arguments");
  return guarded([&]() {
    *out_q = sparsegeo::budget_from_multiplier(c, n);
    return SG_OK;
  });
}

int sg_sparsify(const sg_graph* g, const sg_resistances* r, int q, uint64_t seed,
                sg_graph** out_sparse, double* out_retained_fraction) {
  if (g == nullptr || r == nullptr || out_sparse == nullptr) {
    return invalid("sg_sparsify: bad arguments");
  }
  return guarded([&]() {
    sparsegeo::SparsifierDraw draw = sparsegeo::er_sparsify(g->g, r->table, q, seed);
    if (out_retained_fraction != nullptr) {
      *out_retained_fraction = draw.retained_fraction;
    }
    *out_sparse = new sg_graph{std::move(draw.sparse)};
    return SG_OK;
  });
}

int sg_empirical_distortion(const sg_graph* dense, const sg_graph* sparse,
                            int num_probes, uint64_t seed, double* out_eps) {
  if (dense == nullptr || sparse == nullptr || out_eps == nullptr) {
    return invalid("sg_empirical_distortion: bad arguments");
  }
  return guarded([&]() {
    const sparsegeo::GraphOperator Ld =
        sparsegeo::laplacian(dense->g, sparsegeo::LaplacianKind::combinatorial);
    const sparsegeo::GraphOperator Ls =
        sparsegeo::laplacian(sparse->g, sparsegeo::LaplacianKind::combinatorial);
    *out_eps = num_probes <= 0
                   ? sparsegeo::empirical_distortion_exact(Ld, Ls)
                   : sparsegeo::empirical_distortion_probe(Ld, Ls, num_probes, seed);
    return SG_OK;
  });
}

int sg_run_generate(const char* config_path, const char* out_dir,
                    const uint64_t* seed, int /*strict*/) {
  if (out_dir == nullptr) return invalid("sg_run_generate: out_dir is required");
  return guarded([&]() {
    sparsegeo::run_generate(load_or_default(config_path, seed), out_dir);
    return SG_OK;
  });
}

int sg_run_stability(const char* config_path, const char* out_dir,
                     const uint64_t* seed, int strict) {
  if (out_dir == nullptr) return invalid("sg_run_stability: out_dir is required");
  return guarded([&]() {
    const sparsegeo::StabilityResult result =
        sparsegeo::run_stability(load_or_default(config_path, seed), out_dir);
    if (strict != 0 && !result.all_certificates_pass) {
      g_last_error = "stability: a bound certificate failed (see geometry.csv)";
      return SG_ERR_CERTIFICATE;
    }
    return SG_OK;
  });
}

int sg_run_training(const char* config_path, const char* out_dir,
                    const uint64_t* seed, int /*strict*/) {
  if (out_dir == nullptr) return invalid("sg_run_training: out_dir is required");
  return guarded([&]() {
    sparsegeo::run_training(load_or_default(config_path, seed), out_dir);
    return SG_OK;
  });
}

int sg_run_geometry(const char* config_path, const char* out_dir,
                    const uint64_t* seed, int strict) {
  if (out_dir == nullptr) return invalid("sg_run_geometry: out_dir is required");
  return guarded([&]() {
    const sparsegeo::GeometryResult result =
        sparsegeo::run_geometry(load_or_default(config_path, seed), out_dir);
    if (strict != 0 && !result.all_certificates_pass) {
      g_last_error = "geometry: a bound certificate failed (see geometry.csv)";
      return SG_ERR_CERTIFICATE;
    }
    return SG_OK;
  });
}

}  // extern "C"
